"""System parameters, fading channel sampling, and per-realization SINR formulas.

The physical setup is a two-phase downlink: a source transmits a
power-superposed pair of symbols to a near user and a far user while an
eavesdropper listens; the near user harvests part of its received power
and retransmits the far user's symbol with the harvested energy in the
second phase.  All receivers use power splitting, diverting a fraction
``rho`` of the received power to energy harvesting and ``1 - rho`` to
information decoding.

Everything here works in linear scale.  Decibel conversion belongs to the
CLI boundary (see :func:`db_to_linear` / :func:`linear_to_db`).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "SystemParams",
    "PowerAllocation",
    "PowerSplit",
    "ChannelRealization",
    "SinrSet",
    "GAIN_FIELDS",
    "sample_channels",
    "sample_gain_matrix",
    "compute_sinrs",
    "sinrs_from_gains",
    "sinrs_for_alpha",
    "db_to_linear",
    "linear_to_db",
]

# Column order of the five link power gains wherever they appear in a matrix.
GAIN_FIELDS = ("g_su_n", "g_su_f", "g_se", "g_un_e", "g_un_uf")


def db_to_linear(x_db):
    """Convert decibels to linear scale."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert linear scale to decibels."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SystemParams:
    """Static physical parameters of one scenario.

    Attributes
    ----------
    p_tx : float
        Total transmit power (linear).
    n0 : float
        Noise variance at every receiver (linear).
    eta : float
        Energy-harvesting conversion efficiency, in (0, 1].
    m_shape : float
        Fading shape parameter of the gamma-distributed power gains;
        ``m_shape=1`` is Rayleigh fading.  Must be >= 0.5.
    omega_su_n, omega_su_f, omega_se, omega_un_e, omega_un_uf : float
        Mean channel power gains of the five links (linear):
        source->near, source->far, source->eavesdropper,
        near->eavesdropper, near->far.
    """

    p_tx: float
    n0: float
    eta: float
    m_shape: float
    omega_su_n: float
    omega_su_f: float
    omega_se: float
    omega_un_e: float
    omega_un_uf: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v <= 0.0:
                raise ValueError(f"{f.name} must be finite and > 0, got {v!r}")
        if self.eta > 1.0:
            raise ValueError(f"eta must be <= 1, got {self.eta!r}")
        if self.m_shape < 0.5:
            raise ValueError(f"m_shape must be >= 0.5, got {self.m_shape!r}")

    @property
    def omegas(self):
        """The five mean gains in :data:`GAIN_FIELDS` order."""
        return np.array(
            [self.omega_su_n, self.omega_su_f, self.omega_se,
             self.omega_un_e, self.omega_un_uf]
        )


@dataclass(frozen=True)
class PowerAllocation:
    """Power split between the near and far user's symbols.

    The far user (weaker channel) must receive the larger share, so
    ``alpha_n < 0.5 < alpha_f`` and ``alpha_n + alpha_f = 1``.
    """

    alpha_n: float
    alpha_f: float

    def __post_init__(self):
        if not (0.0 < self.alpha_n < 0.5):
            raise ValueError(f"alpha_n must lie in (0, 0.5), got {self.alpha_n!r}")
        if not (0.5 < self.alpha_f < 1.0):
            raise ValueError(f"alpha_f must lie in (0.5, 1), got {self.alpha_f!r}")
        if abs(self.alpha_n + self.alpha_f - 1.0) > 1e-12:
            raise ValueError(
                f"alpha_n + alpha_f must equal 1, got {self.alpha_n + self.alpha_f!r}"
            )

    @classmethod
    def from_far(cls, alpha_f: float) -> "PowerAllocation":
        """Build from the far user's share alone."""
        return cls(alpha_n=1.0 - alpha_f, alpha_f=alpha_f)

    @property
    def sinr_ceiling(self) -> float:
        """alpha_f / alpha_n, the supremum of any first-phase SINR."""
        return self.alpha_f / self.alpha_n


@dataclass(frozen=True)
class PowerSplit:
    """Per-node, per-phase power-splitting factors, each strictly in (0, 1).

    ``rho_n1`` is the near user's split in phase one (harvested fraction);
    ``rho_f1``/``rho_e1`` are the far user's and eavesdropper's phase-one
    splits; ``rho_f2``/``rho_e2`` apply during the relaying phase.
    """

    rho_n1: float
    rho_f1: float
    rho_e1: float
    rho_f2: float
    rho_e2: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{f.name} must lie strictly in (0, 1), got {v!r}")

    @classmethod
    def uniform(cls, rho: float) -> "PowerSplit":
        """The common convention of a single rho shared by every node/phase."""
        return cls(rho_n1=rho, rho_f1=rho, rho_e1=rho, rho_f2=rho, rho_e2=rho)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the five instantaneous channel power gains |h|^2."""

    g_su_n: float
    g_su_f: float
    g_se: float
    g_un_e: float
    g_un_uf: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{f.name} must be finite and >= 0, got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in GAIN_FIELDS])


@dataclass(frozen=True)
class SinrSet:
    """The six received SINR/SNR values of one realization.

    ``snr_nf1``: near user decoding the far symbol, phase 1 (SINR).
    ``snr_n2``: near user decoding its own symbol after SIC (SNR).
    ``snr_f1``: far user decoding its symbol, phase 1 (SINR).
    ``snr_e1``: eavesdropper on the far symbol, phase 1 (SINR).
    ``snr_rf2``: far user receiving the harvested-power relay, phase 2 (SNR).
    ``snr_re2``: eavesdropper on the relay transmission, phase 2 (SNR).
    """

    snr_nf1: float
    snr_n2: float
    snr_f1: float
    snr_e1: float
    snr_rf2: float
    snr_re2: float


def sample_gain_matrix(params: SystemParams, rng: np.random.Generator,
                       n: int) -> np.ndarray:
    """Draw ``n`` channel realizations as an (n, 5) matrix.

    Each link's power gain is gamma distributed with shape ``m_shape`` and
    mean equal to that link's mean gain, so ``m_shape=1`` reproduces the
    exponential power gains of Rayleigh fading.  Columns follow
    :data:`GAIN_FIELDS`.
    """
    m = params.m_shape
    out = np.empty((n, 5))
    for j, omega in enumerate(params.omegas):
        out[:, j] = rng.gamma(shape=m, scale=omega / m, size=n)
    return out


def sample_channels(params: SystemParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw a single channel realization."""
    g = sample_gain_matrix(params, rng, 1)[0]
    return ChannelRealization(*g)


def sinrs_for_alpha(params: SystemParams, split: PowerSplit,
                    gains: np.ndarray, alpha_f):
    """SINR formulas over an (n, 5) gain matrix with broadcastable alpha_f.

    ``alpha_f`` can be a scalar or an array matching the realization axis,
    which lets a batch be evaluated under per-realization power shares.
    Returns six arrays (snr_nf1, snr_n2, snr_f1, snr_e1, snr_rf2, snr_re2)
    in the order of :class:`SinrSet`.
    """
    gains = np.asarray(gains, dtype=float)
    g_n, g_f, g_e, g_ue, g_uf = (gains[..., j] for j in range(5))
    p, n0, eta = params.p_tx, params.n0, params.eta
    af = np.asarray(alpha_f, dtype=float)
    an = 1.0 - af

    def phase1(g, rho):
        sig = (1.0 - rho) * g * p
        return sig * af / (sig * an + n0)

    snr_nf1 = phase1(g_n, split.rho_n1)
    snr_n2 = (1.0 - split.rho_n1) * g_n * an * p / n0
    snr_f1 = phase1(g_f, split.rho_f1)
    snr_e1 = phase1(g_e, split.rho_e1)
    harvested = split.rho_n1 * eta * g_n * p / n0
    snr_rf2 = (1.0 - split.rho_f2) * harvested * g_uf
    snr_re2 = (1.0 - split.rho_e2) * harvested * g_ue
    return snr_nf1, snr_n2, snr_f1, snr_e1, snr_rf2, snr_re2


def sinrs_from_gains(params: SystemParams, alloc: PowerAllocation,
                     split: PowerSplit, gains: np.ndarray):
    """Vectorized SINR formulas over an (n, 5) gain matrix.

    The phase-one SINRs saturate below ``alpha_f / alpha_n``; the
    phase-two SNRs are powered purely by the energy the near user
    harvested in phase one.
    """
    return sinrs_for_alpha(params, split, gains, alloc.alpha_f)


def compute_sinrs(params: SystemParams, alloc: PowerAllocation,
                  split: PowerSplit, ch: ChannelRealization) -> SinrSet:
    """Evaluate the six SINR/SNR values for one realization."""
    vals = sinrs_from_gains(params, alloc, split, ch.as_array())
    return SinrSet(*(float(v) for v in vals))
