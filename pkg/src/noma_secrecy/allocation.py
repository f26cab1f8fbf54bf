"""Per-realization power-allocation optimization.

The far user's achievable-rate objective is strictly increasing in its
power share ``alpha_f``, so without a counterweight the optimum always
sits on the upper boundary.  A configurable near-user rate floor (the
usual NOMA viability condition) makes the search non-degenerate; setting
the floor to zero recovers the unconstrained boundary solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, PowerAllocation, PowerSplit, SystemParams

__all__ = [
    "ObjectiveConfig",
    "OptResult",
    "far_rate_objective",
    "near_rate",
    "alpha_grid",
    "oracle_search",
    "random_allocation",
]


@dataclass(frozen=True)
class ObjectiveConfig:
    """Search domain and QoS floor for the power-allocation optimization.

    ``alpha_min``/``alpha_max`` bound the far share exclusively (the grid
    starts one step above ``alpha_min``); ``qos_min_rate_near`` is the
    near user's minimum own-symbol rate in bits/s/Hz, 0 to disable.
    """

    alpha_min: float = 0.5
    alpha_max: float = 1.0
    grid_step: float = 1e-3
    qos_min_rate_near: float = 0.5

    def __post_init__(self):
        if not (0.5 <= self.alpha_min < self.alpha_max <= 1.0):
            raise ValueError(
                f"need 0.5 <= alpha_min < alpha_max <= 1, got "
                f"({self.alpha_min!r}, {self.alpha_max!r})"
            )
        if not (0.0 < self.grid_step < self.alpha_max - self.alpha_min):
            raise ValueError(f"grid_step out of range: {self.grid_step!r}")
        if self.qos_min_rate_near < 0.0:
            raise ValueError("qos_min_rate_near must be >= 0")


@dataclass(frozen=True)
class OptResult:
    """Outcome of one grid search.

    When no grid point satisfies the QoS floor, ``feasible`` is False and
    ``alpha_f_star`` falls back to the smallest grid point;
    ``objective_value`` is always the rate actually achieved at
    ``alpha_f_star``.
    """

    alpha_f_star: float
    objective_value: float
    feasible: bool


def _far_rate_from_gain(g_su_f, alpha_f, params: SystemParams, split: PowerSplit):
    sig = (1.0 - split.rho_f1) * g_su_f * params.p_tx
    sinr = sig * alpha_f / (sig * (1.0 - alpha_f) + params.n0)
    return np.log2(1.0 + sinr)


def _near_rate_from_gain(g_su_n, alpha_f, params: SystemParams, split: PowerSplit):
    snr = (1.0 - split.rho_n1) * g_su_n * (1.0 - alpha_f) * params.p_tx / params.n0
    return 0.5 * np.log2(1.0 + snr)


def _check_alpha(alpha_f: float):
    if not (0.5 < alpha_f < 1.0):
        raise ValueError(f"alpha_f must lie strictly in (0.5, 1), got {alpha_f!r}")


def far_rate_objective(alpha_f: float, ch: ChannelRealization,
                       params: SystemParams, split: PowerSplit) -> float:
    """log2(1 + far user's phase-1 SINR), the quantity the search maximizes."""
    _check_alpha(alpha_f)
    return float(_far_rate_from_gain(ch.g_su_f, alpha_f, params, split))


def near_rate(alpha_f: float, ch: ChannelRealization,
              params: SystemParams, split: PowerSplit) -> float:
    """The near user's own-symbol rate after SIC; decreasing in alpha_f."""
    _check_alpha(alpha_f)
    return float(_near_rate_from_gain(ch.g_su_n, alpha_f, params, split))


def alpha_grid(cfg: ObjectiveConfig) -> np.ndarray:
    """Exclusive grid over (alpha_min, alpha_max) with the configured step."""
    n = int(np.floor((cfg.alpha_max - cfg.alpha_min) / cfg.grid_step - 1e-9))
    return cfg.alpha_min + cfg.grid_step * np.arange(1, n + 1)


def oracle_search(ch: ChannelRealization, params: SystemParams,
                  split: PowerSplit, cfg: ObjectiveConfig) -> OptResult:
    """Exhaustive scan of the alpha_f grid.

    Returns the QoS-feasible grid point maximizing the far-rate objective,
    ties broken toward the smaller alpha_f.  Both the objective and the
    constraint are monotone in alpha_f, so the argmax is the largest
    feasible point; the full scan is kept as the benchmark the paper-style
    "iterative search" timing comparisons rely on.
    """
    grid = alpha_grid(cfg)
    far = _far_rate_from_gain(ch.g_su_f, grid, params, split)
    if cfg.qos_min_rate_near > 0.0:
        ok = _near_rate_from_gain(ch.g_su_n, grid, params, split) >= cfg.qos_min_rate_near
    else:
        ok = np.ones(grid.shape, dtype=bool)
    if not ok.any():
        fallback = float(grid[0])
        return OptResult(
            alpha_f_star=fallback,
            objective_value=float(_far_rate_from_gain(ch.g_su_f, fallback, params, split)),
            feasible=False,
        )
    masked = np.where(ok, far, -np.inf)
    best = int(np.argmax(masked))  # argmax returns the first (smallest) maximizer
    return OptResult(
        alpha_f_star=float(grid[best]),
        objective_value=float(far[best]),
        feasible=True,
    )


def random_allocation(rng: np.random.Generator) -> float:
    """Uniform draw of alpha_f on (0.5, 1), the untrained baseline."""
    while True:
        a = rng.uniform(0.5, 1.0)
        if 0.5 < a < 1.0:
            return float(a)
