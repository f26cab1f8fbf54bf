"""Scenario configuration: YAML files over baked-in defaults.

Every knob has a default matching the reference operating point (all
power-splitting factors 0.3, mean gains 5 dB, harvesting efficiency 0.7,
Rayleigh fading, 30000/6000 train/test samples, 100 epochs, decay 0.9),
so an empty or missing config file runs the nominal scenario.  Decibel
fields are converted here; the library below this layer is linear-only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .allocation import ObjectiveConfig
from .channel import PowerAllocation, PowerSplit, SystemParams, db_to_linear

__all__ = ["ConfigError", "SweepSpec", "Scenario", "load_scenario"]

_OMEGA_KEYS = ("omega_su_n", "omega_su_f", "omega_se", "omega_un_e", "omega_un_uf")

#: accepted but deliberately unused: the second-phase near-user split
#: appears in scenario listings yet in none of the received-signal
#: formulas (the near user only transmits in phase two).
_IGNORED_SPLIT_KEYS = ("rho_n2",)


class ConfigError(ValueError):
    """A config field failed validation; message names the field."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "snr_db"
    start: float = 0.0
    stop: float = 30.0
    step: float = 5.0
    scale: str = "dB"

    def __post_init__(self):
        if self.variable not in ("snr_db", "rho"):
            raise ConfigError(f"sweep.variable must be snr_db or rho, got {self.variable!r}")
        if self.step <= 0:
            raise ConfigError("sweep.step must be > 0")
        if self.scale not in ("dB", "linear"):
            raise ConfigError(f"sweep.scale must be dB or linear, got {self.scale!r}")

    def grid(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


@dataclass
class Scenario:
    """Everything one command run needs, resolved and validated."""

    snr_db: float = 10.0
    n0: float = 1.0
    eta: float = 0.7
    m_shape: float = 1.0
    omegas: dict = field(default_factory=lambda: {k: db_to_linear(5.0) for k in _OMEGA_KEYS})
    alpha_f: float = 0.8
    rho: dict = field(default_factory=lambda: {
        "rho_n1": 0.3, "rho_f1": 0.3, "rho_e1": 0.3, "rho_f2": 0.3, "rho_e2": 0.3})
    sweep: SweepSpec = field(default_factory=SweepSpec)
    eta_series: list = field(default_factory=lambda: [0.5, 0.9])
    alpha_f_series: list = field(default_factory=lambda: [0.6, 0.9])
    mc_trials: int = 1_000_000
    seed: int = 12345
    workers: int = 0
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    n_train: int = 30000
    n_test: int = 6000
    hidden_layers: tuple = (200, 100)
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.01
    decay_rate: float = 0.9
    validation_fraction: float = 0.1
    dataset_cache: str | None = None
    rho_grid: list = field(default_factory=lambda: [x / 10 for x in range(1, 10)])
    timing_repeats: int = 5

    def params(self, snr_db: float | None = None, eta: float | None = None) -> SystemParams:
        s = self.snr_db if snr_db is None else snr_db
        return SystemParams(
            p_tx=float(self.n0 * db_to_linear(s)),
            n0=self.n0,
            eta=self.eta if eta is None else eta,
            m_shape=self.m_shape,
            **self.omegas,
        )

    def alloc(self, alpha_f: float | None = None) -> PowerAllocation:
        return PowerAllocation.from_far(self.alpha_f if alpha_f is None else alpha_f)

    def split(self, rho: float | None = None) -> PowerSplit:
        if rho is not None:
            return PowerSplit.uniform(rho)
        return PowerSplit(**self.rho)

    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def describe(self) -> dict:
        """Flat key/value snapshot embedded in CSV artifact headers."""
        out = {
            "snr_db": self.snr_db, "n0": self.n0, "eta": self.eta,
            "m_shape": self.m_shape, "alpha_f": self.alpha_f,
            "mc_trials": self.mc_trials, "seed": self.seed,
            "sweep": f"{self.sweep.variable}:{self.sweep.start}:{self.sweep.stop}:{self.sweep.step}",
            "eta_series": self.eta_series, "alpha_f_series": self.alpha_f_series,
            "qos_min_rate_near": self.objective.qos_min_rate_near,
            "grid_step": self.objective.grid_step,
            "hidden_layers": list(self.hidden_layers),
            "epochs": self.epochs, "batch_size": self.batch_size,
            "learning_rate": self.learning_rate, "decay_rate": self.decay_rate,
            "n_train": self.n_train, "n_test": self.n_test,
            "rho_grid": self.rho_grid,
        }
        out.update({k: float(v) for k, v in self.omegas.items()})
        out.update(self.rho)
        return out


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return dict(sec)


def _take(sec: dict, name: str, key: str, cast, default):
    if key not in sec:
        return default
    try:
        return cast(sec.pop(key))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}.{key}: {exc}") from exc


def _reject_unknown(sec: dict, name: str):
    if sec:
        raise ConfigError(f"unknown key(s) in section {name!r}: {sorted(sec)}")


def load_scenario(path: str | None = None, overrides: dict | None = None) -> Scenario:
    """Parse a YAML scenario file and apply CLI overrides.

    ``overrides`` may set ``seed``, ``mc_trials``, and ``workers``.  All
    validation failures raise :class:`ConfigError` naming the field.
    """
    raw = {}
    if path is not None:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError("top level of the config file must be a mapping")

    sc = Scenario()

    sec = _section(raw, "params")
    sc.snr_db = _take(sec, "params", "snr_db", float, sc.snr_db)
    sc.n0 = _take(sec, "params", "n0", float, sc.n0)
    sc.eta = _take(sec, "params", "eta", float, sc.eta)
    sc.m_shape = _take(sec, "params", "m_shape", float, sc.m_shape)
    omega_db = _take(sec, "params", "omega_db", float, 5.0)
    sc.omegas = {k: float(db_to_linear(omega_db)) for k in _OMEGA_KEYS}
    for k in _OMEGA_KEYS:
        if f"{k}_db" in sec:
            sc.omegas[k] = float(db_to_linear(_take(sec, "params", f"{k}_db", float, None)))
    _reject_unknown(sec, "params")

    sec = _section(raw, "alloc")
    sc.alpha_f = _take(sec, "alloc", "alpha_f", float, sc.alpha_f)
    _reject_unknown(sec, "alloc")

    sec = _section(raw, "split")
    rho_all = _take(sec, "split", "rho", float, None)
    if rho_all is not None:
        sc.rho = {k: rho_all for k in sc.rho}
    for k in list(sc.rho):
        sc.rho[k] = _take(sec, "split", k, float, sc.rho[k])
    for k in _IGNORED_SPLIT_KEYS:
        sec.pop(k, None)
    _reject_unknown(sec, "split")

    sec = _section(raw, "sweep")
    try:
        sc.sweep = SweepSpec(
            variable=_take(sec, "sweep", "variable", str, sc.sweep.variable),
            start=_take(sec, "sweep", "start", float, sc.sweep.start),
            stop=_take(sec, "sweep", "stop", float, sc.sweep.stop),
            step=_take(sec, "sweep", "step", float, sc.sweep.step),
            scale=_take(sec, "sweep", "scale", str, sc.sweep.scale),
        )
    except ConfigError:
        raise
    _reject_unknown(sec, "sweep")

    sec = _section(raw, "series")
    sc.eta_series = [float(v) for v in _take(sec, "series", "eta", list, sc.eta_series)]
    sc.alpha_f_series = [float(v) for v in
                         _take(sec, "series", "alpha_f", list, sc.alpha_f_series)]
    _reject_unknown(sec, "series")

    sec = _section(raw, "mc")
    sc.mc_trials = _take(sec, "mc", "trials", int, sc.mc_trials)
    sc.seed = _take(sec, "mc", "seed", int, sc.seed)
    sc.workers = _take(sec, "mc", "workers", int, sc.workers)
    _reject_unknown(sec, "mc")

    sec = _section(raw, "objective")
    try:
        sc.objective = ObjectiveConfig(
            alpha_min=_take(sec, "objective", "alpha_min", float, 0.5),
            alpha_max=_take(sec, "objective", "alpha_max", float, 1.0),
            grid_step=_take(sec, "objective", "grid_step", float, 1e-3),
            qos_min_rate_near=_take(sec, "objective", "qos_min_rate_near", float, 0.5),
        )
    except ValueError as exc:
        raise ConfigError(f"objective: {exc}") from exc
    _reject_unknown(sec, "objective")

    sec = _section(raw, "train")
    sc.n_train = _take(sec, "train", "n_train", int, sc.n_train)
    sc.n_test = _take(sec, "train", "n_test", int, sc.n_test)
    sc.hidden_layers = tuple(
        int(v) for v in _take(sec, "train", "hidden_layers", list, list(sc.hidden_layers)))
    sc.epochs = _take(sec, "train", "epochs", int, sc.epochs)
    sc.batch_size = _take(sec, "train", "batch_size", int, sc.batch_size)
    sc.learning_rate = _take(sec, "train", "learning_rate", float, sc.learning_rate)
    sc.decay_rate = _take(sec, "train", "decay_rate", float, sc.decay_rate)
    sc.validation_fraction = _take(sec, "train", "validation_fraction", float,
                                   sc.validation_fraction)
    sc.dataset_cache = _take(sec, "train", "dataset_cache", str, sc.dataset_cache)
    _reject_unknown(sec, "train")

    sec = _section(raw, "compare")
    sc.rho_grid = [float(v) for v in _take(sec, "compare", "rho_grid", list, sc.rho_grid)]
    sc.timing_repeats = _take(sec, "compare", "timing_repeats", int, sc.timing_repeats)
    _reject_unknown(sec, "compare")

    known_sections = {"params", "alloc", "split", "sweep", "series", "mc",
                      "objective", "train", "compare"}
    extra = set(raw) - known_sections
    if extra:
        raise ConfigError(f"unknown section(s): {sorted(extra)}")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "seed":
            sc.seed = int(value)
        elif key == "trials":
            sc.mc_trials = int(value)
        elif key == "workers":
            sc.workers = int(value)
        else:
            raise ConfigError(f"unknown override {key!r}")

    try:
        sc.params()
        sc.alloc()
        sc.split()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if sc.mc_trials < 1000:
        raise ConfigError("mc.trials must be >= 1000")
    for a in sc.alpha_f_series:
        if not (0.5 < a < 1.0):
            raise ConfigError(f"series.alpha_f entries must lie in (0.5, 1), got {a}")
    for e in sc.eta_series:
        if not (0.0 < e <= 1.0):
            raise ConfigError(f"series.eta entries must lie in (0, 1], got {e}")
    for r in sc.rho_grid:
        if not (0.0 < r < 1.0):
            raise ConfigError(f"compare.rho_grid entries must lie in (0, 1), got {r}")
    return sc
