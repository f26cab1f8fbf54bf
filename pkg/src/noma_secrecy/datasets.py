"""Supervised datasets mapping channel realizations to optimal power shares.

Each sample is one draw of the five link power gains, labeled with the
grid-search optimum of the far-user rate under the near-user QoS floor.
Draws whose QoS floor no grid point can satisfy are excluded and counted.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .allocation import ObjectiveConfig, oracle_search
from .channel import ChannelRealization, PowerSplit, SystemParams, sample_gain_matrix

__all__ = ["Dataset", "generate_dataset", "save_dataset", "load_dataset"]

#: Samples drawn per seeded chunk (fixed, so results are independent of
#: worker count).
CHUNK = 4096


@dataclass
class Dataset:
    """Normalized features, labels, and the stats that normalized them.

    ``gains`` keeps the raw realizations so any label can be reproduced
    exactly by re-running the oracle on the stored row.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    gains: np.ndarray
    n_requested: int
    n_infeasible: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite feature values")
        if self.labels.size and not ((self.labels > 0.5) & (self.labels < 1.0)).all():
            raise ValueError("labels must lie strictly in (0.5, 1)")

    def __len__(self):
        return self.labels.size


def _label_chunk(params, split, cfg, seed, count):
    rng = np.random.default_rng(seed)
    gains = sample_gain_matrix(params, rng, count)
    labels = np.empty(count)
    feasible = np.empty(count, dtype=bool)
    for i in range(count):
        res = oracle_search(ChannelRealization(*gains[i]), params, split, cfg)
        labels[i] = res.alpha_f_star
        feasible[i] = res.feasible
    return gains, labels, feasible


def generate_dataset(params: SystemParams, split: PowerSplit,
                     cfg: ObjectiveConfig, n: int, seed: int,
                     workers: int = 1) -> Dataset:
    """Draw ``n`` realizations and label each with the oracle search.

    Deterministic for a given ``seed`` regardless of ``workers``; the
    infeasible draws are dropped and counted in ``n_infeasible``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    n_full, rem = divmod(n, CHUNK)
    sizes = [CHUNK] * n_full + ([rem] if rem else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(seeds, sizes))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda job: _label_chunk(params, split, cfg, job[0], job[1]), jobs))
    else:
        parts = [_label_chunk(params, split, cfg, s, c) for s, c in jobs]

    gains = np.concatenate([p[0] for p in parts])
    labels = np.concatenate([p[1] for p in parts])
    feasible = np.concatenate([p[2] for p in parts])

    gains, labels = gains[feasible], labels[feasible]
    mean = gains.mean(axis=0)
    scale = gains.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return Dataset(
        features=(gains - mean) / scale,
        labels=labels,
        feature_mean=mean,
        feature_scale=scale,
        gains=gains,
        n_requested=n,
        n_infeasible=int(n - feasible.sum()),
    )


def save_dataset(path, ds: Dataset):
    np.savez(path, features=ds.features, labels=ds.labels,
             feature_mean=ds.feature_mean, feature_scale=ds.feature_scale,
             gains=ds.gains,
             counts=np.array([ds.n_requested, ds.n_infeasible]))


def load_dataset(path) -> Dataset:
    with np.load(path) as z:
        return Dataset(
            features=z["features"], labels=z["labels"],
            feature_mean=z["feature_mean"], feature_scale=z["feature_scale"],
            gains=z["gains"],
            n_requested=int(z["counts"][0]), n_infeasible=int(z["counts"][1]),
        )
