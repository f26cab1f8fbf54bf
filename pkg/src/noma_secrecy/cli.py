"""Command-line experiment harness.

Subcommands reproduce the package's headline artifacts as CSV files with
a ``#``-prefixed metadata header (full scenario, seed, tool version, and
a timestamp line).  Rerunning a command with the same config and seed
reproduces the CSV body byte-identically apart from the timestamp line
and wall-clock timing columns, independent of the worker count.

Exit codes: 0 success, 1 configuration/validation error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import statistics
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, network, specfun
from .allocation import ObjectiveConfig, oracle_search
from .channel import ChannelRealization, sample_gain_matrix
from .configio import ConfigError, Scenario, load_scenario
from .datasets import generate_dataset, load_dataset, save_dataset
from .estimators import GridOracleAllocator, MlpAllocationRegressor, RandomAllocator
from .secrecy import (
    SecrecyAnalysisError,
    intercept_events_from_gains,
    intercept_probability_analytical,
    intercept_probability_mc,
    secrecy_rates_for_alphas,
)
from .specfun import SpecFunError

DEFAULT_RHO_GRID = [x / 10 for x in range(1, 10)]


@dataclass
class RunRecord:
    """One command's outputs plus everything needed to reproduce them."""

    command: str
    scenario: dict
    columns: list
    rows: list = field(default_factory=list)
    tool_version: str = __version__

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# command: {self.command}\n")
            fh.write(f"# tool_version: {self.tool_version}\n")
            for key in sorted(self.scenario):
                fh.write(f"# {key}: {self.scenario[key]}\n")
            fh.write(f"# timestamp: {datetime.now(timezone.utc).isoformat()}\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join("" if v is None else str(v) for v in row) + "\n")


def _analytical_cell(params, alloc, split):
    """Analytical intercept probability, or (None, reason-code)."""
    try:
        return intercept_probability_analytical(params, alloc, split).value, ""
    except ValueError:
        return None, "unsupported_shape_m"
    except (SecrecyAnalysisError, SpecFunError) as exc:
        return None, f"numerical_failure:{type(exc).__name__}"


def cmd_intercept_vs_snr(sc: Scenario, out_path: str) -> int:
    """Intercept probability against transmit SNR, one row per grid point
    per (eta, alpha_f) series, Monte Carlo plus analytical."""
    if sc.sweep.variable != "snr_db":
        raise ConfigError("intercept-vs-snr needs sweep.variable = snr_db")
    workers = sc.effective_workers()
    rec = RunRecord("intercept-vs-snr", sc.describe(),
                    ["snr_db", "eta", "alpha_f", "p_int_mc", "p_int_mc_stderr",
                     "p_int_analytical", "note"])
    for eta in sc.eta_series:
        for alpha_f in sc.alpha_f_series:
            alloc = sc.alloc(alpha_f)
            split = sc.split()
            for snr_db in sc.sweep.grid():
                params = sc.params(snr_db=float(snr_db), eta=eta)
                mc = intercept_probability_mc(params, alloc, split,
                                              sc.mc_trials, sc.seed, workers)
                ana, note = _analytical_cell(params, alloc, split)
                rec.rows.append([float(snr_db), eta, alpha_f, mc.value,
                                 mc.std_error, ana, note])
    rec.write(out_path)
    print(f"wrote {len(rec.rows)} rows to {out_path}")
    return 0


def cmd_intercept_vs_rho(sc: Scenario, out_path: str) -> int:
    """Intercept probability against the common power-splitting factor,
    plus the per-rho gap between the largest and smallest alpha_f series."""
    if sc.sweep.variable == "rho":
        rho_grid = [float(r) for r in sc.sweep.grid()]
    else:
        rho_grid = DEFAULT_RHO_GRID
    for r in rho_grid:
        if not (0.0 < r < 1.0):
            raise ConfigError(f"rho sweep value out of (0, 1): {r}")
    workers = sc.effective_workers()
    etas = [sc.eta]
    rec = RunRecord("intercept-vs-rho", sc.describe(),
                    ["rho", "eta", "alpha_f", "p_int_mc", "p_int_mc_stderr",
                     "p_int_analytical", "note"])
    results = {}
    for eta in etas:
        for alpha_f in sc.alpha_f_series:
            alloc = sc.alloc(alpha_f)
            for rho in rho_grid:
                params = sc.params(eta=eta)
                split = sc.split(rho=rho)
                mc = intercept_probability_mc(params, alloc, split,
                                              sc.mc_trials, sc.seed, workers)
                ana, note = _analytical_cell(params, alloc, split)
                rec.rows.append([rho, eta, alpha_f, mc.value, mc.std_error,
                                 ana, note])
                results[(eta, alpha_f, rho)] = mc.value
    rec.write(out_path)

    a_lo, a_hi = min(sc.alpha_f_series), max(sc.alpha_f_series)
    gap_rec = RunRecord("intercept-vs-rho-gap", sc.describe(),
                        ["rho", "eta", "alpha_f_hi", "alpha_f_lo", "gap"])
    for eta in etas:
        for rho in rho_grid:
            gap = results[(eta, a_hi, rho)] - results[(eta, a_lo, rho)]
            gap_rec.rows.append([rho, eta, a_hi, a_lo, gap])
    gap_path = _sibling(out_path, "-gap")
    gap_rec.write(gap_path)
    print(f"wrote {len(rec.rows)} rows to {out_path}, gap metric to {gap_path}")
    return 0


def _sibling(path: str, suffix: str) -> str:
    stem, dot, ext = path.rpartition(".")
    return f"{stem}{suffix}.{ext}" if dot else f"{path}{suffix}"


def _derived_seeds(master: int):
    s = np.random.SeedSequence(master).generate_state(4)
    return {"train": int(s[1]), "test": int(s[2]), "net": int(s[3])}


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def cmd_train(sc: Scenario, out_path: str) -> int:
    """Generate (or load cached) training data, fit the network, persist it."""
    seeds = _derived_seeds(sc.seed)
    workers = sc.effective_workers()
    params, split = sc.params(), sc.split()

    ds = None
    if sc.dataset_cache:
        try:
            ds = load_dataset(sc.dataset_cache)
            print(f"loaded cached dataset from {sc.dataset_cache} ({len(ds)} rows)")
        except FileNotFoundError:
            ds = None
    if ds is None:
        ds = generate_dataset(params, split, sc.objective, sc.n_train,
                              seeds["train"], workers)
        if sc.dataset_cache:
            save_dataset(sc.dataset_cache, ds)
    print(f"training rows: {len(ds)} (requested {ds.n_requested}, "
          f"infeasible excluded {ds.n_infeasible})")

    est = MlpAllocationRegressor(
        hidden_layers=sc.hidden_layers, epochs=sc.epochs,
        batch_size=sc.batch_size, learning_rate=sc.learning_rate,
        decay_rate=sc.decay_rate, validation_fraction=sc.validation_fraction,
        seed=seeds["net"],
    )
    est.fit(ds.gains, ds.labels)
    est.save(out_path)

    loss_rec = RunRecord("train-loss-history", sc.describe(),
                         ["epoch", "train_mse"])
    loss_rec.rows = [[i + 1, v] for i, v in enumerate(est.loss_history_)]
    stem = out_path.rpartition(".")[0] or out_path
    loss_path = f"{stem}-losses.csv"
    loss_rec.write(loss_path)

    print(f"final train MSE: {est.train_mse_:.3e}")
    print(f"final validation MSE: {est.val_mse_:.3e}")
    print(f"model written to {out_path}")
    print(f"model sha256: {_file_digest(out_path)}")
    print(f"loss history written to {loss_path}")
    return 0


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cmd_compare(sc: Scenario, model_path: str, out_path: str) -> int:
    """Mean achieved secrecy rate and wall-clock time of oracle search,
    network inference, and the random baseline across the rho grid."""
    est = MlpAllocationRegressor.load(model_path)
    seeds = _derived_seeds(sc.seed)
    rng = np.random.default_rng(seeds["test"])
    gains = sample_gain_matrix(sc.params(), rng, sc.n_test)

    rec = RunRecord("compare", sc.describe(),
                    ["rho", "rate_oracle", "rate_dl", "rate_random",
                     "time_oracle_s", "time_dl_s"])
    params = sc.params()
    rand_alpha = RandomAllocator(seed=seeds["test"]).fit().predict(gains)
    for rho in sc.rho_grid:
        split = sc.split(rho=rho)
        oracle = GridOracleAllocator(params=params, split=split,
                                     objective=sc.objective).fit()
        alpha_oracle = oracle.predict(gains)
        t_oracle = _median_time(lambda: oracle.predict(gains), sc.timing_repeats)
        alpha_dl = est.predict(gains)
        t_dl = _median_time(lambda: est.predict(gains), sc.timing_repeats)

        rate = lambda a: float(np.mean(secrecy_rates_for_alphas(params, split, gains, a)))
        rec.rows.append([rho, rate(alpha_oracle), rate(alpha_dl),
                         rate(rand_alpha), t_oracle, t_dl])
    rec.write(out_path)
    print(f"wrote {len(rec.rows)} rows to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# Embedded verification suite
# ---------------------------------------------------------------------------

def _selftest_items(seed: int):
    """(name, tolerance, runner) triples; runner(tol) -> (ok, measured, detail)."""

    def gamma_identity(tol):
        xs = np.linspace(0.0, 30.0, 61)
        err = max(abs(specfun.upper_incomplete_gamma(1.0, x) - math.exp(-x))
                  for x in xs)
        return err <= tol, err, "max |Gamma(1,x) - exp(-x)| on [0,30]"

    def gamma_q33(tol):
        expected = math.exp(-3.0) * (1.0 + 3.0 + 4.5)
        err = abs(specfun.regularized_gamma_q(3.0, 3.0) - expected)
        return err <= tol, err, "|Q(3,3) - finite Poisson sum|"

    def ei_series(tol):
        def oracle(x, terms=200):
            total = 0.5772156649015328606 + math.log(abs(x))
            term = 1.0
            for k in range(1, terms + 1):
                term *= x / k
                total += term / k
            return total
        err = max(abs(specfun.exp_integral_ei(x) - oracle(x))
                  for x in (-0.25, -0.5, -1.0, -2.0))
        return err <= tol, err, "max |Ei(x) - series oracle|"

    def mc_enumeration(tol):
        from itertools import product
        from .channel import PowerAllocation, PowerSplit, SystemParams
        params = SystemParams(p_tx=10.0, n0=1.0, eta=0.7, m_shape=1.0,
                              omega_su_n=1.0, omega_su_f=1.0, omega_se=1.0,
                              omega_un_e=1.0, omega_un_uf=1.0)
        alloc = PowerAllocation.from_far(0.8)
        split = PowerSplit.uniform(0.3)
        levels = np.array([0.2, 1.0, 3.0])

        def sampler(rng, n):
            return levels[rng.integers(0, 3, size=(n, 5))]

        outcomes = np.array(list(product(levels, repeat=5)))
        exact = float(np.mean(
            intercept_events_from_gains(params, alloc, split, outcomes)))
        est = intercept_probability_mc(params, alloc, split, 100_000, seed,
                                       sampler=sampler)
        dev_sigmas = abs(est.value - exact) / est.std_error
        return dev_sigmas <= tol, dev_sigmas, "deviation in MC standard errors"

    def gradient_check(tol):
        rng = np.random.default_rng(seed)
        net = network.init_mlp([4, 8, 5, 1], rng)
        x = rng.normal(size=(6, 4))
        y = rng.uniform(0.55, 0.95, size=6)
        _, gw, gb = network.backward(net, x, y)
        worst = 0.0
        eps = 1e-6
        for li in range(len(net.weights)):
            for arr, grad in ((net.weights[li], gw[li]), (net.biases[li], gb[li])):
                flat = arr.reshape(-1)
                for j in range(flat.size):
                    keep = flat[j]
                    flat[j] = keep + eps
                    up = network.mse_loss(network.forward_batch(net, x), y)
                    flat[j] = keep - eps
                    dn = network.mse_loss(network.forward_batch(net, x), y)
                    flat[j] = keep
                    fd = (up - dn) / (2 * eps)
                    g = grad.reshape(-1)[j]
                    denom = max(abs(fd), abs(g), 1e-8)
                    worst = max(worst, abs(fd - g) / denom)
        return worst <= tol, worst, "max relative gradient error"

    return [
        ("specfun-gamma-identity", 1e-10, gamma_identity),
        ("specfun-regularized-q33", 1e-10, gamma_q33),
        ("specfun-ei-series", 1e-9, ei_series),
        ("mc-vs-enumeration", 3.0, mc_enumeration),
        ("gradient-check", 1e-5, gradient_check),
    ]


def cmd_selftest(seed: int = 20240901, inject_fault: str | None = None) -> int:
    """Run the embedded verification suite; nonzero exit on any failure."""
    import scipy

    print(f"noma-secrecy selftest (tool {__version__}, numpy {np.__version__}, "
          f"scipy {scipy.__version__}, python {sys.version.split()[0]})")
    print(f"seed: {seed}")
    failures = 0
    for name, tol, runner in _selftest_items(seed):
        used_tol = tol
        if inject_fault == name:
            used_tol = tol * 1e-12  # deliberately unsatisfiable
        ok, measured, detail = runner(used_tol)
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail} = {measured:.3e} (tolerance {used_tol:.3e})")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} item(s) failed")
        return 1
    print("all selftest items passed")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-secrecy",
        description="Secrecy analysis and learned power allocation for "
                    "SWIPT cooperative NOMA relaying.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="YAML scenario file (defaults baked in)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
        p.add_argument("--workers", type=int,
                       help="parallel workers (0 = all cores)")
        p.add_argument("--out", default=out_default, help="output path")

    common(sub.add_parser("intercept-vs-snr",
                          help="intercept probability across transmit SNR"),
           "intercept_vs_snr.csv")
    common(sub.add_parser("intercept-vs-rho",
                          help="intercept probability across the power split"),
           "intercept_vs_rho.csv")
    common(sub.add_parser("train", help="label a dataset and train the network"),
           "model.mlp")
    p_cmp = sub.add_parser("compare",
                           help="secrecy rate and timing of oracle vs network vs random")
    common(p_cmp, "compare.csv")
    p_cmp.add_argument("--model", required=True, help="trained model path")
    p_self = sub.add_parser("selftest", help="run the embedded verification suite")
    p_self.add_argument("--seed", type=int, default=20240901)
    p_self.add_argument("--inject-fault", help="corrupt one item's tolerance "
                        "(verification hook)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return cmd_selftest(seed=args.seed, inject_fault=args.inject_fault)
        sc = load_scenario(args.config, overrides={
            "seed": args.seed, "trials": args.trials, "workers": args.workers})
        if args.command == "intercept-vs-snr":
            return cmd_intercept_vs_snr(sc, args.out)
        if args.command == "intercept-vs-rho":
            return cmd_intercept_vs_rho(sc, args.out)
        if args.command == "train":
            return cmd_train(sc, args.out)
        if args.command == "compare":
            return cmd_compare(sc, args.model, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SecrecyAnalysisError, SpecFunError, network.TrainingDivergedError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
