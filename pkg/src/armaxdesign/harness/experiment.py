"""Single runs, Monte Carlo campaigns, metrics and file outputs."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..designer import design_inputs, design_step
from ..plant import ClosedLoop, SimulationError, theta_vector, write_trajectory
from ..rpem import DesignerInfo, Rpem
from ..sensitivity import PerturbationHistory, build_sensitivity, constraint_bounds
from .config import ExperimentConfig
from .prbs import Prbs

log = logging.getLogger(__name__)

STREAM_NOISE = 0
STREAM_PRBS = 1
METRICS_COLUMNS = ("t", "mean_abs_delta", "mse", "violation_rate", "mean_d", "var_d")


def noise_sequence(seed: int, n: int, std: float) -> np.ndarray:
    """Gaussian noise for one run; shared by every policy given the same seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, STREAM_NOISE])))
    return std * rng.standard_normal(n)


@dataclass
class RunResult:
    """Signals of one run, indexed by time ``t = 0 .. steps-1``.

    ``theta`` row ``t`` is the estimate after absorbing ``y~_t``.
    """

    seed: int
    r: np.ndarray
    u: np.ndarray
    d: np.ndarray
    u_tilde: np.ndarray
    y_tilde: np.ndarray
    delta: np.ndarray
    e: np.ndarray
    theta: np.ndarray
    output_active: np.ndarray
    projected: np.ndarray
    unstable_sensitivity: np.ndarray
    diverged: bool = False
    message: str = ""
    rejected_steps: int = 0
    c_projections: int = 0

    def trajectory_rows(self):
        for t in range(self.r.size):
            yield (t, self.r[t], self.u[t], self.d[t], self.u_tilde[t],
                   self.y_tilde[t], self.delta[t], self.e[t])


def _empty_run(seed: int, n: int, dim: int) -> RunResult:
    z = lambda: np.zeros(n)  # noqa: E731
    b = lambda: np.zeros(n, dtype=bool)  # noqa: E731
    return RunResult(seed, z(), z(), z(), z(), z(), z(), z(), np.zeros((n, dim)), b(), b(), b())


def run_single(cfg: ExperimentConfig, seed: int) -> RunResult:
    """One closed-loop experiment.

    The first ``warm_up`` steps apply no perturbation while the estimator
    runs. Afterwards each step follows: controller output, perturbation from
    the policy, plant update, estimator update, information update.
    """
    model, ctrl = cfg.model, cfg.controller
    T = cfg.steps
    limits = cfg.limits
    loop = ClosedLoop(model, ctrl)
    est = Rpem(model.orders, cfg.theta_init, cfg.gain_init, cfg.lambda_init,
               cfg.ff_base, cfg.ff_decay)
    info = DesignerInfo(est.dim, cfg.rho)
    history = PerturbationHistory(cfg.k)
    noise = noise_sequence(seed, T + 1, model.noise_std)
    # one PRBS realization per campaign, like a fixed test signal; only the
    # noise differs between runs
    prbs = (Prbs(cfg.prbs_amplitude, cfg.prbs_switch_period, cfg.base_seed)
            if cfg.policy == "prbs" else None)
    res = _empty_run(seed, T, est.dim)
    res.e[0] = 0.0

    for t in range(T):
        res.theta[t] = est.theta
        res.y_tilde[t] = loop.y
        res.delta[t] = loop.delta
        r_t = cfg.reference_at(t)
        res.r[t] = r_t
        try:
            u_t = loop.control(r_t)
            if t < cfg.warm_up or cfg.policy == "zero":
                d_t = 0.0
            elif prbs is not None:
                d_t = prbs(t)
            else:
                sens = build_sensitivity(est.model(), ctrl, cfg.k)
                ctx = constraint_bounds(sens, history.values(), limits)
                d_t, diag = design_step(design_inputs(est, info.R, u_t, ctx), limits)
                res.output_active[t] = diag.output_active
                res.projected[t] = ctx.projected
                res.unstable_sensitivity[t] = not sens.stable
            y_next, _, u_tilde = loop.advance(d_t, noise[t + 1])
        except SimulationError as exc:
            res.diverged, res.message = True, str(exc)
            break
        res.u[t], res.d[t], res.u_tilde[t] = u_t, d_t, u_tilde
        if t + 1 < T:
            res.e[t + 1] = noise[t + 1]
        if abs(y_next) > cfg.divergence_limit:
            res.diverged = True
            res.message = f"|y| = {abs(y_next):.3g} exceeds {cfg.divergence_limit:g} at t={t + 1}"
            break
        _, _, psi = est.step(y_next, u_tilde)
        info.update(psi)
        history.push(d_t)

    res.rejected_steps = est.rejected_steps
    res.c_projections = est.c_projections
    if res.diverged:
        log.warning("run with seed %d diverged: %s", seed, res.message)
    return res


@dataclass
class MetricsRecord:
    """Per-step aggregates over the non-diverged runs of a campaign."""

    config: ExperimentConfig
    t: np.ndarray
    mean_abs_delta: np.ndarray
    mse: np.ndarray
    violation_rate: np.ndarray
    mean_d: np.ndarray
    var_d: np.ndarray
    active_rate: np.ndarray
    runs: list[RunResult] = field(repr=False)
    num_runs: int = 0
    num_diverged: int = 0

    @property
    def kept_runs(self) -> list[RunResult]:
        return [r for r in self.runs if not r.diverged]

    def steady_state_abs_delta(self, last: int = 1000) -> float:
        return float(np.mean(self.mean_abs_delta[-last:]))

    def final_mse(self) -> float:
        return float(self.mse[-1])

    def violation_fraction(self, after: int) -> float:
        """Share of steps ``t > after`` with ``delta_t`` outside the limits."""
        return float(np.mean(self.violation_rate[after + 1 :]))

    def constraint_activity(self) -> float:
        """Share of designed steps where the output constraint picked ``d``."""
        return float(np.mean(self.active_rate[self.config.warm_up :]))

    def summary(self) -> dict[str, float]:
        cfg = self.config
        return {
            "policy": cfg.policy,
            "yd_max": cfg.yd_max,
            "num_runs": self.num_runs,
            "num_diverged": self.num_diverged,
            "steady_state_mean_abs_delta": self.steady_state_abs_delta(min(1000, cfg.steps)),
            "max_mean_abs_delta": float(np.max(self.mean_abs_delta)),
            "mse_at_warm_up": float(self.mse[cfg.warm_up]),
            "final_mse": self.final_mse(),
            "violation_fraction": self.violation_fraction(min(cfg.warm_up + 100, cfg.steps - 2)),
            "constraint_activity": self.constraint_activity(),
            "total_power_d": float(np.mean([np.mean(r.d[cfg.warm_up :] ** 2) for r in self.kept_runs]))
            if self.kept_runs else math.nan,
        }


def aggregate(cfg: ExperimentConfig, runs: list[RunResult]) -> MetricsRecord:
    kept = [r for r in runs if not r.diverged]
    if not kept:
        nan = np.full(cfg.steps, np.nan)
        return MetricsRecord(cfg, np.arange(cfg.steps), nan, nan.copy(), nan.copy(),
                             nan.copy(), nan.copy(), nan.copy(), runs, len(runs), len(runs))
    theta = theta_vector(cfg.model)
    norm2 = float(theta @ theta)
    delta = np.stack([r.delta for r in kept])
    d = np.stack([r.d for r in kept])
    err = np.stack([np.sum((r.theta - theta) ** 2, axis=1) for r in kept]) / norm2
    viol = (delta > cfg.yd_max) | (delta < cfg.yd_min)
    active = np.stack([r.output_active for r in kept])
    return MetricsRecord(
        config=cfg,
        t=np.arange(cfg.steps),
        mean_abs_delta=np.mean(np.abs(delta), axis=0),
        mse=np.mean(err, axis=0),
        violation_rate=np.mean(viol, axis=0),
        mean_d=np.mean(d, axis=0),
        var_d=np.var(d, axis=0),
        active_rate=np.mean(active, axis=0),
        runs=runs,
        num_runs=len(runs),
        num_diverged=len(runs) - len(kept),
    )


def _run_one(args):
    cfg, seed = args
    return run_single(cfg, seed)


def run_monte_carlo(cfg: ExperimentConfig, jobs: int = 1) -> MetricsRecord:
    """Runs with seeds ``base_seed + 1 .. base_seed + num_mc_runs``.

    Results are reduced in seed order whatever the number of workers.
    """
    seeds = [cfg.base_seed + i for i in range(1, cfg.num_mc_runs + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_one, [(cfg, s) for s in seeds]))
    else:
        runs = [run_single(cfg, s) for s in seeds]
    rec = aggregate(cfg, runs)
    if rec.num_diverged:
        log.warning("%d of %d runs diverged and were excluded", rec.num_diverged, rec.num_runs)
    return rec


def write_metrics(path: str | Path, rec: MetricsRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for i in range(rec.t.size):
            w.writerow([int(rec.t[i])] + [
                f"{float(v[i]):.17g}"
                for v in (rec.mean_abs_delta, rec.mse, rec.violation_rate, rec.mean_d, rec.var_d)
            ])


def write_summary(path: str | Path, summaries: list[dict]) -> None:
    with open(path, "w") as fh:
        for s in summaries:
            fh.write(" ".join(f"{k}={_fmt(v)}" for k, v in s.items()) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_campaign(out_dir: str | Path, rec: MetricsRecord) -> Path:
    """Write ``metrics.csv``, ``summary.txt`` and per-run trajectories."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics(out / "metrics.csv", rec)
    write_summary(out / "summary.txt", [rec.summary()])
    if rec.config.save_trajectories:
        for i, run in enumerate(rec.runs, start=1):
            write_trajectory(out / f"trajectory_{i}.csv", run.trajectory_rows())
    return out
