"""Command line entry point: ``armaxdesign {run,sweep,sensitivity,spectrum,validate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .harness.config import ConfigError, ExperimentConfig, load_config
from .harness.experiment import MetricsRecord, run_monte_carlo, write_campaign, write_summary
from .harness.spectrum import frequency_response, spectrum
from .plant import read_trajectory
from .sensitivity import build_sensitivity, truncation_bound

EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    for key in ("policy", "num_mc_runs", "steps", "base_seed", "k"):
        value = getattr(args, key, None)
        if value is not None:
            changes[key] = value
    if getattr(args, "out", None):
        changes["output_dir"] = args.out
    if getattr(args, "no_trajectories", False):
        changes["save_trajectories"] = False
    if changes:
        try:
            cfg = cfg.with_(**changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def _limit_label(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:g}"


def _parse_limits(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad --yd-max list {text!r}") from exc


def _too_many_diverged(recs: list[MetricsRecord]) -> bool:
    return any(r.num_diverged > 0.5 * r.num_runs for r in recs)


def _write_spectrum(path: Path, rows: list[tuple[np.ndarray, np.ndarray, str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("freq_hz", "power", "yd_max"))
        for freqs, power, label in rows:
            for f, p in zip(freqs, power):
                w.writerow((f"{f:.17g}", f"{p:.17g}", label))


def _designed_spectrum(rec: MetricsRecord):
    cfg = rec.config
    return spectrum([r.d[cfg.warm_up :] for r in rec.kept_runs], cfg.sampling_period)


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(cfg.output_dir or "results")
    rec = run_monte_carlo(cfg, jobs=args.jobs)
    write_campaign(out, rec)
    for k, v in rec.summary().items():
        print(f"{k}: {v}")
    print(f"wrote {out}")
    return EXIT_DIVERGED if _too_many_diverged([rec]) else 0


def cmd_sweep(args) -> int:
    base = _config(args).with_(policy="designed")
    out = Path(base.output_dir or "sweep")
    recs: list[MetricsRecord] = []
    spectra = []
    for yd in _parse_limits(args.yd_max):
        label = _limit_label(yd)
        cfg = base.with_(yd_min=-yd, yd_max=yd)
        logging.info("campaign yd_max=%s", label)
        rec = run_monte_carlo(cfg, jobs=args.jobs)
        write_campaign(out / f"yd_max_{label}", rec)
        recs.append(rec)
        freqs, power = _designed_spectrum(rec)
        spectra.append((freqs, power, label))
    if not args.no_prbs:
        rec = run_monte_carlo(base.with_(policy="prbs"), jobs=args.jobs)
        write_campaign(out / "prbs", rec)
        recs.append(rec)
        freqs, power = _designed_spectrum(rec)
        spectra.append((freqs, power, "prbs"))
    _write_spectrum(out / "spectrum.csv", spectra)
    _write_response(out / "response.csv", base, spectra[0][0])
    write_summary(out / "summary.txt", [r.summary() for r in recs])
    for r in recs:
        s = r.summary()
        print(f"{s['policy']:>8} yd_max={_limit_label(s['yd_max']):>5}  "
              f"E|delta| ss={s['steady_state_mean_abs_delta']:.4f}  "
              f"final mse={s['final_mse']:.3e}  violations={s['violation_fraction']:.3f}")
    print(f"wrote {out}")
    return EXIT_DIVERGED if _too_many_diverged(recs) else 0


def _write_response(path: Path, cfg: ExperimentConfig, freqs: np.ndarray) -> None:
    """Plant and load-sensitivity magnitude responses on the spectrum grid."""
    s = build_sensitivity(cfg.model, cfg.controller, 1)
    plant = frequency_response(cfg.model.b.coeffs, cfg.model.a.coeffs, freqs, cfg.sampling_period)
    sens = frequency_response(s.b_tilde.coeffs, s.a_tilde.coeffs, freqs, cfg.sampling_period)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("freq_hz", "plant_gain2", "sensitivity_gain2"))
        for row in zip(freqs, plant, sens):
            w.writerow([f"{v:.17g}" for v in row])


def cmd_sensitivity(args) -> int:
    cfg = _config(args)
    s = build_sensitivity(cfg.model, cfg.controller, cfg.k)
    w = csv.writer(sys.stdout)
    w.writerow(("quantity", "index", "value"))
    for i, v in enumerate(s.a_tilde.coeffs):
        w.writerow(("a_tilde", i, f"{v:.17g}"))
    for i, v in enumerate(s.b_tilde.coeffs):
        w.writerow(("b_tilde", i, f"{v:.17g}"))
    for i, v in enumerate(s.g, start=1):
        w.writerow(("g", i, f"{v:.17g}"))
    w.writerow(("stable", "", str(s.stable).lower()))
    bound = truncation_bound(cfg.model, cfg.controller, cfg.k, max(abs(cfg.d_min), abs(cfg.d_max)))
    w.writerow(("truncation_bound", cfg.k, f"{bound:.17g}"))
    return 0


def cmd_spectrum(args) -> int:
    try:
        segments = [read_trajectory(p)[args.column][args.skip :] for p in args.trajectories]
        freqs, power = spectrum(segments, args.sampling_period, args.segment)
    except (OSError, KeyError, ValueError) as exc:
        print(f"spectrum: {exc}", file=sys.stderr)
        return 1
    rows = [(freqs, power, args.label)]
    if args.out:
        _write_spectrum(Path(args.out), rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(("freq_hz", "power", "yd_max"))
        for f, p in zip(freqs, power):
            w.writerow((f"{f:.17g}", f"{p:.17g}", args.label))
    return 0


def cmd_validate(args) -> int:
    from .validate import run_checks

    return 0 if run_checks() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="armaxdesign", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def campaign_opts(p):
        p.add_argument("-c", "--config", help="key = value experiment file")
        p.add_argument("-o", "--out", help="output directory")
        p.add_argument("--runs", dest="num_mc_runs", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--seed", dest="base_seed", type=int)
        p.add_argument("-k", type=int, help="impulse response horizon")
        p.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--no-trajectories", action="store_true")

    p = sub.add_parser("run", help="single Monte Carlo campaign")
    campaign_opts(p)
    p.add_argument("--policy", choices=("designed", "prbs", "zero"))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="designed campaigns over output limits, plus PRBS")
    campaign_opts(p)
    p.add_argument("--yd-max", default="0.04,0.10,0.20,inf",
                   help="comma separated output limits (symmetric), inf allowed")
    p.add_argument("--no-prbs", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sensitivity", help="dump the load sensitivity as CSV")
    p.add_argument("-c", "--config")
    p.add_argument("-k", type=int)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("spectrum", help="averaged periodogram of trajectory files")
    p.add_argument("trajectories", nargs="+")
    p.add_argument("--column", default="d")
    p.add_argument("--skip", type=int, default=200, help="leading samples to drop")
    p.add_argument("--sampling-period", type=float, default=0.01)
    p.add_argument("--segment", type=int, default=512)
    p.add_argument("--label", default="")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("validate", help="run numerical self-checks")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
