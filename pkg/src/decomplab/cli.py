"""Command-line interface: validate, analyze, simulate-risk, simulate-queue, verify.

Exit statuses: 0 success, 1 verification failure or numerical failure,
2 invalid configuration or unstable model.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, risk_sim, wiener_hopf
from .analytic import phi_inverse
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DecompLabError, ModelError
from .inversion import InversionConfig, invert_cdf_grid
from .model import ExtendedRate, validate_queue, validate_risk
from .queue_sim import estimate_V_transform
from .verify import DEFAULT_SUITE, EXIT_FAIL, EXIT_INVALID, EXIT_PASS, KINDS, run_suite

log = logging.getLogger("decomplab")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(path: Path, header, rows, config: ExperimentConfig, command: str, extra: dict | None = None) -> None:
    """CSV (LF line ends) plus a JSON sidecar with the resolved config."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    sidecar = {"command": command, "version": __version__, "seed": config.seed, "config": config.resolved()}
    if extra:
        sidecar.update(extra)
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def _out_dir(args, config: ExperimentConfig) -> Path:
    return Path(args.out) if args.out else Path(config.output_dir)


def _rate_arg(text: str) -> ExtendedRate:
    try:
        return ExtendedRate.of("inf" if text == "inf" else float(text))
    except (ValueError, ModelError) as exc:
        raise argparse.ArgumentTypeError(f"invalid rate {text!r}: {exc}") from None


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "rates", None):
        r1, r2 = args.rates
        changes["risk"] = config.risk.with_rates(r1, r2)
        changes["raw"] = {**config.raw, "risk": {"r1": r1.to_json(), "r2": r2.to_json()}}
    if getattr(args, "N", None) is not None:
        changes["budget"] = dataclasses.replace(config.budget, N=args.N)
    return dataclasses.replace(config, **changes) if changes else config


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    config = _load(args)
    risk = validate_risk(config.risk)
    print(f"risk ({config.risk.r1.to_json()}, {config.risk.r2.to_json()}): {risk.value}")
    if config.queue is not None:
        q = config.queue
        cls = validate_queue(q)
        print(f"queue ({q.rho1:g}, {q.rho2:g}): {cls.value}")
        if q.rho1 * q.rho2 >= 1.0:
            print(f"note: rho1 * rho2 = {q.rho1 * q.rho2:g} >= 1, queue decomposition does not apply")
    return EXIT_PASS


def _analyze_F1(config, out):
    validate_risk(config.risk)
    floor = float(phi_inverse(config.risk.spec1, 0.0))
    s = np.array([x for x in config.grids.s if x > floor], dtype=float)
    vals = np.asarray(wiener_hopf.F1_hat(config.risk, s))
    write_table(out / "F1.csv", ["s", "F1_hat"], zip(s, vals), config, "analyze F1")
    return out / "F1.csv"


def _analyze_G1(config, out):
    q = config.queue
    if q is None:
        raise ConfigError("analyze G1 needs a queue section")
    validate_queue(q)
    floor = float(phi_inverse(q.spec1, 0.0))
    s = np.array([x for x in config.grids.s if x >= floor], dtype=float)
    vals = np.asarray(wiener_hopf.G1_hat(q, s))
    write_table(out / "G1.csv", ["s", "G1_hat"], zip(s, vals), config, "analyze G1")
    return out / "G1.csv"


def _analyze_invert(config, out):
    validate_risk(config.risk)
    floor = float(phi_inverse(config.risk.spec1, 0.0))
    u = np.array(config.grids.u, dtype=float)
    res = invert_cdf_grid(lambda s: wiener_hopf.F1_hat(config.risk, s), u, InversionConfig(abscissa=floor))
    rows = zip(res.u, res.cdf, res.error_estimate)
    extra = {"atom": res.atom, "monotone_correction": res.monotone_correction}
    write_table(out / "U_cdf.csv", ["u", "cdf", "error_estimate"], rows, config, "analyze invert-U", extra)
    return out / "U_cdf.csv"


def _analyze_factorize(config, out):
    sp1, sp2 = config.risk.spec1, config.risk.spec2
    s = np.array(config.grids.s, dtype=float)
    rows = []
    for r in config.grids.r:
        r = float(r)
        ev = wiener_hopf.evaluator(sp1, sp2, r)
        mirror = wiener_hopf.evaluator(sp2, sp1, 1.0 / r)
        plus = np.asarray(ev.plus(s))
        res = ev.identity_residual(1j * s, partner=mirror)
        rows.extend(zip([r] * s.size, s, plus, res))
    write_table(out / "factorize.csv", ["r", "s", "psi_plus", "identity_residual"], rows, config, "analyze factorize")
    return out / "factorize.csv"


_ANALYSES = {"F1": _analyze_F1, "G1": _analyze_G1, "invert-U": _analyze_invert, "factorize": _analyze_factorize}


def cmd_analyze(args) -> int:
    config = _load(args)
    path = _ANALYSES[args.what](config, _out_dir(args, config))
    print(f"wrote {path}")
    return EXIT_PASS


def cmd_simulate_risk(args) -> int:
    config = _load(args)
    b = config.budget
    sample = risk_sim.sample_U(
        config.risk, b.N, b.T, config.seed, None, b.epsilon_x, b.x_max, args.jobs
    )
    out = _out_dir(args, config) / "U_sample.csv"
    write_table(
        out, ["replica", "U"], zip(range(sample.N), sample.values), config, "simulate-risk", {"sample": sample.metadata()}
    )
    emp = sample.empirical()
    print(f"wrote {out}: N = {sample.N}, mean U = {emp.mean():.6g}, P(U = 0) = {np.mean(emp.values == 0):.4f}")
    return EXIT_PASS


def cmd_simulate_queue(args) -> int:
    config = _load(args)
    q = config.queue
    if q is None:
        raise ConfigError("simulate-queue needs a queue section")
    if q.rho1 * q.rho2 >= 1.0:
        raise ConfigError("simulate-queue needs rho1 * rho2 < 1")
    b = config.budget
    total = b.queue_total_time or 1e6 / min(q.spec1.drift, q.spec2.drift)
    T = total / b.queue_replicas
    est = estimate_V_transform(
        q, config.grids.s, T, b.queue_replicas, config.seed, burn_in_fraction=b.burn_in_fraction, jobs=args.jobs
    )
    rows = zip(est.s, est.normalized, est.normalized_se, est.raw, est.raw_se)
    out = _out_dir(args, config) / "V_transform.csv"
    extra = {"raw_at_zero": est.raw_at_zero, "raw_at_zero_se": est.raw_at_zero_se, "T": T, "replicas": b.queue_replicas}
    write_table(out, ["s", "estimate", "stderr", "raw", "raw_stderr"], rows, config, "simulate-queue", extra)
    print(f"wrote {out}: total time {est.total_time:.6g}, raw V(0) = {est.raw_at_zero:.5f} +- {est.raw_at_zero_se:.5f}")
    return EXIT_PASS


def _parse_suite(text: str | None):
    if not text or text == "all":
        return list(DEFAULT_SUITE)
    return [k.strip() for k in text.split(",") if k.strip()]


def cmd_verify(args) -> int:
    config = _load(args)
    suite = _parse_suite(args.suite)
    t0 = time.perf_counter()
    reports, status = run_suite(config, suite, jobs=args.jobs)
    for r in reports:
        print(r.summary())
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "verify_report.json"
    doc = {
        "version": __version__,
        "seed": config.seed,
        "config": config.resolved(),
        "suite": suite,
        "pass": status == EXIT_PASS,
        "runtime": time.perf_counter() - t0,
        "reports": [r.to_json() for r in reports],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{'PASS' if status == EXIT_PASS else 'FAIL'}: {len(reports)} identities, report {path}")
    return status


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decomplab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, jobs=True):
        sp.add_argument("--config", required=True, help="experiment configuration (JSON)")
        sp.add_argument("--out", help="output directory (default: output_dir from the config)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the master seed")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")

    sp = sub.add_parser("validate", help="check a configuration and print the stability class")
    common(sp, seed=False, jobs=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("analyze", help="analytic transforms, inversion and factorization tables")
    common(sp, seed=False, jobs=False)
    sp.add_argument("--what", required=True, choices=sorted(_ANALYSES))
    sp.add_argument("--rates", nargs=2, type=_rate_arg, metavar=("R1", "R2"), help="override risk rates (numbers or inf)")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("simulate-risk", help="sample the minimal initial capital U")
    common(sp)
    sp.add_argument("--rates", nargs=2, type=_rate_arg, metavar=("R1", "R2"), help="override risk rates (numbers or inf)")
    sp.add_argument("--N", type=int, help="override the number of replicas")
    sp.set_defaults(func=cmd_simulate_risk)

    sp = sub.add_parser("simulate-queue", help="estimate the transform of V by simulation")
    common(sp)
    sp.set_defaults(func=cmd_simulate_queue)

    sp = sub.add_parser("verify", help="run identity checks and write a JSON report")
    common(sp)
    sp.add_argument("--suite", help=f"comma-separated kinds or 'all' (kinds: {', '.join(KINDS)})")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, ModelError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DecompLabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
