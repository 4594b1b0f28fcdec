"""Command-line experiment harness.

Subcommands: cluster-report, forgetting, two-sided, risk, validate.
Result files are deterministic for a fixed (config, seed); the run
manifest additionally records wall time and is the one file allowed to
differ between identical runs.

Exit codes: 0 success, 1 validation failure, 2 bound violation or
assertion failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .contraction import (
    DecayConfig,
    ForgettingConfig,
    TwoSidedConfig,
    decay_rate_experiment,
    run_forgetting_experiment,
    run_two_sided_experiment,
)
from .exceptions import (
    AssumptionAError,
    ConfigParseError,
    DegenerateDataError,
    HmmForgetError,
    ModelValidationError,
    ZeroLikelihoodError,
)
from .model import assumption_a_clusters, best_cluster, detect_clusters, load_model
from .segmentation import RiskConfig, asymptotic_risk_estimate, validate_loss

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VIOLATION = 2
EXIT_IO = 3


def _parse_grid(spec: str) -> tuple[int, ...]:
    """Parse 'a:b:step' into an inclusive integer range."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigParseError(f"grid {spec!r} must have the form a:b:step")
    try:
        a, b, step = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigParseError(f"grid {spec!r} must contain integers") from exc
    if step <= 0 or b < a:
        raise ConfigParseError(f"grid {spec!r} must be increasing with positive step")
    return tuple(range(a, b + 1, step))


def _parse_lengths(spec: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in spec.split(","))
    except ValueError as exc:
        raise ConfigParseError(f"lengths {spec!r} must be comma-separated integers") from exc
    if not values or any(v < 2 for v in values):
        raise ConfigParseError("lengths must all be >= 2")
    return values


def _load_loss(path: str | None, num_states: int):
    if path is None:
        return None
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return validate_loss(doc, num_states)
    except ValueError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _fmt(cell):
    if isinstance(cell, bool):
        return int(cell)
    if isinstance(cell, float):
        return repr(cell)
    return cell


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out: Path, config: dict, seed: int, started_at: str, elapsed: float) -> None:
    _write_json(
        out / "run_manifest.json",
        {
            "config": config,
            "version": __version__,
            "started_at": started_at,
            "elapsed_s": elapsed,
            "seed": seed,
        },
    )


def _cluster_summary(model) -> list[dict]:
    verified = {c.states: c for c in assumption_a_clusters(model)}
    out = []
    for cluster in detect_clusters(model):
        entry = {
            "states": list(cluster.states),
            "size": len(cluster.states),
            "common_support": list(cluster.common_support),
            "eps_lower": cluster.eps_lower,
            "density_ceiling": cluster.density_ceiling,
            "primitive": cluster.states in verified,
        }
        if cluster.states in verified:
            v = verified[cluster.states]
            entry.update({"r": v.primitivity_exponent, "rho": v.rho, "p_r": v.p_r})
        out.append(entry)
    return out


def cmd_cluster_report(args) -> int:
    model = load_model(args.model)
    summary = _cluster_summary(model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "cluster_report.json", {"model": model.name, "clusters": summary})
    for entry in summary:
        line = (
            f"cluster states={entry['states']} support={entry['common_support']} "
            f"eps={entry['eps_lower']:.6g} ceiling={entry['density_ceiling']:.6g}"
        )
        if entry["primitive"]:
            line += f" r={entry['r']} rho={entry['rho']:.6g} p_r={entry['p_r']:.6g}"
        else:
            line += " (restricted block not primitive)"
        print(line)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        model = load_model(args.model)
    except (ConfigParseError, ModelValidationError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"model ok: {model.num_states} states, {model.num_symbols} symbols")
    print(f"stationary: {np.array2string(model.stationary, precision=6)}")
    summary = _cluster_summary(model)
    if not summary:
        print("no clusters detected")
    for entry in summary:
        status = (
            f"r={entry['r']} rho={entry['rho']:.6g} p_r={entry['p_r']:.6g}"
            if entry["primitive"]
            else "not primitive"
        )
        print(
            f"cluster |C|={entry['size']} states={entry['states']} "
            f"support={entry['common_support']} eps={entry['eps_lower']:.6g} {status}"
        )
    try:
        best = best_cluster(model)
    except AssumptionAError:
        print("warning: no cluster passes the primitivity check; "
              "forgetting and risk experiments will fail", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"selected cluster: states={list(best.states)} rho={best.rho:.6g}")
    return EXIT_OK


def cmd_forgetting(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    model = load_model(args.model)
    cluster = best_cluster(model)
    t_values = _parse_grid(args.t_grid) if args.t_grid else None
    config = ForgettingConfig(
        replicates=args.replicates,
        n=args.length,
        t_values=t_values,
        z1=args.z1,
        z2=args.z2,
        seed=args.seed,
    )
    rows = run_forgetting_experiment(model, cluster, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "forgetting_samples.csv",
        ["replicate", "seed", "t", "z1", "z2", "n", "tv", "kappa", "bound", "violation"],
        [
            [rep, seed, s.t, s.z1, s.z2, s.n, s.tv, s.kappa, s.bound, s.violation]
            for rep, seed, s in rows
        ],
    )
    violations = sum(1 for _, _, s in rows if s.violation)

    decay_doc: dict
    decay_ok = True
    try:
        estimate = decay_rate_experiment(
            model,
            cluster,
            DecayConfig(
                replicates=args.replicates,
                t_max=min(200, args.length),
                z1=args.z1,
                z2=args.z2,
                seed=args.seed,
            ),
        )
        decay_doc = estimate.to_json_dict()
        decay_ok = estimate.within_theory()
        decay_doc["within_theory"] = decay_ok
    except DegenerateDataError as exc:
        decay_doc = {"degenerate": True, "reason": str(exc)}
    _write_json(out / "decay_estimate.json", decay_doc)

    config_echo = {
        "kind": "forgetting",
        "model": str(args.model),
        "replicates": args.replicates,
        "length": args.length,
        "t_values": list(config.resolved_t_values()),
        "z1": args.z1,
        "z2": args.z2,
    }
    _write_manifest(out, config_echo, args.seed, started, time.perf_counter() - t0)
    if violations:
        print(f"{violations} bound violations found", file=sys.stderr)
        return EXIT_VIOLATION
    if not decay_ok:
        print("fitted decay slope exceeds the theoretical ceiling", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"forgetting: {len(rows)} samples, 0 violations")
    return EXIT_OK


def cmd_two_sided(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    model = load_model(args.model)
    cluster = best_cluster(model)
    margins = _parse_grid(args.margins) if args.margins else ()
    config = TwoSidedConfig(
        replicates=args.replicates,
        margins=margins,
        width_factor=args.width_factor,
        seed=args.seed,
    )
    threshold, rows = run_two_sided_experiment(model, cluster, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "two_sided_samples.csv",
        ["replicate", "seed", "t", "z", "n", "half_width", "tv",
         "kappa_fwd", "kappa_rev", "cert_fwd", "cert_rev"],
        [
            [rep, seed, s.t, s.z, s.n, s.half_width, s.tv,
             s.kappa_fwd, s.kappa_rev, s.cert_fwd, s.cert_rev]
            for rep, seed, s in rows
        ],
    )
    by_margin: dict[int, list[float]] = {}
    for _, _, s in rows:
        by_margin.setdefault(s.t - s.z, []).append(s.tv)
    summary = {
        "margin_threshold": threshold,
        "per_margin_median_tv": {str(m): float(np.median(v)) for m, v in sorted(by_margin.items())},
    }
    _write_json(out / "two_sided_summary.json", summary)
    config_echo = {
        "kind": "two-sided",
        "model": str(args.model),
        "replicates": args.replicates,
        "margins": sorted(by_margin),
        "width_factor": args.width_factor,
    }
    _write_manifest(out, config_echo, args.seed, started, time.perf_counter() - t0)
    print(f"two-sided: threshold margin {threshold}, {len(rows)} samples")
    return EXIT_OK


def cmd_risk(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    model = load_model(args.model)
    loss = _load_loss(args.loss, model.num_states)
    lengths = _parse_lengths(args.lengths) if args.lengths else RiskConfig.lengths
    config = RiskConfig(lengths=lengths, replicates=args.replicates, seed=args.seed)
    table = asymptotic_risk_estimate(model, loss, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "risk_samples.csv",
        ["n", "replicate", "seed", "pmap_risk", "viterbi_risk"],
        [[r.n, r.replicate, r.seed, r.pmap_risk, r.viterbi_risk] for r in table.rows],
    )
    _write_json(out / "risk_summary.json", table.to_json_dict())
    config_echo = {
        "kind": "risk",
        "model": str(args.model),
        "replicates": args.replicates,
        "lengths": list(lengths),
        "loss": str(args.loss) if args.loss else None,
    }
    _write_manifest(out, config_echo, args.seed, started, time.perf_counter() - t0)
    final = table.final_estimates()
    print(
        f"risk: R={final['risk']:.6g} (se {final['risk_stderr']:.2g}), "
        f"Rv={final['viterbi_risk']:.6g} (se {final['viterbi_risk_stderr']:.2g})"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmmforget",
        description="HMM smoothing-forgetting and segmentation-risk experiments",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    def common(p, needs_out=True):
        p.add_argument("--model", required=True, help="model JSON file")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")

    p = sub.add_parser("cluster-report", help="detect clusters and their constants")
    common(p)
    p.set_defaults(func=cmd_cluster_report)

    p = sub.add_parser("validate", help="dry-run validation of a model file")
    common(p, needs_out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("forgetting", help="window-forgetting bound checks and decay fit")
    common(p)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--length", type=int, default=128, help="right endpoint n of the windows")
    p.add_argument("--t-grid", default=None, help="probe times as a:b:step")
    p.add_argument("--z1", type=int, default=1, help="late window start (<= 1)")
    p.add_argument("--z2", type=int, default=-16, help="early window start (<= z1)")
    p.set_defaults(func=cmd_forgetting)

    p = sub.add_parser("two-sided", help="wide-window approximation experiment")
    common(p)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--margins", default=None, help="window margins as a:b:step")
    p.add_argument("--width-factor", type=int, default=10,
                   help="proxy half-width as a multiple of the certified threshold")
    p.set_defaults(func=cmd_two_sided)

    p = sub.add_parser("risk", help="asymptotic segmentation-risk estimation")
    common(p)
    p.add_argument("--replicates", type=int, default=64)
    p.add_argument("--lengths", default=None, help="comma-separated sequence lengths")
    p.add_argument("--loss", default=None, help="loss matrix JSON file (default 0/1 loss)")
    p.set_defaults(func=cmd_risk)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigParseError, ModelValidationError, AssumptionAError,
            ZeroLikelihoodError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HmmForgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
