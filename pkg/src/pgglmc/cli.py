"""Command-line harness: ``pgglmc {sample, verify, bounds}``.

Exit codes: 0 success, 2 config problem (parse error, unknown key, unknown
suite), 3 chain divergence, 4 theory-gate violation (step-size cap).

Reports are JSON with full config echo; final states go to CSV with the
fixed header ``chain,coordinate_0,...`` (UTF-8, LF).  Floats are written in
shortest round-trip form, so two runs with the same config and seed produce
byte-identical CSV files regardless of thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import ConfigError, DivergenceError, ParameterError, StepSizeError
from .lmc import lemma3_w2_bound, run_chain, theorem1_bound
from .potentials import max_step_size, perturbation_scale_a, smoothness_constant_M
from .smoothing import lemma1_gap_bound
from .suites import SUITE_NAMES, run_suites
from .transport import ASSIGNMENT_CAP, SampleSet, w2_to_gaussian

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_GATE = 4


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(doc), fh, indent=2)
        fh.write("\n")


def _write_states_csv(path: Path, states: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    d = states.shape[1]
    header = "chain," + ",".join(f"coordinate_{j}" for j in range(d))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i, row in enumerate(states):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _default_w2_init(pot, lcfg):
    """Distance from the initial law to the smoothed regularized target.

    Exact for the quadratic family (the smoothed target is the same Gaussian
    as the unsmoothed one); otherwise an upper bound via the point mass at
    the symmetric minimizer plus the d/lam second-moment envelope.
    """
    d = pot.d
    init = lcfg.init
    if init.kind == "point":
        pt = np.broadcast_to(np.asarray(init.point, dtype=float), (d,))
        mean_sq, spread = float(pt @ pt), 0.0
    else:
        mean = np.broadcast_to(np.asarray(init.mean, dtype=float), (d,))
        mean_sq, spread = float(mean @ mean), float(init.scale)
    if pot.has_exact_smoothing:
        sigma = math.sqrt(pot.target_variance)
        return math.sqrt(mean_sq + d * (spread - sigma) ** 2), "exact (Gaussian target)"
    w2_to_point = math.sqrt(mean_sq + d * spread**2)
    return w2_to_point + math.sqrt(d / pot.lam), "upper bound via d/lam second moment"


def _bounds_payload(cfg: ExperimentConfig, pot, scfg, lcfg) -> dict:
    w2_init, w2_init_kind = _default_w2_init(pot, lcfg)
    theorem = theorem1_bound(pot, scfg, lcfg, w2_init=w2_init, xstar_norm_sq=0.0, C=0.0)
    lemma3 = lemma3_w2_bound(pot, scfg.mu, scfg.pgg.p, xstar_norm_sq=0.0)
    return {
        "M": theorem.M,
        "a": theorem.a,
        "max_step_size": max_step_size(pot, scfg.mu, scfg.pgg.p),
        "lemma1_gap_bound": lemma1_gap_bound(pot.base, scfg.mu, scfg.pgg.p),
        "lemma3": {
            "a": lemma3.a,
            "w2_sq_general": lemma3.w2_sq_general,
            "w2_general": lemma3.w2_general,
            "w2_simplified": lemma3.w2_simplified,
            "simplified_applicable": lemma3.simplified_applicable,
        },
        "theorem1": {
            "w2_mixing": theorem.w2_mixing,
            "w2_init": w2_init,
            "w2_init_kind": w2_init_kind,
            "C": theorem.C,
            "terms": theorem.terms,
            "notes": theorem.notes,
            "geometric_alt_exponent_K": theorem.geometric_alt,
        },
    }


def _emit(quiet: bool, text: str) -> None:
    if not quiet:
        print(text)


def cmd_sample(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    pot = cfg.build_potential()
    scfg = cfg.build_smoothing()
    lcfg = cfg.build_lmc(pot, seed_override=args.seed)
    out_dir = Path(args.out)

    t0 = time.perf_counter()
    res = run_chain(pot, scfg, lcfg, thin=cfg.resolve_thinning(), threads=args.threads)
    runtime = time.perf_counter() - t0

    csv_path = out_dir / cfg.report.csv
    _write_states_csv(csv_path, res.final_states)

    finals = res.final_states
    metrics = {
        "evals_total": res.evals_total,
        "runtime_seconds": runtime,
        "chains": lcfg.chains,
        "diverged_chains": int(res.diverged.sum()),
        "divergence_steps": res.divergence_step[res.diverged].tolist(),
        "final_mean": finals.mean(axis=0),
        "final_coordinate_variance": finals.var(axis=0, ddof=1) if lcfg.chains > 1 else None,
        "final_mean_sq_norm": float(np.mean(np.sum(finals**2, axis=1))),
    }
    if pot.has_exact_smoothing and lcfg.chains > 1:
        pts = finals
        sub_note = ""
        if pts.shape[0] > ASSIGNMENT_CAP:
            sel = np.random.default_rng(lcfg.seed).choice(pts.shape[0], ASSIGNMENT_CAP,
                                                          replace=False)
            pts = pts[sel]
            sub_note = f" (subsampled to {ASSIGNMENT_CAP})"
        w2 = w2_to_gaussian(SampleSet(pts), pot.target_variance,
                            resamples=cfg.report.resamples,
                            rng=np.random.default_rng(lcfg.seed + 1))
        metrics["empirical_w2_to_target"] = {
            "mean": w2.mean, "std": w2.std, "values": w2.values,
            "n": pts.shape[0], "resamples": cfg.report.resamples,
            "note": "exact-assignment W2 against the known Gaussian target" + sub_note,
        }

    report = {
        "tool": "pgglmc",
        "version": __version__,
        "command": "sample",
        "config": cfg.echo(),
        "resolved": {"eta": lcfg.eta, "seed": lcfg.seed, "threads": args.threads,
                     "thin": res.config_echo["thin"],
                     "eta_cap": max_step_size(pot, scfg.mu, scfg.pgg.p)},
        "metrics": metrics,
        "bounds": _bounds_payload(cfg, pot, scfg, lcfg),
    }
    _write_json(out_dir / cfg.report.json_path, report)

    _emit(args.quiet, f"wrote {csv_path} ({lcfg.chains} chains, d = {pot.d}) and "
                      f"{out_dir / cfg.report.json_path}")
    if res.diverged.any():
        bad = np.flatnonzero(res.diverged)
        for c in bad:
            print(f"chain {c} diverged at step {res.divergence_step[c]}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    pot = cfg.build_potential()
    scfg = cfg.build_smoothing()
    lcfg = cfg.build_lmc(pot, seed_override=args.seed)
    payload = _bounds_payload(cfg, pot, scfg, lcfg)

    if not args.quiet:
        print(f"M = {payload['M']:.9g}   a = {payload['a']:.9g}   "
              f"eta cap = {payload['max_step_size']:.9g}   eta = {lcfg.eta:.9g}")
        print(f"lemma1 gap bound     {payload['lemma1_gap_bound']:.9g}")
        lemma3 = payload["lemma3"]
        print(f"lemma3 W2^2 general  {lemma3['w2_sq_general']:.9g}")
        print(f"lemma3 W2 simplified {lemma3['w2_simplified']:.9g} "
              f"(applicable: {lemma3['simplified_applicable']})")
        print("theorem 1 terms:")
        for name, value in payload["theorem1"]["terms"].items():
            print(f"  {name:20s} {value:.9g}")
        print(f"  {'total':20s} {payload['theorem1']['w2_mixing']:.9g}")
        print(f"note: {payload['theorem1']['notes']['batch_size_gate']}")

    report = {"tool": "pgglmc", "version": __version__, "command": "bounds",
              "config": cfg.echo(),
              "resolved": {"eta": lcfg.eta, "seed": lcfg.seed},
              "bounds": payload}
    _write_json(Path(args.out) / cfg.report.json_path, report)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed
    if args.config is not None:
        cfg = ExperimentConfig.from_file(args.config)
        if seed is None:
            seed = cfg.seed
    results = run_suites(args.suite, seed=seed, threads=args.threads)

    all_passed = all(r.passed for r in results)
    if not args.quiet:
        for res in results:
            for check in res.checks:
                status = "PASS" if check.passed else "FAIL"
                limit = "" if check.limit is None else f"  limit={check.limit:.9g}"
                print(f"{status}  {res.suite}.{check.name}  "
                      f"observed={check.observed:.9g}{limit}")
            print(f"-- suite {res.suite}: {'PASS' if res.passed else 'FAIL'} "
                  f"({len(res.checks)} checks, {res.seconds:.1f}s)")
        print(f"== verify {args.suite}: {'PASS' if all_passed else 'FAIL'}")

    report = {"tool": "pgglmc", "version": __version__, "command": "verify",
              "suite": args.suite, "seed": seed, "all_passed": all_passed,
              "suites": [r.to_dict() for r in results]}
    _write_json(Path(args.out) / f"verify_{args.suite}.json", report)
    return EXIT_OK if all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgglmc",
        description="Black-box Langevin Monte Carlo with p-generalized Gaussian "
                    "smoothing: run chains, verify bounds, print bound tables.",
    )
    parser.add_argument("--version", action="version", version=f"pgglmc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_config: bool):
        if needs_config:
            sp.add_argument("--config", required=True, help="experiment config JSON")
        else:
            sp.add_argument("--config", default=None, help="optional config JSON (seed source)")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int,
                        default=int(os.environ.get("PGGLMC_THREADS", "1")),
                        help="chain groups to run in parallel (default: "
                             "$PGGLMC_THREADS or 1)")
        sp.add_argument("--quiet", action="store_true", help="suppress stdout chatter")

    sp = sub.add_parser("sample", help="run LMC chains, write CSV states + JSON report")
    common(sp, needs_config=True)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("bounds", help="print itemized Theorem-1 / Lemma-3 bounds, no chains")
    common(sp, needs_config=True)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("verify", help="run a bound-verification suite")
    sp.add_argument("suite", choices=sorted(SUITE_NAMES) + ["all"])
    common(sp, needs_config=False)
    sp.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on bad usage
        return int(exc.code or 0)
    try:
        return args.func(args)
    except StepSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
