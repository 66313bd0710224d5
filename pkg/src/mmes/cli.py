"""Command-line interface: ``mmes <subcommand> ...``.

State arguments accept a JSON state file, a run-record file (its best state
is used), or a catalog name such as ``mmes5-eq18``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import cosine_histogram, frustration_report, symmetry_report
from .catalog import get_reference, key_demo, make_reference, pauli_expectation, reference_names, verify_table
from .errors import InvalidInputError, MMESError
from .optimize import ALGORITHMS, OptimizerConfig, RunRecord, lambda_sweep, minimize, write_trace_csv
from .potential import potential_me, potential_via_delta
from .state import PureState, load_state, parse_mask, purity


def fmt(x: float) -> str:
    return f"{x:.15g}"


def _rounded(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def emit_json(obj) -> None:
    print(json.dumps(_rounded(obj), sort_keys=True))


def resolve_state(source: str, renormalize: bool = False) -> PureState:
    if Path(source).exists():
        return load_state(source, renormalize=renormalize)
    try:
        return make_reference(source)
    except MMESError:
        raise InvalidInputError(f"{source!r} is neither a readable state file nor a catalog name") from None


def cmd_purity(args) -> None:
    state = resolve_state(args.state, args.renormalize)
    value = purity(state, parse_mask(args.mask, state.n))
    if args.json:
        emit_json({"mask": args.mask, "purity": value})
    else:
        print(fmt(value))


def cmd_potential(args) -> None:
    state = resolve_state(args.state, args.renormalize)
    report = potential_me(state)
    out = report.to_dict()
    if args.delta_path:
        via = potential_via_delta(state)
        out["pi_me_delta"] = via
        out["delta_discrepancy"] = abs(via - report.pi_me)
    if args.json:
        emit_json(out)
        return
    print(f"n={report.n} n_a={report.n_a} pi_me={fmt(report.pi_me)} sigma_me={fmt(report.sigma_me)} "
          f"min={fmt(report.min)} max={fmt(report.max)}")
    if args.delta_path:
        print(f"delta-path pi_me={fmt(out['pi_me_delta'])} discrepancy={out['delta_discrepancy']:.3e}")


def _summary(rec: RunRecord) -> str:
    c = rec.config
    conv = sum(s.converged for s in rec.starts)
    line = (f"n={c.n} param={c.param} algo={c.algorithm} lambda={fmt(c.lam)} seed={c.seed} "
            f"best pi_me={fmt(rec.pi_me)} sigma_me={fmt(rec.sigma_me)} cost={fmt(rec.cost)} "
            f"start={rec.best_start} converged={conv}/{len(rec.starts)}")
    for note in rec.notes:
        line += f" [{note}]"
    return line


def cmd_minimize(args) -> None:
    config = OptimizerConfig(
        n=args.n, param=args.param, algorithm=args.algo, lam=args.lam, starts=args.starts,
        max_iters=args.max_iters, grad_tol=args.grad_tol, seed=args.seed, budget_seconds=args.budget,
        penalty=args.penalty, workers=args.threads,
    )
    trace = [] if args.trace else None
    if args.sweep:
        lambdas = [float(t) for t in args.sweep.split(",") if t.strip()]
        records = lambda_sweep(config, lambdas)
        if args.out:
            Path(args.out).write_text(json.dumps([r.to_dict() for r in records], indent=1) + "\n")
    else:
        records = [minimize(config, trace=trace)]
        if args.out:
            records[0].save(args.out)
        if args.trace:
            write_trace_csv(trace, args.trace)
    for rec in records:
        if args.json:
            d = rec.to_dict()
            d.pop("wall_time")
            emit_json({k: d[k] for k in ("config", "pi_me", "sigma_me", "cost", "best_start", "notes")})
        else:
            print(_summary(rec))


def cmd_verify(args) -> None:
    v = verify_table(args.case)
    if args.json:
        emit_json(v.to_dict())
    else:
        status = "PASS" if v.passed else "FAIL"
        print(f"{status} {v.name} n={v.n} pi_me={fmt(v.pi_me)} expected={fmt(v.expected_pi_me)} "
              f"sigma_me={fmt(v.sigma_me)} residual={v.residual:.3e} perfect={v.perfect} "
              f"table: perfect states {v.table_verdict} for n={v.n}")
    if not v.passed:
        raise SystemExit(1)


def cmd_histogram(args) -> None:
    state = resolve_state(args.state)
    h = cosine_histogram(state, args.bins)
    if args.out:
        h.to_csv(args.out)
    diag = symmetry_report(h) if args.bins % 2 == 0 else {"bins": h.bins, "total": h.total}
    if args.json:
        emit_json(diag)
    else:
        print(" ".join(f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in diag.items()))


def cmd_correlator(args) -> None:
    state = resolve_state(args.state)
    value = pauli_expectation(state, args.pauli)
    if args.json:
        emit_json({"pauli": args.pauli.upper(), "expectation": value})
    else:
        print(fmt(value))


def cmd_keydemo(args) -> None:
    transcript = key_demo(args.seed, args.shots)
    if args.json:
        emit_json(transcript)
        return
    t = transcript
    print(f"observable {t['observable']} <P>={fmt(t['expectation'])} shots={t['shots']} seed={t['seed']}")
    print(f"outcome product +1 on every shot: {t['parity_always_plus']} (violations {t['parity_violations']})")
    print(f"parties {t['publishing_parties']} publish; parties {t['key_parties']} "
          f"agree on {fmt(100 * t['key_agreement'])}% of key bits")
    print(f"key sample: {t['key_sample']}")
    print("single-party P(+1): " + " ".join(f"{p}:{f:.4f}" for p, f in t["single_plus_frequencies"].items()))
    print(f"max deviation from flat: single {t['single_max_sigma']:.2f} sigma, pairs {t['pair_max_sigma']:.2f} sigma "
          f"(band {t['flat_band_sigma']:.0f} sigma) flat={t['flat']}")


def cmd_catalog(args) -> None:
    rows = [get_reference(name).summary() for name in reference_names()]
    if args.json:
        emit_json(rows)
        return
    for r in rows:
        print(f"{r['name']:<14} n={r['n']} params={r['n_params']} pi_me={fmt(r['expected_pi_me'])} "
              f"sigma_me={fmt(r['expected_sigma_me'])} [{r['provenance']}] {r['description']}")


def cmd_frustration(args) -> None:
    records = []
    for path in args.records:
        data = json.loads(Path(path).read_text())
        records.extend(data if isinstance(data, list) else [data])
    report = frustration_report(records)
    if args.json:
        emit_json(report)
    else:
        print(" ".join(f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in report.items()))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output and errors")
    common.add_argument("--threads", type=int, default=1, help="worker cap for parallel starts")

    parser = argparse.ArgumentParser(prog="mmes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("purity", parents=[common], help="purity of one bipartition")
    p.add_argument("state")
    p.add_argument("mask", help="0b0101, decimal, or qubit list like 0,2")
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("potential", parents=[common], help="average purity over balanced bipartitions")
    p.add_argument("state")
    p.add_argument("--delta-path", action="store_true", help="cross-check with the combinatorial quartic form")
    p.add_argument("--renormalize", action="store_true")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("minimize", parents=[common], help="multistart minimization")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--param", choices=("phases", "complex"), default="phases")
    p.add_argument("--algo", choices=ALGORITHMS, default="quasi-newton")
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--sweep", help="comma-separated lambdas; warm-started sweep")
    p.add_argument("--penalty", choices=("variance", "std"), default="variance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--grad-tol", type=float, default=1e-9)
    p.add_argument("--budget", type=float, default=None, help="wall-clock seconds")
    p.add_argument("--out", help="write the run record JSON here")
    p.add_argument("--trace", help="write per-iteration CSV (start, iter, cost, grad_norm)")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("verify", parents=[common], help="check a catalog state against its known metrics")
    p.add_argument("--case", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("histogram", parents=[common], help="histogram of cosine arguments")
    p.add_argument("--state", required=True)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--out", help="CSV path (bin_left, bin_right, count)")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("correlator", parents=[common], help="Pauli-string expectation value")
    p.add_argument("--state", required=True)
    p.add_argument("--pauli", required=True, help="label, leftmost letter on the highest qubit")
    p.set_defaults(func=cmd_correlator)

    p = sub.add_parser("keydemo", parents=[common], help="simulate the five-party correlated key")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=10_000)
    p.set_defaults(func=cmd_keydemo)

    p = sub.add_parser("catalog", parents=[common], help="reference states")
    p.add_argument("--list", action="store_true", default=True)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("frustration", parents=[common], help="best potential vs the 1/N_A floor")
    p.add_argument("records", nargs="+")
    p.set_defaults(func=cmd_frustration)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (MMESError, OSError, json.JSONDecodeError) as exc:
        kind = getattr(exc, "kind", "io-error" if isinstance(exc, OSError) else "parse-error")
        print(f"error: {exc}", file=sys.stderr)
        if getattr(args, "json", False):
            print(json.dumps({"error": kind, "message": str(exc)}))
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
