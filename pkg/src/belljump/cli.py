"""Command-line interface.

Exit codes: 0 pass, 1 a check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .checks import check_a2, check_hs_inequality
from .ensemble import default_checkpoints, default_threads, run_ensemble
from .hilbert import ValidationError
from .modelio import load_model, model_to_dict
from .models import BUNDLED, ModelSpec, model_by_name
from .oracle import solve_integral_equation_picard, solve_master_equation
from .rates import rate_matrix
from .sampler import SimulationParams
from .verify import results_to_dict, verify_model

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def resolve_model(ref: str) -> ModelSpec:
    """Bundled name (``name`` or ``name:key=value,...``) or a path to a model JSON file."""
    name = ref.partition(":")[0]
    if name in BUNDLED:
        return model_by_name(ref)
    return load_model(ref)


def parse_checkpoints(text: str | None, t0: float, t_end: float):
    if text is None:
        return default_checkpoints(t0, t_end)
    try:
        if "," not in text and "." not in text:
            count = int(text)
            if count < 1:
                raise ValidationError("checkpoint count must be positive", "--checkpoints")
            return default_checkpoints(t0, t_end, count)
        return sorted(float(v) for v in text.split(",") if v.strip())
    except ValueError as err:
        if isinstance(err, ValidationError):
            raise
        raise ValidationError(f"cannot parse {text!r}", "--checkpoints") from None


def _window(args, model: ModelSpec):
    t0 = float(args.t0)
    t_end = float(args.t_end) if args.t_end is not None else float(model.t_end)
    if not (math.isfinite(t0) and math.isfinite(t_end)) or t_end <= t0:
        raise ValidationError(f"need t_end > t0, got t0={t0}, t_end={t_end}", "--t-end")
    return t0, t_end


def _params(args, t0, t_end) -> SimulationParams:
    return SimulationParams(t0=t0, t_end=t_end, max_jumps=args.max_jumps, seed=args.seed)


def _threads(args) -> int:
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise ValidationError("threads must be positive", "--threads")
    return threads


def _check_n(n: int) -> None:
    if n < 1:
        raise ValidationError("must be a positive integer", "--n")


def _out_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


class _JsonLines:
    def __init__(self, path: Path):
        self.fh = path.open("w", encoding="utf-8")

    def __call__(self, trajectories):
        for tr in trajectories:
            self.fh.write(json.dumps(tr.to_json()) + "\n")

    def close(self):
        self.fh.close()


def _write_csv(path: Path, report) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("t,label,empirical,expected\n")
        for row in report.csv_rows():
            fh.write(row + "\n")


def cmd_simulate(args) -> int:
    model = resolve_model(args.model)
    t0, t_end = _window(args, model)
    _check_n(args.n)
    params = _params(args, t0, t_end)
    cps = parse_checkpoints(args.checkpoints, t0, t_end)
    out = _out_dir(args)
    sink = _JsonLines(out / "trajectories.jsonl")
    try:
        report = run_ensemble(model.context(args.node_epsilon), params, args.n, cps,
                              threads=_threads(args), sink=sink)
    finally:
        sink.close()
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    _write_csv(out / "checkpoints.csv", report)
    print(f"model {model.name}: n={report.n_trajectories} mean jumps {report.mean_jumps:.6f} "
          f"+/- {report.jumps_se:.6f} (expected {report.expected_jumps:.6f})")
    print(f"max TV {max(report.tv_distance):.4f}, explosions {report.explosion_count}, "
          f"cemetery {report.cemetery_count}")
    print(f"wrote {out / 'trajectories.jsonl'}, {out / 'report.json'}, {out / 'checkpoints.csv'}")
    return EXIT_OK if report.explosion_count == 0 and report.cemetery_count == 0 else EXIT_FAIL


def cmd_verify(args) -> int:
    model = resolve_model(args.model)
    t0, t_end = _window(args, model)
    _check_n(args.n)
    params = _params(args, t0, t_end)
    cps = parse_checkpoints(args.checkpoints, t0, t_end)
    sink = None
    if args.output is not None:
        out = _out_dir(args)
        if args.keep_paths:
            sink = _JsonLines(out / "trajectories.jsonl")
    try:
        results, report = verify_model(model, params, args.n, cps, threads=_threads(args),
                                       node_epsilon=args.node_epsilon, sink=sink)
    finally:
        if sink is not None:
            sink.close()
    for r in results:
        print(r.line())
    summary = results_to_dict(results)
    if args.output is not None:
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "verify.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        _write_csv(out / "checkpoints.csv", report)
    print("PASS" if summary["passed"] else "FAIL")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def cmd_oracle(args) -> int:
    model = resolve_model(args.model)
    t0, t_end = _window(args, model)
    step = args.grid_step if args.grid_step is not None else (t_end - t0) / 100
    if not step > 0:
        raise ValidationError("must be positive", "--grid-step")
    ctx = model.context(args.node_epsilon)
    solutions = []
    if args.method in ("master", "both"):
        solutions.append(solve_master_equation(ctx, t0, t_end, step))
    if args.method in ("picard", "both"):
        it = solve_integral_equation_picard(ctx, t0, t_end, step, n_max=args.n_max)
        if not it.converged:
            print(f"warning: Picard series not converged after {it.n} terms", file=sys.stderr)
        solutions.append(it.as_solution())
    fh = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "label", "weight", "method"])
        for sol in solutions:
            for snap in sol.distributions:
                for lab, val in snap.weights.items():
                    w.writerow([repr(snap.t), lab, repr(val), sol.method])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_check(args) -> int:
    model = resolve_model(args.model)
    t0, t_end = _window(args, model)
    ctx = model.context(args.node_epsilon)
    report = check_a2(ctx, t0, t_end, args.grid_step)
    ok, worst = check_hs_inequality(model.H, model.pov, args.trials, args.seed)
    doc = report.to_dict()
    doc.update(hs_bound_ok=bool(ok and report.hs_bound_ok), worst_ratio=max(worst, report.worst_ratio),
               povm_valid=True, model=model.name, trials=args.trials)
    print(json.dumps(doc, indent=2))
    return EXIT_OK if doc["hs_bound_ok"] else EXIT_FAIL


def cmd_rates_dump(args) -> int:
    model = resolve_model(args.model)
    ctx = model.context(args.node_epsilon)
    R = rate_matrix(ctx, float(args.t))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["from", "to", "rate"])
    for i, x in enumerate(ctx.labels):
        for j, y in enumerate(ctx.labels):
            w.writerow([x, y, "inf" if np.isinf(R[i, j]) else repr(float(R[i, j]))])
    return EXIT_OK


def cmd_model_list(args) -> int:
    for name in BUNDLED:
        m = model_by_name(name)
        print(f"{name}\tdim={m.dim}\tlabels={len(m.pov)}\tt_end={m.t_end:g}")
    return EXIT_OK


def cmd_model_export(args) -> int:
    text = json.dumps(model_to_dict(resolve_model(args.name)), indent=1) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _common(p, *, needs_model=True):
    if needs_model:
        p.add_argument("--model", required=True, help="bundled name (name:key=value,...) or model JSON path")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=None, help="horizon (default: the model's)")
    p.add_argument("--node-epsilon", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)


def _ensemble_args(p, n_default, output_default):
    p.add_argument("--n", type=int, default=n_default, help="number of trajectories")
    p.add_argument("--checkpoints", default=None, help="count or comma-separated times")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: $BELLJUMP_THREADS or CPU count)")
    p.add_argument("--max-jumps", type=int, default=10_000)
    p.add_argument("--output", default=output_default, help="output directory")
    p.add_argument("--keep-paths", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="belljump", description="Simulate and verify quantum jump processes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample trajectories and write a report")
    _common(p)
    _ensemble_args(p, 1000, "belljump-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="ensemble vs quantum distribution vs oracles")
    _common(p)
    _ensemble_args(p, 100_000, None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="deterministic law as CSV t,label,weight,method")
    _common(p)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--method", choices=("master", "picard", "both"), default="master")
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--output", default=None, help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", help="assumption report as JSON")
    _common(p)
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rates", help="rate tables")
    rsub = p.add_subparsers(dest="rates_command", required=True)
    d = rsub.add_parser("dump", help="rate matrix at time t as CSV from,to,rate")
    d.add_argument("--model", required=True)
    d.add_argument("--t", type=float, required=True)
    d.add_argument("--node-epsilon", type=float, default=1e-12)
    d.set_defaults(func=cmd_rates_dump)

    p = sub.add_parser("model", help="bundled models")
    msub = p.add_subparsers(dest="model_command", required=True)
    m = msub.add_parser("list")
    m.set_defaults(func=cmd_model_list)
    m = msub.add_parser("export")
    m.add_argument("name")
    m.add_argument("--output", default=None)
    m.set_defaults(func=cmd_model_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
