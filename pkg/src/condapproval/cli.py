"""Command-line interface: ``condapproval <command> [options]``.

Exit status is 0 on success, 2 for usage errors, 3 when a method refuses
(no post-market trial needed, or the pre-market result can never be rescued)
and 4 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path

from . import casestudy, design, evidence, figures, interim, simulate, superiority
from .errors import DomainError, NecessaryConditionViolated, NoTrialRequired
from .evidence import NO_TRIAL_REQUIRED, Method, TrialSummary, WeightPair
from .specialfn import _ndtr_upper

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REFUSED = 3
EXIT_NUMERICAL = 4

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- rendering


def _flatten(record: Mapping, prefix: str = "") -> dict:
    out = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            out.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], Mapping):
            for i, item in enumerate(value):
                out.update(_flatten(item, f"{name}.{i}."))
        elif isinstance(value, list) and value and all(isinstance(v, str) for v in value):
            out.update({f"{name}.{i}": item for i, item in enumerate(value)})
        else:
            out[name] = value
    return out


def _cell_text(value, precise: bool) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if precise:
            return repr(value)
        return f"{value:.4g}"
    if isinstance(value, (list, tuple)):
        return " ".join(_cell_text(v, precise) for v in value)
    return str(value)


def _rows_of(payload) -> tuple[list[str], list[list]]:
    if isinstance(payload, Mapping):
        flat = _flatten(payload)
        return ["field", "value"], [[k, v] for k, v in flat.items()]
    rows = [_flatten(r) for r in payload]
    header: list[str] = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    return header, [[r.get(k) for k in header] for r in rows]


def _json_default(value):
    if value is NO_TRIAL_REQUIRED:
        return None
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _json_clean(value):
    # JSON has no NaN or infinity
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Mapping):
        return {k: _json_clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_clean(v) for v in value]
    return value


def render(payload, fmt: str) -> str:
    """Render a record (mapping) or a list of rows as table, JSON or CSV."""
    if fmt == "json":
        body = {"schema_version": SCHEMA_VERSION}
        body.update(payload if isinstance(payload, Mapping) else {"rows": list(payload)})
        return json.dumps(_json_clean(body), indent=2, default=_json_default) + "\n"
    header, rows = _rows_of(payload)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell_text(v, precise=True) for v in row])
        return buf.getvalue()
    cells = [header] + [[_cell_text(v, precise=False) for v in row] for row in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- argument helpers


def _weights(text: str) -> WeightPair:
    try:
        w1, w2 = (float(x) for x in text.replace(",", ":").split(":"))
        return WeightPair(w1, w2)
    except (ValueError, DomainError) as exc:
        raise argparse.ArgumentTypeError(f"weights must look like '3:2', got {text!r}") from exc


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a probability in (0, 1), got {text!r}")
    return value


def _trial(z: float | None, p: float | None, label: str) -> TrialSummary:
    if z is None and p is None:
        raise UsageError(f"give --z{label} or --p{label}")
    if z is not None and p is not None:
        if abs(_ndtr_upper(z) - p) > 1e-6:
            raise UsageError(f"--z{label}={z} and --p{label}={p} are inconsistent")
        return TrialSummary.from_z(z)
    return TrialSummary.from_z(z) if z is not None else TrialSummary.from_p(p)


def _z1_arg(args) -> float:
    return _trial(args.z1, args.p1, "1").z


def _method_weights(method: Method, weights: WeightPair | None) -> WeightPair | None:
    if weights is not None or not method.is_harmonic:
        return weights
    return evidence.UNWEIGHTED if method is Method.HARMONIC_UNWEIGHTED else evidence.WEIGHTED_3_2


# ---------------------------------------------------------------- commands


def cmd_combine(args) -> dict:
    method = Method(args.method)
    t1 = _trial(args.z1, args.p1, "1")
    t2 = _trial(args.z2, args.p2, "2")
    outcome = evidence.combine(method, t1, t2, _method_weights(method, args.weights), args.gamma, args.alpha)
    bound = outcome.bound_p2
    return {
        "method": method.value,
        "z1": t1.z,
        "z2": t2.z,
        "significant": outcome.significant,
        "combined_p": outcome.combined_p,
        "bound_p2": None if bound is NO_TRIAL_REQUIRED else bound,
        "trial_required": outcome.trial_required,
        "note": outcome.note,
    }


def cmd_design(args) -> dict:
    method = Method(args.method)
    z1 = _z1_arg(args)
    if (args.n1 is None) == (args.effect_size is None):
        raise UsageError("give exactly one of --n1 and --effect-size")
    params = design.DesignParams(
        alpha=args.alpha,
        gamma=args.gamma,
        power=args.power,
        shrinkage=args.shrinkage,
        sd_ratio_sq=args.sd_ratio**2,
        dropout=args.dropout,
    )
    weights = _method_weights(method, args.weights)
    res = design.size_post_market(method, z1, params, weights, n1=args.n1, effect_size=args.effect_size)
    base = design.size_post_market(Method.TWO_TRIALS, z1, params, n1=args.n1, effect_size=args.effect_size)
    return {
        "method": method.value,
        "z1": z1,
        "level": res.level,
        "target_z": res.target_z,
        "c": res.c,
        "n_per_group": res.n_per_group,
        "n_total": res.n_total,
        "n_total_dropout": res.n_total_dropout,
        "reduction_vs_twotrials": 1.0 - res.n_total_dropout / base.n_total_dropout,
    }


def cmd_interim(args) -> dict:
    if not 0.0 < args.f < 1.0:
        raise UsageError(f"--f must lie in (0, 1), got {args.f}")
    method = Method(args.method)
    if method in (Method.FISHER, Method.STOUFFER):
        raise UsageError("interim power is available for twotrials, harmonic and harmonic-weighted")
    state = interim.InterimState(args.z2i, args.f, args.n2)
    threshold_z = design.post_market_threshold(method, args.z1, _method_weights(method, args.weights), args.alpha, args.gamma)
    belief = interim.belief_for(args.belief, state, args.z1, args.n1, args.shrinkage)
    power = interim.interim_power(state, belief, threshold_z)
    return {
        "method": method.value,
        "belief": args.belief,
        "final_threshold_z": threshold_z,
        "belief_mean": belief.mean,
        "belief_variance": belief.variance,
        "interim_power": power,
        "futility_threshold": args.threshold,
        "decision": "stop" if interim.futility_decision(power, args.threshold) else "continue",
    }


def _simulation_config(args) -> simulate.SimulationConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        data.pop("schema_version", None)
    overrides = {
        "n_sim": args.nsim,
        "seed": args.seed,
        "shrinkage": args.shrinkage,
        "interim_fraction": args.interim_fraction,
        "futility_threshold": args.futility_threshold,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.weights is not None:
        data["weights"] = [args.weights.w1, args.weights.w2]
    try:
        return simulate.SimulationConfig.from_dict(data)
    except TypeError as exc:
        raise UsageError(f"bad config: {exc}") from exc


def cmd_simulate(args) -> list[dict]:
    config = _simulation_config(args)
    report = simulate.run_study(config, workers=args.workers, backend=args.backend, keep_data=args.replications is not None)
    if args.report_dir:
        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    if args.replications:
        Path(args.replications).write_text(report.replications_csv(), encoding="utf-8")
    return [
        {
            "scenario": c.scenario,
            "method": c.method,
            "rejection_rate": c.rejection_rate,
            "mc_se": c.mc_se,
            "median_n2": c.median_n2,
            "median_c": c.median_c,
            "max_n2": c.max_n2,
            "futility_stop_rate": c.futility_stop_rate,
        }
        for c in report.cells
    ]


def _grid(args) -> list[float]:
    if args.powers:
        try:
            grid = [float(x) for x in args.powers.split(",") if x.strip()]
        except ValueError as exc:
            raise UsageError(f"--powers must be a comma-separated list, got {args.powers!r}") from exc
    else:
        if args.num < 2:
            raise UsageError("--num must be at least 2")
        step = (args.stop - args.start) / (args.num - 1)
        grid = [args.start + i * step for i in range(args.num)]
    if not grid or any(not 0.0 < p < 1.0 for p in grid):
        raise UsageError("power grid must lie inside (0, 1)")
    return grid


def cmd_superiority(args):
    weights = args.weights or evidence.UNWEIGHTED
    rows = [
        superiority.superiority_probabilities(p, args.alpha, args.gamma, weights).as_row()
        for p in _grid(args)
    ]
    if args.format != "json":
        return rows
    thresholds = {
        "crossover_b": superiority.crossover_b(args.alpha, args.gamma, weights),
        "crossover_p1": superiority.crossover_p1(args.alpha, args.gamma, weights),
        "zero_inferior_power": superiority.zero_inferior_power(args.alpha, args.gamma, weights),
        "half_inferior_power": superiority.inferior_power_threshold(0.5, args.alpha, args.gamma, weights),
    }
    return {"thresholds": thresholds, "rows": rows}


def cmd_figures(args) -> list[dict]:
    return figures.figure_rows(args.which, alpha=args.alpha, gamma=args.gamma)


def cmd_casestudy(args) -> dict:
    return casestudy.run_case_study(args.alpha, args.gamma).to_dict()


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json", "csv"), default="table")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="random seed (simulate only)")
    common.add_argument("--alpha", type=_probability, default=evidence.DEFAULT_ALPHA)
    common.add_argument("--gamma", type=_probability, default=None, help="overall level, default alpha**2")

    parser = argparse.ArgumentParser(prog="condapproval", description="Evidence synthesis for conditional drug approval.")
    sub = parser.add_subparsers(dest="command", required=True)
    methods = [m.value for m in Method]

    p = sub.add_parser("combine", parents=[common], help="combine a pre- and a post-market result")
    p.add_argument("--method", choices=methods, required=True)
    for k in ("1", "2"):
        p.add_argument(f"--z{k}", type=float)
        p.add_argument(f"--p{k}", type=_probability)
    p.add_argument("--weights", type=_weights)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("design", parents=[common], help="size the post-market trial")
    p.add_argument("--method", choices=methods, required=True)
    p.add_argument("--z1", type=float)
    p.add_argument("--p1", type=_probability)
    p.add_argument("--weights", type=_weights)
    p.add_argument("--power", type=_probability, default=0.9)
    p.add_argument("--shrinkage", type=float, default=0.0)
    p.add_argument("--n1", type=float, help="pre-market size per group")
    p.add_argument("--effect-size", type=float, help="standardized effect to detect instead of --n1")
    p.add_argument("--sd-ratio", type=float, default=1.0, help="post- over pre-market standard deviation")
    p.add_argument("--dropout", type=float, default=0.0)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("interim", parents=[common], help="interim power and futility")
    p.add_argument("--method", choices=methods, default=Method.HARMONIC_UNWEIGHTED.value)
    p.add_argument("--z1", type=float, required=True)
    p.add_argument("--n1", type=float, required=True)
    p.add_argument("--z2i", type=float, required=True)
    p.add_argument("--f", type=float, default=0.5)
    p.add_argument("--n2", type=float, required=True)
    p.add_argument("--belief", choices=interim.BELIEFS, default="ipp")
    p.add_argument("--threshold", type=float, default=interim.DEFAULT_FUTILITY)
    p.add_argument("--shrinkage", type=float, default=0.0)
    p.add_argument("--weights", type=_weights)
    p.set_defaults(func=cmd_interim)

    p = sub.add_parser("simulate", parents=[common], help="run the simulation study")
    p.add_argument("--config", metavar="JSON", help="configuration file; flags override it")
    p.add_argument("--nsim", type=int)
    p.add_argument("--shrinkage", type=float)
    p.add_argument("--interim-fraction", type=float)
    p.add_argument("--futility-threshold", type=float)
    p.add_argument("--weights", type=_weights)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=("numba", "numpy"))
    p.add_argument("--report-dir", metavar="DIR", help="write report.json and report.csv here")
    p.add_argument("--replications", metavar="PATH", help="write per-replication CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("superiority", parents=[common], help="region probabilities over pre-market power")
    p.add_argument("--powers", help="comma-separated pre-market powers")
    p.add_argument("--start", type=float, default=0.05)
    p.add_argument("--stop", type=float, default=0.95)
    p.add_argument("--num", type=int, default=19)
    p.add_argument("--weights", type=_weights)
    p.set_defaults(func=cmd_superiority)

    p = sub.add_parser("figures", parents=[common], help="figure-ready curves")
    p.add_argument("--which", choices=figures.FIGURES, required=True)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("casestudy", parents=[common], help="Fampridine worked example")
    p.set_defaults(func=cmd_casestudy)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (NoTrialRequired, NecessaryConditionViolated) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(render(payload, args.format), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
