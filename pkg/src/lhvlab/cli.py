"""Command-line entry point wiring model I/O to the analysis modules.

One binary, subcommand style.  Exact results are printed as fraction
strings; floating results as 17-significant-digit decimal strings.
Exit status: 0 success, 1 parse/validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from fractions import Fraction
from typing import Any, Optional, Union

from . import modelio
from .chsh import ChshReport, PostSelectionReport, chsh_values, postselected_correlations
from .fine import JointDistribution16, NoSignallingReport, check_no_signalling, find_joint, fine_criterion
from .flatten import AveragedModel, FlatModel, bell_average, product_flatten, uniform_reduce
from .loophole import (
    AngleSet,
    DetectionReport,
    SearchConfig,
    detection_rates,
    quantum_singlet_behavior,
    search_postselection_violation,
)
from .model import (
    BehaviorTable,
    ContextualModel,
    CorrelationQuad,
    Pmf,
    as_fraction,
    behavior_from_model,
    correlation_quad,
    counterexample_model,
    validate_model,
)
from .modelio import ModelParseError
from .montecarlo import estimate_correlations, from_contextual, independence_diagnostic, simulate_spreadsheet


class CliError(Exception):
    """A handled failure; message goes to stderr, exit status is 1."""


class UsageError(Exception):
    """A malformed invocation; message goes to stderr, exit status is 2."""


def _num(value: Union[Fraction, float, int, None]) -> Optional[str]:
    """Exact values as fraction strings, floats as 17-digit decimals."""
    if value is None:
        return None
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(Fraction(value))
    return format(float(value), ".17g")


def _quad_json(quad: CorrelationQuad) -> list[dict[str, Any]]:
    return [
        {"alice": a, "bob": b, "value": _num(quad.values[(a, b)])}
        for a in quad.alice_settings
        for b in quad.bob_settings
    ]


def _chsh_json(report: ChshReport) -> dict[str, Any]:
    return {
        "quad": _quad_json(report.quad),
        "combinations": [
            {
                "flippedAlice": c.flipped[0],
                "flippedBob": c.flipped[1],
                "sign": c.sign,
                "value": _num(c.value),
            }
            for c in report.combinations
        ],
        "maxAbs": _num(report.max_abs),
        "satisfied": report.satisfied,
    }


def _postselection_json(ps: PostSelectionReport) -> dict[str, Any]:
    def per_context(mapping):
        return [
            {"alice": a, "bob": b, "value": _num(mapping[(a, b)])}
            for a in ps.raw_quad.alice_settings
            for b in ps.raw_quad.bob_settings
        ]

    return {
        "rawQuad": _quad_json(ps.raw_quad),
        "conditional": per_context(ps.conditional),
        "coincidenceRate": per_context(ps.coincidence_rate),
        "aliceDetect": per_context(ps.alice_detect),
        "bobDetect": per_context(ps.bob_detect),
    }


def _nosignalling_json(report: NoSignallingReport) -> dict[str, Any]:
    return {
        "maxDeviation": _num(report.max_deviation),
        "holds": report.holds,
        "perSetting": [
            {"side": side, "setting": name, "deviation": _num(dev)}
            for (side, name), dev in report.per_setting_deviation.items()
        ],
    }


def _joint_json(joint: JointDistribution16) -> list[dict[str, Any]]:
    return [
        {"pattern": list(pattern), "mass": _num(mass)}
        for pattern, mass in joint.mass.items()
    ]


def _detection_json(det: DetectionReport) -> dict[str, Any]:
    return {
        "threshold": _num(det.threshold),
        "alice": {name: _num(rate) for name, rate in det.alice.items()},
        "bob": {name: _num(rate) for name, rate in det.bob.items()},
        "relations": [
            {"side": side, "setting": name, "relation": rel}
            for (side, name), rel in det.relations().items()
        ],
        "allBelow": det.all_below,
    }


def _load(path: str):
    try:
        return modelio.parse_path(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}")
    except ModelParseError as exc:
        raise CliError(str(exc))


def _require_contextual(obj) -> ContextualModel:
    if not isinstance(obj, ContextualModel):
        raise CliError(f"expected a contextual model, got kind {_kind_of(obj)!r}")
    report = validate_model(obj)
    if not report.ok:
        raise CliError("model is not well-formed: " + "; ".join(report.violations))
    return obj


def _kind_of(obj) -> str:
    return {
        ContextualModel: "contextual",
        FlatModel: "flat",
        AveragedModel: "averaged",
        BehaviorTable: "behavior",
    }[type(obj)]


def _quad_of(obj) -> CorrelationQuad:
    if isinstance(obj, ContextualModel):
        return correlation_quad(obj)
    return obj.quad()


# ------------------------------------------------------------- subcommands

def _cmd_validate(args) -> tuple[Any, int]:
    try:
        obj = modelio.parse_path(args.model)
    except FileNotFoundError:
        raise CliError(f"no such file: {args.model}")
    except ModelParseError as exc:
        return {"valid": False, "violations": [str(exc)]}, 1
    if isinstance(obj, ContextualModel):
        report = validate_model(obj)
        payload = {"valid": report.ok, "violations": list(report.violations)}
        return payload, 0 if report.ok else 1
    return {"valid": True, "violations": [], "kind": _kind_of(obj)}, 0


def _cmd_exact(args) -> tuple[Any, int]:
    obj = _load(args.model)
    if isinstance(obj, ContextualModel):
        _require_contextual(obj)
    quad = _quad_of(obj)
    return {"kind": _kind_of(obj), "quad": _quad_json(quad)}, 0


def _cmd_flatten(args) -> tuple[Any, int]:
    model = _require_contextual(_load(args.model))
    if args.method == "product":
        out = product_flatten(model)
    elif args.method == "uniform":
        out = uniform_reduce(model)
    else:
        out = bell_average(model)
    return modelio.serialize(out), 0


def _cmd_chsh(args) -> tuple[Any, int]:
    payload: dict[str, Any] = {}
    if args.model:
        if args.values:
            raise UsageError("give either --model or four quad values, not both")
        obj = _load(args.model)
        if isinstance(obj, ContextualModel):
            _require_contextual(obj)
        quad = _quad_of(obj)
        if isinstance(obj, BehaviorTable) and obj.ternary:
            payload["postSelection"] = _postselection_json(postselected_correlations(obj))
        elif isinstance(obj, ContextualModel) and obj.is_ternary():
            behavior = behavior_from_model(obj)
            payload["postSelection"] = _postselection_json(postselected_correlations(behavior))
    else:
        if len(args.values) != 4:
            raise UsageError("need exactly four correlation values (or --model)")
        try:
            vals = [as_fraction(v) for v in args.values]
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"malformed correlation value in {args.values}")
        quad = CorrelationQuad(
            ("x", "x'"),
            ("y", "y'"),
            {
                ("x", "y"): vals[0],
                ("x", "y'"): vals[1],
                ("x'", "y"): vals[2],
                ("x'", "y'"): vals[3],
            },
        )
    try:
        report = chsh_values(quad)
    except ValueError as exc:
        raise CliError(str(exc))
    payload.update(_chsh_json(report))
    return payload, 0


def _cmd_fine(args) -> tuple[Any, int]:
    obj = _load(args.behavior)
    if not isinstance(obj, BehaviorTable):
        raise CliError(f"expected a behavior file, got kind {_kind_of(obj)!r}")
    if obj.ternary:
        raise CliError("behavior is ternary; reduce it before the joint-distribution test")
    if not obj.is_normalized():
        raise CliError("behavior table is not normalized")
    ns = check_no_signalling(obj)
    payload: dict[str, Any] = {
        "noSignalling": _nosignalling_json(ns),
        "criterion": fine_criterion(obj),
    }
    if not ns.holds:
        payload["feasible"] = False
        payload["reason"] = "signalling behavior: no joint distribution can exist"
        return payload, 0
    result = find_joint(obj)
    payload["feasible"] = result.feasible
    if result.feasible:
        payload["joint"] = _joint_json(result.joint)
    else:
        c = result.certificate
        payload["certificate"] = {
            "flippedAlice": c.flipped[0],
            "flippedBob": c.flipped[1],
            "sign": c.sign,
            "value": _num(c.value),
        }
    return payload, 0


def _parse_bias(text: str, model: ContextualModel) -> Pmf:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError("--bias needs four comma-separated probabilities (context order)")
    try:
        masses = [as_fraction(p.strip()) for p in parts]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"malformed probability in --bias {text!r}")
    contexts = [(a.name, b.name) for a in model.alice for b in model.bob]
    pmf = Pmf(dict(zip(contexts, masses)))
    if not pmf.is_normalized():
        raise UsageError(f"--bias masses sum to {pmf.total()}, not 1")
    return pmf


def _cmd_simulate(args) -> tuple[Any, int]:
    model = _require_contextual(_load(args.model))
    bias = _parse_bias(args.bias, model) if args.bias else None
    try:
        dag = from_contextual(model, setting_bias=bias)
        sheet = simulate_spreadsheet(
            dag, args.trials, args.seed, confound=args.confound, keep_hidden=True
        )
    except ValueError as exc:
        raise CliError(str(exc))
    if args.format == "csv":
        buf = io.StringIO()
        sheet.write_csv(buf)
        return buf.getvalue(), 0
    estimates = estimate_correlations(sheet)
    diag = independence_diagnostic(sheet)
    payload = {
        "trials": args.trials,
        "seed": args.seed,
        "confound": args.confound,
        "aliceSettings": list(sheet.alice_settings),
        "bobSettings": list(sheet.bob_settings),
        "exactQuad": _quad_json(dag.exact_quad),
        "estimates": [
            {
                "alice": a,
                "bob": b,
                "estimate": _num(est.estimate),
                "stderr": _num(est.stderr),
                "count": est.count,
            }
            for (a, b), est in estimates.items()
        ],
        "independence": {
            "statistic": _num(diag.statistic),
            "dof": diag.dof,
            "pValue": _num(diag.p_value),
            "crossStatistic": _num(diag.cross_statistic),
            "crossDof": diag.cross_dof,
            "laggedStatistic": _num(diag.lagged_statistic),
            "laggedDof": diag.lagged_dof,
        },
        "records": [
            [t, sheet.alice_settings[sheet.a_index[t]], sheet.bob_settings[sheet.b_index[t]],
             int(sheet.x[t]), int(sheet.y[t])]
            for t in range(len(sheet))
        ],
    }
    return payload, 0


def _cmd_search(args) -> tuple[Any, int]:
    try:
        max_det = None if args.max_detection.lower() == "none" else as_fraction(args.max_detection)
        config = SearchConfig(
            seed=args.seed,
            source_atoms=args.source_atoms,
            instrument_atoms=args.instrument_atoms,
            budget=args.budget,
            min_coincidence=as_fraction(args.min_rate),
            max_detection=max_det,
            mass_denominator=args.denominator,
            target_stat=as_fraction(args.target) if args.target else None,
        )
        config.validate()
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc))
    try:
        outcome = search_postselection_violation(config)
    except (ValueError, RuntimeError) as exc:
        raise CliError(str(exc))
    model_text = modelio.serialize(outcome.model)
    if args.out_model:
        with open(args.out_model, "w") as fp:
            fp.write(model_text)
    payload = {
        "config": {
            "seed": config.seed,
            "budget": config.budget,
            "sourceAtoms": config.source_atoms,
            "instrumentAtoms": config.instrument_atoms,
            "minCoincidence": _num(config.min_coincidence),
            "maxDetection": _num(config.max_detection),
            "denominator": config.mass_denominator,
        },
        "evaluations": outcome.evaluations,
        "score": _num(outcome.score),
        "violating": outcome.violating,
        "postSelection": _postselection_json(outcome.report),
        "detection": _detection_json(outcome.detection),
        "rawQuad": _quad_json(outcome.raw_quad),
        "rawChsh": _chsh_json(outcome.raw_chsh),
        "history": [[it, _num(score)] for it, score in outcome.history],
        "model": json.loads(model_text),
    }
    return payload, 0


def _cmd_demo_counterexample(args) -> tuple[Any, int]:
    model = counterexample_model()
    quad = correlation_quad(model)
    report = chsh_values(quad)
    behavior = behavior_from_model(model)
    result = find_joint(behavior)
    payload = {
        "model": json.loads(modelio.serialize(model)),
        "quad": _quad_json(quad),
        "chsh": _chsh_json(report),
        "fineFeasible": result.feasible,
        "fineJoint": _joint_json(result.joint),
    }
    return payload, 0


def _cmd_demo_quantum(args) -> tuple[Any, int]:
    if args.angles:
        parts = args.angles.split(",")
        if len(parts) != 4:
            raise UsageError("--angles needs four comma-separated radians")
        try:
            angles = AngleSet(*(float(p) for p in parts))
        except ValueError:
            raise UsageError(f"malformed angle in {args.angles!r}")
    else:
        angles = AngleSet.chsh_optimal()
    behavior = quantum_singlet_behavior(angles)
    report = chsh_values(behavior.quad())
    payload = {
        "angles": [_num(a) for a in (angles.theta_x, angles.theta_xp, angles.theta_y, angles.theta_yp)],
        "behavior": json.loads(modelio.serialize(behavior)),
        "chsh": _chsh_json(report),
        "maxAbs": _num(float(report.max_abs)),
        "satisfied": report.satisfied,
    }
    return payload, 0


# ---------------------------------------------------------------- plumbing

def _render_text(value: Any, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        lines = []
        for k, v in value.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(value, list):
        lines = []
        for v in value:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
        return "\n".join(lines)
    return f"{pad}{value}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lhvlab",
        description="Exact verification lab for contextual local hidden-variable Bell models.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker count (reserved; execution is sequential and results never depend on it); "
        "BELL_THREADS is the environment equivalent",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file against every invariant")
    p.add_argument("model")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("exact", help="exact correlation quad of a model file")
    p.add_argument("model")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("flatten", help="rewrite a contextual model on a single product space")
    p.add_argument("model")
    p.add_argument("--method", choices=("product", "uniform", "average"), default="product")
    p.set_defaults(func=_cmd_flatten)

    p = sub.add_parser("chsh", help="all 8 one-sided CHSH combinations of a quad or model")
    p.add_argument("values", nargs="*", help="four correlations as fraction/decimal strings")
    p.add_argument("--model", help="model or behavior file instead of literal values")
    p.set_defaults(func=_cmd_chsh)

    p = sub.add_parser("fine", help="joint-distribution feasibility of a binary behavior")
    p.add_argument("behavior")
    p.set_defaults(func=_cmd_fine)

    p = sub.add_parser("simulate", help="seeded trial-by-trial simulation of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--bias", help="four comma-separated context probabilities")
    p.add_argument("--confound", action="store_true", help="share the settings stream with the source stream")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("search", help="search for a post-selection CHSH violation")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--budget", type=int, default=4000)
    p.add_argument("--source-atoms", type=int, default=10)
    p.add_argument("--instrument-atoms", type=int, default=1)
    p.add_argument("--min-rate", default="3/10", help="minimum per-context coincidence rate")
    p.add_argument("--max-detection", default="2/3", help="per-setting detection cap, or 'none'")
    p.add_argument("--denominator", type=int, default=32, help="mass grid denominator (<= 64)")
    p.add_argument("--target", help="stop once post-selected max |S| reaches this value")
    p.add_argument("--out-model", help="also write the winning model file here")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("demo-counterexample", help="the die-and-coins model end to end")
    p.set_defaults(func=_cmd_demo_counterexample)

    p = sub.add_parser("demo-quantum", help="singlet behavior and its CHSH report")
    p.add_argument("--angles", help="four comma-separated radians (default: CHSH-optimal)")
    p.set_defaults(func=_cmd_demo_quantum)

    for name, sp in sub.choices.items():
        sp.add_argument("--out", help="write the artifact to this path instead of stdout")
        if name == "simulate":
            sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        else:
            sp.add_argument("--format", choices=("json", "text"), default="json")
    return parser


def _resolve_threads(args) -> int:
    value = args.threads
    if value is None:
        env = os.environ.get("BELL_THREADS")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise UsageError(f"BELL_THREADS must be an integer, got {env!r}")
    if value is None:
        value = 1
    if value < 1:
        raise UsageError(f"thread count must be >= 1, got {value}")
    return value


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve_threads(args)
        payload, status = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(payload, str):
        text = payload
    elif args.format == "text":
        text = _render_text(payload) + "\n"
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
