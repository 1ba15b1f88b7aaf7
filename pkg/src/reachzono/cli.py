"""Command-line interface: verification, ranking, extents, reliability, sampling.

Reports are JSON documents carrying a versioned schema field; --deterministic
prints every number with 17 significant digits and drops timing metadata so
identical configurations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import analysis, oracle
from .analysis import InputSpec
from .network import ModelLoadError, load_model
from .relu_reach import OVER, UNDER, Budget, ResourceLimitError, propagate_limited
from .zonotope import ContainmentUndecidedError

SCHEMA = "reachzono/1"
CEILING_ENV = "REACHZONO_MAX_ZONOTOPES"


def _fmt_repr(x: float) -> str:
    return repr(x)


def _fmt_17g(x: float) -> str:
    return format(x, ".17g")


def _serialize(obj, fmt, out):
    if obj is None:
        out.write("null")
    elif obj is True:
        out.write("true")
    elif obj is False:
        out.write("false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError("non-finite number in report")
        out.write(fmt(x))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.write(", ")
            out.write(json.dumps(str(k)))
            out.write(": ")
            _serialize(v, fmt, out)
        out.write("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.write("[")
        for i, v in enumerate(seq):
            if i:
                out.write(", ")
            _serialize(v, fmt, out)
        out.write("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_json(doc, deterministic: bool) -> str:
    buf = io.StringIO()
    _serialize(doc, _fmt_17g if deterministic else _fmt_repr, buf)
    buf.write("\n")
    return buf.getvalue()


def render_csv(header, rows, deterministic: bool) -> str:
    fmt = _fmt_17g if deterministic else _fmt_repr
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, (float, np.floating)):
                cells.append(fmt(float(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _parse_vector(text: str, flag: str, parser) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        parser.error(f"{flag} expects a comma-separated list of numbers")


def _budget(args, parser) -> Budget:
    for flag, v in (("--max-amp", args.max_amp), ("--max-zono", args.max_zono)):
        if v is not None and v < 1:
            parser.error(f"{flag} must be >= 1")
    return Budget(max_amp=args.max_amp, max_zono=args.max_zono)


def _ceiling() -> int | None:
    raw = os.environ.get(CEILING_ENV)
    return int(raw) if raw else None


def _input_spec(args, parser) -> InputSpec:
    shape = {"cube": "cube", "box": "box", "free": "free", "box-pca": "box_pca"}[args.set]
    if shape in ("cube", "free", "box_pca") and args.eps is None:
        parser.error(f"--eps is required for --set {args.set}")
    if args.eps is not None and args.eps <= 0:
        parser.error("--eps must be positive")
    if shape == "free":
        if args.delta is None:
            parser.error("--delta is required for --set free")
        if args.delta < 0:
            parser.error("--delta must be nonnegative")
    radii = None
    if shape == "box":
        if args.radii is None:
            parser.error("--radii is required for --set box")
        radii = _parse_vector(args.radii, "--radii", parser)
        if np.any(radii <= 0):
            parser.error("--radii entries must be positive")
    if shape == "box_pca" and args.data is None:
        parser.error("--set box-pca requires --data for the covariance estimate")
    return InputSpec(shape=shape, eps=args.eps, delta=args.delta, radii=radii)


def _anchors(args, parser):
    """Anchor points plus optional labels and the raw feature matrix."""
    if args.point is not None and args.data is not None:
        parser.error("--point and --data are mutually exclusive anchors")
    if args.point is not None:
        return _parse_vector(args.point, "--point", parser).reshape(1, -1), None, None
    if args.data is not None:
        X, labels, _ = analysis.load_dataset(args.data)
        return X, labels, X
    parser.error("one of --point or --data is required")


def _config_echo(args, extra=None):
    doc = {
        "model": args.model,
        "data": getattr(args, "data", None),
        "point": getattr(args, "point", None),
        "set": getattr(args, "set", None),
        "eps": getattr(args, "eps", None),
        "delta": getattr(args, "delta", None),
        "radii": getattr(args, "radii", None),
        "mode": getattr(args, "mode", None),
        "max_amp": getattr(args, "max_amp", None),
        "max_zono": getattr(args, "max_zono", None),
        "seed": args.seed,
    }
    if extra:
        doc.update(extra)
    return doc


def _modes(args):
    return {"over": (OVER,), "under": (UNDER,), "both": (OVER, UNDER)}[args.mode]


def _score_obj(scores):
    if scores is None:
        return None
    return {str(b): scores[b] for b in sorted(scores)}


def cmd_verify(args, parser):
    net = load_model(args.model)
    spec = _input_spec(args, parser)
    anchors, _, dataset = _anchors(args, parser)
    budget = _budget(args, parser)
    results = []
    for i, x in enumerate(anchors):
        rep = analysis.verify(
            net, spec.with_anchor(x), budget, _modes(args), _ceiling(), dataset
        )
        rec = {
            "index": i,
            "anchor": list(x),
            "predicted": rep.predicted,
            "scores_over": _score_obj(rep.scores_over),
            "scores_under": _score_obj(rep.scores_under),
            "certificate": rep.certificate,
            "robust_against": {str(b): v for b, v in sorted(rep.robust_against.items())},
            "non_robust_against": {
                str(b): v for b, v in sorted(rep.non_robust_against.items())
            },
            "diagnostic": rep.diagnostic,
        }
        if not args.deterministic:
            rec["wall_time_s"] = rep.wall_time_s
        results.append(rec)
    doc = {
        "schema": SCHEMA,
        "command": "verify",
        "config": _config_echo(args),
        "results": results,
    }
    header = ["index", "predicted", "certificate", "min_score_over", "min_score_under"]
    rows = [
        (
            r["index"],
            r["predicted"],
            r["certificate"],
            min(r["scores_over"].values()) if r["scores_over"] else None,
            min(r["scores_under"].values()) if r["scores_under"] else None,
        )
        for r in results
    ]
    return doc, (header, rows)


def cmd_rank_features(args, parser):
    net = load_model(args.model)
    if args.point is None:
        parser.error("--point is required for rank-features")
    anchor = _parse_vector(args.point, "--point", parser)
    if args.delta is None or args.eps is None:
        parser.error("rank-features requires --delta (widened radius) and --eps (base radius)")
    ranking = analysis.rank_features(
        net, anchor, args.delta, args.eps, _budget(args, parser), _ceiling()
    )
    results = [
        {"rank": i + 1, "feature": e.feature, "volume": e.volume, "error": e.error}
        for i, e in enumerate(ranking)
    ]
    doc = {
        "schema": SCHEMA,
        "command": "rank-features",
        "config": _config_echo(args),
        "results": results,
    }
    rows = [(r["rank"], r["feature"], r["volume"], r["error"] or "") for r in results]
    return doc, (["rank", "feature", "volume", "error"], rows)


def cmd_extents(args, parser):
    net = load_model(args.model)
    spec = _input_spec(args, parser)
    anchors, _, dataset = _anchors(args, parser)
    budget = _budget(args, parser)
    results = []
    for i, x in enumerate(anchors):
        z0 = analysis.build_input_set(spec.with_anchor(x), dataset)
        rec = {"index": i, "anchor": list(x)}
        for direction in _modes(args):
            rs = propagate_limited(net, z0, direction, budget, _ceiling())
            key = f"extents_{direction}"
            if len(rs) == 0:
                rec[key] = None
                rec["diagnostic"] = f"{direction}: set empty after budget drops"
            else:
                rec[key] = list(analysis.output_extensions(rs))
        results.append(rec)
    doc = {
        "schema": SCHEMA,
        "command": "extents",
        "config": _config_echo(args),
        "results": results,
    }
    header = ["index", "dim", "extent_over", "extent_under"]
    rows = []
    for r in results:
        over = r.get("extents_over")
        under = r.get("extents_under")
        width = len(over or under or [])
        for d in range(width):
            rows.append(
                (
                    r["index"],
                    d,
                    over[d] if over else None,
                    under[d] if under else None,
                )
            )
    return doc, (header, rows)


def cmd_reliability(args, parser):
    net = load_model(args.model)
    spec = _input_spec(args, parser)
    if args.data is None:
        parser.error("--data with a label column is required for reliability")
    X, labels, _ = analysis.load_dataset(args.data)
    if labels is None:
        parser.error("reliability requires a dataset with a final 'label' column")
    budget = _budget(args, parser)
    scores, correct = [], []
    for x, t in zip(X, labels):
        rep = analysis.verify(
            net, spec.with_anchor(x), budget, (OVER,), _ceiling(), X
        )
        if rep.scores_over is None:
            continue
        scores.append(min(rep.scores_over.values()))
        correct.append(rep.predicted == int(t))
    if not scores:
        raise ValueError("no sample produced an over-approximation score")
    thetas = np.unique(np.asarray(scores, dtype=float))
    curve = analysis.reliability_rates(scores, correct, thetas)
    doc = {
        "schema": SCHEMA,
        "command": "reliability",
        "config": _config_echo(args),
        "results": {
            "samples": len(scores),
            "scores": scores,
            "correct": correct,
            "thresholds": list(curve.thresholds),
            "ta_rates": None if curve.ta_rates is None else list(curve.ta_rates),
            "fa_rates": None if curve.fa_rates is None else list(curve.fa_rates),
            "theta_star": curve.theta_star,
        },
    }
    rows = [
        (
            t,
            None if curve.ta_rates is None else curve.ta_rates[i],
            None if curve.fa_rates is None else curve.fa_rates[i],
        )
        for i, t in enumerate(curve.thresholds)
    ]
    return doc, (["theta", "ta_rate", "fa_rate"], rows)


def cmd_sample_oracle(args, parser):
    net = load_model(args.model)
    spec = _input_spec(args, parser)
    anchors, _, dataset = _anchors(args, parser)
    z0 = analysis.build_input_set(spec.with_anchor(anchors[0]), dataset)
    sampled = oracle.sample_reachable(
        net, z0, args.count, args.seed, args.corner_fraction
    )
    lo = sampled.points.min(axis=0)
    hi = sampled.points.max(axis=0)
    doc = {
        "schema": SCHEMA,
        "command": "sample-oracle",
        "config": _config_echo(
            args, {"count": args.count, "corner_fraction": args.corner_fraction}
        ),
        "results": {
            "count": sampled.count,
            "seed": sampled.seed,
            "min": list(lo),
            "max": list(hi),
            "extent": list(hi - lo),
        },
    }
    rows = [(d, lo[d], hi[d], hi[d] - lo[d]) for d in range(lo.shape[0])]
    return doc, (["dim", "min", "max", "extent"], rows)


def _add_common(sub, point=True):
    sub.add_argument("--model", required=True, help="model JSON path")
    if point:
        sub.add_argument("--point", help="inline anchor, comma-separated floats")
        sub.add_argument("--data", help="dataset CSV path")
    sub.add_argument(
        "--set",
        choices=["cube", "box", "free", "box-pca"],
        default="cube",
        help="input-set shape (default cube)",
    )
    sub.add_argument("--eps", type=float, help="perturbation radius")
    sub.add_argument("--delta", type=float, help="secondary radius (free/rank)")
    sub.add_argument("--radii", help="per-feature radii for --set box")
    sub.add_argument("--mode", choices=["over", "under", "both"], default="both")
    sub.add_argument("--max-amp", type=int, default=None, help="per-ReLU zonotope cap")
    sub.add_argument("--max-zono", type=int, default=None, help="per-layer zonotope cap")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", help="output path (default stdout)")
    sub.add_argument("--format", choices=["json", "csv"], default="json")
    sub.add_argument(
        "--deterministic",
        action="store_true",
        help="17-significant-digit numbers, no timing metadata",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachzono",
        description="Robustness analysis of ReLU networks via zonotope reachable sets",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("verify", help="(non-)robustness certificates per sample")
    _add_common(p)
    p.set_defaults(handler=cmd_verify)

    p = subs.add_parser("rank-features", help="feature importance by reachable volume")
    _add_common(p)
    p.set_defaults(handler=cmd_rank_features)

    p = subs.add_parser("extents", help="per-output extents of the reachable set")
    _add_common(p)
    p.set_defaults(handler=cmd_extents)

    p = subs.add_parser("reliability", help="theta-robustness TA/FA curve")
    _add_common(p)
    p.set_defaults(handler=cmd_reliability)

    p = subs.add_parser("sample-oracle", help="sampling baseline of the reachable set")
    _add_common(p)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--corner-fraction", type=float, default=0.5)
    p.set_defaults(handler=cmd_sample_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        doc, (header, rows) = args.handler(args, parser)
    except (
        ModelLoadError,
        ValueError,
        OSError,
        ResourceLimitError,
        ContainmentUndecidedError,
    ) as exc:
        print(f"reachzono: error: {exc}", file=sys.stderr)
        return 1
    if not args.deterministic:
        doc["meta"] = {"wall_time_s": time.perf_counter() - started}
    if args.format == "csv":
        text = render_csv(header, rows, args.deterministic)
    else:
        text = render_json(doc, args.deterministic)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
