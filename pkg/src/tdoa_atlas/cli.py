"""Command-line front end: JSON verdicts on stdout, CSV grids and curves to files."""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bifurcation as bf
from .complete_map import mle_locate, synthesize_noisy
from .errors import AtSensorError, TdoaAtlasError
from .localizer import FiberResult, locate, solve_lambda
from .sensor_config import SensorConfig, load_config
from .tau_domain import classify_tau, coefficients, user_frame
from .tdoa_forward import det_jacobian, rank_at, tau2, tau2_star

EXIT_BAD_INPUT = 2


class UsageError(Exception):
    pass


def format_number(v) -> str:
    """17 significant digits; integral values keep a trailing '.0'."""
    if v is None:
        return "null"
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = "%.17g" % v
    if all(ch in "-0123456789" for ch in s):
        s += ".0"
    return s


def to_json(obj) -> str:
    """Compact JSON with every float written by format_number."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return '"%s"' % format_number(obj)
        return format_number(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(obj, dict):
        return "{" + ",".join(f"{to_json(str(k))}:{to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _floats(text: str, n: int, flag: str) -> tuple[float, ...]:
    parts = text.split(",")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{flag} expects {n} comma-separated numbers, got {text!r}") from None
    if len(values) != n or not all(math.isfinite(v) for v in values):
        raise UsageError(f"{flag} expects {n} comma-separated finite numbers, got {text!r}")
    return values


def _threads() -> int:
    raw = os.environ.get("TDOA_ATLAS_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, min(cap, int(raw)))
        except ValueError:
            raise UsageError("TDOA_ATLAS_THREADS must be an integer") from None
    return cap


def _row_map(fn, rows):
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(fn, rows))


def _grid_axes(args, default_x, default_y):
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    lo_x = default_x[0] if args.xmin is None else args.xmin
    hi_x = default_x[1] if args.xmax is None else args.xmax
    lo_y = default_y[0] if args.ymin is None else args.ymin
    hi_y = default_y[1] if args.ymax is None else args.ymax
    if not (lo_x < hi_x and lo_y < hi_y):
        raise UsageError("grid ranges must be nonempty")
    return np.linspace(lo_x, hi_x, args.grid), np.linspace(lo_y, hi_y, args.grid)


def _write_csv(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


def _fiber_count_text(label) -> str:
    n = label.fiber_count()
    return "inf" if math.isinf(n) else str(int(n))


def _fiber_json(fiber: FiberResult):
    if fiber.half_line is not None:
        base, direction = fiber.half_line
        return {"half_line": {"base": list(base), "direction": list(direction)}}
    return [list(p) for p in fiber.points]


# --- commands --------------------------------------------------------------


def cmd_classify_tau(cfg: SensorConfig, args) -> str:
    tau = _floats(args.tau, 2, "--tau")
    label = classify_tau(cfg, tau)
    if cfg.is_general:
        a, b, c = coefficients(cfg, tau)
        delta = b * b - a * c
    else:
        try:
            quad = solve_lambda(cfg, tau)
            a, b, c, delta = quad.a, quad.b, quad.c, quad.delta
        except TdoaAtlasError:
            a = b = c = delta = None
    count = label.fiber_count()
    return to_json({
        "region": label.name,
        "fiber_count": "inf" if math.isinf(count) else int(count),
        "a": a, "b": b, "c": c, "delta": delta,
    }) + "\n"


def cmd_image_report(cfg: SensorConfig, args) -> str:
    fr = user_frame(cfg)
    t1s, t2s = _grid_axes(args, (-1.1 * fr.d10, 1.1 * fr.d10), (-1.1 * fr.d20, 1.1 * fr.d20))

    def row(t2):
        lines = []
        for t1 in t1s:
            label = classify_tau(cfg, (t1, t2))
            lines.append(f"{format_number(t1)},{format_number(t2)},{label.name},"
                         f"{_fiber_count_text(label)}\n")
        return "".join(lines)

    return "tau1,tau2,region,fibers\n" + "".join(_row_map(row, t2s))


def cmd_x_atlas(cfg: SensorConfig, args) -> str:
    pts = np.asarray(cfg.sensors)
    pad = 2.0 * cfg.scale
    xs, ys = _grid_axes(args, (pts[:, 0].min() - pad, pts[:, 0].max() + pad),
                        (pts[:, 1].min() - pad, pts[:, 1].max() + pad))

    def row(y):
        lines = []
        for x in xs:
            try:
                det = det_jacobian(cfg, (x, y))
            except AtSensorError:
                det = math.nan
            rank = rank_at(cfg, (x, y)).value
            region = bf.classify_x(cfg, (x, y)).name
            lines.append(f"{format_number(x)},{format_number(y)},{format_number(det)},"
                         f"{rank},{region}\n")
        return "".join(lines)

    return "x,y,detJ,rank,region\n" + "".join(_row_map(row, ys))


def cmd_locate(cfg: SensorConfig, args) -> str:
    return to_json(_fiber_json(locate(cfg, _floats(args.tau, 2, "--tau")))) + "\n"


def cmd_mle_locate(cfg: SensorConfig, args) -> str:
    measured = _floats(args.taustar, 3, "--taustar")
    projected, fiber = mle_locate(cfg, measured)
    label = classify_tau(cfg, projected[:2])
    return to_json({
        "projected": list(projected),
        "region": label.name,
        "points": _fiber_json(fiber),
    }) + "\n"


def cmd_forward(cfg: SensorConfig, args) -> str:
    x = _floats(args.x, 2, "--x")
    doc = {"tau": list(tau2(cfg, x)), "tau_star": list(tau2_star(cfg, x))}
    if args.noise is not None:
        if args.noise < 0:
            raise UsageError("--noise must be non-negative")
        noisy = synthesize_noisy(cfg, x, args.noise, args.seed)
        doc["noisy_tau_star"] = list(noisy.tau)
        doc["sigma"] = noisy.sigma
        doc["seed"] = args.seed
    return to_json(doc) + "\n"


def cmd_bifurcation(cfg: SensorConfig, args) -> tuple[str, str | None]:
    if not cfg.is_general:
        raise UsageError("bifurcation requires a non-collinear array")
    if args.samples < 8 or args.samples % 2:
        raise UsageError("--samples must be an even number >= 8")
    if args.implicitize and args.out is None:
        raise UsageError("--implicitize requires --out for the CSV")
    result = bf.bifurcation_samples(cfg, args.samples)
    buf = io.StringIO()
    buf.write("mu,tau1,tau2,x,y,branch\n")
    for s in result.samples:
        buf.write(",".join([
            format_number(s.mu), format_number(s.tau_on_E[0]), format_number(s.tau_on_E[1]),
            format_number(s.x[0]), format_number(s.x[1]), f"U{s.branch}",
        ]) + "\n")
    summary = None
    if args.implicitize:
        fit = bf.implicitize_quintic(cfg, result.samples)
        summary = to_json({
            "samples": len(result.samples),
            "skipped": result.skipped,
            "coefficients": list(fit.coefficients),
            "center": list(fit.center),
            "unit": fit.unit,
            "holdout_residual": fit.holdout_residual,
            "fit_residual": fit.fit_residual,
        }) + "\n"
    return buf.getvalue(), summary


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdoa-atlas",
        description="Exact geometry of three-receiver TDOA localization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON sensor configuration")
        return p

    def add_grid(p):
        p.add_argument("--grid", type=int, default=200, help="samples per axis")
        for flag in ("--xmin", "--xmax", "--ymin", "--ymax"):
            p.add_argument(flag, type=float)
        p.add_argument("--out", help="CSV destination (stdout if omitted)")

    p = add("classify-tau", "classify one tau pair")
    p.add_argument("--tau", required=True, help="A,B")
    add_grid(add("image-report", "classify a grid of tau pairs"))
    add_grid(add("x-atlas", "Jacobian, rank and region over a grid of sources"))
    p = add("locate", "closed-form preimages of a tau pair")
    p.add_argument("--tau", required=True, help="A,B")
    p = add("mle-locate", "project a measured triple onto H, then locate")
    p.add_argument("--taustar", required=True, help="A,B,C")
    p = add("forward", "forward maps of a source")
    p.add_argument("--x", required=True, help="A,B")
    p.add_argument("--noise", type=float, help="Gaussian sigma added to tau_star")
    p.add_argument("--seed", type=int, default=0)
    p = add("bifurcation", "sample the bifurcation curve")
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--out", help="CSV destination (stdout if omitted)")
    p.add_argument("--implicitize", action="store_true",
                   help="fit the implicit quintic and print it as JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"tdoa-atlas: bad config: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    try:
        if args.command == "bifurcation":
            csv_text, summary = cmd_bifurcation(cfg, args)
            _write_csv(csv_text, args.out)
            if summary:
                sys.stdout.write(summary)
        elif args.command in ("image-report", "x-atlas"):
            fn = cmd_image_report if args.command == "image-report" else cmd_x_atlas
            _write_csv(fn(cfg, args), args.out)
        else:
            fn = {
                "classify-tau": cmd_classify_tau,
                "locate": cmd_locate,
                "mle-locate": cmd_mle_locate,
                "forward": cmd_forward,
            }[args.command]
            sys.stdout.write(fn(cfg, args))
    except (UsageError, TdoaAtlasError) as exc:
        print(f"tdoa-atlas: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
