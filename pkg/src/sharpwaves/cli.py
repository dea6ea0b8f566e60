"""Command-line entry point.

Subcommands: derive, speeds, profile, shoot, simulate, atlas.  JSON goes to
standard output (or ``--json PATH``); CSV and SVG side outputs are written to
the paths given.  Exit codes: 0 success, 2 usage, 3 model validation,
4 numerical failure (with a JSON diagnostic on standard error).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import io
from .atlas import find_intersections, plot_svg, sweep
from .charspec import lower_bound_speed, make_context, negative_real_roots, speed_thresholds
from .errors import DomainError, ModelError, NumericalError, ParameterError
from .kinetics import check_feedback, check_unimodality, derive_constants
from .modelfile import dumps_model, load_model
from .profile import (
    Persistent,
    SharpEdge,
    SmoothTail,
    edge_regularity,
    integrate,
)

EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_NUMERICAL = 4

# documented defaults (also shown by --help)
DEFAULT_TOL = 1e-6
DEFAULT_SAMPLES = 2000
DEFAULT_T = 40.0
DEFAULT_X_MAX = 80.0
DEFAULT_CELLS = 1000
DEFAULT_BUMP_HEIGHT = 4.0
DEFAULT_BUMP_WIDTH = 4.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage(f"{self.prog}: error: {message}")


class _Usage(Exception):
    pass


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _nonneg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be non-negative and finite: {text!r}")
    return v


def _count(lo: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}: {text!r}")
        return v

    return parse


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sharpwaves", description="Sharp and smooth travelling waves of delayed degenerate diffusion.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--model", required=True, help="TOML model file")
        sp.add_argument("--delay", type=_nonneg, default=None, help="override the model delay r")
        sp.add_argument("--json", dest="json_out", default=None, help="write JSON here instead of stdout")
        sp.formatter_class = argparse.ArgumentDefaultsHelpFormatter

    sp = sub.add_parser("derive", help="model constants and structural checks")
    common(sp)

    sp = sub.add_parser("speeds", help="threshold speeds c_kappa, c*, cdot")
    common(sp)
    sp.add_argument("--roots-csv", default=None, help="CSV of negative real root counts of chi_kappa")
    sp.add_argument("--roots-c", type=_float_list, default=None, help="comma-separated speeds for --roots-csv")

    sp = sub.add_parser("profile", help="integrate one profile at a given speed")
    common(sp)
    sp.add_argument("--speed", type=_positive, required=True)
    sp.add_argument("--start", choices=["sharp", "smooth"], default="sharp")
    sp.add_argument("--amplitude", type=_positive, default=None, help="smooth start amplitude (default zeta1/10)")
    sp.add_argument("--horizon", type=_positive, default=None, help="profile-time horizon (default 40 max(cr, 1))")
    sp.add_argument("--no-shadow", action="store_true", help="plain forward integration without shadowing")
    sp.add_argument("--samples", type=_count(2), default=DEFAULT_SAMPLES)
    sp.add_argument("--csv", default=None, help="uniformly sampled (t, phi, psi)")
    sp.add_argument("--svg", default=None, help="profile plot")

    sp = sub.add_parser("shoot", help="sharp speed c0 by bisection")
    common(sp)
    sp.add_argument("--tol", type=_positive, default=DEFAULT_TOL, help="final bracket width")
    sp.add_argument("--probes-csv", default=None, help="every probe (c, outcome, t_terminal, horizon)")
    sp.add_argument("--csv", default=None, help="profile at c0 (t, phi, psi)")
    sp.add_argument("--svg", default=None, help="profile plot at c0")
    sp.add_argument("--samples", type=_count(2), default=DEFAULT_SAMPLES)

    sp = sub.add_parser("simulate", help="finite-difference PDE run from a compact bump")
    common(sp)
    sp.add_argument("--T", type=_positive, default=DEFAULT_T, help="final time")
    sp.add_argument("--x-max", type=_positive, default=DEFAULT_X_MAX, help="domain [0, x_max]")
    sp.add_argument("--cells", type=_count(100), default=DEFAULT_CELLS)
    sp.add_argument("--bump-height", type=_positive, default=DEFAULT_BUMP_HEIGHT)
    sp.add_argument("--bump-width", type=_positive, default=DEFAULT_BUMP_WIDTH)
    sp.add_argument("--probe", type=_nonneg, default=None, help="x at which to classify the local time series")
    sp.add_argument("--csv", default=None, help="front trace (t, x_front)")
    sp.add_argument("--snapshots-csv", default=None, help="(t, x, u) at --snapshot-times")
    sp.add_argument("--snapshot-times", type=_float_list, default=None)

    sp = sub.add_parser("atlas", help="sweep the delay and tabulate speed curves")
    common(sp)
    sp.add_argument("--r", dest="r_values", type=_float_list, required=True, help="comma-separated increasing delays")
    sp.add_argument("--tol", type=_positive, default=DEFAULT_TOL)
    sp.add_argument("--c-hat", action="store_true", help="also compute the empirical smooth threshold")
    sp.add_argument("--csv", default=None, help="one row per delay")
    sp.add_argument("--svg", default=None, help="speed curves against r")
    return p


# ---------------------------------------------------------------------------
# subcommands


def _model_dict(spec) -> dict:
    return tomllib.loads(dumps_model(spec))


def _cmd_derive(spec, args) -> dict:
    consts = derive_constants(spec)
    uni = check_unimodality(spec)
    fb = check_feedback(spec)
    return {
        "model": _model_dict(spec),
        "constants": consts.as_dict(),
        "unimodality": {
            "unimodal": uni.unimodal,
            "violations": [{"clause": v.clause, "s": v.s, "detail": v.detail} for v in uni.violations],
        },
        "feedback": {"printed": fb.printed, "alternative": fb.alternative, "interval": list(fb.interval or ())},
    }


def _cmd_speeds(spec, args) -> dict:
    ctx = make_context(spec)
    th = speed_thresholds(ctx)
    out = {
        "c_kappa": th.c_kappa,
        "c_star": th.c_star,
        "mu_kappa": th.mu_kappa,
        "mu_star": th.mu_star,
        "omega_kappa": th.omega_kappa,
        "cdot": th.cdot,
        "mu0": th.mu0,
        "notes": list(th.notes),
    }
    try:
        out["lower_bound"] = io.jsonable(lower_bound_speed(ctx))
    except ModelError:
        pass
    if args.roots_csv:
        cs = args.roots_c
        if not cs:
            ck = th.c_kappa if math.isfinite(th.c_kappa) else 1.0
            cs = [ck * (0.5 + 0.05 * i) for i in range(21)]
        rows = [(c, len(negative_real_roots(ctx, c))) for c in cs]
        Path(args.roots_csv).write_text(io.csv_text(io.ROOTS_HEADER, rows))
    return out


def _profile_payload(ctx, c, start, out) -> dict:
    prof = out.profile
    payload = {
        "speed": c,
        "start": start.kind,
        "outcome": out.kind,
        "tail": io.jsonable(out.tail) if isinstance(out, Persistent) else None,
        "edge": io.jsonable(prof.edge) if prof is not None and prof.edge is not None else None,
        "edge_regularity": edge_regularity(ctx, c).regularity,
    }
    if not isinstance(out, Persistent):
        payload["t_terminal"] = getattr(out, "t_death", None) or getattr(out, "t_escape", None)
    if prof is not None:
        payload["t_end"] = prof.t_end
        if "restarts" in prof.meta:
            payload["restarts"] = int(prof.meta["restarts"])
        if "max_kink" in prof.meta:
            payload["max_kink"] = prof.meta["max_kink"]
    return payload


def _write_profile(prof, kappa, args) -> None:
    if prof is None:
        return
    if args.csv:
        t, phi, psi = prof.uniform(args.samples)
        Path(args.csv).write_text(io.csv_text(io.PROFILE_HEADER, zip(t, phi, psi)))
    if args.svg:
        _profile_svg(prof, kappa, args.svg, args.samples)


def _profile_svg(prof, kappa, path, n) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "sharpwaves"
    t, phi, _ = prof.uniform(n)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(t, phi, "k-", label=r"$\phi$")
    ax.axhline(kappa, color="k", linestyle="--", linewidth=0.8, label=r"$\kappa$")
    ax.set_xlabel("t = x + ct")
    ax.set_ylabel(r"$\phi$")
    ax.set_title(f"{prof.start} profile, c = {prof.speed:.6g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _cmd_profile(spec, args) -> dict:
    ctx = make_context(spec)
    start = SmoothTail(args.amplitude) if args.start == "smooth" else SharpEdge()
    out = integrate(ctx, args.speed, start, horizon=args.horizon, shadow=not args.no_shadow)
    _write_profile(out.profile, ctx.consts.kappa, args)
    return _profile_payload(ctx, args.speed, start, out)


def _cmd_shoot(spec, args) -> dict:
    from .shooting import find_sharp_speed

    ctx = make_context(spec)
    res = find_sharp_speed(ctx, args.tol)
    out = res.outcome_at_c0
    if args.probes_csv:
        rows = [(p.c, p.outcome, p.t_term, p.horizon) for p in res.probes]
        Path(args.probes_csv).write_text(io.csv_text(io.PROBES_HEADER, rows))
    _write_profile(out.profile, ctx.consts.kappa, args)
    prof = out.profile
    return {
        "c0": res.c0,
        "bracket_width": res.bracket_width,
        "bracket": list(res.bracket),
        "sub_brackets": [list(b) for b in res.sub_brackets],
        "iterations": res.iterations,
        "guard_lo": res.guard_lo,
        "guard_hi": res.guard_hi,
        "outcome_at_c0": out.kind,
        "tail": io.jsonable(out.tail) if isinstance(out, Persistent) else None,
        "edge": io.jsonable(prof.edge) if prof is not None and prof.edge is not None else None,
        "monotone_predicate": res.monotone_predicate,
        "uniqueness": res.uniqueness,
    }


def _cmd_simulate(spec, args) -> dict:
    from .pdesim import CompactBump, Grid1D, detect_oscillation, run

    grid = Grid1D(0.0, args.x_max, args.cells)
    probes = (args.probe,) if args.probe is not None else ()
    snaps = tuple(args.snapshot_times or ())
    trace = run(spec, CompactBump(args.bump_height, args.bump_width), args.T, grid,
                snapshot_times=snaps, probes=probes)
    if args.csv:
        Path(args.csv).write_text(io.csv_text(io.FRONT_HEADER, zip(trace.t, trace.x_front)))
    if args.snapshots_csv:
        rows = [(ts, x, u) for ts in sorted(trace.snapshots) for x, u in zip(trace.x, trace.snapshots[ts])]
        Path(args.snapshots_csv).write_text(io.csv_text(io.SNAPSHOT_HEADER, rows))
    osc = None
    if args.probe is not None:
        osc = io.jsonable(detect_oscillation(trace, args.probe))
    return {
        "speed": trace.speed,
        "dt": trace.dt,
        "dx": trace.dx,
        "clipped_mass": trace.clipped_mass,
        "truncated": trace.truncated,
        "level_speeds": trace.level_speeds,
        "oscillation": osc,
        "T": args.T,
    }


def _cmd_atlas(spec, args) -> dict:
    factors = [1.0 + 0.1 * k for k in range(11)] if args.c_hat else None
    rows = sweep(spec, args.r_values, tol=args.tol, c_hat_factors=factors)
    inter = find_intersections(rows)
    if args.csv:
        Path(args.csv).write_text(io.csv_text(io.ATLAS_HEADER, [row.as_tuple() for row in rows]))
    if args.svg:
        plot_svg(rows, args.svg)
    return {
        "rows": [dict(zip(io.ATLAS_HEADER, row.as_tuple())) for row in rows],
        "r_kappa": inter.r_kappa,
        "r_star": inter.r_star,
        "r_kappa_all": list(inter.r_kappa_all),
        "r_star_all": list(inter.r_star_all),
        "c_hat_label": "EMPIRICAL",
    }


_COMMANDS = {
    "derive": _cmd_derive,
    "speeds": _cmd_speeds,
    "profile": _cmd_profile,
    "shoot": _cmd_shoot,
    "simulate": _cmd_simulate,
    "atlas": _cmd_atlas,
}


def _diagnostic(kind: str, exc: Exception, **extra) -> str:
    doc = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    doc.update(extra)
    return json.dumps(doc, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    sp = parser._subparsers._group_actions[0].choices[args.command]
    if not Path(args.model).is_file():
        sp.print_usage(sys.stderr)
        print(f"sharpwaves {args.command}: error: model file not found: {args.model}", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = load_model(args.model)
        if args.delay is not None:
            spec = spec.with_delay(args.delay)
        payload = _COMMANDS[args.command](spec, args)
    except ModelError as exc:
        clause = exc.clause or "model"
        print(f"sharpwaves {args.command}: model error [{clause}]: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except DomainError as exc:
        print(f"sharpwaves {args.command}: model error [domain]: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NumericalError as exc:
        print(_diagnostic("numerical", exc, command=args.command), file=sys.stderr)
        return EXIT_NUMERICAL
    except ParameterError as exc:
        sp.print_usage(sys.stderr)
        print(f"sharpwaves {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = io.dumps(args.command, payload)
    if args.json_out:
        Path(args.json_out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
