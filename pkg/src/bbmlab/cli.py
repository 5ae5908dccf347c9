"""Command-line interface.

Subcommands: audit-space, audit-mollifier, audit-phi, eval, sweep,
cantor-demo, report. Exit codes: 0 ok, 1 config error, 2 bound-check failure,
3 resolution refusal.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from . import harness
from .harness import ConfigError, PRESETS, check_bounds, emit_report, run_sweep
from .space import ResolutionError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BOUND = 2
EXIT_RESOLUTION = 3


def _load_config(path: str) -> dict:
    cfg = configparser.ConfigParser()
    read = cfg.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    if "scenario" not in cfg:
        raise ConfigError("config needs a [scenario] section")
    out = {"preset": cfg["scenario"].get("preset")}
    if out["preset"] is None:
        raise ConfigError("[scenario] must name a preset")
    over = {}
    if "overrides" in cfg:
        for key, val in cfg["overrides"].items():
            over[key] = _parse_value(val)
    out["overrides"] = over
    known = {"scenario", "overrides"}
    unknown = set(cfg.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return out


def _parse_value(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        return tuple(_parse_value(t) for t in text.split(","))
    return text


def _resolve(args) -> tuple[str, dict]:
    if args.config:
        conf = _load_config(args.config)
        preset = conf["preset"]
        overrides = conf["overrides"]
    elif args.preset:
        preset = args.preset
        overrides = {}
    else:
        raise ConfigError("need --preset or --config")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
    return preset, overrides


def _preset_space(preset: str, overrides: dict, grid: int | None):
    """Build the space a preset would use (for the audit subcommands)."""
    from .cantor import build_cantor_model, cantor_space
    from .space import build_lebesgue_interval, build_planar_grid

    p = PRESETS[preset]
    n = int(grid if grid is not None else p.default_grid)
    if preset in ("cantor-gap", "bump-f0"):
        depth = int(overrides.get("depth", p.params["depth"]))
        model = build_cantor_model(depth)
        return cantor_space(model, n if n > 0 else int(np.ceil(8.0 * 4.0**depth)))
    if preset == "lambda-2d-step":
        return build_planar_grid(n, n)
    return build_lebesgue_interval(n)


def cmd_audit_space(args) -> int:
    from .space import audit_ahlfors, audit_doubling, audit_upper_mass_bound

    preset, overrides = _resolve(args)
    space = _preset_space(preset, overrides, args.grid)
    cd = audit_doubling(space)
    fit = audit_upper_mass_bound(space)
    q = 2.0 if space.kind == "grid" else 1.0
    ca = audit_ahlfors(space, q)
    print(f"space: {space.kind}, nodes={space.n_nodes}, total mass={space.total_mass:.12g}")
    print(f"doubling estimate C_d = {cd:.12g}")
    print(f"mass-bound envelope: C0={fit.C0:.12g} sigma={fit.sigma:.12g} residual={fit.residual:.3g}")
    print(f"regularity constant (Q={q:g}): C_A = {ca:.12g}")
    return EXIT_OK


def cmd_audit_mollifier(args) -> int:
    from .mollifier import audit_minorize, dyadic_majorant, make_mollifier

    preset, overrides = _resolve(args)
    space = _preset_space(preset, overrides, args.grid or 4000)
    r = float(overrides.get("r", 0.01))
    q = float(overrides.get("q", 2.0))
    rc = EXIT_OK
    for family, kwargs in (
        ("flat-window", {"r": r}),
        ("window-power", {"r": r, "q": q}),
    ):
        spec = make_mollifier(family, p=1.0, **kwargs)
        c_rho = audit_minorize(spec, space)
        maj = dyadic_majorant(spec, space)
        print(
            f"{family}: C_rho={c_rho:g}  majorant sum={maj.total:.6g} "
            f"(bound {maj.bound:.6g})  tail(j_max+1)={maj.tail(maj.j_max + 1):g}  "
            f"violations={maj.violations}"
        )
        if maj.violations:
            rc = EXIT_BOUND
    return rc


def cmd_audit_phi(args) -> int:
    from .phi import audit_phi, make_phi

    spec = make_phi("step")
    for p in (1.0, 2.0, 3.0):
        audit = audit_phi(spec, p)
        print(f"step profile, p={p:g}: integral={audit.integral:.12g} C_phi={audit.c_phi:.12g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    preset, overrides = _resolve(args)
    series = run_sweep(preset, grid=args.grid, workers=args.workers, overrides=overrides)
    pt = series.points[-1]
    print(
        f"{preset}: param={pt.param:g} value={pt.functional.value:.12g} "
        f"energy={pt.energy:.12g} ratio={pt.ratio:.12g} pairs={pt.functional.pair_count}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    preset, overrides = _resolve(args)
    series = run_sweep(preset, grid=args.grid, workers=args.workers, overrides=overrides)
    checks = check_bounds(series)
    paths = emit_report(series, checks, args.out)
    print(Path(paths["summary"]).read_text(), end="")
    hard_failures = [c for c in checks if not c.passed and c.name in
                     ("holder-bound", "interpolation-bound", "gap-lower-bound")]
    return EXIT_BOUND if hard_failures else EXIT_OK


def cmd_cantor_demo(args) -> int:
    from .cantor import audit_cantor, build_cantor_model, limit_tv_report

    depth = args.depth
    model = build_cantor_model(depth)
    report = audit_cantor(model, check_depth=min(depth - 1, 6))
    tv = limit_tv_report(model)
    print(f"fat-Cantor model, depth {depth}: components={model.components} "
          f"L_m={float(model.L[depth]):.12g}")
    print(f"identities: lengths={report.lengths_exact} components={report.component_count_exact} "
          f"unit-integrals={report.unit_integrals} uniform-bound={report.uniform_bound} "
          f"agree-off-A={report.agree_off_A}")
    print(f"variation: envelope-at-depth={tv.envelope_at_depth:.12g} "
          f"approximant-infimum={tv.approximant_infimum:g} limit-envelope={tv.limit_envelope:g}")

    gap = run_sweep("cantor-gap", workers=args.workers,
                    overrides={"depth": depth, "q": args.q})
    bump = run_sweep("bump-f0", workers=args.workers, overrides={"q": args.q})
    combined = check_bounds(gap, companion=bump)
    gap_paths = emit_report(gap, combined, args.out)
    bump_paths = emit_report(bump, check_bounds(bump), args.out)
    print(f"gap ratio plateau:  {gap.points[-1].ratio:.6g} (target {gap.target_ratio:.6g})")
    print(f"bump ratio plateau: {bump.points[-1].ratio:.6g} (target {bump.target_ratio:.6g})")
    ncc = [c for c in combined if c.name == "no-common-constant"][0]
    verdict = "incompatible with a single constant" if ncc.passed else "NOT separated"
    print(f"conclusion: stabilized ratios {gap.points[-1].ratio:.4g} vs "
          f"{bump.points[-1].ratio:.4g} -> {verdict}")
    print(f"reports: {gap_paths['summary']}, {bump_paths['summary']}")
    return EXIT_OK if ncc.passed else EXIT_BOUND


def cmd_report(args) -> int:
    """Re-render summary + figure from a sweep CSV."""
    import csv as csvmod

    path = Path(args.csv)
    if not path.exists():
        raise ConfigError(f"no such CSV: {path}")
    with open(path) as fh:
        rows = list(csvmod.DictReader(fh))
    if not rows:
        raise ConfigError("empty CSV")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    params = np.array([float(r["param"]) for r in rows])
    vals = np.array([float(r["functional"]) for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(params, vals, "o-", lw=1.2, ms=4)
    if np.all(params > 0) and params.max() / params.min() > 10:
        ax.set_xscale("log")
    ax.set_xlabel(rows[0]["axis"])
    ax.set_ylabel("functional value")
    ax.set_title(rows[0]["scenario"])
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = Path(args.out) / (path.stem + ".png")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bbmlab",
        description="numerical lab for nonlocal difference-quotient functionals "
                    "on weighted intervals and planar grids",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, preset=True):
        sp.add_argument("--config", help="INI config with [scenario] preset and [overrides]")
        if preset:
            sp.add_argument("--preset", help="preset name (see harness.preset_names())")
        sp.add_argument("--out", default="reports", help="output directory")
        sp.add_argument("--workers", type=int, default=None, help="compute threads")
        sp.add_argument("--grid", type=int, default=None, help="grid size override")

    common(sub.add_parser("audit-space", help="doubling / mass-bound / regularity audits"))
    common(sub.add_parser("audit-mollifier", help="kernel minorize and majorant audits"))
    common(sub.add_parser("audit-phi", help="profile integrability audit"))
    common(sub.add_parser("eval", help="evaluate the preset functional at the final point"))
    common(sub.add_parser("sweep", help="run a preset sweep and emit reports"))

    demo = sub.add_parser("cantor-demo", help="two-constant gap demonstration")
    demo.add_argument("--depth", type=int, default=10)
    demo.add_argument("--q", type=float, default=2.0)
    demo.add_argument("--out", default="reports")
    demo.add_argument("--workers", type=int, default=None)

    rep = sub.add_parser("report", help="re-render summary figure from a sweep CSV")
    rep.add_argument("--csv", required=True)
    rep.add_argument("--out", default="reports")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors; that slot is reserved for
        # bound-check failures, so usage problems map to the config-error code
        if exc.code == 2:
            return EXIT_CONFIG
        raise
    handlers = {
        "audit-space": cmd_audit_space,
        "audit-mollifier": cmd_audit_mollifier,
        "audit-phi": cmd_audit_phi,
        "eval": cmd_eval,
        "sweep": cmd_sweep,
        "cantor-demo": cmd_cantor_demo,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ResolutionError as exc:
        print(f"resolution refusal: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
