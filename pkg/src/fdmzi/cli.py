"""Command-line front end.

Exit codes: 0 success, 1 runtime or model error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config
from .fitting import DataError, DataSeries, fit_poly, fit_quality, fit_sin2
from .fock import (BsGenerator, coherent_input, evolve_mzi, mean_photon_numbers,
                   single_photon_input, N_MAX_LIMIT)
from .lossy import lossy_fringe, visibility_vs_power
from .mzi import (BeamSplitterParams, DegenerateFringeWarning, MziConfig, fringe_sweep,
                  output_photon_numbers)
from .noise import min_filter_ratio, visibility_vs_ratio_table

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def format_csv(header: list[str], rows, comments: list[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(f"{float(v):.17g}" for v in row))
    return "\n".join(lines) + "\n"


def _write_outputs(out_dir: Path, files: dict[str, str], command: str, cfg_digest: str) -> None:
    """Write all files at once, then a run manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        with open(out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    record = {
        "command": command,
        "config_sha256": cfg_digest,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "files": sorted(files),
    }
    with open(out_dir / f"{command}.manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")


def _svg(args) -> bool:
    return args.format == "csv+svg"


def cmd_fringe(cfg: ScenarioConfig, args) -> tuple[dict[str, str], list[str]]:
    f = cfg.fringe
    phases = cfg.phase_grid()
    if f["lossless"]:
        res = fringe_sweep(MziConfig.from_reflectances(f["r1"], f["r2"]), phases, f["n_in"])
        label = f"lossless R1={f['r1']:g} R2={f['r2']:g}"
    else:
        res = lossy_fringe(f["pump_mw"], cfg.budget, phases, f["n_in"])
        label = f"pump {f['pump_mw']:g} mW"
    comments = [
        label,
        f"v_upper={res.v_upper:.17g} degenerate_upper={str(res.degenerate_upper).lower()}",
        f"v_lower={res.v_lower:.17g} degenerate_lower={str(res.degenerate_lower).lower()}",
    ]
    files = {"fringe.csv": format_csv(["phase_rad", "p_upper", "p_lower"],
                                      zip(res.phases, res.p_upper, res.p_lower), comments)}
    if _svg(args):
        from .plots import line_plot_svg
        files["fringe.svg"] = line_plot_svg(
            [("upper", res.phases, res.p_upper), ("lower", res.phases, res.p_lower)],
            "relative phase (rad)", "mean photon number", label)
    msg = [f"{label}: v_upper={res.v_upper:.4f} v_lower={res.v_lower:.4f}"]
    for mode, deg in (("upper", res.degenerate_upper), ("lower", res.degenerate_lower)):
        if deg:
            msg.append(f"degenerate {mode} fringe (no signal); visibility reported as 0")
    return files, msg


def cmd_visibility_sweep(cfg: ScenarioConfig, args):
    rows = visibility_vs_power(cfg.budget, cfg.power_grid())
    files = {"visibility_sweep.csv": format_csv(["power_mw", "v_upper", "v_lower"], rows)}
    if _svg(args):
        from .plots import line_plot_svg
        p = [r.power_mw for r in rows]
        files["visibility_sweep.svg"] = line_plot_svg(
            [("upper", p, [r.v_upper for r in rows]), ("lower", p, [r.v_lower for r in rows])],
            "pump power P1 (mW)", "visibility")
    best = max(rows, key=lambda r: min(r.v_upper, r.v_lower))
    return files, [f"max min(v_upper, v_lower) on grid: {min(best.v_upper, best.v_lower):.4f} "
                   f"at {best.power_mw:g} mW"]


def _format_bw(ghz: float) -> str:
    if math.isinf(ghz):
        return "inf"
    return f"{ghz * 1e3:.3g} MHz" if ghz < 1.0 else f"{ghz:.3g} GHz"


def cmd_noise_vis(cfg: ScenarioConfig, args):
    nv = cfg.noise_vis
    rows = visibility_vs_ratio_table(nv["input_bw_ghz"], nv["mu"], cfg.ratio_grid(), nv["pump_mw"],
                                     cfg.budget, cfg.noise)
    files = {"noise_vis.csv": format_csv(["ratio", "mu", "v_upper", "v_lower"], rows)}
    if _svg(args):
        from .plots import line_plot_svg
        for mode, attr in (("upper", "v_upper"), ("lower", "v_lower")):
            series = []
            for mu in nv["mu"]:
                sel = [r for r in rows if r.mu == mu]
                series.append((f"mu={mu:g}", [r.ratio for r in sel], [getattr(r, attr) for r in sel]))
            files[f"noise_vis_{mode}.svg"] = line_plot_svg(
                series, "filter bandwidth / input bandwidth", f"expected visibility ({mode})",
                vline=nv["marker_ratio"])
    msg = []
    target = nv["target"]
    for mu in nv["mu"]:
        bounds = {}
        for mode in ("U", "L"):
            fb = min_filter_ratio(target, mu, nv["pump_mw"], cfg.budget, cfg.noise, mode,
                                  nv["input_bw_ghz"])
            bounds[mode] = fb
        if all(fb.feasible for fb in bounds.values()):
            worst = min(bounds.values(), key=lambda fb: fb.ratio)
            msg.append(f"mu={mu:g}: filter < {_format_bw(worst.filter_bw)} for V>{target:g} "
                       f"(ratio upper {bounds['U'].ratio:.4f}, lower {bounds['L'].ratio:.4f})")
        else:
            msg.append(f"mu={mu:g}: V>{target:g} not reachable with any filter")
    return files, msg


def cmd_fit(args) -> int:
    try:
        data = DataSeries.from_csv(args.csv)
        if args.model == "sin2":
            report = fit_sin2(data)
        else:
            report = fit_poly(data, int(args.model[-1]))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"model {report.model}: {len(data)} points")
    for k, v in report.params.items():
        print(f"  {k} = {v:.10g} +/- {report.stderr[k]:.3g}")
    print(f"  residual_rms = {report.residual_rms:.6g}")
    if not report.converged:
        print(f"fit did not converge: {report.message}", file=sys.stderr)
        return EXIT_RUNTIME
    diag = fit_quality(report, data)
    print(f"  r_squared = {diag.r_squared:.10g}")
    csv = format_csv(["power_mw", "value", "fitted", "residual"],
                     zip(data.x, data.y, diag.fitted, diag.residuals))
    try:
        _write_outputs(Path(args.out), {"fit_residuals.csv": csv}, "fit", "")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def fock_check(n_max: int = 20, trials: int = 100, seed: int = 0,
               tolerance: float = 1e-10) -> tuple[bool, list[str]]:
    """Compare Fock-space evolution with the closed-form output photon numbers.

    Each trial draws random reflectances, pump phases, phase shift and a
    coherent amplitude, and checks single-photon and coherent inputs.
    Passes iff every deviation is strictly below ``tolerance``.
    """
    rng = np.random.default_rng(seed)
    alpha_max = min(1.0, math.sqrt(n_max / 4))
    err_single = err_coh = err_total = 0.0
    for _ in range(trials):
        r1, r2 = rng.uniform(0.0, 1.0, 2)
        p1, p2, ps = rng.uniform(-math.pi, math.pi, 3)
        alpha = alpha_max * math.sqrt(rng.uniform()) * np.exp(1j * rng.uniform(-math.pi, math.pi))
        cfg = MziConfig(BeamSplitterParams(r1, p1), BeamSplitterParams(r2, p2), ps)
        g1, g2 = BsGenerator.from_reflectance(r1, p1), BsGenerator.from_reflectance(r2, p2)
        for state, kind in ((single_photon_input(n_max), "single"), (coherent_input(alpha, n_max), "coh")):
            n_in = mean_photon_numbers(state)[1]
            out = mean_photon_numbers(evolve_mzi(state, g1, ps, g2))
            ref = output_photon_numbers(cfg, n_in)
            err = max(abs(out[0] - ref[0]), abs(out[1] - ref[1]))
            if kind == "single":
                err_single = max(err_single, err)
            else:
                err_coh = max(err_coh, err)
            err_total = max(err_total, abs(sum(out) - n_in))
    ok = max(err_single, err_coh, err_total) < tolerance
    lines = [
        f"fock-check n_max={n_max} trials={trials} seed={seed} tolerance={tolerance:g}",
        f"max |error| single-photon: {err_single:.3e}",
        f"max |error| coherent:      {err_coh:.3e}",
        f"max |total-number drift|:  {err_total:.3e}",
        "PASS" if ok else "FAIL",
    ]
    return ok, lines


def _common(parser):
    parser.add_argument("--config", help="scenario config file (INI-style)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--format", choices=["csv", "csv+svg"], default="csv+svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdmzi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("fringe", "output fringes vs relative phase"),
                        ("visibility-sweep", "visibilities vs pump power"),
                        ("noise-vis", "expected visibility vs filter bandwidth ratio")):
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("fit", help="fit a conversion curve or noise polynomial to CSV data")
    p.add_argument("csv")
    p.add_argument("--model", choices=["sin2", "poly1", "poly2"], required=True)
    _common(p)
    p = sub.add_parser("fock-check", help="Fock-space oracle vs closed-form outputs")
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-10)
    _common(p)
    return parser


COMMANDS = {
    "fringe": cmd_fringe,
    "visibility-sweep": cmd_visibility_sweep,
    "noise-vis": cmd_noise_vis,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fit":
        return cmd_fit(args)
    if args.command == "fock-check":
        if not 1 <= args.n_max <= N_MAX_LIMIT or args.trials < 1:
            print(f"error: need 1 <= n-max <= {N_MAX_LIMIT} and trials >= 1", file=sys.stderr)
            return EXIT_USAGE
        ok, lines = fock_check(args.n_max, args.trials, args.seed, args.tolerance)
        print("\n".join(lines))
        return EXIT_OK if ok else EXIT_RUNTIME
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateFringeWarning)
            files, messages = COMMANDS[args.command](cfg, args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        _write_outputs(Path(args.out), files, args.command, cfg.digest())
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print("\n".join(messages))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
