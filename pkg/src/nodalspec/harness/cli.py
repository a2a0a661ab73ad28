"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 a sweep recorded an
asserted-property violation, 1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..bounds import verify_cor1, verify_thm1, verify_thm2
from ..grid import Field, GridError, TorusGrid, load_field, save_field
from ..nodal import nodal_set
from ..spectral import (
    Spectrum,
    decompose,
    frequency_scale,
    heat_evolve,
    norm_l1,
    norm_l2,
    norm_linf,
    reconstruct,
)
from . import report
from .config import ConfigError, load_field_config, load_sweep_config
from .generators import cosine_field, gen_dirac_field, gen_highpass
from .sweeps import ROW_COLUMNS, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2, 3

SWEEP_NAMES = ("sharpness", "sturm", "dirac", "cubes", "dg", "cor1", "smoothed", "thm2")

# x, y and grouping used for each sweep's scatter plot
PLOTS = {
    "sharpness": ("lam", "ratio", "theorem_id", "eigenvalue", "measured / bound"),
    "thm2": ("lam", "ratio", "theorem_id", "eigenvalue", "measured / bound"),
    "sturm": ("rhs_value", "measured_measure", "theorem_id", "2n + 2", "sign changes"),
    "dirac": ("point.n", "measured_measure", "point.r", "points n", "nodal measure"),
    "cubes": ("l1", "params.beta", "theorem_id", "L1 norm", "beta"),
    "davies_gaffney": ("rhs_value", "measured_measure", "point.t", "bound", "double integral"),
    "cor1": ("rhs_value", "measured_measure", "theorem_id", "bound", "nodal measure"),
    "smoothed": ("rhs_value", "measured_measure", "theorem_id", "bound", "min smoothed measure"),
}


def build_field(cfg: dict) -> Field:
    g = cfg["grid"]
    spec = cfg["field"]
    kind = spec["type"]
    if kind == "file":
        try:
            return load_field(spec["path"])
        except OSError as e:
            raise ConfigError(f"cannot read field {spec['path']}: {e.strerror or e}") from None
    grid = TorusGrid(g["dim"], g["N"])
    if kind == "cosine":
        if spec.get("axis", 0) >= grid.dim:
            raise ConfigError("cosine axis exceeds the grid dimension")
        return cosine_field(grid, spec["k"], spec.get("axis", 0), spec.get("amplitude", 1.0))
    if kind == "eigen_sum":
        return reconstruct(_eigen_spectrum(grid, spec["terms"]))
    if kind == "highpass":
        return gen_highpass(spec["seed"], spec["n_cut"], spec["n_max"], grid)
    return gen_dirac_field(spec["n_points"], spec["r"], spec["seed"], grid, spec.get("jitter", 0.2))


def _eigen_terms(grid: TorusGrid, terms) -> list:
    out = []
    for t in terms:
        if len(t["m"]) != grid.dim:
            raise ConfigError(f"wavevector {t['m']} does not match dimension {grid.dim}")
        out.append((t["a"], tuple(t["m"]), t.get("kind", "cos")))
    return out


def _eigen_spectrum(grid, terms) -> Spectrum:
    cos, sin = {}, {}
    for a, m, kind in _eigen_terms(grid, terms):
        target = cos if kind == "cos" else sin
        target[m] = target.get(m, 0.0) + a
    return Spectrum.from_basis(grid, cos=cos, sin=sin)


def _out(args, name: str) -> Path:
    path = Path(args.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_spectrum(args, cfg) -> int:
    f = build_field(cfg)
    s = decompose(f)
    c = s.coefficients
    tol = 1e-12 * max(1.0, float(np.max(np.abs(c))))
    rows = []
    dim = f.grid.dim
    levels = f.grid.mode_levels()
    ks = f.grid.wavenumbers()
    for idx in zip(*np.nonzero(np.abs(c) > tol)):
        if tuple(int(i) for i in idx) > tuple((-int(i)) % f.grid.N for i in idx):
            continue  # the conjugate partner carries this pair
        m = tuple(int(k[idx]) for k in ks)
        a, b = s.basis_coefficients(m)
        row = {f"m{i + 1}": m[i] for i in range(dim)}
        row.update(level=int(levels[idx]), eigenvalue=4 * np.pi**2 * float(levels[idx]), cos=a, sin=b)
        rows.append(row)
    rows.sort(key=lambda r: (r["level"], tuple(r[f"m{i + 1}"] for i in range(dim))))
    cols = [f"m{i + 1}" for i in range(dim)] + ["level", "eigenvalue", "cos", "sin"]
    report.emit_csv(rows, _out(args, cfg["output"].get("csv", "spectrum.csv")), cols)
    report.emit_json(
        {"dim": dim, "N": f.grid.N, "modes": len(rows), "energy": s.energy(), "l2": norm_l2(f)},
        _out(args, cfg["output"].get("json", "spectrum.json")),
    )
    return EXIT_OK


def cmd_freqscale(args, cfg) -> int:
    f = build_field(cfg)
    p = cfg["params"]
    fs = frequency_scale(f, p.get("c", 1e-2), p.get("rhs_norm", "l1"))
    out = {
        "lam": fs.lam,
        "level": fs.level,
        "first_failing_eigenvalue": fs.first_failing_eigenvalue,
        "low_energy_at_failure": fs.low_energy_at_failure,
        "c_used": fs.c_used,
        "rhs_norm": fs.rhs_norm,
        "l1": norm_l1(f),
        "l2": norm_l2(f),
        "linf": norm_linf(f),
    }
    report.emit_json(out, _out(args, cfg["output"].get("json", "freqscale.json")))
    return EXIT_OK


def cmd_heat(args, cfg) -> int:
    f = build_field(cfg)
    p = cfg["params"]
    if "t" not in p:
        raise ConfigError("params.t is required for heat")
    g = heat_evolve(f, p["t"])
    save_field(g, _out(args, "heat.field"), p.get("encoding", "csv"))
    summary = {
        "t": p["t"],
        "before": {"mean": f.mean(), "l1": norm_l1(f), "l2": norm_l2(f), "linf": norm_linf(f)},
        "after": {"mean": g.mean(), "l1": norm_l1(g), "l2": norm_l2(g), "linf": norm_linf(g)},
    }
    report.emit_json(summary, _out(args, cfg["output"].get("json", "heat.json")))
    return EXIT_OK


def cmd_nodal(args, cfg) -> int:
    f = build_field(cfg)
    kw = {"saddle": cfg["params"]["saddle"]} if "saddle" in cfg["params"] and f.grid.dim == 2 else {}
    z = nodal_set(f, **kw)
    if z.dim == 1:
        rows, cols = [{"x": r} for r in z.roots], ["x"]
    else:
        rows = [dict(zip(("x1", "y1", "x2", "y2"), s)) for s in z.segments]
        cols = ["x1", "y1", "x2", "y2"]
    report.emit_csv(rows, _out(args, cfg["output"].get("csv", "nodal.csv")), cols)
    report.emit_svg(z, _out(args, cfg["output"].get("svg", "nodal.svg")))
    report.emit_json(
        {"dim": z.dim, "measure": z.measure, "pieces": z.count},
        _out(args, cfg["output"].get("json", "nodal.json")),
    )
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    p = cfg["params"]
    which = args.theorem
    if which == "cor1":
        if cfg["field"]["type"] != "eigen_sum":
            raise ConfigError("verify cor1 needs an eigen_sum field")
        g = cfg["grid"]
        grid = TorusGrid(g["dim"], g["N"])
        r = verify_cor1(grid, _eigen_terms(grid, cfg["field"]["terms"]), p.get("eps", 0.1))
    elif which == "thm1":
        r = verify_thm1(build_field(cfg), p.get("c", 1e-2))
    else:
        r = verify_thm2(build_field(cfg), p.get("c_reg", 2.5), p.get("c", 1e-2), strict=p.get("strict", False))
    report.emit_json(json.loads(r.to_json()), _out(args, cfg["output"].get("json", f"{which}.json")))
    report.emit_csv([r.to_row()], _out(args, cfg["output"].get("csv", f"{which}.csv")), list(r.to_row()))
    return EXIT_OK


def _plot_value(row, key):
    if key.startswith("point."):
        return json.loads(row["point"]).get(key[6:])
    if key.startswith("params."):
        return json.loads(row["params"]).get(key[7:])
    return row[key]


def sweep_plot(name: str, rows) -> dict:
    xk, yk, gk, xl, yl = PLOTS[name]
    series = {}
    for r in rows:
        if r["error"]:
            continue
        label = str(_plot_value(r, gk))
        xs, ys = series.setdefault(label, ([], []))
        xs.append(_plot_value(r, xk))
        ys.append(_plot_value(r, yk))
    return {"obj": {k: series[k] for k in sorted(series)}, "xlabel": xl, "ylabel": yl, "title": name}


def cmd_sweep(args, cfg) -> int:
    rows, summary = run_sweep(cfg)
    out = cfg["output"]
    report.emit_csv(rows, _out(args, out["csv"]), ROW_COLUMNS)
    report.emit_json({"config": cfg, "summary": summary}, _out(args, out["json"]))
    plot = sweep_plot(cfg["experiment"], rows)
    report.emit_svg(plot.pop("obj"), _out(args, out.get("svg", f"{cfg['experiment']}.svg")), **plot)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_VIOLATION if summary["violations"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nodalspec", description="Spectral nodal-set experiments on the flat torus.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")

    for name in ("spectrum", "freqscale", "heat", "nodal"):
        common(sub.add_parser(name))
    v = sub.add_parser("verify")
    v.add_argument("theorem", choices=("thm1", "thm2", "cor1"))
    common(v)
    s = sub.add_parser("sweep")
    s.add_argument("experiment", choices=SWEEP_NAMES)
    common(s)
    return ap


COMMANDS = {
    "spectrum": cmd_spectrum,
    "freqscale": cmd_freqscale,
    "heat": cmd_heat,
    "nodal": cmd_nodal,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            cfg = load_sweep_config(args.config, args.experiment)
            return cmd_sweep(args, cfg)
        cfg = load_field_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, GridError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
