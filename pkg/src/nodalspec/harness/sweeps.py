"""Parameter sweeps producing one flat row per (parameter point, seed).

Every experiment emits the columns in :data:`ROW_COLUMNS`:

``experiment_id``
    experiment name.
``point``
    JSON object of the parameter point (keys sorted).
``seed``
    seed, empty for deterministic points.
``theorem_id`` .. ``hypothesis_pass``
    the :class:`~nodalspec.bounds.BoundReport` fields. For experiments that
    are not bound checks, ``measured_measure`` and ``rhs_value`` hold the
    two sides of the checked inequality (see each ``run_*`` docstring).
``violation``
    whether an asserted property failed at this point.
``error``
    ``Type: message`` when the point raised; the sweep continues.
``params``
    JSON object of experiment-specific diagnostics.
``wall_time_ms``
    empty unless timing is enabled, so that files stay byte-identical.

Rows are ordered lexicographically by parameter point, then seed.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np

from ..bounds import (
    REPORT_COLUMNS,
    BoundReport,
    thm1_rhs,
    thm2_rhs,
    verify_cor1,
    verify_thm1,
    verify_thm2,
    smoothed_nodal_measure,
    geometric_times,
)
from ..diagnostics import (
    b_cube_radii,
    classify_cubes,
    davies_gaffney_check,
    davies_gaffney_function_check,
    decay_time,
    natural_time,
    proof_cn,
    separated_count,
    snap_delta,
)
from ..grid import Field, TorusGrid
from ..nodal import nodal_set
from ..spectral import decompose, frequency_scale, heat_evolve, norm_l1, norm_linf
from .config import seed_list
from .generators import cosine_field, gen_dirac_field, gen_highpass
from .rng import stream

ROW_COLUMNS = (
    ("experiment_id", "point", "seed")
    + tuple(c for c in REPORT_COLUMNS if c != "params")
    + ("violation", "error", "params", "wall_time_ms")
)

DIRAC_NOTE = "points on a seeded jittered lattice; the heuristic's well-spaced configuration is not constructed"


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_plain)


def _plain(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (np.ndarray, tuple)):
        return list(np.asarray(x).tolist())
    raise TypeError(f"not serializable: {type(x).__name__}")


def _row(experiment, point, seed, report: BoundReport | None = None, violation=False, params=None, **cols):
    row = dict.fromkeys(ROW_COLUMNS)
    row.update(experiment_id=experiment, point=_dumps(point), seed=seed, violation=bool(violation))
    merged = {}
    if report is not None:
        data = report.to_row()
        merged.update(report.params)
        row.update({k: v for k, v in data.items() if k != "params"})
    merged.update(params or {})
    row.update(cols)
    row["params"] = _dumps(merged)
    return row


def _guarded(experiment, point, seed, timing, fn):
    """Run one sweep point; exceptions become an error row."""
    start = time.perf_counter()
    try:
        rows = fn()
    except Exception as e:  # a failing point is recorded, never fatal
        rows = [_row(experiment, point, seed, error=f"{type(e).__name__}: {e}")]
    if timing:
        ms = (time.perf_counter() - start) * 1e3 / len(rows)
        for r in rows:
            r["wall_time_ms"] = ms
    return rows


def _grid(config) -> TorusGrid:
    return TorusGrid(config["grid"]["dim"], config["grid"]["N"])


def _timing(config) -> bool:
    return bool(config.get("output", {}).get("record_timing", False))


def run_sharpness_sweep(config) -> list[dict]:
    """``cos(2 pi k x_1)`` for each ``k``: one Thm1 and one Thm2 row.

    Violations: Thm1 ratio below 1, or the expansion hypothesis failing.
    """
    grid, p = _grid(config), config["params"]
    rows = []
    for k in sorted(p["k_list"]):

        def point(k=k):
            f = cosine_field(grid, k)
            r1 = verify_thm1(f, p["c"])
            r2 = verify_thm2(f, p["c_reg"], p["c"])
            extra = {"ratio_over_log_lam": r1.ratio / math.log(r1.lam), "k": k}
            return [
                _row("sharpness", {"k": k}, None, r1, violation=r1.ratio < 1, params=extra),
                _row("sharpness", {"k": k}, None, r2, violation=not r2.hypothesis_pass, params={"k": k}),
            ]

        rows += _guarded("sharpness", {"k": k}, None, _timing(config), point)
    return rows


def run_thm2_sweep(config) -> list[dict]:
    """Thm2 rows for the cosine family; violation when the hypothesis fails."""
    grid, p = _grid(config), config["params"]
    rows = []
    for k in sorted(p["k_list"]):

        def point(k=k):
            r = verify_thm2(cosine_field(grid, k), p["c_reg"], p["c"])
            return [_row("thm2", {"k": k}, None, r, violation=not r.hypothesis_pass)]

        rows += _guarded("thm2", {"k": k}, None, _timing(config), point)
    return rows


def run_sturm_sweep(config) -> list[dict]:
    """High-pass fields orthogonal to frequencies ``<= n`` on the circle.

    ``measured_measure`` is the sign-change count and ``rhs_value`` is
    ``2n + 2``; a smaller count is a violation. Frequencies are drawn from
    ``n < |m| <= 2n + extra_modes``.
    """
    grid, p = _grid(config), config["params"]
    if grid.dim != 1:
        raise ValueError("the root-count sweep runs on the circle")
    rows = []
    for n in sorted(p["n_list"]):
        for seed in seed_list(p["seeds"]):

            def point(n=n, seed=seed):
                n_max = min(2 * n + p["extra_modes"], grid.N // 4)
                f = gen_highpass(seed, n, n_max, grid, "sturm", n)
                count = nodal_set(f).measure
                fs = frequency_scale(f)
                bound = 2 * n + 2
                return [
                    _row(
                        "sturm", {"n": n}, seed, violation=count < bound,
                        theorem_id="Sturm", measured_measure=count, rhs_value=float(bound),
                        ratio=count / bound, lam=fs.lam, l1=norm_l1(f), linf=norm_linf(f),
                        c_used=fs.c_used,
                        params={"n_max": n_max, "count_over_sqrt_lam": count / math.sqrt(fs.lam)},
                    )
                ]

            rows += _guarded("sturm", {"n": n}, seed, _timing(config), point)
    return rows


def _dirac_points(p) -> list[tuple[int, float]]:
    pts = {(int(n), float(p["r_ref"])) for n in p["n_list"]}
    pts |= {(int(p["n_ref"]), float(r)) for r in p["r_list"]}
    return sorted(pts)


def run_dirac_sweep(config) -> list[dict]:
    """Smoothed point-mass fields ``-n + exp(t Laplacian) sum delta``.

    Points are ``n in n_list`` at ``r = r_ref`` together with ``r in r_list``
    at ``n = n_ref``. Points share a seed's lattice draw across ``r``.
    ``rhs_value`` is the Thm2 bound for reference; nothing is asserted per row.
    """
    grid, p = _grid(config), config["params"]
    rows = []
    for n, r in _dirac_points(p):
        for seed in seed_list(p["seeds"]):

            def point(n=n, r=r, seed=seed):
                f = gen_dirac_field(n, r, seed, grid, p["jitter"], index=n)
                l1, linf = norm_l1(f), norm_linf(f)
                fs = frequency_scale(f)
                measured = nodal_set(f).measure
                rhs = thm2_rhs(l1, linf, fs.lam)
                return [
                    _row(
                        "dirac", {"n": n, "r": r}, seed,
                        theorem_id="Dirac", measured_measure=measured, rhs_value=rhs,
                        ratio=measured / rhs, lam=fs.lam, l1=l1, linf=linf, c_used=fs.c_used,
                        params={"n": n, "r": r, "t": r * r * n ** (-2 / grid.dim),
                                "jitter": p["jitter"], "mean": f.mean(), "construction": DIRAC_NOTE},
                    )
                ]

            rows += _guarded("dirac", {"n": n, "r": r}, seed, _timing(config), point)
    return rows


def _loglog_slope(x, y) -> float:
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(x, y, 1)[0])


def dirac_slopes(rows, n_ref: int, r_ref: float) -> dict:
    """Log-log slopes of seed-averaged nodal measure vs ``n`` (at ``r_ref``)
    and of sup norm vs ``r`` (at ``n_ref``)."""
    ok = [r for r in rows if not r["error"]]
    by_n, by_r = {}, {}
    for r in ok:
        pt = json.loads(r["point"])
        if pt["r"] == r_ref:
            by_n.setdefault(pt["n"], []).append(r["measured_measure"])
        if pt["n"] == n_ref:
            by_r.setdefault(pt["r"], []).append(r["linf"])
    out = {}
    if len(by_n) >= 2:
        ns = sorted(by_n)
        out["nodal_vs_n"] = _loglog_slope(ns, [np.mean(by_n[n]) for n in ns])
    if len(by_r) >= 2:
        rs = sorted(by_r)
        out["linf_vs_r"] = _loglog_slope(rs, [np.mean(by_r[r]) for r in rs])
    return out


def lowest_level_eigenvalue(f: Field) -> float:
    """Eigenvalue of the lowest nonzero level carrying spectral mass."""
    levels, e = decompose(f).level_spectrum()
    nz = np.flatnonzero((levels > 0) & (e > 1e-24 * e.sum()))
    if nz.size == 0:
        raise ValueError("field has no non-constant spectral mass")
    return 4 * math.pi**2 * float(levels[nz[0]])


def run_cubes(config) -> list[dict]:
    """Cube partition of seeded high-pass fields.

    The time is the L2-chain decay time at which the global premise
    ``|e^{tD} f|_1 <= (c_n/10^4)|f|_1`` is expected, with ``delta = sqrt(t)``
    snapped to a dyadic cube side. ``measured_measure`` is the C-cube mass
    and ``rhs_value`` is ``|f|_1 / 100``; ``hypothesis_pass`` records the
    premise and a violation is the premise holding without the C-mass bound.
    """
    grid, p = _grid(config), config["params"]
    c_n = proof_cn(grid.dim, p["proof_faithful"])
    rows = []
    for seed in seed_list(p["seeds"]):

        def point(seed=seed):
            f = gen_highpass(seed, p["n_cut"], p["n_max"], grid, "cubes")
            lam = lowest_level_eigenvalue(f)
            t = decay_time(f, lam, c_n / 1e4)
            delta, side = snap_delta(math.sqrt(t), grid)
            part = classify_cubes(f, t, delta, c_n)
            l1 = part.l1
            t_nat = natural_time(lam, l1)
            extra = {
                "t": t,
                "t_natural": t_nat,
                "K_equiv": t / t_nat,
                "natural_decay_ratio": norm_l1(heat_evolve(f, t_nat)) / l1,
                "delta_raw": math.sqrt(t),
                "delta": delta,
                "counts": part.counts,
                "beta": part.beta,
                "heat_l1_ratio": part.heat_l1 / l1,
                "c_n": c_n,
            }
            if p["radii"] and part.counts["B"]:
                radii = b_cube_radii(f, part)
                r_scale = delta * math.sqrt(math.log(1 / delta))
                extra["b_radius_median"] = float(np.nanmedian(radii)) if np.any(np.isfinite(radii)) else None
                extra["b_radius_max"] = float(np.nanmax(radii)) if np.any(np.isfinite(radii)) else None
                extra["separated_count"] = separated_count(part, r_scale)
                extra["separation_r"] = r_scale
            return [
                _row(
                    "cubes", {"seed": seed}, seed,
                    violation=part.premise_holds and not part.c_mass_holds,
                    theorem_id="CubePartition", measured_measure=part.c_mass, rhs_value=l1 / 100,
                    ratio=part.c_mass / (l1 / 100), lam=lam, l1=l1, linf=norm_linf(f), c_used=c_n,
                    hypothesis_pass=part.premise_holds, params=extra,
                )
            ]

        rows += _guarded("cubes", {"seed": seed}, seed, _timing(config), point)
    return rows


def _random_box(rng, grid: TorusGrid) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    N = grid.N
    for ax in range(grid.dim):
        length = int(rng.integers(2, max(3, int(0.3 * N)) + 1))
        start = int(rng.integers(0, N))
        sel = np.zeros(N, dtype=bool)
        sel[np.arange(start, start + length) % N] = True
        shape = [1] * grid.dim
        shape[ax] = N
        mask &= sel.reshape(shape)
    return mask


def random_disjoint_masks(grid: TorusGrid, seed: int, index: int, tries: int = 1000):
    """Two disjoint random (periodic) boxes drawn from the ``(seed, index)`` stream."""
    rng = stream("davies_gaffney", seed, index)
    for _ in range(tries):
        a, b = _random_box(rng, grid), _random_box(rng, grid)
        if not np.any(a & b):
            return a, b, rng
    raise RuntimeError("could not draw disjoint boxes")


def run_dg(config) -> list[dict]:
    """Davies-Gaffney on random disjoint box pairs for each ``t``.

    Each pair is checked in set form (``measured_measure`` = double
    integral, ``rhs_value`` = its bound) and in function form with
    standard-normal values on the two boxes; either failing is a violation.
    """
    grid, p = _grid(config), config["params"]
    rows = []
    for t in sorted(p["t_list"]):
        for pair in range(p["pairs"]):

            def point(t=t, pair=pair):
                a, b, rng = random_disjoint_masks(grid, p["seed"], pair)
                res = davies_gaffney_check(a, b, t, grid)
                f1 = Field(grid, np.where(a, rng.standard_normal(grid.shape), 0.0))
                f2 = Field(grid, np.where(b, rng.standard_normal(grid.shape), 0.0))
                fres = davies_gaffney_function_check(f1, f2, t)
                ok = res.passed and fres.passed
                return [
                    _row(
                        "davies_gaffney", {"t": t, "pair": pair}, p["seed"], violation=not ok,
                        theorem_id="DaviesGaffney", measured_measure=res.lhs, rhs_value=res.rhs,
                        ratio=res.lhs / res.rhs if res.rhs > 0 else math.inf, hypothesis_pass=ok,
                        params={"distance": res.distance, "vol_a": float(a.mean()), "vol_b": float(b.mean()),
                                "function_lhs": fres.lhs, "function_rhs": fres.rhs, "t": t,
                                "method": res.method, "function_method": fres.method},
                    )
                ]

            rows += _guarded("davies_gaffney", {"t": t, "pair": pair}, p["seed"], _timing(config), point)
    return rows


def random_eigen_terms(grid: TorusGrid, seed: int, count: int, m_max: int):
    """``count`` terms ``(a, m, kind)`` with distinct nonzero wavevectors up to sign."""
    rng = stream("cor1", seed)
    seen, terms = set(), []
    while len(terms) < count:
        m = tuple(int(v) for v in rng.integers(-m_max, m_max + 1, size=grid.dim))
        if not any(m):
            continue
        lead = next(v for v in m if v)
        canon = m if lead > 0 else tuple(-v for v in m)
        if canon in seen:
            continue
        seen.add(canon)
        kind = "cos" if rng.integers(0, 2) == 0 else "sin"
        terms.append((float(rng.standard_normal()), canon, kind))
    return terms


def run_cor1(config) -> list[dict]:
    """Seeded eigenfunction combinations against the corollary's bound.

    Violations: the chain ``sum a^2 <= |f|_1 |f|_inf`` failing beyond 1e-9,
    or the measured nodal measure falling below the bound.
    """
    grid, p = _grid(config), config["params"]
    rows = []
    for seed in seed_list(p["seeds"]):

        def point(seed=seed):
            terms = random_eigen_terms(grid, seed, p["terms"], p["m_max"])
            r = verify_cor1(grid, terms, p["eps"])
            bad = not r.params["chain_holds"] or r.measured_measure < r.rhs_value
            extra = {"terms": [[a, list(m), k] for a, m, k in terms]}
            return [_row("cor1", {"seed": seed}, seed, r, violation=bad, params=extra)]

        rows += _guarded("cor1", {"seed": seed}, seed, _timing(config), point)
    return rows


def run_smoothed(config) -> list[dict]:
    """Nodal measure of ``exp(t Laplacian) f`` along ``t0 2^-j``.

    ``measured_measure`` is the minimum over the time list (the lim inf
    proxy) and ``rhs_value`` the Thm1 bound of ``f``; nothing is asserted.
    """
    grid, p = _grid(config), config["params"]
    rows = []
    for seed in seed_list(p["seeds"]):

        def point(seed=seed):
            f = gen_highpass(seed, p["n_cut"], p["n_max"], grid, "smoothed")
            series, low = smoothed_nodal_measure(f, geometric_times(p["t0"], p["J"]))
            fs = frequency_scale(f)
            l1, linf = norm_l1(f), norm_linf(f)
            rhs = thm1_rhs(l1, linf, fs.lam, grid.dim)
            return [
                _row(
                    "smoothed", {"seed": seed}, seed,
                    theorem_id="Smoothed", measured_measure=low, rhs_value=rhs, ratio=low / rhs,
                    lam=fs.lam, l1=l1, linf=linf, c_used=fs.c_used,
                    params={"series": series, "measure_t0": nodal_set(f).measure},
                )
            ]

        rows += _guarded("smoothed", {"seed": seed}, seed, _timing(config), point)
    return rows


SWEEPS = {
    "sharpness": run_sharpness_sweep,
    "thm2": run_thm2_sweep,
    "sturm": run_sturm_sweep,
    "dirac": run_dirac_sweep,
    "cubes": run_cubes,
    "davies_gaffney": run_dg,
    "cor1": run_cor1,
    "smoothed": run_smoothed,
}


def summarize(config, rows) -> dict:
    """Counts plus experiment-level statistics for the JSON report."""
    name = config["experiment"]
    ok = [r for r in rows if not r["error"]]
    out = {
        "experiment": name,
        "rows": len(rows),
        "errors": len(rows) - len(ok),
        "violations": sum(bool(r["violation"]) for r in rows),
    }
    if name == "sharpness":
        t1 = [json.loads(r["params"])["ratio_over_log_lam"] for r in ok if r["theorem_id"] == "Thm1"]
        t2 = [r["ratio"] for r in ok if r["theorem_id"] == "Thm2"]
        if t1:
            out["thm1_ratio_over_log_lam_band"] = max(t1) / min(t1)
        if t2:
            out["thm2_ratio_band"] = max(t2) / min(t2)
    elif name == "dirac":
        p = config["params"]
        out.update(dirac_slopes(rows, p["n_ref"], p["r_ref"]))
        out["construction"] = DIRAC_NOTE
    elif name == "cubes":
        betas = [json.loads(r["params"])["beta"] for r in ok]
        if betas:
            out["beta_min"], out["beta_max"] = min(betas), max(betas)
    return out


def run_sweep(config) -> tuple[list[dict], dict]:
    rows = SWEEPS[config["experiment"]](config)
    return rows, summarize(config, rows)
