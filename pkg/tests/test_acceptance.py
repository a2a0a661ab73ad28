"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantities and the runtime, then asserts. Run with ``pytest -s`` (or look at
the ``-v`` output) to see the lines.
"""

import json
import math
import time

import numpy as np
import pytest

from nodalspec.diagnostics import estimate_cn
from nodalspec.grid import Field, TorusGrid
from nodalspec.harness.cli import main
from nodalspec.harness.config import load_sweep_config
from nodalspec.harness.generators import cosine_field
from nodalspec.harness.sweeps import run_sweep
from nodalspec.nodal import distance_transform, nodal_set, tube_volume
from nodalspec.spectral import (
    decompose,
    heat_evolve,
    heat_kernel_row,
    norm_l2,
    norm_linf,
    reconstruct,
)
from tests.frozen import (
    CN_CORNER_SQRT_2T,
    CN_CORNER_SQRT_T,
    DIAG_TUBE_NO_OVERLAP,
    DIAG_TUBE_WITH_OVERLAP,
)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    start = time.perf_counter()

    def emit(n, ok, limit_s, detail):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < limit_s
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s < {limit_s}s) {detail}")
        return ok

    return emit


def sweep(experiment, **overrides):
    return run_sweep(load_sweep_config({"experiment": experiment, **overrides}))


def test_criterion_01_spectral_core(verdict):
    worst = {"round_trip": 0.0, "parseval": 0.0, "semigroup": 0.0, "mass": 0.0, "max_principle": 0.0}
    for dim in (1, 2):
        for N in (64, 256):
            g = TorusGrid(dim, N)
            for seed in range(200):
                f = Field(g, np.random.default_rng(seed).standard_normal(g.shape) + 0.1)
                linf = norm_linf(f)
                worst["round_trip"] = max(
                    worst["round_trip"], np.max(np.abs(reconstruct(decompose(f)).values - f.values)) / linf
                )
                l2sq = norm_l2(f) ** 2
                worst["parseval"] = max(worst["parseval"], abs(decompose(f).energy() - l2sq) / l2sq)
                a = heat_evolve(f, 1e-4)
                b = heat_evolve(f, 1e-2)
                both = heat_evolve(f, 1e-4 + 1e-2)
                worst["semigroup"] = max(
                    worst["semigroup"],
                    np.max(np.abs(heat_evolve(a, 1e-2).values - both.values)),
                    np.max(np.abs(heat_evolve(b, 1e-4).values - both.values)),
                )
                worst["mass"] = max(worst["mass"], abs(b.mean() - f.mean()), abs(a.mean() - f.mean()))
                worst["max_principle"] = max(worst["max_principle"], norm_linf(b) / linf - 1)
    ok = (
        worst["round_trip"] <= 1e-12
        and worst["parseval"] <= 1e-10
        and worst["semigroup"] <= 1e-10
        and worst["mass"] <= 1e-12
        and worst["max_principle"] <= 1e-9
    )
    assert verdict(1, ok, 30, {k: f"{v:.2e}" for k, v in worst.items()})


def test_criterion_02_sharpness(verdict):
    rows, _ = sweep("sharpness")
    thm1 = [r for r in rows if r["theorem_id"] == "Thm1"]
    ks = [json.loads(r["point"])["k"] for r in thm1]
    length_err = max(abs(r["measured_measure"] - 2 * k) / (2 * k) for r, k in zip(thm1, ks))
    lam_exact = all(r["lam"] == 4 * math.pi**2 * k * k for r, k in zip(thm1, ks))
    ratios = [r["ratio"] for r in thm1]
    ok = (
        ks == [4, 8, 16, 32]
        and length_err <= 1e-2
        and lam_exact
        and min(ratios) >= 1
        and all(b >= a for a, b in zip(ratios, ratios[1:]))
    )
    assert verdict(2, ok, 120, f"length_err={length_err:.2e} lam_exact={lam_exact} ratios={[round(x, 3) for x in ratios]}")


def test_criterion_03_sturm(verdict):
    rows, summary = sweep("sturm")
    bad = sum(r["measured_measure"] < 2 * json.loads(r["point"])["n"] + 2 for r in rows if not r["error"])
    ok = len(rows) == 3200 and summary["errors"] == 0 and bad == 0
    assert verdict(3, ok, 60, f"rows={len(rows)} errors={summary['errors']} violations={bad}")


def test_criterion_04_davies_gaffney(verdict):
    detail = {}
    ok = True
    for dim in (1, 2):
        rows, summary = sweep("davies_gaffney", grid={"dim": dim})
        fails = sum(r["measured_measure"] > r["rhs_value"] * (1 + 1e-6) for r in rows)
        detail[f"d{dim}"] = f"rows={len(rows)} fails={fails} violations={summary['violations']}"
        ok &= len(rows) == 400 and fails == 0 and summary["violations"] == 0 and summary["errors"] == 0
    assert verdict(4, ok, 120, detail)


def test_criterion_05_heat_kernel_and_cn(verdict):
    g = TorusGrid(1, 8192)
    z = g.axis()
    kernel_err = 0.0
    for t in (1e-3, 1e-2):
        spectral = heat_kernel_row((0,), t, g).values
        zz = np.minimum(z, 1 - z)
        j = np.arange(-10, 11)
        images = np.exp(-((zz[:, None] + j) ** 2) / (4 * t)).sum(axis=1) / math.sqrt(4 * math.pi * t)
        kernel_err = max(kernel_err, np.max(np.abs(spectral - images)) / np.max(images))
    one = estimate_cn(TorusGrid(1, 1024), 1 / 256)
    one_2t = estimate_cn(TorusGrid(1, 1024), 1 / 512, 1 / 16)
    two = estimate_cn(TorusGrid(2, 256), 1 / 256)
    e1 = abs(one.value - CN_CORNER_SQRT_T) / CN_CORNER_SQRT_T
    e1b = abs(one_2t.value - CN_CORNER_SQRT_2T) / CN_CORNER_SQRT_2T
    e2 = abs(two.value - CN_CORNER_SQRT_T**2) / CN_CORNER_SQRT_T**2
    ok = kernel_err <= 1e-6 and e1 <= 0.02 and e1b <= 0.02 and e2 <= 0.03
    detail = (
        f"kernel_rel_err={kernel_err:.2e} cn1(delta=sqrt t)={one.value:.4f} "
        f"cn1(delta=sqrt 2t)={one_2t.value:.4f} cn2={two.value:.4f} errs={e1:.1e},{e1b:.1e},{e2:.1e}"
    )
    assert verdict(5, ok, 30, detail)


def test_criterion_06_thm2_pipeline(verdict):
    rows, _ = sweep("thm2", params={"k_list": [4, 8, 16, 32]})
    fits = [json.loads(r["params"])["c_fit"] for r in rows]
    ratios = [r["ratio"] for r in rows]
    band = max(ratios) / min(ratios)
    ok = (
        len(rows) == 4
        and all(r["hypothesis_pass"] for r in rows)
        and all(1.9 <= c <= 2.1 for c in fits)
        and band <= 2
    )
    assert verdict(6, ok, 120, f"c_fit={[round(c, 4) for c in fits]} ratio_band={band:.3f}")


def test_criterion_07_tube_volumes(verdict):
    f = cosine_field(TorusGrid(2, 512), 8)
    cos_tube = tube_volume(distance_transform(nodal_set(f), f.grid), 0.01)
    g = TorusGrid(2, 512)
    diag = Field.from_function(g, lambda x, y: np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y))
    diag_tube = tube_volume(distance_transform(nodal_set(diag), g), 0.02)
    e_cos = abs(cos_tube - 0.32) / 0.32
    e_diag = abs(diag_tube - DIAG_TUBE_NO_OVERLAP) / DIAG_TUBE_NO_OVERLAP
    e_diag_exact = abs(diag_tube - DIAG_TUBE_WITH_OVERLAP) / DIAG_TUBE_WITH_OVERLAP
    ok = e_cos <= 0.03 and e_diag <= 0.03
    detail = f"cos={cos_tube:.5f} (err {e_cos:.1e}) diag={diag_tube:.5f} (err {e_diag:.1e}, vs overlap-corrected {e_diag_exact:.1e})"
    assert verdict(7, ok, 30, detail)


def test_criterion_08_cube_partition(verdict):
    rows, summary = sweep("cubes")
    ok_rows = [r for r in rows if not r["error"]]
    implication = all((not r["hypothesis_pass"]) or r["measured_measure"] <= r["rhs_value"] * (1 + 1e-12) for r in ok_rows)
    premise = sum(bool(r["hypothesis_pass"]) for r in ok_rows)
    betas = [json.loads(r["params"])["beta"] for r in ok_rows]
    ok = (
        len(ok_rows) == 20
        and implication
        and summary["violations"] == 0
        and min(betas) > 0
        and max(betas) / min(betas) <= 2
    )
    detail = f"fields={len(ok_rows)} premise_holds={premise} beta=[{min(betas):.3f}, {max(betas):.3f}]"
    assert verdict(8, ok, 180, detail)


def test_criterion_09_dirac_scalings(verdict):
    rows, summary = sweep("dirac")
    s_n, s_r = summary.get("nodal_vs_n", math.nan), summary.get("linf_vs_r", math.nan)
    ok = summary["errors"] == 0 and abs(s_n - 0.5) <= 0.15 and abs(s_r + 2) <= 0.3
    assert verdict(9, ok, 300, f"nodal_vs_n={s_n:.4f} linf_vs_r={s_r:.4f} rows={len(rows)}")


def test_criterion_10_corollary(verdict):
    rows, _ = sweep("cor1")
    params = [json.loads(r["params"]) for r in rows]
    chain = all(p["chain_holds"] for p in params)
    below = [(r["seed"], round(r["measured_measure"], 3), round(r["rhs_value"], 3)) for r in rows if r["measured_measure"] < r["rhs_value"]]
    ok = len(rows) == 20 and chain and not below
    assert verdict(10, ok, 60, f"chain_holds={chain} below_bound(seed, measured, bound)={below}")


SMALL = {
    "sharpness": {"grid": {"dim": 2, "N": 128}, "params": {"k_list": [2, 4]}},
    "thm2": {"grid": {"dim": 2, "N": 128}, "params": {"k_list": [2, 4]}},
    "sturm": {"grid": {"dim": 1, "N": 1024}, "params": {"n_list": [1, 3], "seeds": 3}},
    "dirac": {"grid": {"dim": 2, "N": 256}, "params": {"n_list": [4, 16], "r_list": [0.1, 0.2], "seeds": 2, "n_ref": 4}},
    "cubes": {"grid": {"dim": 2, "N": 128}, "params": {"seeds": 2, "n_cut": 3, "n_max": 6}},
    "dg": {"grid": {"dim": 2, "N": 64}, "params": {"pairs": 5}},
    "cor1": {"grid": {"dim": 2, "N": 128}, "params": {"seeds": [2, 3]}},
    "smoothed": {"grid": {"dim": 2, "N": 64}, "params": {"seeds": 2, "n_cut": 2, "n_max": 5, "J": 2}},
}


def test_criterion_11_determinism(verdict, tmp_path):
    mismatched = []
    for name, doc in SMALL.items():
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps(doc))
        outs = []
        for run in ("a", "b"):
            out = tmp_path / run / name
            code = main(["sweep", name, "--config", str(cfg), "--out", str(out)])
            outs.append((code, {p.name: p.read_bytes() for p in sorted(out.iterdir())}))
        (c1, f1), (c2, f2) = outs
        if c1 != c2 or f1 != f2 or not any(k.endswith(".csv") for k in f1) or not any(k.endswith(".svg") for k in f1):
            mismatched.append(name)
    ok = not mismatched
    assert verdict(11, ok, 60, f"sweeps={len(SMALL)} mismatched={mismatched}")
