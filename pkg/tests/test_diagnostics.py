import math

import numpy as np
import pytest

from nodalspec.diagnostics import (
    PartitionError,
    b_cube_radii,
    classify_cubes,
    cn_closed_form,
    davies_gaffney_check,
    davies_gaffney_function_check,
    decay_time,
    estimate_cn,
    gaussian_bound_fit,
    natural_time,
    proof_cn,
    separated_count,
    snap_delta,
    thm2_regions,
    wrapped_cube_mass,
)
from nodalspec.grid import Field, TorusGrid
from nodalspec.harness.generators import cosine_field, gen_highpass
from nodalspec.harness.sweeps import random_disjoint_masks
from nodalspec.spectral import frequency_scale, heat_evolve, norm_l1
from tests.frozen import (
    CN_CENTER_SQRT_2T,
    CN_CENTER_SQRT_T,
    CN_CORNER_SQRT_2T,
    CN_CORNER_SQRT_T,
    DG_INTERVALS_LHS,
    DG_INTERVALS_RHS,
    PHI1_MINUS_HALF,
)


def test_natural_time_examples():
    assert natural_time(100.0, 1.0) == pytest.approx(0.01, rel=1e-15)
    assert natural_time(100.0, math.exp(-4)) == pytest.approx(0.05, rel=1e-15)
    assert natural_time(100.0, 1.0, K=3.0) == pytest.approx(0.03, rel=1e-15)
    with pytest.raises(ValueError):
        natural_time(0.0, 0.5)


def test_natural_time_gives_partial_decay_on_highpass_fields():
    g = TorusGrid(1, 1024)
    for seed in range(20):
        f = gen_highpass(seed, 5, 10, g)
        lam = frequency_scale(f).lam
        t = natural_time(lam, norm_l1(f))
        ratio = norm_l1(heat_evolve(f, t)) / norm_l1(f)
        assert 0 < ratio < 1


def test_decay_time_reaches_target():
    g = TorusGrid(2, 128)
    f = gen_highpass(3, 4, 8, g)
    lam = frequency_scale(f).lam
    t = decay_time(f, lam, 1e-3)
    assert norm_l1(heat_evolve(f, t)) <= 1e-3 * norm_l1(f)
    with pytest.raises(ValueError):
        decay_time(cosine_field(g, 1) + cosine_field(g, 5) * 0.01, 4 * math.pi**2 * 25, 1e-3)


def test_snap_delta():
    g = TorusGrid(2, 512)
    assert snap_delta(0.06, g) == (0.0625, 32)
    assert snap_delta(1e-9, g) == (1 / 512, 1)
    assert snap_delta(3.0, g) == (1.0, 512)


def test_constant_field_is_all_c():
    g = TorusGrid(2, 64)
    p = classify_cubes(Field(g, np.ones(g.shape)), 0.01, 1 / 8, proof_cn(2))
    assert p.counts == {"A": 0, "B": 0, "C": 64}
    assert p.n_cubes == 64 and p.delta**2 * p.n_cubes == 1.0


def test_partition_counts_and_masses():
    g = TorusGrid(2, 128)
    f = gen_highpass(1, 3, 8, g)
    p = classify_cubes(f, 1e-3, 1 / 16, proof_cn(2))
    assert sum(p.counts.values()) == p.n_cubes == 256
    assert p.mass_f.sum() == pytest.approx(norm_l1(f), rel=1e-12)
    rows = list(p.rows())
    assert len(rows) == 256 and {r["label"] for r in rows} <= {"A", "B", "C"}
    # labels follow the definitions from the stored integrals
    c = p.mass_heat >= p.c_n / 100 * p.mass_f
    b = ~c & (p.mass_f / p.delta**2 > 0.5 * p.l1)
    assert np.array_equal(p.labels == 2, c) and np.array_equal(p.labels == 1, b)


@pytest.mark.parametrize("delta", [0.1, 3 / 128, 0.0])
def test_partition_rejects_misaligned_delta(delta):
    with pytest.raises(PartitionError):
        classify_cubes(cosine_field(TorusGrid(2, 128), 2), 1e-3, delta, 0.1)


def test_cosine_family_b_count_scales_with_cube_count():
    cn = proof_cn(2)
    betas = []
    for k in (8, 16, 32):
        f = cosine_field(TorusGrid(2, 512), k)
        lam = 4 * math.pi**2 * k * k
        t = decay_time(f, lam, cn / 1e4)
        delta, _ = snap_delta(math.sqrt(t), f.grid)
        p = classify_cubes(f, t, delta, cn)
        assert p.premise_holds and p.c_mass_holds
        betas.append(p.beta)
    assert min(betas) > 0 and max(betas) / min(betas) < 2


def test_premise_implies_c_mass_bound():
    g = TorusGrid(2, 256)
    cn = proof_cn(2)
    for seed in range(5):
        f = gen_highpass(seed, 5, 10, g)
        lam = frequency_scale(f).lam
        t = decay_time(f, lam, cn / 1e4)
        delta, _ = snap_delta(math.sqrt(t), g)
        p = classify_cubes(f, t, delta, cn)
        assert p.premise_holds and p.c_mass_holds
        radii = b_cube_radii(f, p)
        assert len(radii) == p.counts["B"] and np.all(radii[np.isfinite(radii)] >= 0)
        assert 1 <= separated_count(p, 0.0) == p.counts["B"]
        assert separated_count(p, 0.25) <= separated_count(p, 0.1)


def test_cn_constants():
    assert cn_closed_form(1) == pytest.approx(PHI1_MINUS_HALF, rel=1e-14)
    assert cn_closed_form(2) == pytest.approx(PHI1_MINUS_HALF**2, rel=1e-14)
    assert proof_cn(2) == cn_closed_form(2)
    assert proof_cn(2, proof_faithful=True) == 1e-4


def test_estimate_cn_one_dimension():
    g = TorusGrid(1, 1024)
    e = estimate_cn(g, 1 / 256)
    assert e.delta == 1 / 16 and e.argmin == (0.0,)
    assert e.value == pytest.approx(CN_CORNER_SQRT_T, rel=2e-2)
    assert e.center_value == pytest.approx(CN_CENTER_SQRT_T, rel=2e-2)
    # at delta = sqrt(2t) the corner mass equals the standard-normal value
    e2 = estimate_cn(g, 1 / 512, 1 / 16)
    assert e2.value == pytest.approx(CN_CORNER_SQRT_2T, rel=2e-2)
    assert e2.center_value == pytest.approx(CN_CENTER_SQRT_2T, rel=2e-2)
    assert e2.center_value > e2.value
    assert 0 < e.value < 1 and 0 < e2.value < 1


def test_estimate_cn_matches_image_sum():
    g = TorusGrid(1, 512)
    for t in (1e-3, 1 / 256, 1e-2):
        e = estimate_cn(g, t)
        assert e.value == pytest.approx(wrapped_cube_mass([0.0], t, e.delta), rel=1e-6)


def test_estimate_cn_two_dimensions_is_product():
    one = estimate_cn(TorusGrid(1, 256), 1 / 256)
    two = estimate_cn(TorusGrid(2, 256), 1 / 256)
    assert two.value == pytest.approx(one.value**2, rel=3e-2)
    assert two.argmin == (0.0, 0.0)


def test_estimate_cn_rejects_unresolved():
    with pytest.raises(ValueError):
        estimate_cn(TorusGrid(1, 16), 1e-4)


def test_gaussian_fit_small_t():
    fit = gaussian_bound_fit(TorusGrid(1, 1024), 1e-3)
    assert fit.c1_fit == pytest.approx((4 * math.pi) ** -0.5, rel=1e-6)
    assert fit.c2_fit == pytest.approx(0.25, rel=1e-3)
    assert fit.c2_fit >= 0.2 and fit.c2_tail >= 0.2
    assert fit.min_slack >= 0 and not fit.degenerate


@pytest.mark.parametrize("t", [0.3, 0.9])
def test_gaussian_fit_flat_kernel_degenerates(t):
    fit = gaussian_bound_fit(TorusGrid(1, 64), t)
    assert fit.degenerate and fit.min_slack >= 0 and fit.c2_fit >= 0


def test_gaussian_fit_two_dimensions():
    fit = gaussian_bound_fit(TorusGrid(2, 256), 1e-3)
    assert fit.c1_fit == pytest.approx(1 / (4 * math.pi), rel=1e-6)
    assert fit.c2_fit >= 0.2 and fit.min_slack >= 0


def test_davies_gaffney_intervals():
    g = TorusGrid(1, 4096)
    x = g.axis()
    r = davies_gaffney_check((x >= 0) & (x < 0.1), (x >= 0.5) & (x < 0.6), 0.005, g)
    assert r.passed
    assert r.distance == pytest.approx(0.4, abs=g.spacing)
    # the grid masks are the intervals up to one cell at each end
    assert r.lhs == pytest.approx(DG_INTERVALS_LHS, rel=1e-2)
    assert r.rhs == pytest.approx(DG_INTERVALS_RHS, rel=1e-2)


def test_davies_gaffney_adjacent_sets():
    g = TorusGrid(1, 256)
    x = g.axis()
    r = davies_gaffney_check(x < 0.5, x >= 0.5, 0.01, g)
    assert r.distance == pytest.approx(g.spacing)
    assert r.passed and r.rhs == pytest.approx(0.5 * math.exp(-(g.spacing**2) / 0.04))


def test_davies_gaffney_rejects_overlap():
    g = TorusGrid(1, 64)
    m = np.zeros(64, bool)
    m[3] = True
    with pytest.raises(ValueError):
        davies_gaffney_check(m, m, 0.01, g)


def test_davies_gaffney_tiny_values_use_direct_sum():
    g = TorusGrid(2, 64)
    a = np.zeros(g.shape, bool)
    b = np.zeros(g.shape, bool)
    a[:4, :4] = True
    b[32:36, 32:36] = True
    r = davies_gaffney_check(a, b, 1e-3, g)
    assert r.method == "direct" and r.passed and 0 < r.lhs <= r.rhs


@pytest.mark.parametrize("dim,N", [(1, 512), (2, 64)])
def test_davies_gaffney_function_form(dim, N):
    g = TorusGrid(dim, N)
    for seed in range(50):
        a, b, rng = random_disjoint_masks(g, seed, 0)
        f1 = Field(g, np.where(a, rng.standard_normal(g.shape), 0.0))
        f2 = Field(g, np.where(b, rng.standard_normal(g.shape), 0.0))
        for t in (1e-3, 1e-2):
            assert davies_gaffney_function_check(f1, f2, t).passed


def test_thm2_regions_cosine():
    f = cosine_field(TorusGrid(2, 512), 4)
    r = thm2_regions(f, 0.02, 1e-3)
    assert r.volumes["B"] + r.volumes["C"] == pytest.approx(0.32, rel=3e-2)
    assert r.tube_volume == pytest.approx(0.32, rel=3e-2)
    assert r.masses["A"] == pytest.approx(r.masses["D"], rel=1e-2)
    assert r.total() == pytest.approx(norm_l1(f), abs=1e-10)
    assert r.mean_free and min(r.masses.values()) >= 0
    assert r.masses["B"] <= r.volumes["B"] <= r.tube_volume
    assert len(list(r.rows())) == 4


def test_thm2_regions_needs_zero_set():
    g = TorusGrid(2, 32)
    with pytest.raises(ValueError):
        thm2_regions(Field(g, np.ones(g.shape)), 0.05, 1e-3)
