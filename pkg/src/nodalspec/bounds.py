"""Right-hand sides of the nodal-measure lower bounds and measured verdicts.

Every implicit constant is taken to be 1 and logarithms are natural, so a
report carries the ratio ``measured / rhs`` rather than a pass/fail claim.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Field
from .nodal import (
    ResolutionError,
    distance_transform,
    expansion_profile,
    nodal_set,
    thm2_eps_max,
)
from .spectral import (
    Spectrum,
    frequency_scale,
    heat_evolve,
    norm_l1,
    norm_l2,
    norm_linf,
    reconstruct,
)

__all__ = [
    "BoundReport",
    "BoundUndefinedError",
    "REPORT_COLUMNS",
    "thm1_rhs",
    "thm2_rhs",
    "cor1_rhs",
    "energy_ratio",
    "eigen_combination",
    "verify_thm1",
    "verify_thm2",
    "verify_cor1",
    "smoothed_nodal_measure",
    "geometric_times",
]

TORUS_EIGENFUNCTION_LINF = math.sqrt(2.0)


class BoundUndefinedError(ValueError):
    """Bound formula evaluated outside its domain (e.g. ``lambda <= 1``)."""


# CSV column order of a serialized BoundReport; params follow as JSON.
REPORT_COLUMNS = (
    "theorem_id",
    "measured_measure",
    "rhs_value",
    "ratio",
    "lam",
    "l1",
    "linf",
    "c_used",
    "hypothesis_pass",
    "params",
)


@dataclass(frozen=True)
class BoundReport:
    theorem_id: str
    measured_measure: float
    rhs_value: float
    ratio: float
    lam: float
    l1: float
    linf: float
    c_used: float
    hypothesis_pass: bool | None = None
    params: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = asdict(self)
        row["params"] = json.dumps(self.params, sort_keys=True, default=_jsonable)
        return row

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _check_norms(l1, linf, lam):
    if l1 <= 0 or linf <= 0:
        raise ValueError("norms must be positive")
    if lam <= 1:
        raise BoundUndefinedError(f"bound needs lambda > 1, got {lam}")


def thm1_rhs(l1: float, linf: float, lam: float, n: int) -> float:
    """``(l1/linf)^(2 - 1/n) sqrt(lam) / log(lam)^(n/2)``."""
    _check_norms(l1, linf, lam)
    return (l1 / linf) ** (2 - 1 / n) * math.sqrt(lam) / math.log(lam) ** (n / 2)


def thm2_rhs(l1: float, linf: float, lam: float) -> float:
    """``(l1/linf) / (1 + log(linf/l1)) * sqrt(lam)``."""
    _check_norms(l1, linf, lam)
    q = l1 / linf
    return q / (1 + math.log(1 / q)) * math.sqrt(lam)


def energy_ratio(a) -> float:
    """``sum a_j^2 / (sum |a_j|)^2``, between ``1/len(a)`` and 1."""
    a = np.abs(np.asarray(a, dtype=float))
    return float(np.sum(a**2) / np.sum(a) ** 2)


def cor1_rhs(a, lambdas, linf_phis, n: int, eps: float = 0.1) -> float:
    a = np.asarray(a, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    linf_phis = np.asarray(linf_phis, dtype=float)
    if not (len(a) == len(lambdas) == len(linf_phis)) or len(a) == 0:
        raise ValueError("coefficient, eigenvalue and norm lists must be non-empty and equal length")
    if np.any(lambdas <= 0):
        raise BoundUndefinedError("constant eigenfunctions are not allowed in the combination")
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = np.min(lambdas) ** (n / (4 * n - 2)) / np.max(linf_phis) ** 2 * energy_ratio(a)
    return float(base ** (2 - 1 / n + eps))


def verify_thm1(f: Field, c: float = 1e-2, **nodal_kwargs) -> BoundReport:
    fs = frequency_scale(f, c)
    l1, linf = norm_l1(f), norm_linf(f)
    measured = nodal_set(f, **nodal_kwargs).measure
    rhs = thm1_rhs(l1, linf, fs.lam, f.grid.dim)
    return BoundReport(
        "Thm1", measured, rhs, measured / rhs, fs.lam, l1, linf, c,
        None, {"dim": f.grid.dim, "N": f.grid.N},
    )


def verify_thm2(
    f: Field,
    c_reg: float = 2.5,
    c: float = 1e-2,
    eps_constant: float = 1.0,
    n_eps: int = 8,
    strict: bool = False,
) -> BoundReport:
    """Check the volume-expansion hypothesis over its range and report the bound.

    The tested range is ``[h, eps_max]`` with ``eps_max`` from
    :func:`thm2_eps_max`. When ``eps_max`` falls below the grid spacing the
    hypothesis is tested at the resolution floor ``eps = h`` and the report
    flags ``eps_floor_applied``; ``strict=True`` raises instead.
    """
    fs = frequency_scale(f, c)
    l1, linf = norm_l1(f), norm_linf(f)
    h = f.grid.spacing
    eps_max = thm2_eps_max(l1, linf, fs.lam, eps_constant)
    floor_applied = eps_max < h
    if floor_applied:
        if strict:
            raise ResolutionError(
                f"expansion range eps <= {eps_max:.3g} is below the grid spacing {h:.3g}; "
                "use a larger N or a lower frequency"
            )
        eps_list = [h]
    else:
        eps_list = list(np.geomspace(h, eps_max, n_eps)) if eps_max > h else [h]
    nodal = nodal_set(f)
    profile = expansion_profile(f, eps_list, nodal=nodal, df=distance_transform(nodal, f.grid))
    rhs = thm2_rhs(l1, linf, fs.lam)
    return BoundReport(
        "Thm2", nodal.measure, rhs, nodal.measure / rhs, fs.lam, l1, linf, c,
        profile.passes(c_reg),
        {
            "dim": f.grid.dim,
            "N": f.grid.N,
            "c_reg": c_reg,
            "c_fit": profile.c_fit,
            "eps_max": eps_max,
            "eps_floor_applied": floor_applied,
            "eps": list(profile.epsilons),
        },
    )


def eigen_combination(grid, terms) -> tuple[Field, np.ndarray, np.ndarray]:
    """Field ``sum a_j phi_j`` from ``(a_j, m_j, kind_j)`` terms.

    Returns the field, the coefficient vector and the eigenvalues. Terms with
    distinct ``(m, kind)`` (up to ``m -> -m``) are orthonormal.
    """
    cos, sin = {}, {}
    a, lams = [], []
    for coef, m, kind in terms:
        m = tuple(int(x) for x in np.atleast_1d(m))
        target = cos if kind == "cos" else sin
        target[m] = target.get(m, 0.0) + coef
        a.append(coef)
        lams.append(4 * math.pi**2 * sum(x * x for x in m))
    f = reconstruct(Spectrum.from_basis(grid, cos=cos, sin=sin))
    return f, np.array(a), np.array(lams)


def verify_cor1(grid, terms, eps: float = 0.1) -> BoundReport:
    """Measured zero set of an eigenfunction combination against the corollary."""
    f, a, lams = eigen_combination(grid, terms)
    n = grid.dim
    rhs = cor1_rhs(a, lams, [TORUS_EIGENFUNCTION_LINF] * len(a), n, eps)
    l1, l2, linf = norm_l1(f), norm_l2(f), norm_linf(f)
    measured = nodal_set(f).measure
    sum_sq = float(np.sum(a**2))
    extra = {}
    if len(a) == 2:
        lo, hi = float(np.min(lams)), float(np.max(lams))
        extra = {
            "pair_bound_weak": lo ** (0.5 - eps) / hi ** (n - 1.5 + 1 / (2 * n) + eps),
            "pair_bound_conjectured": math.sqrt(hi),
        }
    return BoundReport(
        "Cor1", measured, rhs, measured / rhs if rhs > 0 else math.inf,
        float(np.min(lams)), l1, linf, float("nan"), None,
        {
            "dim": n,
            "N": grid.N,
            "eps": eps,
            "sum_a2": sum_sq,
            "l2_squared": l2**2,
            "l1_linf": l1 * linf,
            "chain_holds": sum_sq <= l1 * linf * (1 + 1e-9),
            "energy_ratio": energy_ratio(a),
            **extra,
        },
    )


def geometric_times(t0: float, J: int) -> list[float]:
    """``t0 * 2^-j`` for ``j = 0..J``."""
    return [t0 * 2.0**-j for j in range(J + 1)]


def smoothed_nodal_measure(f: Field, t_list) -> tuple[list[tuple[float, float]], float]:
    """Nodal measure of ``exp(t Laplacian) f`` along a decreasing time list.

    Returns the ``(t, measure)`` pairs and their minimum, which stands in for
    the lim inf as ``t -> 0``.
    """
    ts = [float(t) for t in t_list]
    if any(t <= 0 for t in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_list must be positive and strictly decreasing")
    out = []
    for t in ts:
        g = heat_evolve(f, t)
        out.append((t, 0.0 if g.is_zero() else nodal_set(g).measure))
    return out, min(m for _, m in out)
