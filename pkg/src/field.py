"""
Discretized potentials φ(u, t) on the space–time rectangle and the discrete
operators built from them.

With F = F⁰ + φ the reduced (n = 1) quantities are

    n + Δφ      = F_uu / F⁰_uu
    𝒢(φ)        = F_tt − F_tu² / F_uu
    det Hess F  = F_tt F_uu − F_tu² = 𝒢·F_uu
    𝔇ψ          = (F_tt ψ_uu + F_uu ψ_tt − 2 F_tu ψ_tu) / det Hess F

F_uu uses the exact background density plus the discrete φ_uu.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from src.errors import PositivityLoss
from src.geometry import BackgroundGeometry
from src.stencils import first_derivative, mixed_derivative, second_derivative
from src.weights import WeightSpec, weight_value

logger = logging.getLogger(__name__)

INTERIOR = (slice(1, -1), slice(1, -1))

FieldLike = Union[None, float, np.ndarray]


@dataclass(frozen=True)
class Partials:
    phi_u: np.ndarray
    phi_t: np.ndarray
    phi_uu: np.ndarray
    phi_tt: np.ndarray
    phi_tu: np.ndarray


@dataclass(frozen=True, eq=False)
class PotentialGrid:
    """φ(u_i, t_j) on geo.u × linspace(0, 1, n_t); values is read-only."""

    geo: BackgroundGeometry
    n_t: int
    values: np.ndarray
    boundary0: np.ndarray
    boundary1: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.geo.n_u, self.n_t):
            raise ValueError(f"values must have shape ({self.geo.n_u}, {self.n_t}), got {values.shape}")
        if self.n_t < 4:
            raise ValueError("n_t must be >= 4")
        b0 = np.array(self.boundary0, dtype=float)
        b1 = np.array(self.boundary1, dtype=float)
        if not (np.array_equal(values[:, 0], b0) and np.array_equal(values[:, -1], b1)):
            raise ValueError("values at t = 0 and t = 1 must equal boundary0 and boundary1")
        for name, arr in (("values", values), ("boundary0", b0), ("boundary1", b1)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_values(cls, geo: BackgroundGeometry, values: np.ndarray) -> "PotentialGrid":
        values = np.asarray(values, dtype=float)
        return cls(geo=geo, n_t=values.shape[1], values=values, boundary0=values[:, 0], boundary1=values[:, -1])

    @classmethod
    def from_function(
        cls,
        geo: BackgroundGeometry,
        n_t: int,
        fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    ) -> "PotentialGrid":
        """Sample fn(u, t) on the grid (u and t broadcast as column and row)."""
        t = np.linspace(0.0, 1.0, n_t)
        values = np.broadcast_to(fn(geo.u[:, None], t[None, :]), (geo.n_u, n_t))
        return cls.from_values(geo, values)

    def with_values(self, values: np.ndarray) -> "PotentialGrid":
        return PotentialGrid.from_values(self.geo, values)

    @cached_property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_t)

    @property
    def h_t(self) -> float:
        return 1.0 / (self.n_t - 1)

    @cached_property
    def density(self) -> np.ndarray:
        """F⁰_uu as an (n_u, 1) column."""
        return self.geo.F0_uu()[:, None]

    @cached_property
    def F(self) -> np.ndarray:
        return self.values + self.geo.F0()[:, None]

    @cached_property
    def partials(self) -> Partials:
        hu, ht = self.geo.h_u, self.h_t
        v = self.values
        return Partials(
            phi_u=first_derivative(v, hu, axis=0),
            phi_t=first_derivative(v, ht, axis=1),
            phi_uu=second_derivative(v, hu, axis=0),
            phi_tt=second_derivative(v, ht, axis=1),
            phi_tu=mixed_derivative(v, hu, ht),
        )

    @cached_property
    def hessian(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(F_uu, F_tt, F_tu) at every node."""
        d = self.partials
        return self.density + d.phi_uu, d.phi_tt, d.phi_tu

    @cached_property
    def det(self) -> np.ndarray:
        F_uu, F_tt, F_tu = self.hessian
        return F_tt * F_uu - F_tu**2


def partials(grid: PotentialGrid, i: int, j: int) -> tuple[float, float, float, float, float]:
    """(φ_u, φ_t, φ_uu, φ_tt, φ_tu) at node (i, j)."""
    if not (0 <= i < grid.geo.n_u and 0 <= j < grid.n_t):
        raise IndexError(f"node ({i}, {j}) outside the {grid.geo.n_u}x{grid.n_t} grid")
    d = grid.partials
    return (
        float(d.phi_u[i, j]),
        float(d.phi_t[i, j]),
        float(d.phi_uu[i, j]),
        float(d.phi_tt[i, j]),
        float(d.phi_tu[i, j]),
    )


def as_field(f: FieldLike, grid: PotentialGrid) -> np.ndarray:
    """Broadcast None, a scalar, an (n_u,) profile or an (n_u, n_t) array to the grid."""
    if f is None:
        return np.zeros((grid.geo.n_u, grid.n_t))
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return np.broadcast_to(arr, (grid.geo.n_u, grid.n_t))


def geodesic_operator_from(F_uu: np.ndarray, F_tt: np.ndarray, F_tu: np.ndarray) -> np.ndarray:
    """𝒢 = F_tt − F_tu²/F_uu."""
    return F_tt - F_tu**2 / F_uu


def geodesic_operator(grid: PotentialGrid, i: int, j: int) -> float:
    """
    Reduced geodesic operator 𝒢(φ) = φ_tt − |dφ_t|²_φ at one node.

    Raises:
        PositivityLoss: If F_uu <= 0 at (i, j).
    """
    F_uu, F_tt, F_tu = (float(a[i, j]) for a in grid.hessian)
    if F_uu <= 0:
        raise PositivityLoss(f"F_uu = {F_uu:.3e} <= 0 at node ({i}, {j})", node=(i, j))
    return float(geodesic_operator_from(F_uu, F_tt, F_tu))


def geodesic_operator_field(grid: PotentialGrid) -> np.ndarray:
    """𝒢 at every node; raises PositivityLoss if F_uu <= 0 at an interior node."""
    F_uu, F_tt, F_tu = grid.hessian
    _require_positive(F_uu, "F_uu")
    with np.errstate(divide="ignore", invalid="ignore"):
        return geodesic_operator_from(F_uu, F_tt, F_tu)


def _require_positive(arr: np.ndarray, name: str) -> None:
    inner = arr[INTERIOR]
    if inner.size and np.min(inner) <= 0:
        i, j = np.unravel_index(int(np.argmin(inner)), inner.shape)
        raise PositivityLoss(f"{name} = {inner[i, j]:.3e} <= 0 at node ({i + 1}, {j + 1})", node=(i + 1, j + 1))


def rhs_field(grid: PotentialGrid, eps: float, w: WeightSpec, f: FieldLike = None) -> np.ndarray:
    """ε e^f ζ_η^{−p} on the grid."""
    if eps > 0 and w.eta == 0 and w.kind != "custom":
        logger.debug("rhs with eta = 0: the weight vanishes only in the limit u -> ±inf")
    zeta = np.asarray(weight_value(w, grid.geo.u))[:, None]
    return eps * np.exp(as_field(f, grid)) * zeta ** (-w.p)


def ma_residual(
    grid: PotentialGrid,
    eps: float,
    w: WeightSpec,
    f: FieldLike = None,
    *,
    form: str = "product",
) -> np.ndarray:
    """
    Pointwise Monge–Ampère residual of the regularized equation.

    form="product":     𝒢(φ)·F_uu/F⁰_uu − ε e^f ζ_η^{−p}
    form="determinant": (F_tt F_uu − F_tu²)/F⁰_uu − ε e^f ζ_η^{−p}

    Raises:
        PositivityLoss: If F_uu <= 0 at an interior node.
    """
    F_uu, F_tt, F_tu = grid.hessian
    _require_positive(F_uu, "F_uu")
    rhs = rhs_field(grid, eps, w, f) if eps > 0 else 0.0
    if form == "product":
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = geodesic_operator_from(F_uu, F_tt, F_tu) * F_uu / grid.density
    elif form == "determinant":
        lhs = grid.det / grid.density
    else:
        raise ValueError("form must be 'product' or 'determinant'")
    return lhs - rhs


def log_residual(grid: PotentialGrid, eps: float, w: WeightSpec, f: FieldLike = None) -> np.ndarray:
    """
    log det Hess F − log F⁰_uu − log ε − f + p log ζ_η at the interior nodes.

    The Newton objective. Boundary rows and lateral columns are returned as 0.

    Raises:
        PositivityLoss: If det Hess F <= 0 at an interior node.
    """
    if not eps > 0:
        raise ValueError("log_residual needs eps > 0")
    _require_positive(grid.det, "det Hess F")
    out = np.zeros((grid.geo.n_u, grid.n_t))
    rhs = rhs_field(grid, eps, w, f)
    out[INTERIOR] = np.log(grid.det[INTERIOR]) - np.log((grid.density * rhs)[INTERIOR])
    return out


def laplacian_ratio(grid: PotentialGrid, i: int, j: int) -> float:
    """n + Δφ = F_uu/F⁰_uu at one node."""
    return float(laplacian_ratio_field(grid)[i, j])


def laplacian_ratio_field(grid: PotentialGrid) -> np.ndarray:
    F_uu, _, _ = grid.hessian
    return F_uu / grid.density


def cofactor_contraction(
    F_uu: np.ndarray,
    F_tt: np.ndarray,
    F_tu: np.ndarray,
    psi_uu: np.ndarray,
    psi_tt: np.ndarray,
    psi_tu: np.ndarray,
) -> np.ndarray:
    """(F_tt ψ_uu + F_uu ψ_tt − 2F_tu ψ_tu)/(F_tt F_uu − F_tu²), the derivative of log det."""
    return (F_tt * psi_uu + F_uu * psi_tt - 2.0 * F_tu * psi_tu) / (F_tt * F_uu - F_tu**2)


def _psi_partials(grid: PotentialGrid, psi: np.ndarray) -> Partials:
    return grid.with_values(np.broadcast_to(psi, grid.values.shape)).partials


def linearized_field(grid: PotentialGrid, psi: np.ndarray) -> np.ndarray:
    """𝔇ψ at every node (one-sided stencils at the edges)."""
    F_uu, F_tt, F_tu = grid.hessian
    _require_positive(grid.det, "det Hess F")
    d = _psi_partials(grid, psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        return cofactor_contraction(F_uu, F_tt, F_tu, d.phi_uu, d.phi_tt, d.phi_tu)


def linearized_apply(grid: PotentialGrid, psi: np.ndarray, i: int, j: int) -> float:
    """
    The linearized operator 𝔇ψ = (F_tt ψ_uu + F_uu ψ_tt − 2F_tu ψ_tu)/(𝒢·F_uu) at (i, j).

    Interior nodes read ψ's 3×3 neighbourhood only; edge nodes go through
    linearized_field, which is also the path for 𝔇ψ at every node.

    Raises:
        PositivityLoss: If 𝒢 <= 0 or F_uu <= 0 at (i, j).
    """
    F_uu, F_tt, F_tu = (float(a[i, j]) for a in grid.hessian)
    if F_uu <= 0 or grid.det[i, j] <= 0:
        raise PositivityLoss(f"operator not elliptic at node ({i}, {j})", node=(i, j))
    if not (0 < i < grid.geo.n_u - 1 and 0 < j < grid.n_t - 1):
        return float(linearized_field(grid, psi)[i, j])
    hu, ht = grid.geo.h_u, grid.h_t
    p = np.broadcast_to(np.asarray(psi, dtype=float), grid.values.shape)[i - 1 : i + 2, j - 1 : j + 2]
    psi_uu = (p[0, 1] - 2.0 * p[1, 1] + p[2, 1]) / hu**2
    psi_tt = (p[1, 0] - 2.0 * p[1, 1] + p[1, 2]) / ht**2
    psi_tu = (p[2, 2] - p[2, 0] - p[0, 2] + p[0, 0]) / (4.0 * hu * ht)
    return float(cofactor_contraction(F_uu, F_tt, F_tu, psi_uu, psi_tt, psi_tu))


def lin_phi_reduced(grid: PotentialGrid) -> np.ndarray:
    """Closed form of 𝔇φ for n = 1: (n + 1) − F⁰_uu F_tt / det Hess F."""
    _, F_tt, _ = grid.hessian
    return 2.0 - grid.density * F_tt / grid.det


def am_gm_gap(grid: PotentialGrid) -> np.ndarray:
    """
    1/(1+φ_uū) + 1/𝒢 − (1+φ_uū+𝒢)/((1+φ_uū)𝒢), which vanishes identically for n = 1.
    """
    ratio = laplacian_ratio_field(grid)
    G = geodesic_operator_field(grid)
    return 1.0 / ratio + 1.0 / G - (ratio + G) / (ratio * G)


def admissibility_violations(grid: PotentialGrid) -> list[tuple[int, int]]:
    """Interior nodes where F_uu <= 0 or det Hess F <= 0."""
    F_uu, _, _ = grid.hessian
    bad = (F_uu[INTERIOR] <= 0) | (grid.det[INTERIOR] <= 0)
    return [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(bad))]


def is_admissible(grid: PotentialGrid) -> bool:
    return not admissibility_violations(grid)
