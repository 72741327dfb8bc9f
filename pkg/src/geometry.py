"""Fubini–Study background on the S¹-reduced Riemann sphere.

Potentials are functions of the log-coordinate u = log|z|². The divisor is the
pair of torus-fixed points z = 0 (u → −∞) and z = ∞ (u → +∞). With the
convention dd^c = i∂∂̄ the background potential is F⁰(u) = log(1 + e^u) and
the metric ratio of a potential F = F⁰ + φ is F_uu / F⁰_uu.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit, log_expit

from config import (
    BUMP_AMPLITUDE,
    BUMP_WIDTH,
    CURVATURE_LOWER_BOUND_B,
    PARTITION_TOL,
)
from src.errors import PositivityLoss
from src.stencils import second_derivative

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

ZERO = "zero"
INFINITY = "infinity"
DIVISOR_POINTS = (ZERO, INFINITY)


def _as_output(values: np.ndarray, like) -> ArrayLike:
    return float(values) if np.ndim(like) == 0 else values


def fs_potential(u: ArrayLike) -> ArrayLike:
    """Background potential log(1 + e^u), overflow-safe for large |u|."""
    u_arr = np.asarray(u, dtype=float)
    return _as_output(np.logaddexp(0.0, u_arr), u)


def fs_density(u: ArrayLike) -> ArrayLike:
    """Background density F⁰_uu = e^u / (1 + e^u)²."""
    u_arr = np.asarray(u, dtype=float)
    return _as_output(expit(u_arr) * expit(-u_arr), u)


def section_norm_sq(u: ArrayLike, which: str) -> ArrayLike:
    """
    Squared hermitian norm of the defining section of a divisor point.

    |s₀|²_h = e^u / (1 + e^u) and |s_∞|²_h = 1 / (1 + e^u) for the degree-one
    bundle with its Fubini–Study metric; the two always sum to one.

    Args:
        u: Log-coordinate(s).
        which: "zero" or "infinity".

    Returns:
        Value(s) in (0, 1).
    """
    u_arr = np.asarray(u, dtype=float)
    if which == ZERO:
        return _as_output(expit(u_arr), u)
    if which == INFINITY:
        return _as_output(expit(-u_arr), u)
    raise ValueError(f"Unknown divisor point '{which}'. Choose from: {', '.join(DIVISOR_POINTS)}")


def _log_section_norm_sq(u: np.ndarray, which: str) -> np.ndarray:
    return log_expit(u) if which == ZERO else log_expit(-u)


@dataclass(frozen=True)
class BackgroundGeometry:
    """Uniform u-grid with the Fubini–Study data evaluated on it."""

    u_max: float
    n_u: int
    u_min: float = None
    B: float = CURVATURE_LOWER_BOUND_B
    S: float = field(init=False)

    def __post_init__(self):
        if self.u_min is None:
            object.__setattr__(self, "u_min", -float(self.u_max))
        if not (math.isfinite(self.u_min) and math.isfinite(self.u_max)):
            raise ValueError("u range must be finite")
        if self.u_min >= self.u_max:
            raise ValueError("u_min must be < u_max")
        if self.n_u < 5:
            raise ValueError("n_u must be >= 5")
        if self.B < 0:
            raise ValueError("B must be >= 0")
        object.__setattr__(self, "S", scalar_curvature(self.u, self.h_u))

    @cached_property
    def u(self) -> np.ndarray:
        nodes = np.linspace(self.u_min, self.u_max, self.n_u)
        nodes.setflags(write=False)
        return nodes

    @property
    def h_u(self) -> float:
        return (self.u_max - self.u_min) / (self.n_u - 1)

    def F0(self, u: ArrayLike = None) -> ArrayLike:
        return fs_potential(self.u if u is None else u)

    def F0_uu(self, u: ArrayLike = None) -> ArrayLike:
        return fs_density(self.u if u is None else u)

    def extended(self, margin: float) -> "BackgroundGeometry":
        """Same spacing on [u_min − margin, u_max + margin]."""
        extra = int(round(margin / self.h_u))
        return BackgroundGeometry(
            u_max=self.u_max + extra * self.h_u,
            n_u=self.n_u + 2 * extra,
            u_min=self.u_min - extra * self.h_u,
            B=self.B,
        )

    def refined(self, levels: int = 1) -> "BackgroundGeometry":
        """Halve the spacing `levels` times."""
        n_u = (self.n_u - 1) * 2**levels + 1
        return BackgroundGeometry(u_max=self.u_max, n_u=n_u, u_min=self.u_min, B=self.B)

    def coarsened(self) -> "BackgroundGeometry":
        """Every other node; needs an odd n_u."""
        if self.n_u % 2 == 0:
            raise ValueError("coarsening needs an odd n_u")
        return BackgroundGeometry(u_max=self.u_max, n_u=(self.n_u + 1) // 2, u_min=self.u_min, B=self.B)

    def check_invariants(self) -> tuple[bool, str]:
        """
        Check positivity, convexity and asymptotics of the background on the grid.

        Returns:
            (is_valid, error_message). error_message is empty when valid.
        """
        density = self.F0_uu()
        if np.any(density <= 0):
            return False, "F0_uu must be positive at every node."
        if np.any(density > 0.25 + 1e-15):
            return False, "F0_uu must not exceed 1/4."
        second = second_derivative(self.F0(), self.h_u)[1:-1]
        if np.any(second <= 0):
            return False, "F0 must be discretely convex."
        for end in (self.u_min, self.u_max):
            gap = abs(fs_potential(end) - max(end, 0.0))
            if gap > max(1e-6, 2.0 * math.exp(-abs(end))):
                return False, f"F0 - max(u, 0) = {gap:.3e} at u = {end} is not asymptotically small."
        return True, ""


def scalar_curvature(u: np.ndarray, h_u: float) -> float:
    """Scalar curvature −(log F⁰_uu)_uu / F⁰_uu averaged over the interior nodes."""
    log_density = log_expit(u) + log_expit(-u)
    curvature = -second_derivative(log_density, h_u) / fs_density(u)
    return float(np.mean(curvature[1:-1]))


@dataclass(frozen=True)
class DivisorData:
    """Divisor points with their cone angles and the conical-potential coefficient."""

    beta_zero: float
    beta_infinity: float = None
    c: float = 0.0
    points: tuple[str, ...] = DIVISOR_POINTS

    def __post_init__(self):
        if self.beta_infinity is None:
            object.__setattr__(self, "beta_infinity", self.beta_zero)
        for name in ("beta_zero", "beta_infinity"):
            beta = getattr(self, name)
            if not (0.0 < beta <= 1.0):
                raise ValueError(f"{name} must be in (0, 1], got {beta}")
        if self.c < 0:
            raise ValueError("c must be >= 0")
        if not self.points or any(p not in DIVISOR_POINTS for p in self.points):
            raise ValueError(f"points must be a non-empty subset of {DIVISOR_POINTS}")

    def beta(self, point: str) -> float:
        return self.beta_zero if point == ZERO else self.beta_infinity

    @property
    def min_beta(self) -> float:
        return min(self.beta(p) for p in self.points)


def conical_potential(div: DivisorData, u: ArrayLike, *, check: bool = True) -> ArrayLike:
    """
    Conical model potential φ_β = c Σ_j |s_j|_h^{2β_j}.

    Args:
        div: Divisor points, cone angles and coefficient.
        u: Log-coordinate(s). A uniform 1-D grid of at least 4 nodes is checked
            for discrete positivity of F_uu = F⁰_uu + φ_uu.
        check: Disable the positivity check.

    Returns:
        The potential at u.

    Raises:
        PositivityLoss: If the discrete F_uu is <= 0 somewhere (c too large).
    """
    u_arr = np.asarray(u, dtype=float)
    phi = np.zeros_like(u_arr)
    for point in div.points:
        phi = phi + np.exp(div.beta(point) * _log_section_norm_sq(u_arr, point))
    phi = div.c * phi
    if check and u_arr.ndim == 1 and u_arr.size >= 4:
        density = total_density(u_arr, phi)
        worst = int(np.argmin(density))
        if density[worst] <= 0:
            raise PositivityLoss(
                f"conical potential with c = {div.c} loses positivity at u = {u_arr[worst]:.4f}",
                node=(worst, 0),
            )
    return _as_output(phi, u)


def total_density(u: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Discrete F_uu = F⁰_uu + φ_uu on a uniform 1-D grid."""
    h = float(u[1] - u[0])
    return fs_density(u) + second_derivative(phi, h)


def conical_c_max(div: DivisorData, geo: BackgroundGeometry) -> float:
    """
    Largest coefficient keeping the discrete conical metric positive on the grid.

    Found by bisection on c ↦ min_u F_uu(c). Returns infinity when the
    perturbation is convex everywhere (e.g. every β = 1).
    """
    unit = conical_potential(DivisorData(div.beta_zero, div.beta_infinity, 1.0, div.points), geo.u, check=False)
    curvature = second_derivative(unit, geo.h_u)
    if np.min(curvature) >= -1e-12 * np.max(np.abs(unit)):
        return math.inf

    def min_density(c: float) -> float:
        return float(np.min(fs_density(geo.u) + c * curvature))

    hi = 1.0
    while min_density(hi) > 0:
        hi *= 2.0
    c_max = bisect(min_density, 0.0, hi, xtol=1e-13, rtol=1e-14)
    logger.debug("c_max(beta=%s/%s) = %.12g", div.beta_zero, div.beta_infinity, c_max)
    return float(c_max)


def validate_divisor(div: DivisorData, geo: BackgroundGeometry) -> tuple[bool, str]:
    """Check c < c_max on the grid. Returns (is_valid, error_message)."""
    c_max = conical_c_max(div, geo)
    if div.c >= c_max:
        return False, f"c = {div.c} must be below c_max = {c_max:.6g}."
    return True, ""


def smoothed_boundary(div: DivisorData, k: int, u: ArrayLike) -> ArrayLike:
    """
    Smooth approximation φᵏ = c Σ_j (|s_j|²_h + 1/k)^{β_j} of the conical potential.

    Args:
        div: Divisor data.
        k: Smoothing index, k >= 1.
        u: Log-coordinate(s).
    """
    if k < 1:
        raise ValueError("smoothing index k must be >= 1")
    u_arr = np.asarray(u, dtype=float)
    phi = np.zeros_like(u_arr)
    for point in div.points:
        phi = phi + (section_norm_sq(u_arr, point) + 1.0 / k) ** div.beta(point)
    return _as_output(div.c * phi, u)


def bump_profile(u: ArrayLike, amplitude: float = BUMP_AMPLITUDE, width: float = BUMP_WIDTH) -> ArrayLike:
    """Gaussian bump a·exp(−u²/(2w²)); keeps F⁰ + bump u-convex for the defaults."""
    u_arr = np.asarray(u, dtype=float)
    return _as_output(amplitude * np.exp(-0.5 * (u_arr / width) ** 2), u)


def partition_defect(u: np.ndarray) -> float:
    """max |(|s₀|² + |s_∞|²) − 1| over the nodes."""
    total = section_norm_sq(u, ZERO) + section_norm_sq(u, INFINITY)
    defect = float(np.max(np.abs(total - 1.0)))
    if defect > PARTITION_TOL:
        logger.warning("section partition defect %.3e exceeds %.1e", defect, PARTITION_TOL)
    return defect
