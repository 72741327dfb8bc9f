"""Admissible weight functions ξ, their regularizations ζ_η = ξ + η, and the admissibility auditor."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from config import DEGENERATE_WEIGHT_TOL, DISTANCE_CAP_RADIUS
from src.errors import DegenerateWeight
from src.geometry import (
    DIVISOR_POINTS,
    INFINITY,
    ZERO,
    ArrayLike,
    BackgroundGeometry,
    fs_density,
    section_norm_sq,
)
from src.stencils import second_derivative

logger = logging.getLogger(__name__)

SECTION_POWER = "section-power"
DISTANCE_POWER = "distance-power"
PRODUCT = "product"
ANALYTIC_SET = "analytic-set"
CUSTOM = "custom"
WEIGHT_KINDS = (SECTION_POWER, DISTANCE_POWER, PRODUCT, ANALYTIC_SET, CUSTOM)


@dataclass(frozen=True)
class WeightSpec:
    """
    A weight ξ with its regularization parameter η and exponent p.

    Callers apply the exponent themselves: the right-hand side of the
    regularized equation is ε e^f ζ_η^{−p}. C1 is the certified constant in
    dd^c log ζ_η ≥ −C1·ω, filled in by `certify`.
    """

    kind: str
    p: float = 1.0
    eta: float = 0.0
    C1: Optional[float] = None
    point: str = ZERO
    components: tuple["WeightSpec", ...] = ()
    monomials: tuple[int, ...] = (1,)
    cap_radius: Optional[float] = DISTANCE_CAP_RADIUS
    value: float = 1.0
    sample_u: tuple[float, ...] = ()
    sample_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"Unknown weight kind '{self.kind}'. Choose from: {', '.join(WEIGHT_KINDS)}")
        if not self.p > 0:
            raise ValueError("p must be positive")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.point not in DIVISOR_POINTS:
            raise ValueError(f"point must be one of {DIVISOR_POINTS}")
        if self.kind == PRODUCT and not self.components:
            raise ValueError("a product weight needs components")
        if self.kind == ANALYTIC_SET and (not self.monomials or 0 in self.monomials):
            raise ValueError("analytic-set monomial exponents must be non-zero")
        if self.kind == CUSTOM:
            if len(self.sample_u) != len(self.sample_values):
                raise ValueError("sample_u and sample_values must have the same length")
            if self.sample_values and min(self.sample_values) <= 0:
                raise ValueError("custom weight samples must be positive")
            if not self.sample_u and not self.value > 0:
                raise ValueError("custom constant weight must be positive")

    @property
    def declared_C1(self) -> Optional[float]:
        """C1 of a product is the sum of its components' certified constants."""
        if self.kind == PRODUCT:
            parts = [c.C1 for c in self.components]
            return None if any(c is None for c in parts) else float(sum(parts))
        return self.C1

    def with_eta(self, eta: float) -> "WeightSpec":
        return replace(self, eta=eta, C1=None)


def section_weight(point: str = ZERO, p: float = 1.0, eta: float = 0.0) -> WeightSpec:
    return WeightSpec(kind=SECTION_POWER, p=p, eta=eta, point=point)


def product_weight(p: float = 1.0, eta: float = 0.0) -> WeightSpec:
    """ξ = |s₀|²_h·|s_∞|²_h, the weight for both divisor points at once."""
    return WeightSpec(
        kind=PRODUCT,
        p=p,
        eta=eta,
        components=(section_weight(ZERO), section_weight(INFINITY)),
    )


def constant_weight(value: float = 1.0, p: float = 1.0) -> WeightSpec:
    return WeightSpec(kind=CUSTOM, p=p, value=value)


def arclength(u: ArrayLike) -> ArrayLike:
    """ω-arclength from the zero point, ∫_{−∞}^{u} √(F⁰_vv) dv = 2·arctan(e^{u/2})."""
    u_arr = np.asarray(u, dtype=float)
    out = 2.0 * np.arctan(np.exp(0.5 * np.minimum(u_arr, 700.0)))
    return float(out) if np.ndim(u) == 0 else out


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C^∞ step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def distance_to_divisor(
    u: ArrayLike,
    *,
    cap_radius: Optional[float] = None,
    points: tuple[str, ...] = DIVISOR_POINTS,
) -> ArrayLike:
    """
    ω-distance to the nearest divisor point along the u-axis.

    Args:
        u: Log-coordinate(s).
        cap_radius: If given, the distance is blended smoothly into the constant
            cap_radius between cap_radius/2 and cap_radius.
        points: Divisor points to measure against.

    Returns:
        Distance value(s), 0 on the divisor.
    """
    u_arr = np.asarray(u, dtype=float)
    from_zero = arclength(u_arr)
    candidates = []
    if ZERO in points:
        candidates.append(from_zero)
    if INFINITY in points:
        candidates.append(math.pi - from_zero)
    dist = np.minimum.reduce([np.asarray(c, dtype=float) for c in candidates])
    if cap_radius is not None:
        blend = _smooth_step(2.0 * dist / cap_radius - 1.0)
        dist = (1.0 - blend) * dist + blend * cap_radius
    return float(dist) if np.ndim(u) == 0 else dist


def weight_value(w: WeightSpec, u: ArrayLike) -> ArrayLike:
    """
    Regularized weight ζ_η(u).

    For section-power weights this is |s|²_h(u) + η; a product multiplies its
    components, each regularized by the product's η.
    """
    u_arr = np.asarray(u, dtype=float)
    if w.kind == SECTION_POWER:
        zeta = section_norm_sq(u_arr, w.point) + w.eta
    elif w.kind == DISTANCE_POWER:
        zeta = distance_to_divisor(u_arr, cap_radius=w.cap_radius) ** 2 + w.eta
    elif w.kind == PRODUCT:
        zeta = np.ones_like(u_arr)
        for component in w.components:
            zeta = zeta * weight_value(component.with_eta(w.eta), u_arr)
    elif w.kind == ANALYTIC_SET:
        zeta = sum(np.exp(m * u_arr) for m in w.monomials) + w.eta
    elif w.sample_u:
        log_values = np.interp(u_arr, np.asarray(w.sample_u), np.log(np.asarray(w.sample_values)))
        zeta = np.exp(log_values) + w.eta
    else:
        zeta = np.full_like(u_arr, w.value) + w.eta
    return float(zeta) if np.ndim(u) == 0 else zeta


def log_weight_curvature(w: WeightSpec, u: np.ndarray) -> np.ndarray:
    """
    Exact (d²/du²) log ζ_η for section-power and constant weights.

    With s = |s|²_h one has s' = ±s(1−s), s'' = s(1−s)(1−2s) for either point,
    so (log(s+η))'' = (s''(s+η) − s'²)/(s+η)².
    """
    if w.kind == CUSTOM and not w.sample_u:
        return np.zeros_like(np.asarray(u, dtype=float))
    if w.kind != SECTION_POWER:
        raise ValueError("closed-form curvature is only available for section-power and constant weights")
    s = section_norm_sq(u, w.point)
    ds = s * (1.0 - s)
    d2s = ds * (1.0 - 2.0 * s)
    return (d2s * (s + w.eta) - ds**2) / (s + w.eta) ** 2


def admissibility_audit(
    w: WeightSpec,
    geo: BackgroundGeometry,
    *,
    min_weight: Optional[float] = None,
) -> float:
    """
    Smallest C with (d²/du²) log ζ_η ≥ −C·F⁰_uu at the audited interior nodes.

    Args:
        w: Weight to audit.
        geo: Grid on which the discrete second difference is taken.
        min_weight: Exclusion threshold; nodes with ζ_η <= min_weight are skipped.

    Returns:
        The certified constant C1 (>= 0).

    Raises:
        DegenerateWeight: If η = 0, ζ vanishes numerically somewhere and no
            exclusion threshold was given.
    """
    zeta = np.asarray(weight_value(w, geo.u))
    if min_weight is None and np.min(zeta) <= DEGENERATE_WEIGHT_TOL:
        raise DegenerateWeight(
            f"{w.kind} weight vanishes at u = {geo.u[int(np.argmin(zeta))]:.4f}; give eta > 0 or min_weight"
        )
    threshold = DEGENERATE_WEIGHT_TOL if min_weight is None else min_weight
    curvature = second_derivative(np.log(np.maximum(zeta, np.finfo(float).tiny)), geo.h_u)
    audited = np.zeros(geo.n_u, dtype=bool)
    audited[1:-1] = True
    audited &= zeta > threshold
    if not np.any(audited):
        raise DegenerateWeight("no grid node left to audit after exclusion")
    ratio = -curvature[audited] / fs_density(geo.u[audited])
    c1 = max(0.0, float(np.max(ratio)))
    logger.debug("admissibility audit: kind=%s eta=%g C1=%.6g", w.kind, w.eta, c1)
    return c1


def certify(w: WeightSpec, geo: BackgroundGeometry, *, min_weight: Optional[float] = None) -> WeightSpec:
    """Return a copy of w with C1 (and its components' C1) filled in by the auditor."""
    components = tuple(
        replace(c, C1=admissibility_audit(c.with_eta(w.eta), geo, min_weight=min_weight)) for c in w.components
    )
    audited = replace(w, components=components)
    return replace(audited, C1=admissibility_audit(audited, geo, min_weight=min_weight))
