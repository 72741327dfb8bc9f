"""
Estimate auditor for solved instances.

Computes the monitored suprema (weighted Laplacian, weighted gradient,
time derivative, Hölder seminorm), runs the maximum-principle audit on
Q = log(ζ_η^p (n+Δφ)) − Cφ + t², and hosts the Legendre-transform oracle
for the ε = 0 geodesic between S¹-invariant boundary potentials.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import expit, logit

from config import DEFAULT_ORACLE_N_X, DIVISOR_HOLDER_RADIUS, HOLDER_MAX_PAIRS, MP_RELATIVE_TOL, SCHEMA_VERSION
from src.errors import NonConvexBoundary
from src.field import INTERIOR, FieldLike, PotentialGrid, as_field, laplacian_ratio_field, linearized_field
from src.geometry import INFINITY, ZERO, BackgroundGeometry, fs_density, section_norm_sq
from src.stencils import first_derivative, second_derivative
from src.weights import CUSTOM, PRODUCT, SECTION_POWER, WeightSpec, admissibility_audit, arclength, weight_value

logger = logging.getLogger(__name__)

SUPREMUM_FIELDS = ("sup_dt_phi", "sup_weighted_lap", "boundary_weighted_lap", "sup_weighted_grad")
NUMERIC_FIELDS = (
    *SUPREMUM_FIELDS,
    "grad_mu",
    "mp_interior_max",
    "mp_boundary_max",
    "mp_constant_C",
    "mp_interior_bound",
    "sup_unweighted_grad",
)


@dataclass
class EstimateReport:
    """Monitored quantities and verdicts of one solved instance."""

    sup_dt_phi: float
    sup_weighted_lap: float
    boundary_weighted_lap: float
    sup_weighted_grad: float
    grad_mu: float
    holder_seminorm: dict[str, float]
    mp_interior_max: float
    mp_boundary_max: float
    mp_constant_C: float
    mp_interior_bound: float
    mp_branch: str
    sup_unweighted_grad: float = math.nan
    truncation_drift: Optional[float] = None
    verdicts: dict[str, bool] = field(default_factory=dict)
    eps: Optional[float] = None
    eta: Optional[float] = None
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        """Plain dict with non-finite numbers as None, so the JSON stays strict."""
        payload = _json_safe(asdict(self))
        payload["schema_version"] = SCHEMA_VERSION
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, payload: dict) -> "EstimateReport":
        data = {k: v for k, v in payload.items() if k != "schema_version"}
        for name in NUMERIC_FIELDS:
            if name in data and data[name] is None:
                data[name] = math.nan
        if "holder_seminorm" in data:
            data["holder_seminorm"] = {k: math.nan if v is None else v for k, v in data["holder_seminorm"].items()}
        return cls(**data)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


@dataclass(frozen=True)
class MaxPrincipleAudit:
    passed: bool
    branch: str
    interior_max: float
    boundary_max: float
    C: float
    interior_bound: float
    tol: float
    failing_nodes: list[tuple[int, int]] = field(default_factory=list)


def _audit_violations(grid: PotentialGrid) -> list[tuple[int, int]]:
    """Interior nodes with F_uu <= 0 or det Hess F < 0 (a degenerate det = 0 is allowed)."""
    F_uu, _, _ = grid.hessian
    bad = (F_uu[INTERIOR] <= 0) | (grid.det[INTERIOR] < 0)
    return [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(bad))]


def _boundary_mask(shape: tuple[int, int]) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    mask[INTERIOR] = False
    return mask


def weighted_laplacian_field(grid: PotentialGrid, w: WeightSpec) -> np.ndarray:
    """ζ_η^p·(F_uu/F⁰_uu) at every node."""
    zeta = np.asarray(weight_value(w, grid.geo.u))[:, None]
    return zeta**w.p * laplacian_ratio_field(grid)


def weighted_laplacian_sup(grid: PotentialGrid, w: WeightSpec) -> tuple[float, float]:
    """(max over interior nodes, max over the t = 0 and t = 1 rows) of ζ_η^p·(n + Δφ)."""
    weighted = weighted_laplacian_field(grid, w)
    boundary = np.concatenate([weighted[:, 0], weighted[:, -1]])
    return float(np.max(weighted[INTERIOR])), float(np.max(boundary))


def _q_field(grid: PotentialGrid, w: WeightSpec, C: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(weighted_laplacian_field(grid, w)) - C * grid.values + grid.t[None, :] ** 2


def coarsening_margin(grid: PotentialGrid, w: WeightSpec, C: float) -> float:
    """
    Discretization term of the audit tolerance: max |Q_h − Q_2h| over the shared nodes.

    Q_2h is recomputed from every other node of the same values, so a defect
    that both spacings resolve shifts Q_h and Q_2h alike and stays above the
    margin. Returns 0 when the grid cannot be coarsened (an even node count,
    fewer than 9 u-nodes or fewer than 7 t-nodes).
    """
    n_u, n_t = grid.values.shape
    if n_u % 2 == 0 or n_t % 2 == 0 or n_u < 9 or n_t < 7:
        logger.debug("max-principle audit: %dx%d grid cannot be coarsened, margin 0", n_u, n_t)
        return 0.0
    coarse = PotentialGrid.from_values(grid.geo.coarsened(), grid.values[::2, ::2])
    gap = np.abs(_q_field(grid, w, C)[::2, ::2] - _q_field(coarse, w, C))
    if not np.any(np.isfinite(gap)):
        return 0.0
    return float(np.nanmax(gap))


def max_principle_audit(
    grid: PotentialGrid,
    w: WeightSpec,
    eps: float,
    f: FieldLike = None,
    geo: Optional[BackgroundGeometry] = None,
    *,
    C1: Optional[float] = None,
    margin: Optional[float] = None,
) -> MaxPrincipleAudit:
    """
    Audit Q = log(ζ_η^p (n+Δφ)) − Cφ + t² with C = B + p·C1 + 1.

    Passes when the interior max of Q is within tol of the boundary max
    (lateral columns count as boundary), or when w = ζ_η^p (n+Δφ) stays below
    ε e^f ((n+1)C)^n at every interior maximizer. Any inadmissible interior
    node fails the audit.

    tol = 1e−6·(1 + max|Q|) + margin, where margin defaults to the
    coarsening_margin of the grid.
    """
    geo = geo or grid.geo
    if C1 is None:
        C1 = w.declared_C1
    if C1 is None:
        C1 = admissibility_audit(w, geo)
    C = geo.B + w.p * C1 + 1.0
    e_f = np.exp(as_field(f, grid))
    bound_field = eps * e_f * (2.0 * C)
    interior_bound = float(np.max(bound_field[INTERIOR]))

    bad = _audit_violations(grid)
    if bad:
        logger.warning("max-principle audit: %d inadmissible interior nodes, first %s", len(bad), bad[0])
        return MaxPrincipleAudit(
            passed=False,
            branch="inadmissible",
            interior_max=math.inf,
            boundary_max=math.nan,
            C=C,
            interior_bound=interior_bound,
            tol=math.nan,
            failing_nodes=bad,
        )

    weighted = weighted_laplacian_field(grid, w)
    Q = _q_field(grid, w, C)
    if margin is None:
        margin = coarsening_margin(grid, w, C)
    tol = MP_RELATIVE_TOL * (1.0 + float(np.max(np.abs(Q)))) + margin

    interior_max = float(np.max(Q[INTERIOR]))
    boundary_max = float(np.max(Q[_boundary_mask(Q.shape)]))
    if interior_max <= boundary_max + tol:
        return MaxPrincipleAudit(True, "boundary", interior_max, boundary_max, C, interior_bound, tol)

    inner_Q = Q[INTERIOR]
    maximizers = np.argwhere(inner_Q >= interior_max - tol) + 1
    failing = [
        (int(i), int(j))
        for i, j in maximizers
        if weighted[i, j] > bound_field[i, j] * (1.0 + MP_RELATIVE_TOL)
    ]
    passed = not failing
    if not passed:
        logger.warning("max-principle audit failed at %d interior maximizers", len(failing))
    return MaxPrincipleAudit(
        passed=passed,
        branch="interior" if passed else "failed",
        interior_max=interior_max,
        boundary_max=boundary_max,
        C=C,
        interior_bound=interior_bound,
        tol=tol,
        failing_nodes=failing,
    )


def _divisor_section(u: np.ndarray) -> np.ndarray:
    """|s|²_h of the nearer divisor point."""
    return np.minimum(section_norm_sq(u, ZERO), section_norm_sq(u, INFINITY))


def weighted_gradient_sup(grid: PotentialGrid, beta: float, mu: float) -> tuple[float, float]:
    """
    (max |∇φ|_ω·(|s|²_h)^{(2−2β−μ)/2}, max |∇φ|_ω) over the grid.

    |∇φ|_ω = |φ_u|/√F⁰_uu. The unweighted maximum is the bounded quantity
    when β ≥ 1/2.
    """
    if not 0.0 <= mu < 1.0:
        raise ValueError("mu must be in [0, 1)")
    u = grid.geo.u
    grad = np.abs(grid.partials.phi_u) / np.sqrt(fs_density(u))[:, None]
    weight = _divisor_section(u) ** ((2.0 - 2.0 * beta - mu) / 2.0)
    return float(np.max(grad * weight[:, None])), float(np.max(grad))


def time_derivative_sup(grid: PotentialGrid) -> float:
    return float(np.max(np.abs(grid.partials.phi_t)))


def _slice_indices(n_u: int, n_t: int, max_pairs: int) -> np.ndarray:
    """t-slices to keep so that the node pairs stay within max_pairs; t = 0, 1/2, 1 always kept."""
    per_slice = n_u
    n_keep = n_t
    while n_keep > 1 and (per_slice * n_keep) * (per_slice * n_keep - 1) // 2 > max_pairs:
        n_keep -= 1
    anchors = {0, (n_t - 1) // 2, n_t - 1}
    picked = set(np.round(np.linspace(0, n_t - 1, max(n_keep, 1))).astype(int).tolist()) | anchors
    return np.array(sorted(picked))


def holder_seminorm(
    grid: PotentialGrid,
    delta: float,
    restrict_to_slice: Optional[float] = None,
    *,
    max_pairs: int = HOLDER_MAX_PAIRS,
) -> float:
    """
    Brute-force max of |φ(a) − φ(b)| / d(a, b)^δ over node pairs.

    d is the ω-arclength distance in u combined with the Euclidean distance
    in t. Beyond max_pairs the t-slices are thinned; every u node of a kept
    slice stays, so pairs on both sides of u = 0 and next to either divisor
    point are always present.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    if restrict_to_slice is not None:
        cols = np.array([int(np.argmin(np.abs(grid.t - restrict_to_slice)))])
    else:
        cols = _slice_indices(grid.geo.n_u, grid.n_t, max_pairs)
    if cols.size < grid.n_t:
        logger.debug("holder seminorm: %d of %d t-slices kept", cols.size, grid.n_t)

    s = np.asarray(arclength(grid.geo.u))
    S, T = np.meshgrid(s, grid.t[cols], indexing="ij")
    coords_s, coords_t = S.ravel(), T.ravel()
    values = grid.values[:, cols].ravel()
    n = values.size
    best = 0.0
    chunk = 256
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        ds = coords_s[start:stop, None] - coords_s[None, :]
        dt = coords_t[start:stop, None] - coords_t[None, :]
        dist = np.hypot(ds, dt)
        dv = np.abs(values[start:stop, None] - values[None, :])
        upper = np.arange(n)[None, :] > np.arange(start, stop)[:, None]
        valid = upper & (dist > 0)
        if np.any(valid):
            best = max(best, float(np.max(dv[valid] / dist[valid] ** delta)))
    return best


def divisor_holder_seminorm(grid: PotentialGrid, delta: float, radius: float = DIVISOR_HOLDER_RADIUS) -> float:
    """
    Hölder quotient across the divisor points.

    Max of |φ(a) − φ(b)| / d(a, b)^δ over pairs of nodes in the same t-slice
    that both lie within ω-distance radius of the same divisor point, with d
    the ω-arclength between them. Leaving out the t-direction keeps the
    quotient on the transverse profile that the cone angle shapes: for
    c·ρ^{2β} smoothed at scale ρ ~ k^{−1/2} it grows like k^{(δ−2β)/2} when
    δ > 2β and stays bounded otherwise.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    s = np.asarray(arclength(grid.geo.u))
    best = 0.0
    for near in (s <= radius, math.pi - s <= radius):
        if np.count_nonzero(near) < 2:
            continue
        gap = np.abs(s[near][:, None] - s[near][None, :])
        upper = np.triu(np.ones_like(gap, dtype=bool), k=1) & (gap > 0)
        scale = gap[upper] ** delta
        values = grid.values[near]
        for j in range(grid.n_t):
            dv = np.abs(values[:, j][:, None] - values[:, j][None, :])[upper]
            best = max(best, float(np.max(dv / scale)))
    return best


def _invert_derivative(spline: CubicSpline, targets: np.ndarray, lo: float, hi: float, n_fine: int) -> np.ndarray:
    """Solve spline'(u) = target for increasing spline' by interpolation and Newton polish."""
    fine = np.linspace(lo, hi, n_fine)
    slope = spline(fine, 1)
    u = np.interp(targets, slope, fine)
    d1, d2 = spline.derivative(1), spline.derivative(2)
    for _ in range(3):
        curvature = d2(u)
        safe = curvature > 0
        step = np.where(safe, (d1(u) - targets) / np.where(safe, curvature, 1.0), 0.0)
        u = np.clip(u - step, lo, hi)
    return u


def _require_convex(values: np.ndarray, nodes: np.ndarray, name: str) -> None:
    h = np.diff(nodes)
    slopes = np.diff(values) / h
    if np.any(np.diff(slopes) <= 0):
        raise NonConvexBoundary(f"{name} is not strictly convex")


def legendre_transform(values: np.ndarray, nodes: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Legendre dual G(x) = x·u(x) − F(u(x)) with F'(u(x)) = x.

    Returns (G(targets), u(targets)). Targets outside the slope range are clipped.

    Raises:
        NonConvexBoundary: If F is not strictly convex on the nodes.
    """
    values = np.asarray(values, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    _require_convex(values, nodes, "potential")
    spline = CubicSpline(nodes, values)
    lo_slope, hi_slope = float(spline(nodes[0], 1)), float(spline(nodes[-1], 1))
    targets = np.asarray(targets, dtype=float)
    if np.min(targets) < lo_slope or np.max(targets) > hi_slope:
        logger.warning("legendre transform: targets outside slope range [%g, %g] clipped", lo_slope, hi_slope)
        targets = np.clip(targets, lo_slope, hi_slope)
    u_star = _invert_derivative(spline, targets, nodes[0], nodes[-1], 4 * nodes.size)
    return targets * u_star - spline(u_star), u_star


def legendre_oracle(
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    geo: BackgroundGeometry,
    n_x: int = DEFAULT_ORACLE_N_X,
    *,
    n_t: int,
) -> PotentialGrid:
    """
    ε = 0 geodesic between S¹-invariant boundary potentials.

    The duals G_i of F_i = F⁰ + φ_i are interpolated linearly in t in the
    moment coordinate x, which is sampled as x = σ(v) on a uniform v grid.
    Transforming back gives u_t(x) = (1−t)u₀(x) + t·u₁(x) and
    F_t = (1−t)F₀(u₀) + t·F₁(u₁), splined onto the u grid.

    Raises:
        NonConvexBoundary: If either boundary potential is not strictly u-convex.
    """
    u = geo.u
    splines = []
    for name, b in (("boundary0", boundary0), ("boundary1", boundary1)):
        F = geo.F0() + np.asarray(b, dtype=float)
        density = fs_density(u) + second_derivative(np.asarray(b, dtype=float), geo.h_u)
        if np.min(density) <= 0:
            raise NonConvexBoundary(f"{name} is not strictly u-convex (min F_uu = {np.min(density):.3e})")
        _require_convex(F, u, name)
        splines.append(CubicSpline(u, F))

    lo = max(float(s(u[0], 1)) for s in splines)
    hi = min(float(s(u[-1], 1)) for s in splines)
    if not 0.0 < lo < hi < 1.0:
        raise NonConvexBoundary("boundary potentials do not share a moment interval")
    x = expit(np.linspace(logit(lo), logit(hi), n_x))
    u0 = _invert_derivative(splines[0], x, u[0], u[-1], n_x)
    u1 = _invert_derivative(splines[1], x, u[0], u[-1], n_x)
    F0_at, F1_at = splines[0](u0), splines[1](u1)

    t = np.linspace(0.0, 1.0, n_t)
    values = np.empty((geo.n_u, n_t))
    worst_gap = 0.0
    for j, tj in enumerate(t):
        u_t = (1.0 - tj) * u0 + tj * u1
        F_t = (1.0 - tj) * F0_at + tj * F1_at
        keep = np.concatenate([[True], np.diff(u_t) > 0])
        worst_gap = max(worst_gap, u_t[keep][0] - u[0], u[-1] - u_t[keep][-1])
        values[:, j] = CubicSpline(u_t[keep], F_t[keep])(u) - geo.F0()
    if worst_gap > geo.h_u:
        logger.warning("legendre oracle covers the u range only up to %.3g; ends extrapolated", worst_gap)
    values[:, 0] = boundary0
    values[:, -1] = boundary1
    return PotentialGrid.from_values(geo, values)


def oracle_comparison(outcomes: Sequence, oracle: PotentialGrid) -> list[float]:
    """sup |φ_ε − φ_oracle| per outcome (SolveOutcome or PotentialGrid)."""
    distances = []
    for item in outcomes:
        grid = getattr(item, "grid", item)
        if grid.values.shape != oracle.values.shape:
            raise ValueError("oracle_comparison needs grids of the same dimensions")
        distances.append(float(np.max(np.abs(grid.values - oracle.values))))
    if any(b > a for a, b in zip(distances, distances[1:])):
        logger.warning("oracle distances are not monotone: %s", distances)
    return distances


def chern_bound_terms(w: WeightSpec, geo: BackgroundGeometry) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """
    Per section factor: ((log(s+η))'', (s/(s+η))(log s)'', −C1·F⁰_uu) at the nodes.

    Uses the exact derivatives s' = ±s(1−s), s'' = s(1−s)(1−2s). C1 defaults
    to 1 per section factor. A constant weight has no factors.
    """
    if w.kind == PRODUCT:
        factors = w.components
    elif w.kind == SECTION_POWER:
        factors = (w,)
    elif w.kind == CUSTOM and not w.sample_u:
        factors = ()
    else:
        raise ValueError(f"chern bound check needs section-power factors, got '{w.kind}'")
    u = geo.u
    density = fs_density(u)
    terms = []
    for factor in factors:
        s = section_norm_sq(u, factor.point)
        ds = s * (1.0 - s)
        d2s = ds * (1.0 - 2.0 * s)
        left = (d2s * (s + w.eta) - ds**2) / (s + w.eta) ** 2
        middle = -(s / (s + w.eta)) * density
        c1 = 1.0 if factor.C1 is None else factor.C1
        terms.append((left, middle, -c1 * density))
    return terms


def chern_bound_check(w: WeightSpec, geo: BackgroundGeometry) -> float:
    """
    Worst margin of (log(|s|²+η))'' ≥ (|s|²/(|s|²+η))(log|s|²)'' ≥ −C1·F⁰_uu.

    Non-negative when both inequalities hold; 0 for a constant weight.
    """
    margin = 0.0 if w.kind == CUSTOM else math.inf
    for left, middle, lower in chern_bound_terms(w, geo):
        margin = min(margin, float(np.min(left - middle)), float(np.min(middle - lower)))
    return margin


def linlog_identity_check(grid: PotentialGrid, psi: np.ndarray) -> float:
    """
    Max interior discrepancy of 𝔇 log ψ = 𝔇ψ/ψ − |∂ψ|²_φ/ψ² − 𝒜(ψ).

    |∂ψ|²_φ = ψ_u²/F_uu and 𝒜(ψ) = (ψ_t − F_tu ψ_u/F_uu)²/(ψ² 𝒢). Each term
    is computed from its own stencils.
    """
    psi = np.broadcast_to(np.asarray(psi, dtype=float), grid.values.shape)
    if np.min(psi) <= 0:
        raise ValueError("psi must be positive")
    F_uu, _, F_tu = grid.hessian
    G = grid.det / F_uu
    psi_u = first_derivative(psi, grid.geo.h_u, axis=0)
    psi_t = first_derivative(psi, grid.h_t, axis=1)
    lhs = linearized_field(grid, np.log(psi))
    grad_sq = psi_u**2 / F_uu
    mixed = (psi_t - F_tu * psi_u / F_uu) ** 2 / (psi**2 * G)
    rhs = linearized_field(grid, psi) / psi - grad_sq / psi**2 - mixed
    return float(np.max(np.abs(lhs - rhs)[INTERIOR]))


def mirror_grid(grid: PotentialGrid) -> PotentialGrid:
    """Apply u ↔ −u and t ↔ 1−t (swaps the divisor points and the boundary slices)."""
    if not math.isclose(grid.geo.u_min, -grid.geo.u_max):
        raise ValueError("mirror_grid needs a u range symmetric about 0")
    return PotentialGrid.from_values(grid.geo, grid.values[::-1, ::-1])


def _suprema(report: EstimateReport) -> dict[str, float]:
    out = {name: getattr(report, name) for name in SUPREMUM_FIELDS}
    out.update({f"holder_{k}": v for k, v in report.holder_seminorm.items()})
    return out


def truncation_drift(report: EstimateReport, extended_report: EstimateReport) -> float:
    """Largest relative change of a monitored supremum between two truncations."""
    base, ext = _suprema(report), _suprema(extended_report)
    drift = 0.0
    for key, value in base.items():
        if key not in ext:
            continue
        scale = max(abs(value), abs(ext[key]), 1e-300)
        drift = max(drift, abs(ext[key] - value) / scale)
    return drift


def restrict_to(grid: PotentialGrid, geo: BackgroundGeometry) -> PotentialGrid:
    """Restrict a grid on an extended u range to the nodes of geo (same spacing)."""
    offset = int(round((geo.u_min - grid.geo.u_min) / grid.geo.h_u))
    if offset < 0 or not math.isclose(grid.geo.h_u, geo.h_u):
        raise ValueError("geo must be a sub-range of the grid's u range with the same spacing")
    return PotentialGrid.from_values(geo, grid.values[offset : offset + geo.n_u])


def audit_instance(
    grid: PotentialGrid,
    w: WeightSpec,
    eps: float,
    f: FieldLike = None,
    *,
    beta: float,
    mu: float,
    deltas: Sequence[float] = (),
    C1: Optional[float] = None,
    config: Optional[dict] = None,
) -> EstimateReport:
    """Run every audit on one solved grid and collect the verdicts."""
    audit = max_principle_audit(grid, w, eps, f, C1=C1)
    if audit.branch == "inadmissible":
        interior = boundary = math.inf
    else:
        interior, boundary = weighted_laplacian_sup(grid, w)
    weighted_grad, grad = weighted_gradient_sup(grid, beta, mu)
    holder = {f"{d:g}": divisor_holder_seminorm(grid, d) for d in deltas}
    lap_ok = interior <= boundary * 1.1 + audit.interior_bound
    finite = all(math.isfinite(v) for v in (interior, boundary, weighted_grad, *holder.values()))
    report = EstimateReport(
        sup_dt_phi=time_derivative_sup(grid),
        sup_weighted_lap=interior,
        boundary_weighted_lap=boundary,
        sup_weighted_grad=weighted_grad,
        grad_mu=mu,
        holder_seminorm=holder,
        mp_interior_max=audit.interior_max,
        mp_boundary_max=audit.boundary_max,
        mp_constant_C=audit.C,
        mp_interior_bound=audit.interior_bound,
        mp_branch=audit.branch,
        sup_unweighted_grad=grad,
        verdicts={"max_principle": audit.passed, "weighted_laplacian": bool(lap_ok), "finite": finite},
        eps=eps,
        eta=w.eta,
        config=dict(config or {}),
    )
    logger.info("audit eps=%s: mp=%s lap=%s", eps, audit.branch, lap_ok)
    return report
