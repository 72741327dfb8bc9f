"""
Damped Newton solver for the regularized geodesic equation and the
(ε, η, k) continuity scheme, plus the C⁰ barrier constructions.

The unknowns are the interior nodes. Rows t = 0 and t = 1 are Dirichlet;
the lateral columns u = ±u_max are closed either by the reflecting condition
(the lateral difference φ[0] − φ[1] is the t-linear interpolation of the
boundary slices' differences) or by t-linear Dirichlet data. Both closures
enter the sparse Jacobian through a prolongation matrix P, so the Newton
system for the log residual reads K δ = −det·r with K = (det·𝔇)·P.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from config import (
    BARRIER_RHS_BOUND,
    BUMP_AMPLITUDE,
    BUMP_WIDTH,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    LATERAL_CLOSURES,
    MAX_BRIDGE_DEPTH,
    MIN_STEP,
    ROUNDOFF_SAFETY,
    STEP_ROUNDOFF_FACTOR,
    WARM_START_MIN_CONVEXITY,
)
from src.errors import BadBoundary, ConegeoError, EntryFailure, NoConvergence, PositivityLoss
from src.field import INTERIOR, FieldLike, PotentialGrid, is_admissible, log_residual
from src.geometry import BackgroundGeometry, DivisorData, bump_profile, smoothed_boundary
from src.stencils import second_derivative
from src.weights import WeightSpec

logger = logging.getLogger(__name__)

NEUMANN, DIRICHLET = LATERAL_CLOSURES


@dataclass(frozen=True)
class ScheduleEntry:
    eps: float
    eta: float
    smoothing_k: int


@dataclass(frozen=True)
class Schedule:
    """Ordered (ε, η, k) entries driving the continuity run."""

    entries: tuple[ScheduleEntry, ...]
    p: float

    def __post_init__(self):
        if not self.entries:
            raise ValueError("schedule needs at least one entry")
        if not self.p > 0:
            raise ValueError("p must be positive")
        for prev, cur in zip(self.entries, self.entries[1:]):
            if not cur.eps < prev.eps:
                raise ValueError("eps must be strictly decreasing")
            if cur.smoothing_k < prev.smoothing_k:
                raise ValueError("smoothing_k must be non-decreasing")
        for idx, entry in enumerate(self.entries):
            if not (entry.eps > 0 and entry.eta > 0):
                raise ValueError(f"entry {idx}: eps and eta must be positive")
            if entry.smoothing_k < 1:
                raise ValueError(f"entry {idx}: smoothing_k must be >= 1")
            if entry.eps > entry.eta**self.p * (1.0 + 1e-12):
                logger.warning(
                    "entry %d: eps = %g exceeds eta^p = %g; the C0 barrier no longer dominates",
                    idx,
                    entry.eps,
                    entry.eta**self.p,
                )

    @classmethod
    def from_eps(
        cls,
        eps_list: list[float],
        p: float,
        eta_list: Optional[list[float]] = None,
        k_list: Optional[list[int]] = None,
    ) -> "Schedule":
        """η defaults to ε^{1/p} and k to round(1/ε)."""
        if eta_list is not None and len(eta_list) != len(eps_list):
            raise ValueError("eta_list must match eps_list in length")
        if k_list is not None and len(k_list) != len(eps_list):
            raise ValueError("k_list must match eps_list in length")
        entries = []
        for idx, eps in enumerate(eps_list):
            eta = eta_list[idx] if eta_list is not None else eps ** (1.0 / p)
            k = k_list[idx] if k_list is not None else max(1, round(1.0 / eps))
            entries.append(ScheduleEntry(eps=float(eps), eta=float(eta), smoothing_k=int(k)))
        return cls(entries=tuple(entries), p=float(p))

    @classmethod
    def geometric(cls, eps_start: float, eps_end: float, count: int, p: float) -> "Schedule":
        if count < 1:
            raise ValueError("count must be >= 1")
        if count == 1:
            return cls.from_eps([eps_start], p)
        return cls.from_eps(list(np.geomspace(eps_start, eps_end, count)), p)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    grid: PotentialGrid
    iterations: int
    final_residual: float
    damping_history: list[float] = field(default_factory=list)
    admissible: bool = True
    eps: Optional[float] = None
    eta: Optional[float] = None
    residual_floor: float = 0.0


@dataclass(frozen=True)
class BoundarySpec:
    """
    Boundary slices built from the smoothed conical potential.

    boundary0 = start_scale·φᵏ
    boundary1 = end_scale·φᵏ + shift + bump·(Gaussian bump)
    """

    start_scale: float = 0.0
    end_scale: float = 1.0
    shift: float = 0.0
    bump: float = 0.0

    def slices(self, div: DivisorData, k: int, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        smooth = np.asarray(smoothed_boundary(div, k, u))
        b0 = self.start_scale * smooth
        b1 = self.end_scale * smooth + self.shift
        if self.bump:
            b1 = b1 + self.bump * np.asarray(bump_profile(u, BUMP_AMPLITUDE, BUMP_WIDTH))
        return b0, b1


def _check_closure(lateral: str) -> None:
    if lateral not in LATERAL_CLOSURES:
        raise ValueError(f"Unknown lateral closure '{lateral}'. Choose from: {', '.join(LATERAL_CLOSURES)}")


def apply_closure(values: np.ndarray, boundary0: np.ndarray, boundary1: np.ndarray, lateral: str = NEUMANN) -> np.ndarray:
    """Overwrite the lateral columns' interior nodes with the closure values."""
    _check_closure(lateral)
    out = np.array(values, dtype=float)
    t = np.linspace(0.0, 1.0, out.shape[1])[1:-1]
    for edge, inner in ((0, 1), (-1, -2)):
        if lateral == NEUMANN:
            gap = (1.0 - t) * (boundary0[edge] - boundary0[inner]) + t * (boundary1[edge] - boundary1[inner])
            out[edge, 1:-1] = out[inner, 1:-1] + gap
        else:
            out[edge, 1:-1] = (1.0 - t) * boundary0[edge] + t * boundary1[edge]
    return out


def _interpolant(boundary0: np.ndarray, boundary1: np.ndarray, n_t: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n_t)
    return (1.0 - t)[None, :] * boundary0[:, None] + t[None, :] * boundary1[:, None]


def _check_boundary(geo: BackgroundGeometry, boundary0: np.ndarray, boundary1: np.ndarray) -> None:
    for name, b in (("boundary0", boundary0), ("boundary1", boundary1)):
        if b.shape != (geo.n_u,):
            raise BadBoundary(f"{name} must have shape ({geo.n_u},), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise BadBoundary(f"{name} has non-finite values")
        density = geo.F0_uu() + second_derivative(b, geo.h_u)
        if np.min(density[1:-1]) <= 0:
            i = int(np.argmin(density[1:-1])) + 1
            raise BadBoundary(f"{name} is not u-admissible: F_uu = {density[i]:.3e} at u = {geo.u[i]:.4f}")


def convexity_threshold(
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    *,
    geo: BackgroundGeometry,
    n_t: int,
) -> float:
    """Smallest M with det Hess F > 0 for the interpolant plus M(t² − t): max F_tu²/(2F_uu)."""
    b0, b1 = np.asarray(boundary0, dtype=float), np.asarray(boundary1, dtype=float)
    _check_boundary(geo, b0, b1)
    F_uu, _, F_tu = PotentialGrid.from_values(geo, _interpolant(b0, b1, n_t)).hessian
    return float(np.max((F_tu**2 / (2.0 * F_uu))[INTERIOR]))


def initial_guess(
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    M: Optional[float] = None,
    *,
    geo: BackgroundGeometry,
    n_t: int,
    lateral: str = NEUMANN,
) -> PotentialGrid:
    """
    Convexified interpolation φ = (1−t)φ₀ + tφ₁ + M(t² − t).

    M=None picks max(1, 2·M*) with M* the convexity threshold.

    Raises:
        BadBoundary: If a boundary slice is not u-admissible.
    """
    b0, b1 = np.asarray(boundary0, dtype=float), np.asarray(boundary1, dtype=float)
    threshold = convexity_threshold(b0, b1, geo=geo, n_t=n_t)
    if M is None:
        M = max(1.0, 2.0 * threshold)
    elif M <= threshold:
        logger.warning("M = %g is at or below the convexity threshold %g", M, threshold)
    t = np.linspace(0.0, 1.0, n_t)
    values = _interpolant(b0, b1, n_t) + M * (t**2 - t)[None, :]
    return PotentialGrid.from_values(geo, apply_closure(values, b0, b1, lateral))


def _node_index(n_t: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    return i * n_t + j


def prolongation(n_u: int, n_t: int, lateral: str = NEUMANN) -> sparse.csr_matrix:
    """Map interior corrections to full-grid corrections, honouring the lateral closure."""
    _check_closure(lateral)
    ii, jj = np.meshgrid(np.arange(1, n_u - 1), np.arange(1, n_t - 1), indexing="ij")
    cols = np.arange(ii.size)
    rows = [_node_index(n_t, ii.ravel(), jj.ravel())]
    col_list = [cols]
    if lateral == NEUMANN:
        j = np.arange(1, n_t - 1)
        first = (j - 1)  # interior column index of (1, j)
        last = (n_u - 3) * (n_t - 2) + (j - 1)  # interior column index of (n_u-2, j)
        rows += [_node_index(n_t, np.zeros_like(j), j), _node_index(n_t, np.full_like(j, n_u - 1), j)]
        col_list += [first, last]
    r = np.concatenate(rows)
    c = np.concatenate(col_list)
    return sparse.csr_matrix((np.ones(r.size), (r, c)), shape=(n_u * n_t, ii.size))


def assemble_operator(
    F_uu: np.ndarray,
    F_tt: np.ndarray,
    F_tu: np.ndarray,
    h_u: float,
    h_t: float,
) -> sparse.csr_matrix:
    """
    Nine-point stencil of ψ ↦ F_tt ψ_uu + F_uu ψ_tt − 2F_tu ψ_tu at interior rows.

    Coefficient arrays are full (n_u, n_t) fields; only interior entries are used.
    Rows index interior nodes, columns index all nodes (u outer).
    """
    n_u, n_t = F_uu.shape
    a, b, c = F_tt[INTERIOR].ravel(), F_uu[INTERIOR].ravel(), F_tu[INTERIOR].ravel()
    ii, jj = np.meshgrid(np.arange(1, n_u - 1), np.arange(1, n_t - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    row = np.arange(ii.size)
    stencil = [
        (0, 0, -2.0 * a / h_u**2 - 2.0 * b / h_t**2),
        (-1, 0, a / h_u**2),
        (1, 0, a / h_u**2),
        (0, -1, b / h_t**2),
        (0, 1, b / h_t**2),
    ]
    for di in (-1, 1):
        for dj in (-1, 1):
            stencil.append((di, dj, -c * di * dj / (2.0 * h_u * h_t)))
    rows = np.concatenate([row] * len(stencil))
    cols = np.concatenate([_node_index(n_t, ii + di, jj + dj) for di, dj, _ in stencil])
    data = np.concatenate([coef for _, _, coef in stencil])
    return sparse.coo_matrix((data, (rows, cols)), shape=(ii.size, n_u * n_t)).tocsr()


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r[INTERIOR] ** 2)))


def _max_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r[INTERIOR])))


def roundoff_floor(grid: PotentialGrid) -> np.ndarray:
    """
    Per-node log residual that round-off in the stored values alone can produce.

    A machine-size relative error in φ moves the discrete φ_uu, φ_tt and φ_tu
    by at most their stencils' absolute weight sums; d(log det) carries that
    through the cofactors. Only nodes where det Hess F is tiny (next to the
    truncated poles, or at very small ε) get a floor comparable to DEFAULT_TOL.
    Boundary rows and lateral columns are 0.
    """
    F_uu, F_tt, F_tu = grid.hessian
    h_u, h_t = grid.geo.h_u, grid.h_t
    scale = ROUNDOFF_SAFETY * np.finfo(float).eps * (1.0 + float(np.max(np.abs(grid.values))))
    spread = 4.0 * np.abs(F_tt) / h_u**2 + 4.0 * np.abs(F_uu) / h_t**2 + 2.0 * np.abs(F_tu) / (h_u * h_t)
    out = np.zeros(grid.values.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[INTERIOR] = (scale * spread / np.abs(grid.det))[INTERIOR]
    return out


def _excess(r: np.ndarray, floor: np.ndarray) -> np.ndarray:
    """Residual with the round-off floor taken off each node's magnitude."""
    return np.sign(r) * np.maximum(np.abs(r) - floor, 0.0)


def newton_solve(
    start: PotentialGrid,
    eps: float,
    w: WeightSpec,
    f: FieldLike = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    lateral: str = NEUMANN,
) -> SolveOutcome:
    """
    Solve log det Hess F − log F⁰_uu = log ε + f − p log ζ_η at the interior nodes.

    Each step halves its length until the trial iterate is admissible and the
    RMS of the residual excess over the round-off floor decreases. The solve
    has converged when every node's residual is within tol of its floor, or
    when the line search stalls on a Newton step that is itself round-off.

    Raises:
        PositivityLoss: If start is inadmissible, or no step down to MIN_STEP
            gives an admissible iterate.
        NoConvergence: If max_iter is exhausted or the line search stagnates.
    """
    if not eps > 0:
        raise ValueError("newton_solve needs eps > 0")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    P = prolongation(start.geo.n_u, start.n_t, lateral)
    grid = start
    r = log_residual(grid, eps, w, f)
    floor = roundoff_floor(grid)
    history: list[float] = []
    iterations = 0
    while _max_norm(_excess(r, floor)) > tol:
        if iterations >= max_iter:
            raise NoConvergence(
                f"no convergence after {iterations} iterations (residual {_max_norm(r):.3e})",
                iterations=iterations,
                residual=_max_norm(r),
            )
        F_uu, F_tt, F_tu = grid.hessian
        K = assemble_operator(F_uu, F_tt, F_tu, grid.geo.h_u, grid.h_t) @ P
        rhs = -(grid.det * r)[INTERIOR].ravel()
        delta = (P @ spsolve(K.tocsc(), rhs)).reshape(grid.values.shape)
        if not np.all(np.isfinite(delta)):
            raise NoConvergence("singular Newton system", iterations=iterations, residual=_max_norm(r))

        step, seen_admissible, accepted = 1.0, False, None
        current = _rms(_excess(r, floor))
        while step >= MIN_STEP:
            trial = grid.with_values(grid.values + step * delta)
            if is_admissible(trial):
                seen_admissible = True
                r_trial = log_residual(trial, eps, w, f)
                floor_trial = roundoff_floor(trial)
                if _rms(_excess(r_trial, floor_trial)) < current:
                    accepted = (trial, r_trial, floor_trial)
                    break
            step *= 0.5
        iterations += 1
        if accepted is None:
            if not seen_admissible:
                raise PositivityLoss(f"no admissible step down to {MIN_STEP:g} at iteration {iterations}")
            step_size = float(np.max(np.abs(delta)))
            resolution = STEP_ROUNDOFF_FACTOR * np.finfo(float).eps * (1.0 + float(np.max(np.abs(grid.F))))
            if step_size <= resolution:
                logger.info(
                    "newton stalled on a round-off step at iteration %d (|delta| = %.3e, residual %.3e)",
                    iterations,
                    step_size,
                    _max_norm(r),
                )
                break
            raise NoConvergence(
                f"line search stagnated at iteration {iterations} (residual {_max_norm(r):.3e})",
                iterations=iterations,
                residual=_max_norm(r),
            )
        grid, r, floor = accepted
        history.append(step)
        logger.debug("newton %d: residual=%.3e floor=%.3e step=%g", iterations, _max_norm(r), _max_norm(floor), step)

    final = _max_norm(r)
    logger.info("newton converged: eps=%g iterations=%d residual=%.3e", eps, iterations, final)
    return SolveOutcome(
        grid=grid,
        iterations=iterations,
        final_residual=final,
        damping_history=history,
        admissible=is_admissible(grid),
        eps=eps,
        eta=w.eta,
        residual_floor=_max_norm(floor),
    )


def warm_start(
    previous: PotentialGrid,
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    lateral: str = NEUMANN,
) -> Optional[PotentialGrid]:
    """
    Previous solution moved onto new boundary slices, or None if that leaves no admissible start.

    The slices are swapped in by a t-linear correction. Where the correction
    leaves det Hess F <= 0 the term M(t² − t) is added, with M twice the
    smallest value that restores det > 0; it changes neither F_uu nor F_tu.
    A correction that drives F_uu <= 0 cannot be repaired in t.
    """
    b0, b1 = np.asarray(boundary0, dtype=float), np.asarray(boundary1, dtype=float)
    shift = _interpolant(b0 - previous.boundary0, b1 - previous.boundary1, previous.n_t)
    values = apply_closure(previous.values + shift, b0, b1, lateral)
    values[:, 0], values[:, -1] = b0, b1
    grid = PotentialGrid.from_values(previous.geo, values)
    F_uu, F_tt, F_tu = grid.hessian
    if np.min(F_uu[INTERIOR]) <= 0:
        return None
    deficit = float(np.max(((F_tu**2 / F_uu - F_tt) / 2.0)[INTERIOR]))
    if deficit >= 0:
        M = max(2.0 * deficit, WARM_START_MIN_CONVEXITY)
        logger.debug("warm start: adding convexity M = %.3e", M)
        values = apply_closure(values + M * (grid.t**2 - grid.t)[None, :], b0, b1, lateral)
        grid = PotentialGrid.from_values(previous.geo, values)
    return grid if is_admissible(grid) else None


def bridge_entry(previous: ScheduleEntry, entry: ScheduleEntry) -> ScheduleEntry:
    """Geometric midpoint of two schedule entries in ε, η and k."""
    k = int(round(math.sqrt(previous.smoothing_k * entry.smoothing_k)))
    return ScheduleEntry(
        eps=math.sqrt(previous.eps * entry.eps),
        eta=math.sqrt(previous.eta * entry.eta),
        smoothing_k=min(max(k, previous.smoothing_k), entry.smoothing_k),
    )


def continuity_run(
    sched: Schedule,
    div: DivisorData,
    w: WeightSpec,
    f: FieldLike = None,
    *,
    geo: BackgroundGeometry,
    n_t: int,
    boundary: BoundarySpec = BoundarySpec(),
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    lateral: str = NEUMANN,
    max_bridges: int = MAX_BRIDGE_DEPTH,
    on_record: Optional[Callable[[dict], None]] = None,
) -> list[SolveOutcome]:
    """
    Solve the schedule entries in order, warm-starting each from the previous solution.

    Boundary slices are refreshed from smoothed_boundary(k) per entry and the
    weight is regularized with the entry's η. When a warm start is inadmissible
    or Newton fails from it, a bridge entry halfway (geometrically) between the
    two entries is solved first, nesting up to max_bridges deep; past that an
    inadmissible warm start falls back to the initial guess. on_record receives
    one {entry, eps, eta, iters, residual} record per schedule entry.

    Raises:
        EntryFailure: Wrapping the solver error, with the outcomes solved so far.
    """

    def newton(entry: ScheduleEntry, start: PotentialGrid) -> SolveOutcome:
        return newton_solve(start, entry.eps, w.with_eta(entry.eta), f, tol, max_iter, lateral=lateral)

    def solve(entry: ScheduleEntry, previous: Optional[tuple[PotentialGrid, ScheduleEntry]], depth: int) -> SolveOutcome:
        b0, b1 = boundary.slices(div, entry.smoothing_k, geo.u)
        if previous is None:
            return newton(entry, initial_guess(b0, b1, geo=geo, n_t=n_t, lateral=lateral))
        start = warm_start(previous[0], b0, b1, lateral)
        if start is not None:
            try:
                return newton(entry, start)
            except (NoConvergence, PositivityLoss) as exc:
                if depth >= max_bridges:
                    raise
                logger.info("eps=%g: newton failed from the warm start (%s)", entry.eps, exc)
        elif depth >= max_bridges:
            logger.warning("eps=%g: warm start inadmissible, falling back to initial guess", entry.eps)
            return newton(entry, initial_guess(b0, b1, geo=geo, n_t=n_t, lateral=lateral))
        mid = bridge_entry(previous[1], entry)
        logger.info("bridging eps=%g -> %g through eps=%g (k=%d)", previous[1].eps, entry.eps, mid.eps, mid.smoothing_k)
        bridged = solve(mid, previous, depth + 1)
        return solve(entry, (bridged.grid, mid), depth + 1)

    outcomes: list[SolveOutcome] = []
    previous: Optional[tuple[PotentialGrid, ScheduleEntry]] = None
    for idx, entry in enumerate(sched.entries):
        try:
            outcome = solve(entry, previous, 0)
        except (ConegeoError, ArithmeticError) as exc:
            logger.error("entry %d (eps=%g) failed: %s", idx, entry.eps, exc)
            raise EntryFailure(idx, exc, outcomes) from exc
        outcomes.append(outcome)
        previous = (outcome.grid, entry)
        record = {
            "entry": idx,
            "eps": entry.eps,
            "eta": entry.eta,
            "iters": outcome.iterations,
            "residual": outcome.final_residual,
        }
        logger.info("entry %d: eps=%g eta=%g iters=%d residual=%.3e", idx, entry.eps, entry.eta, outcome.iterations, outcome.final_residual)
        if on_record is not None:
            on_record(record)
    return outcomes


def supersolution(
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    *,
    geo: BackgroundGeometry,
    n_t: int,
    lateral: str = NEUMANN,
) -> PotentialGrid:
    """
    Upper barrier: h_uu/F⁰_uu + h_tt = −2 with the given Dirichlet data.

    For zero data h = t(1 − t).
    """
    b0, b1 = np.asarray(boundary0, dtype=float), np.asarray(boundary1, dtype=float)
    base = PotentialGrid.from_values(geo, apply_closure(_interpolant(b0, b1, n_t), b0, b1, lateral))
    density = np.broadcast_to(base.density, base.values.shape)
    ones = np.ones_like(density)
    d = base.partials
    residual = (d.phi_uu + density * d.phi_tt + 2.0 * density)[INTERIOR].ravel()
    P = prolongation(geo.n_u, n_t, lateral)
    K = assemble_operator(density, ones, np.zeros_like(density), geo.h_u, base.h_t) @ P
    delta = spsolve(K.tocsc(), -residual)
    if not np.all(np.isfinite(delta)):
        raise ConegeoError("supersolution linear solve failed: singular Poisson system")
    values = base.values + (P @ delta).reshape(base.values.shape)
    return PotentialGrid.from_values(geo, values)


def subsolution_constant(
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    *,
    geo: BackgroundGeometry,
    n_t: int,
    rhs_bound: float = BARRIER_RHS_BOUND,
) -> float:
    """Smallest A with det Hess F / F⁰_uu ≥ rhs_bound for the interpolant plus A·t(t−1)."""
    b0, b1 = np.asarray(boundary0, dtype=float), np.asarray(boundary1, dtype=float)
    _check_boundary(geo, b0, b1)
    interp = PotentialGrid.from_values(geo, _interpolant(b0, b1, n_t))
    F_uu, _, F_tu = interp.hessian
    required = (rhs_bound * interp.density + F_tu**2) / (2.0 * F_uu)
    return max(0.0, float(np.max(required[INTERIOR])))


def subsolution(
    boundary0: np.ndarray,
    boundary1: np.ndarray,
    A: Optional[float] = None,
    *,
    geo: BackgroundGeometry,
    n_t: int,
    rhs_bound: float = BARRIER_RHS_BOUND,
) -> PotentialGrid:
    """
    Lower barrier (1−t)φ₀ + tφ₁ + A·t(t−1).

    A is raised to the required constant when the given value is too small.
    """
    b0, b1 = np.asarray(boundary0, dtype=float), np.asarray(boundary1, dtype=float)
    required = subsolution_constant(b0, b1, geo=geo, n_t=n_t, rhs_bound=rhs_bound)
    if A is None or A < required:
        if A is not None:
            logger.debug("subsolution: raising A from %g to %g", A, required)
        A = required
    t = np.linspace(0.0, 1.0, n_t)
    values = _interpolant(b0, b1, n_t) + A * (t * (t - 1.0))[None, :]
    return PotentialGrid.from_values(geo, values)


@dataclass(frozen=True)
class SandwichReport:
    holds: bool
    max_below: float
    max_above: float
    worst_node: Optional[tuple[int, int]]
    tol: float


def sandwich_check(
    outcome,
    sub: PotentialGrid,
    sup: PotentialGrid,
    tol: float = 1e-8,
    margin: Optional[float] = None,
) -> SandwichReport:
    """
    Check sub − tol ≤ φ ≤ sup + tol pointwise.

    margin is the discretization allowance added to tol; defaults to max(h_u, h_t)².
    max_below is the largest sub − φ, max_above the largest φ − sup.
    """
    grid = outcome.grid if isinstance(outcome, SolveOutcome) else outcome
    if not (grid.values.shape == sub.values.shape == sup.values.shape):
        raise ValueError("sandwich_check needs grids of the same dimensions")
    if margin is None:
        margin = max(grid.geo.h_u, grid.h_t) ** 2
    total_tol = tol + margin
    below = sub.values - grid.values
    above = grid.values - sup.values
    max_below, max_above = float(np.max(below)), float(np.max(above))
    holds = max_below <= total_tol and max_above <= total_tol
    worst = None
    if not holds:
        source = below if max_below >= max_above else above
        i, j = np.unravel_index(int(np.argmax(source)), source.shape)
        worst = (int(i), int(j))
        logger.warning("sandwich violated at node %s by %.3e", worst, max(max_below, max_above))
    return SandwichReport(holds=holds, max_below=max_below, max_above=max_above, worst_node=worst, tol=total_tol)
