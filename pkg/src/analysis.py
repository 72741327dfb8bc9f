"""
Pure-function oracles for the interpolation lemmas behind the Hölder and
gradient estimates, with brute-force counterparts and the lemma suites the
`lemmas` command runs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.stats import linregress

from config import GROWTH_SLOPE_TOL, QUAD_EPSREL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrowthProfile:
    """Samples (τ, C(τ)) with τ strictly decreasing toward 0, optionally a power law τ^{−γ}."""

    samples: tuple[tuple[float, float], ...]
    exponent_gamma: Optional[float] = None

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ValueError("a growth profile needs at least two samples")
        taus = [s[0] for s in self.samples]
        if any(not 0.0 < tau <= 1.0 for tau in taus):
            raise ValueError("taus must lie in (0, 1]")
        if any(b >= a for a, b in zip(taus, taus[1:])):
            raise ValueError("taus must be strictly decreasing")
        if any(s[1] <= 0 for s in self.samples):
            raise ValueError("profile values must be positive")

    @classmethod
    def power_law(cls, gamma: float, taus, scale: float = 1.0) -> "GrowthProfile":
        taus = np.asarray(taus, dtype=float)
        return cls(samples=tuple(zip(taus.tolist(), (scale * taus**-gamma).tolist())), exponent_gamma=gamma)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], taus) -> "GrowthProfile":
        taus = np.asarray(taus, dtype=float)
        return cls(samples=tuple(zip(taus.tolist(), np.asarray(fn(taus), dtype=float).tolist())))

    @property
    def taus(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def scale(self) -> float:
        """c in C(τ) = c·τ^{−γ} for power laws."""
        gamma = self.exponent_gamma or 0.0
        return float(self.values[0] * self.taus[0] ** gamma)

    def __call__(self, tau):
        """C(τ): exact for power laws, log-log interpolation of the samples otherwise."""
        if self.exponent_gamma is not None:
            return self.scale * np.power(tau, -self.exponent_gamma)
        log_tau = np.log(self.taus[::-1])
        log_val = np.log(self.values[::-1])
        return np.exp(np.interp(np.log(tau), log_tau, log_val))


@dataclass(frozen=True)
class HolderVerdict:
    passed: bool
    constant: float
    slope: float


def holder_from_growth(profile: GrowthProfile, mu: float) -> HolderVerdict:
    """
    Decide whether limsup τ^{1−μ}λ(τ) is finite from the samples.

    The criterion: over the last decade of τ-samples, the fitted slope of
    log(τ^{1−μ}λ) against log(1/τ) is at most GROWTH_SLOPE_TOL. The implied
    μ-Hölder constant sums the dyadic pieces: sup·(1 + 2/(1 − 2^{−μ})).
    """
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must be in (0, 1]")
    taus, values = profile.taus, profile.values
    scaled = taus ** (1.0 - mu) * values
    tail = taus <= taus[-1] * 10.0
    if np.count_nonzero(tail) < 2:
        tail = np.zeros_like(tail)
        tail[-2:] = True
    fit = linregress(np.log(1.0 / taus[tail]), np.log(scaled[tail]))
    slope = float(fit.slope)
    passed = slope <= GROWTH_SLOPE_TOL
    constant = float(np.max(scaled)) * (1.0 + 2.0 / (1.0 - 2.0**-mu)) if passed else math.inf
    return HolderVerdict(passed=passed, constant=constant, slope=slope)


def combined_exponent(mu: float, nu: float) -> float:
    """μ/(μ+ν): Hölder exponent from tangential C^μ plus gradient growth of order ν."""
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must be in (0, 1]")
    if nu < 0:
        raise ValueError("nu must be >= 0")
    return mu / (mu + nu)


@dataclass(frozen=True)
class ThetaResult:
    value: float
    closed_form: Optional[float] = None
    exponent: Optional[float] = None

    @property
    def converges(self) -> Optional[bool]:
        """Whether Θ stays bounded as τ → 0 (power-law profiles only)."""
        return None if self.exponent is None else self.exponent > 0


def theta_integral(tau: float, mu: float, profile: GrowthProfile) -> ThetaResult:
    """
    Θ_μ(τ) = ∫_τ^1 t^{μ−1} C(t) dt.

    Integrated in s = log t so integrands blowing up like t^{−2} at τ stay
    well resolved. Power-law profiles also get the closed form and the
    exponent μ − γ of Θ(τ) ~ τ^{μ−γ}.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    value, _ = quad(
        lambda s: math.exp(mu * s) * float(profile(math.exp(s))),
        math.log(tau),
        0.0,
        epsabs=0.0,
        epsrel=QUAD_EPSREL,
        limit=200,
    )
    if profile.exponent_gamma is None:
        return ThetaResult(value=float(value))
    exponent = mu - profile.exponent_gamma
    if exponent == 0:
        closed = -profile.scale * math.log(tau)
    else:
        closed = profile.scale * (1.0 - tau**exponent) / exponent
    return ThetaResult(value=float(value), closed_form=float(closed), exponent=exponent)


@dataclass(frozen=True)
class GradientPrediction:
    exponent: float
    branch: str


def gradient_growth_prediction(beta: float, mu: float) -> GradientPrediction:
    """
    Exponent μ − 2 + 2β of the gradient growth |∇φ| ≲ r^{μ−2+2β}.

    branch is "bounded" when β > 1/2 or when 2β < μ < 1 (the integral
    controlling the gradient is then finite), "growth" otherwise.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1]")
    if not 0.0 <= mu < 1.0:
        raise ValueError("mu must be in [0, 1)")
    bounded = beta > 0.5 or 2.0 * beta < mu < 1.0
    return GradientPrediction(exponent=mu - 2.0 + 2.0 * beta, branch="bounded" if bounded else "growth")


@dataclass(frozen=True)
class SobolevHolder:
    mu: float
    applicable: bool
    beta_threshold: float


def sobolev_holder(p: float, d: int) -> SobolevHolder:
    """μ = min(1, 2 − 2d/p) when 1/ξ ∈ L^p with p > d; conical weights need β > 1 − 1/d."""
    if not p > 0:
        raise ValueError("p must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    return SobolevHolder(mu=min(1.0, 2.0 - 2.0 * d / p), applicable=p > d, beta_threshold=1.0 - 1.0 / d)


def _as_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def brute_force_holder(points: np.ndarray, values: np.ndarray, mu: float, *, chunk: int = 512) -> float:
    """max |f(a) − f(b)| / |a − b|^μ over all pairs of distinct points."""
    pts = _as_points(points)
    vals = np.asarray(values, dtype=float)
    n = vals.size
    best = 0.0
    for start in range(0, n - 1, chunk):
        stop = min(start + chunk, n)
        dist = np.sqrt(np.sum((pts[start:stop, None, :] - pts[None, :, :]) ** 2, axis=-1))
        diff = np.abs(vals[start:stop, None] - vals[None, :])
        valid = (np.arange(n)[None, :] > np.arange(start, stop)[:, None]) & (dist > 0)
        if np.any(valid):
            best = max(best, float(np.max(diff[valid] / dist[valid] ** mu)))
    return best


def fit_holder_exponent(
    points: np.ndarray,
    values: np.ndarray,
    *,
    n_bins: int = 6,
    min_distance: Optional[float] = None,
    max_distance: Optional[float] = None,
    chunk: int = 512,
) -> float:
    """
    Hölder exponent fitted from pairwise oscillation.

    Pairs are binned by log-distance. Each bin contributes the largest |Δf|
    together with the shortest distance at which it occurs; the slope of
    log|Δf| against log distance over the bins is the measured exponent.
    Bins must be wide enough to hold a grid spacing.
    """
    pts = _as_points(points)
    vals = np.asarray(values, dtype=float)
    n = vals.size
    extent = float(np.max(np.ptp(pts, axis=0)))
    lo = min_distance if min_distance is not None else extent / 100.0
    hi = max_distance if max_distance is not None else extent / 2.0
    edges = np.geomspace(lo, hi, n_bins + 1)

    def binned_pairs():
        for start in range(0, n - 1, chunk):
            stop = min(start + chunk, n)
            dist = np.sqrt(np.sum((pts[start:stop, None, :] - pts[None, :, :]) ** 2, axis=-1))
            diff = np.abs(vals[start:stop, None] - vals[None, :])
            valid = (np.arange(n)[None, :] > np.arange(start, stop)[:, None]) & (dist >= lo) & (dist <= hi)
            idx = np.clip(np.searchsorted(edges, dist[valid], side="right") - 1, 0, n_bins - 1)
            yield idx, dist[valid], diff[valid]

    bin_max = np.zeros(n_bins)
    for idx, _, diff in binned_pairs():
        np.maximum.at(bin_max, idx, diff)
    bin_dist = np.full(n_bins, np.inf)
    for idx, dist, diff in binned_pairs():
        at_max = diff >= bin_max[idx] * (1.0 - 1e-12)
        np.minimum.at(bin_dist, idx[at_max], dist[at_max])

    filled = bin_max > 0
    if np.count_nonzero(filled) < 2:
        raise ValueError("not enough distance bins populated to fit an exponent")
    fit = linregress(np.log(bin_dist[filled]), np.log(bin_max[filled]))
    return float(fit.slope)


@dataclass(frozen=True)
class LemmaResult:
    name: str
    passed: bool
    detail: str


def _holder_by_refinement(alpha: float, mu: float, sizes: tuple[int, int]) -> bool:
    """Brute-force verdict for x^α: the seminorm does not grow by more than 10% under refinement."""
    coarse, fine = (np.linspace(0.0, 1.0, n) for n in sizes)
    ratio = brute_force_holder(fine, fine**alpha, mu) / brute_force_holder(coarse, coarse**alpha, mu)
    return ratio <= 1.1


def _suite_holder_growth(sizes: tuple[int, int]) -> LemmaResult:
    taus = np.geomspace(1.0, 1e-6, 61)
    mismatches = []
    for alpha in np.round(np.arange(0.1, 1.0, 0.1), 10):
        profile = GrowthProfile.from_function(lambda t, a=alpha: a * t ** (a - 1.0), taus)
        for mu in (alpha - 0.1, alpha + 0.1):
            if not 0.0 < mu <= 1.0:
                continue
            oracle = holder_from_growth(profile, mu).passed
            brute = _holder_by_refinement(alpha, mu, sizes)
            if oracle != brute or oracle != (mu <= alpha):
                mismatches.append(f"alpha={alpha:g} mu={mu:g}")
    return LemmaResult("holder_from_growth vs brute force", not mismatches, ", ".join(mismatches) or "x^alpha family agrees")


def _suite_theta() -> LemmaResult:
    worst = 0.0
    monotone = True
    for gamma in (0.0, 0.5, 1.5):
        profile = GrowthProfile.power_law(gamma, np.geomspace(1.0, 1e-3, 4))
        for mu in (0.5, 0.9, 1.0):
            previous = None
            for tau in (0.5, 0.1, 0.01, 0.001):
                result = theta_integral(tau, mu, profile)
                worst = max(worst, abs(result.value - result.closed_form) / abs(result.closed_form))
                if previous is not None and result.value <= previous:
                    monotone = False
                previous = result.value
    passed = worst <= 1e-10 and monotone
    return LemmaResult("theta_integral closed forms", passed, f"max relative error {worst:.2e}")


def _suite_combined(n: int = 61) -> LemmaResult:
    grid = np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    points = np.column_stack([X.ravel(), Y.ravel()])
    measured = fit_holder_exponent(points, np.sqrt(np.abs(Y.ravel())), min_distance=2.0 * (grid[1] - grid[0]))
    predicted = combined_exponent(0.5, 0.5)
    homogeneous = all(
        math.isclose(combined_exponent(c * 0.4, c * 0.3), combined_exponent(0.4, 0.3)) for c in (0.5, 2.0)
    )
    passed = abs(measured - predicted) <= 0.05 and homogeneous
    return LemmaResult("combined_exponent model", passed, f"measured {measured:.3f} vs predicted {predicted:.3f}")


def _suite_sobolev() -> LemmaResult:
    instance = sobolev_holder(3.0, 2)
    passed = (
        math.isclose(instance.mu, 2.0 / 3.0)
        and instance.applicable
        and math.isclose(instance.beta_threshold, 0.5)
        and not sobolev_holder(2.0, 2).applicable
    )
    return LemmaResult("sobolev_holder instances", passed, f"mu={instance.mu:.4f} threshold={instance.beta_threshold:g}")


def _suite_gradient() -> LemmaResult:
    passed = (
        math.isclose(gradient_growth_prediction(0.75, 0.9).exponent, 0.4)
        and gradient_growth_prediction(0.25, 0.6).branch == "bounded"
        and gradient_growth_prediction(0.25, 0.4).branch == "growth"
    )
    return LemmaResult("gradient_growth_prediction instances", passed, "exponent and branch")


def run_lemma_suites(sizes: tuple[int, int] = (1_000, 10_000)) -> list[LemmaResult]:
    """Run every lemma oracle against its brute-force or closed-form counterpart."""
    results = [
        _suite_holder_growth(sizes),
        _suite_theta(),
        _suite_combined(),
        _suite_sobolev(),
        _suite_gradient(),
    ]
    for result in results:
        logger.info("lemma suite %s: %s (%s)", result.name, "pass" if result.passed else "FAIL", result.detail)
    return results
