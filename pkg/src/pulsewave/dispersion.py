"""Dispersion relation of the twisted linearization.

For each decay rate lam > 0 the unique speed making the twisted growth
rate vanish is c(lam) = -mu0(lam)/lam; the minimal front speed is the
minimum of that curve. The growth rate itself is the principal eigenvalue
of the twisted cell operator (elliptic media) or the negated principal
Floquet exponent (time-periodic media); its affinity mu(lam, c) =
mu(lam, 0) + lam*c holds exactly by construction in both paths.
"""

from dataclasses import dataclass

import numpy as np

from .discretize import assemble_twisted
from .errors import (
    BoundaryMinimum,
    DegenerateLambda,
    NoRootBracket,
    NotOnDispersion,
    SubcriticalSpeed,
)
from .spectral import floquet_exponent, principal_eigenpair

GOLD = (np.sqrt(5.0) - 1.0) / 2.0
DEFAULT_RANGE = (0.05, 8.0)


@dataclass
class DispersionCurve:
    """Sampled lam -> (mu0, c) data with the refined minimum attached."""

    lambdas: np.ndarray
    mu0: np.ndarray
    c_of_lambda: np.ndarray
    c_star: float
    lambda_star: float
    max_residual: float

    def as_rows(self):
        return list(zip(self.lambdas.tolist(), self.mu0.tolist(), self.c_of_lambda.tolist()))


def growth_rate(medium, grid, lam, speed, dt=None):
    """Principal growth rate of the twisted linearization; returns (value, residual)."""
    if lam < 0:
        raise ValueError("decay rate must be nonnegative")
    if medium.time_period is not None:
        res = floquet_exponent(medium, grid, lam, speed, dt=dt)
        return -res.value, res.residual
    res = principal_eigenpair(assemble_twisted(grid, medium, lam, speed))
    return res.value, res.residual


def speed_for_decay(medium, grid, lam, dt=None):
    """Speed at which perturbations decaying like exp(lam*x) are stationary."""
    if lam < 1e-6:
        raise DegenerateLambda(f"decay rate {lam} too close to zero")
    mu0, _ = growth_rate(medium, grid, lam, 0.0, dt=dt)
    return -mu0 / lam


def minimal_speed(medium, grid, lam_range=DEFAULT_RANGE, scan_points=64, rel_tol=1e-6, dt=None):
    """Minimal front speed: coarse log scan of c(lam) plus golden-section refinement.

    Returns (c_star, lambda_star, DispersionCurve). A boundary minimizer
    triggers one automatic widening of the range before BoundaryMinimum is
    raised. The refinement assumes the scanned curve is unimodal near its
    minimum; a guard falls back to a fine scan if the refined value
    disagrees with the coarse minimum.
    """
    lo, hi = lam_range
    if not 0 < lo < hi:
        raise ValueError("lambda range must satisfy 0 < lo < hi")

    def curve_at(lams):
        mu0 = np.empty(lams.size)
        resid = 0.0
        for i, lam in enumerate(lams):
            mu0[i], r = growth_rate(medium, grid, lam, 0.0, dt=dt)
            resid = max(resid, r)
        return mu0, -mu0 / lams, resid

    widened = False
    while True:
        lams = np.geomspace(lo, hi, scan_points)
        mu0, cs, resid = curve_at(lams)
        i_min = int(np.argmin(cs))
        if 0 < i_min < lams.size - 1:
            break
        if widened:
            raise BoundaryMinimum(
                f"c(lam) minimizer at lambda={lams[i_min]:.4g} on the range boundary"
            )
        lo, hi = lo / 4.0, hi * 4.0
        widened = True

    def c_of(lam):
        return speed_for_decay(medium, grid, lam, dt=dt)

    lam_a, lam_b = lams[i_min - 1], lams[i_min + 1]
    lam_star, c_star = _golden_min(c_of, lam_a, lam_b, rel_tol)

    coarse_min = float(cs[i_min])
    if c_star > coarse_min + 1e-6:
        # unimodality guard: fall back to a fine scan of the bracket
        fine = np.linspace(lam_a, lam_b, 4 * scan_points + 1)
        fine_c = np.array([c_of(l) for l in fine])
        j = int(np.argmin(fine_c))
        j0, j1 = max(j - 1, 0), min(j + 1, fine.size - 1)
        lam_star, c_star = _golden_min(c_of, fine[j0], fine[j1], rel_tol)

    curve = DispersionCurve(
        lambdas=lams,
        mu0=mu0,
        c_of_lambda=cs,
        c_star=float(c_star),
        lambda_star=float(lam_star),
        max_residual=float(resid),
    )
    return float(c_star), float(lam_star), curve


def _golden_min(f, a, b, rel_tol):
    x1 = b - GOLD * (b - a)
    x2 = a + GOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > rel_tol * max(abs(a), abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLD * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLD * (b - a)
            f2 = f(x2)
    xm = 0.5 * (a + b)
    return xm, f(xm)


@dataclass
class RootPair:
    """Decay-rate pair with zero twisted growth at a supercritical speed."""

    lam1: float
    lam2: float
    residual: float

    def __iter__(self):
        return iter((self.lam1, self.lam2))


def decay_roots(medium, grid, c, curve=None, tol=1e-8, dt=None):
    """The two decay rates lam1 < lam2 with vanishing growth at speed c.

    Bisection on mu(lam, c) on both sides of the dispersion minimizer;
    requires c > c_star and verifies positivity between the roots.
    """
    if curve is None:
        _, _, curve = minimal_speed(medium, grid, dt=dt)
    c_star, lam_star = curve.c_star, curve.lambda_star
    if c <= c_star + 1e-8:
        raise SubcriticalSpeed(f"speed {c} does not exceed c* = {c_star}")

    resid_cap = 0.0

    def mu(lam):
        nonlocal resid_cap
        val, r = growth_rate(medium, grid, lam, c, dt=dt)
        resid_cap = max(resid_cap, r)
        return val

    mu_star = mu(lam_star)
    if mu_star <= 0:
        raise NoRootBracket(f"growth at the minimizer is not positive: {mu_star}")

    lam1 = _bisect_root(mu, _march(mu, lam_star, direction=-1), lam_star, tol, increasing=True)
    lam2 = _bisect_root(mu, lam_star, _march(mu, lam_star, direction=+1), tol, increasing=False)
    mid_val = mu(0.5 * (lam1 + lam2))
    if mid_val <= 0:
        raise NoRootBracket("growth not positive between the located roots")
    return RootPair(lam1=float(lam1), lam2=float(lam2), residual=float(resid_cap))


def _march(mu, lam_star, direction, factor=1.6, max_steps=60):
    """Walk outward from the minimizer until the growth turns negative."""
    lam = lam_star
    for _ in range(max_steps):
        lam = lam / factor if direction < 0 else lam * factor
        if lam < 1e-12:
            break
        if mu(lam) < 0:
            return lam
    raise NoRootBracket("no sign change found while widening the bracket")


def _bisect_root(mu, lo, hi, tol, increasing):
    """Root of mu on [lo, hi] with mu(lo) and mu(hi) of opposite signs."""
    f_lo = mu(lo)
    f_hi = mu(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoRootBracket(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = mu(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)


def front_eigenfunction(medium, grid, c, lam, dt=None, gate=1e-6):
    """Positive periodic mode shaping the exponential tail at (c, lam).

    Requires the pair to sit on the dispersion relation (growth within
    `gate` of zero), otherwise NotOnDispersion is raised.
    """
    if medium.time_period is not None:
        res = floquet_exponent(medium, grid, lam, c, dt=dt)
        value = -res.value
        vec = res.vector
    else:
        res = principal_eigenpair(assemble_twisted(grid, medium, lam, c))
        value = res.value
        vec = res.vector
    if abs(value) > gate:
        raise NotOnDispersion(f"growth {value:.3e} at (c={c}, lam={lam}) exceeds {gate:.0e}")
    return vec
