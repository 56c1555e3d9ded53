"""Periodic media: diffusion fields, reaction terms and hypothesis checks.

A medium bundles a (possibly time-periodic) diffusion coefficient, a
monostable reaction term and the cell periods. Coefficient functions are
additively separable truncated trigonometric series, so spatial and time
periodicity hold by construction; a tabulated reaction with bilinear
interpolation is available as a fallback. The check_* operations are
sample-based certificates of the structural hypotheses (ellipticity,
sublinearity, eventual negativity, stability condition), not proofs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonElliptic, NoBoundFound

PERIODICITY_TOL = 1e-12
TIME_AXIS = "t"


@dataclass(frozen=True)
class TrigTerm:
    """One Fourier mode along a single axis (spatial index or "t")."""

    axis: object
    k: int
    cos: float = 0.0
    sin: float = 0.0


@dataclass(frozen=True)
class TrigSeries:
    """const + sum of cos/sin modes, each periodic along its own axis.

    `periods[i]` is the spatial period of axis i; `time_period` the period
    of any "t" terms. Integer wavenumbers keep every mode exactly periodic
    on the cell.
    """

    const: float
    terms: tuple = ()
    periods: tuple = (1.0,)
    time_period: float = None

    def __post_init__(self):
        for term in self.terms:
            if term.k < 1 or term.k != int(term.k):
                raise ValueError(f"wavenumber must be a positive integer: {term}")
            if term.axis == TIME_AXIS:
                if self.time_period is None:
                    raise ValueError("time term in a series without time_period")
            elif not 0 <= term.axis < len(self.periods):
                raise ValueError(f"axis {term.axis} out of range: {term}")

    def __call__(self, x, t=0.0):
        """Evaluate at spatial coordinates x (array or tuple of arrays)."""
        coords = (x,) if not isinstance(x, (tuple, list)) else tuple(x)
        out = np.full(np.broadcast(*coords).shape if coords else (), self.const)
        for term in self.terms:
            if term.axis == TIME_AXIS:
                phase = 2.0 * np.pi * term.k * t / self.time_period
            else:
                phase = 2.0 * np.pi * term.k * coords[term.axis] / self.periods[term.axis]
            out = out + term.cos * np.cos(phase) + term.sin * np.sin(phase)
        return out

    @property
    def time_dependent(self):
        return any(term.axis == TIME_AXIS for term in self.terms)


@dataclass(frozen=True)
class KPPLogistic:
    """Reaction u * (mu(x) - u) with spatially varying carrying capacity."""

    mu: TrigSeries

    kind = "kpp_logistic"

    def f(self, x, u, t=0.0):
        return u * (self.mu(x, t) - u)

    def fu(self, x, u, t=0.0):
        return self.mu(x, t) - 2.0 * u

    @property
    def time_dependent(self):
        return self.mu.time_dependent


@dataclass(frozen=True)
class TabulatedReaction:
    """Bilinearly interpolated samples of f and f_u over one period in x.

    x_nodes must span exactly [0, L] with matching first/last columns so the
    periodic extension is continuous; u_nodes must start at 0 with f(x,0)=0.
    """

    x_nodes: np.ndarray
    u_nodes: np.ndarray
    f_table: np.ndarray
    fu_table: np.ndarray

    kind = "tabulated"

    def __post_init__(self):
        x, u = np.asarray(self.x_nodes, float), np.asarray(self.u_nodes, float)
        if x.ndim != 1 or u.ndim != 1:
            raise ValueError("tabulated reaction needs 1-D node arrays")
        if self.f_table.shape != (x.size, u.size):
            raise ValueError("f_table shape mismatch")
        if self.fu_table.shape != (x.size, u.size):
            raise ValueError("fu_table shape mismatch")
        if abs(u[0]) > 0:
            raise ValueError("u grid must start at 0")
        if np.max(np.abs(self.f_table[:, 0])) > PERIODICITY_TOL:
            raise ValueError("f(x, 0) must vanish")
        if np.max(np.abs(self.f_table[0] - self.f_table[-1])) > PERIODICITY_TOL:
            raise ValueError("f table is not periodic in x")

    @property
    def period(self):
        return float(self.x_nodes[-1] - self.x_nodes[0])

    def _interp(self, table, x, u):
        xq = np.mod(np.asarray(x, float), self.period)
        uq = np.asarray(u, float)
        xq, uq = np.broadcast_arrays(xq, uq)
        ix = np.clip(np.searchsorted(self.x_nodes, xq) - 1, 0, self.x_nodes.size - 2)
        iu = np.clip(np.searchsorted(self.u_nodes, uq) - 1, 0, self.u_nodes.size - 2)
        wx = (xq - self.x_nodes[ix]) / (self.x_nodes[ix + 1] - self.x_nodes[ix])
        wu = (uq - self.u_nodes[iu]) / (self.u_nodes[iu + 1] - self.u_nodes[iu])
        wu = np.clip(wu, 0.0, None)  # linear extrapolation above the table is allowed
        return (
            table[ix, iu] * (1 - wx) * (1 - wu)
            + table[ix + 1, iu] * wx * (1 - wu)
            + table[ix, iu + 1] * (1 - wx) * wu
            + table[ix + 1, iu + 1] * wx * wu
        )

    def f(self, x, u, t=0.0):
        coords = x[0] if isinstance(x, (tuple, list)) else x
        return self._interp(self.f_table, coords, u)

    def fu(self, x, u, t=0.0):
        coords = x[0] if isinstance(x, (tuple, list)) else x
        return self._interp(self.fu_table, coords, u)

    @property
    def time_dependent(self):
        return False


@dataclass(frozen=True)
class DiffusionField:
    """Diagonal, uniformly elliptic diffusion coefficient.

    1-D media store a single entry a(x); 2-D media store the two diagonal
    entries. Off-diagonal couplings are rejected up front: the operator
    assembly only supports diagonal tensors.
    """

    dimension: int
    entries: tuple

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("only 1-D and 2-D media are supported")
        if len(self.entries) != self.dimension:
            raise ValueError(
                "diffusion must provide exactly the diagonal entries; "
                "off-diagonal coefficients are not supported"
            )

    def value(self, axis, x, t=0.0):
        return self.entries[axis](x, t)

    @property
    def time_dependent(self):
        return any(e.time_dependent for e in self.entries)


@dataclass(frozen=True)
class Medium:
    """Diffusion + reaction on a periodic cell, propagation along axis 0."""

    diffusion: DiffusionField
    reaction: object
    periods: tuple
    time_period: float = None
    name: str = "medium"

    def __post_init__(self):
        if len(self.periods) != self.diffusion.dimension:
            raise ValueError("periods do not match the diffusion dimension")
        if any(p <= 0 for p in self.periods):
            raise ValueError("periods must be positive")
        if self.time_period is not None and self.time_period <= 0:
            raise ValueError("time period must be positive")
        self._check_periodicity()

    @property
    def dimension(self):
        return self.diffusion.dimension

    @property
    def time_dependent(self):
        return self.diffusion.time_dependent or self.reaction.time_dependent

    def f(self, x, u, t=0.0):
        return self.reaction.f(x, u, t)

    def fu(self, x, u, t=0.0):
        return self.reaction.fu(x, u, t)

    def _sample_points(self, n=13):
        axes = [np.linspace(0.0, L, n, endpoint=False) + 0.3 * L / n for L in self.periods]
        if self.dimension == 1:
            return (axes[0],)
        g = np.meshgrid(*axes, indexing="ij")
        return tuple(a.ravel() for a in g)

    def _check_periodicity(self):
        x = self._sample_points()
        u = np.linspace(0.1, 1.7, 5)[:, None]
        times = [0.0] if self.time_period is None else [0.0, 0.37 * self.time_period]
        for t in times:
            for i, L in enumerate(self.periods):
                shifted = tuple(
                    c + L if j == i else c for j, c in enumerate(x)
                )
                if np.max(np.abs(self.f(x, u, t) - self.f(shifted, u, t))) > PERIODICITY_TOL:
                    raise ValueError(f"reaction is not periodic along axis {i}")
                for ax in range(self.dimension):
                    da = np.abs(
                        self.diffusion.value(ax, x, t) - self.diffusion.value(ax, shifted, t)
                    )
                    if np.max(da) > PERIODICITY_TOL:
                        raise ValueError(f"diffusion entry {ax} is not periodic along axis {i}")
        if self.time_period is not None:
            t0, t1 = 0.21 * self.time_period, 1.21 * self.time_period
            if np.max(np.abs(self.f(x, u, t0) - self.f(x, u, t1))) > PERIODICITY_TOL:
                raise ValueError("reaction is not time-periodic")
            for ax in range(self.dimension):
                da = np.abs(self.diffusion.value(ax, x, t0) - self.diffusion.value(ax, x, t1))
                if np.max(da) > PERIODICITY_TOL:
                    raise ValueError(f"diffusion entry {ax} is not time-periodic")


def constant_series(value, periods=(1.0,), time_period=None):
    return TrigSeries(const=float(value), periods=tuple(periods), time_period=time_period)


def homogeneous_fisher(mu=1.0, diffusivity=1.0, period=1.0):
    """Classic logistic medium with constant coefficients (1-D)."""
    periods = (period,)
    return Medium(
        diffusion=DiffusionField(1, (constant_series(diffusivity, periods),)),
        reaction=KPPLogistic(constant_series(mu, periods)),
        periods=periods,
        name="homogeneous_fisher",
    )


def _unit_directions(dimension, count=16):
    if dimension == 1:
        return np.array([[1.0]])
    angles = np.arange(count) * np.pi / count
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def validate_ellipticity(medium, n_samples=64):
    """Smallest Rayleigh quotient xi.A(x)xi / |xi|^2 over a deterministic net.

    Raises NonElliptic when the estimate is not strictly positive.
    """
    if n_samples < 16:
        raise ValueError("need at least 16 samples per dimension")
    axes = [np.linspace(0.0, L, n_samples, endpoint=False) for L in medium.periods]
    if medium.dimension == 1:
        x = (axes[0],)
    else:
        g = np.meshgrid(*axes, indexing="ij")
        x = tuple(a.ravel() for a in g)
    times = [0.0]
    if medium.time_period is not None:
        times = np.linspace(0.0, medium.time_period, 8, endpoint=False)
    worst = np.inf
    for t in times:
        diag = np.stack(
            [medium.diffusion.value(ax, x, t) for ax in range(medium.dimension)]
        )
        for xi in _unit_directions(medium.dimension):
            quot = np.einsum("i,i...->...", xi**2, diag)
            worst = min(worst, float(np.min(quot)))
    if worst <= 0.0:
        raise NonElliptic(f"ellipticity estimate {worst} is not positive")
    return worst


def check_sublinearity(medium, u_grid, n_x=64):
    """Certify that s -> f(x,s)/s is non-increasing along u_grid.

    Returns (True, None) or (False, (x, s, s_next)) with the first witness.
    """
    u = np.asarray(u_grid, float)
    if u.ndim != 1 or np.any(u <= 0) or np.any(np.diff(u) <= 0):
        raise ValueError("u_grid must be strictly increasing and positive")
    x = _sample_axis_points(medium, n_x)
    g = np.stack([medium.f(x, s) / s for s in u])  # (n_u, n_x)
    rises = g[1:] - g[:-1] > 1e-12
    if not rises.any():
        return True, None
    iu, ix = np.argwhere(rises)[0]
    witness_x = tuple(float(c.ravel()[ix]) for c in _as_tuple(x))
    return False, (witness_x if len(witness_x) > 1 else witness_x[0], float(u[iu]), float(u[iu + 1]))


def check_bound_M(medium, search_ceiling, n_u=2000, n_x=64):
    """Smallest grid value M with f(x, s) <= 0 for all sampled x and s >= M."""
    if search_ceiling <= 0:
        raise ValueError("search ceiling must be positive")
    u = np.linspace(0.0, float(search_ceiling), n_u + 1)[1:]
    x = _sample_axis_points(medium, n_x)
    fmax = np.array([float(np.max(medium.f(x, s))) for s in u])
    ok = fmax <= 1e-13
    # suffix scan: M is the first grid point from which f stays non-positive
    good_from = np.flip(np.logical_and.accumulate(np.flip(ok)))
    idx = np.argmax(good_from)
    if not good_from[idx]:
        raise NoBoundFound(f"f stays positive somewhere up to {search_ceiling}")
    return float(u[idx])


def check_condition_C(medium, u_grid, x_grid):
    """True iff f_u <= f/u everywhere sampled, strictly at some x for all u."""
    u = np.asarray(u_grid, float)
    if u.size == 0 or np.any(u <= 0):
        raise ValueError("u_grid must be nonempty and positive")
    x = x_grid if isinstance(x_grid, (tuple, list)) else (np.asarray(x_grid, float),)
    if any(np.asarray(c).size == 0 for c in x):
        raise ValueError("x_grid must be nonempty")
    gap = np.stack(
        [medium.f(x, s) / s - medium.fu(x, s) for s in u]
    )  # (n_u, n_x); >= 0 required, > 0 at some common x
    if np.min(gap) < -1e-12:
        return False
    strict_everywhere_in_u = np.all(gap > 1e-12, axis=0)
    return bool(np.any(strict_everywhere_in_u))


def max_fu_magnitude(medium, u_max, n_x=64, n_u=64):
    """sup |f_u(x, u)| over the cell and u in [0, u_max]; time-sampled if periodic."""
    x = _sample_axis_points(medium, n_x)
    u = np.linspace(0.0, u_max, n_u)[:, None]
    times = [0.0]
    if medium.time_period is not None:
        times = np.linspace(0.0, medium.time_period, 16, endpoint=False)
    return max(float(np.max(np.abs(medium.fu(x, u, t)))) for t in times)


def validation_certificate(medium, u_grid=None, search_ceiling=8.0):
    """Run all hypothesis checks and return a JSON-ready report."""
    alpha0 = validate_ellipticity(medium)
    m_bound = check_bound_M(medium, search_ceiling)
    if u_grid is None:
        u_grid = np.linspace(0.05, 1.2 * m_bound, 48)
    sub_ok, witness = check_sublinearity(medium, u_grid)
    cond_c = check_condition_C(medium, u_grid, _sample_axis_points(medium, 64))
    return {
        "medium": medium.name,
        "ellipticity_lower_bound": alpha0,
        "saturation_bound": m_bound,
        "sublinear": sub_ok,
        "sublinearity_witness": list(np.atleast_1d(witness[0])) + list(witness[1:])
        if witness
        else None,
        "stability_condition": cond_c,
    }


def _sample_axis_points(medium, n):
    axes = [np.linspace(0.0, L, n, endpoint=False) for L in medium.periods]
    if medium.dimension == 1:
        return (axes[0],)
    g = np.meshgrid(*axes, indexing="ij")
    return tuple(a.ravel() for a in g)


def _as_tuple(x):
    return tuple(x) if isinstance(x, (tuple, list)) else (x,)
