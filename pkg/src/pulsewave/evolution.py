"""IMEX time integration of the semilinear parabolic equation.

One step solves (I - dt*D) u_new = u + dt*f(x, u) (+ boundary flux), with
D the flux-form divergence operator. The implicit factor is an M-matrix
and the explicit reaction map is monotone whenever dt stays below the
budget 1/(2 sup|f_u|), so the scheme preserves ordering and the invariant
region [0, p]. Daughter modules drive the stepper directly when they need
window recentering or twin runs with shared factorizations.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .discretize import (
    CLAMP,
    LineGrid,
    PeriodicGrid,
    assemble_divergence,
    attach_clamp_values,
)
from .errors import SolverFailure, StepTooLarge
from .io_utils import write_csv, write_json
from .medium import KPPLogistic, max_fu_magnitude


@dataclass
class Field:
    """Solution snapshot: flat node values over a grid at one time."""

    grid: object
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, float).ravel()
        if self.values.size != self.grid.size:
            raise ValueError("field length does not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def shaped(self):
        if getattr(self.grid, "transverse", None) is not None:
            return self.values.reshape(self.grid.n_nodes, -1)
        if isinstance(self.grid, PeriodicGrid) and self.grid.dimension == 2:
            return self.values.reshape(self.grid.n_points)
        return self.values


@dataclass
class Trajectory:
    """Snapshots at recorded times plus stepping metadata."""

    fields: list
    dt: float
    scheme: dict = field(default_factory=dict)
    recenters: list = field(default_factory=list)

    @property
    def times(self):
        return np.array([f.t for f in self.fields])

    def __post_init__(self):
        ts = self.times
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("record times must be strictly increasing")


def invariant_ceiling(medium):
    """Upper bound for the invariant region (carrying capacity scale)."""
    if isinstance(medium.reaction, KPPLogistic):
        x = np.linspace(0.0, medium.periods[0], 256, endpoint=False)
        coords = (x,) if medium.dimension == 1 else (x, np.zeros_like(x))
        vals = [medium.reaction.mu(coords, t) for t in np.linspace(0, medium.time_period or 1.0, 8)]
        return float(max(np.max(v) for v in vals))
    return float(np.max(medium.reaction.u_nodes))


def dt_budget(medium, u_max=None):
    """Largest step keeping the explicit reaction map order-preserving."""
    if u_max is None:
        u_max = invariant_ceiling(medium)
    sup = max_fu_magnitude(medium, u_max)
    if sup <= 0:
        return np.inf
    return 1.0 / (2.0 * sup)


def default_dt(medium, grid, u_max=None):
    h = grid.spacing if isinstance(grid, LineGrid) else min(grid.spacing)
    return min(dt_budget(medium, u_max), h)


class Stepper:
    """Cached-factorization IMEX stepper for one (medium, grid, dt) triple.

    right_clamp supplies the steady-state values at the virtual node past
    the right window edge for clamped windows (scalar, or one value per
    transverse node in 2-D). Time-periodic media refactor every step with
    coefficients frozen at the step midpoint.
    """

    def __init__(self, medium, grid, dt, right_clamp=None, enforce_budget=True):
        self.medium = medium
        self.grid = grid
        self.dt = float(dt)
        self.right_clamp = right_clamp
        budget = dt_budget(medium)
        self.budget = budget
        if enforce_budget and self.dt > budget * (1 + 1e-12):
            raise StepTooLarge(f"dt={dt} exceeds the monotonicity budget {budget:.6g}")
        self.time_dependent = medium.time_dependent
        self._coords_flat = tuple(np.asarray(c, float).ravel() for c in grid.coords())
        self._is_logistic = isinstance(medium.reaction, KPPLogistic)
        if self._is_logistic and not medium.reaction.mu.time_dependent:
            self._mu_flat = np.asarray(medium.reaction.mu(self._coords_flat), float)
            self._mu_flat = np.broadcast_to(self._mu_flat, (grid.size,)).copy()
        else:
            self._mu_flat = None
        if not self.time_dependent:
            self._factor, self._affine = self._build(t=None)

    def _build(self, t):
        op = assemble_divergence(self.grid, self.medium, t=t)
        if (
            isinstance(self.grid, LineGrid)
            and self.grid.boundary == CLAMP
        ):
            if self.right_clamp is None:
                raise ValueError("clamped window requires right_clamp values")
            attach_clamp_values(op, 0.0, self.right_clamp)
        affine = op.boundary_affine
        if op.is_banded:
            factor = kernels.tridiag_factor(
                -self.dt * op.lower,
                1.0 - self.dt * op.diag,
                -self.dt * op.upper,
                op.periodic,
            )
            return ("banded", factor), affine
        n = op.n_rows
        system = sp.identity(n, format="csr") - self.dt * op.matrix
        try:
            lu = spla.splu(system.tocsc())
        except RuntimeError as exc:  # pragma: no cover - elliptic systems are regular
            raise SolverFailure(str(exc)) from exc
        return ("sparse", lu), affine

    def _reaction(self, u, t):
        if self._mu_flat is not None:
            return u * (self._mu_flat - u)
        return np.asarray(
            self.medium.f(self._coords_flat, u, 0.0 if t is None else t), float
        )

    def advance_values(self, u, n_steps, t0=0.0):
        """Advance raw node values by n_steps; returns a new array."""
        u = np.asarray(u, float)
        if not self.time_dependent:
            kind, factor = self._factor
            if kind == "banded" and self._mu_flat is not None:
                return kernels.logistic_imex_run(
                    u, self._mu_flat, factor, self.dt, n_steps, self._affine
                )
            for _ in range(n_steps):
                rhs = u + self.dt * self._reaction(u, None)
                if self._affine is not None:
                    rhs += self.dt * self._affine
                u = factor.solve(rhs) if kind == "sparse" else kernels.tridiag_solve(factor, rhs)
            return u
        t = t0
        for _ in range(n_steps):
            (kind, factor), affine = self._build(t + 0.5 * self.dt)
            rhs = u + self.dt * self._reaction(u, t)
            if affine is not None:
                rhs += self.dt * affine
            u = factor.solve(rhs) if kind == "sparse" else kernels.tridiag_solve(factor, rhs)
            t += self.dt
        return u

    def advance_twin(self, u, delta, n_steps, t0=0.0):
        """Advance a reference field and a difference field together.

        The difference obeys the exact identity f(u + d) - f(u), evaluated
        in product form for the logistic family, so the twin difference
        never suffers the cancellation floor of subtracting two O(1)
        solutions. Returns (u, delta).
        """
        u = np.asarray(u, float)
        delta = np.asarray(delta, float)
        if not self.time_dependent:
            kind, factor = self._factor
            if kind == "banded" and self._mu_flat is not None:
                return kernels.logistic_twin_run(
                    u, delta, self._mu_flat, factor, self.dt, n_steps, self._affine
                )
            for _ in range(n_steps):
                rhs_d = delta + self.dt * self._reaction_diff(u, delta, None)
                rhs = u + self.dt * self._reaction(u, None)
                if self._affine is not None:
                    rhs += self.dt * self._affine
                if kind == "sparse":
                    u, delta = factor.solve(rhs), factor.solve(rhs_d)
                else:
                    u = kernels.tridiag_solve(factor, rhs)
                    delta = kernels.tridiag_solve(factor, rhs_d)
            return u, delta
        t = t0
        for _ in range(n_steps):
            (kind, factor), affine = self._build(t + 0.5 * self.dt)
            rhs_d = delta + self.dt * self._reaction_diff(u, delta, t)
            rhs = u + self.dt * self._reaction(u, t)
            if affine is not None:
                rhs += self.dt * affine
            if kind == "sparse":
                u, delta = factor.solve(rhs), factor.solve(rhs_d)
            else:
                u = kernels.tridiag_solve(factor, rhs)
                delta = kernels.tridiag_solve(factor, rhs_d)
            t += self.dt
        return u, delta

    def _reaction_diff(self, u, delta, t):
        if self._mu_flat is not None:
            return delta * (self._mu_flat - 2.0 * u - delta)
        tt = 0.0 if t is None else t
        return np.asarray(
            self.medium.f(self._coords_flat, u + delta, tt)
            - self.medium.f(self._coords_flat, u, tt),
            float,
        )

    def step_field(self, fld):
        values = self.advance_values(fld.values, 1, t0=fld.t)
        return Field(grid=fld.grid, values=values, t=fld.t + self.dt)


def step(fld, medium, dt, right_clamp=None):
    """Single IMEX update of a field (one-shot assembly and factorization)."""
    stepper = Stepper(medium, fld.grid, dt, right_clamp=right_clamp)
    return stepper.step_field(fld)


def evolve(u0, medium, t_end, record_times=None, dt=None, right_clamp=None):
    """March a field to t_end, recording the requested snapshot times.

    record_times must be multiples of dt (within 1e-9 relative); the initial
    field is always included.
    """
    if dt is None:
        dt = default_dt(medium, u0.grid)
    stepper = Stepper(medium, u0.grid, dt, right_clamp=right_clamp)
    n_total = _steps_for(t_end - u0.t, dt)
    if record_times is None:
        record_steps = [n_total]
    else:
        record_steps = sorted({_steps_for(t - u0.t, dt) for t in record_times})
        if record_steps and record_steps[-1] > n_total:
            raise ValueError("record time beyond t_end")
    fields = [Field(grid=u0.grid, values=u0.values.copy(), t=u0.t)]
    done = 0
    u = u0.values
    for target in record_steps:
        if target == 0:
            continue
        u = stepper.advance_values(u, target - done, t0=u0.t + done * dt)
        done = target
        fields.append(Field(grid=u0.grid, values=u, t=u0.t + done * dt))
    if done < n_total:
        u = stepper.advance_values(u, n_total - done, t0=u0.t + done * dt)
        fields.append(Field(grid=u0.grid, values=u, t=u0.t + n_total * dt))
    return Trajectory(fields=fields, dt=dt, scheme={"method": "imex_euler", "dt": dt})


def _steps_for(span, dt):
    steps = span / dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
        raise ValueError(f"time {span} is not a multiple of dt={dt}")
    return int(round(steps))


def comparison_check(u0, v0, medium, t_end, n_checks=10, dt=None, tol=1e-12):
    """Evolve an ordered pair with identical steps; verify order preservation.

    Returns (ok, worst_gap) where worst_gap is the largest violation of
    u <= v + tol over all recorded times.
    """
    if u0.grid is not v0.grid and u0.grid != v0.grid:
        raise ValueError("fields must share a grid")
    if np.any(u0.values > v0.values):
        raise ValueError("initial data must be ordered u0 <= v0")
    if dt is None:
        dt = default_dt(medium, u0.grid)
    n_total = _steps_for(t_end, dt)
    checks = np.unique(np.linspace(0, n_total, n_checks + 1).astype(int))
    stepper = Stepper(medium, u0.grid, dt)
    u, v = u0.values.copy(), v0.values.copy()
    done = 0
    worst = 0.0
    for target in checks:
        if target > done:
            u = stepper.advance_values(u, target - done, t0=done * dt)
            v = stepper.advance_values(v, target - done, t0=done * dt)
            done = target
        worst = max(worst, float(np.max(u - v)))
    return worst <= tol, worst


def dump_trajectory_csv(trajectory, path):
    """Rows (t, x, u); 2-D fields list x as the flattened node index pair."""
    rows = []
    for fld in trajectory.fields:
        coords = tuple(np.asarray(c, float).ravel() for c in fld.grid.coords())
        for i, u in enumerate(fld.values):
            rows.append((fld.t, *(c[i] for c in coords), u))
    ncoord = len(trajectory.fields[0].grid.coords())
    header = ["t"] + [f"x{i + 1}" for i in range(ncoord)] + ["u"]
    write_csv(path, header, rows)


def dump_trajectory_binary(trajectory, stem):
    """Raw float64 snapshots plus a JSON sidecar describing grid and times."""
    data = np.stack([f.values for f in trajectory.fields])
    data.tofile(f"{stem}.bin")
    grid = trajectory.fields[0].grid
    sidecar = {
        "times": [float(t) for t in trajectory.times],
        "n_snapshots": int(data.shape[0]),
        "n_nodes": int(data.shape[1]),
        "dt": float(trajectory.dt),
        "dtype": "float64",
        "grid": _grid_meta(grid),
    }
    write_json(f"{stem}.json", sidecar)


def load_trajectory_binary(stem, grid):
    import json

    with open(f"{stem}.json") as fh:
        sidecar = json.load(fh)
    data = np.fromfile(f"{stem}.bin", dtype=np.float64).reshape(
        sidecar["n_snapshots"], sidecar["n_nodes"]
    )
    fields = [
        Field(grid=grid, values=row, t=t) for row, t in zip(data, sidecar["times"])
    ]
    return Trajectory(fields=fields, dt=sidecar["dt"])


def _grid_meta(grid):
    if isinstance(grid, PeriodicGrid):
        return {
            "type": "periodic",
            "n_points": list(grid.n_points),
            "periods": [float(p) for p in grid.periods],
        }
    meta = {
        "type": "line",
        "n_per_period": grid.n_per_period,
        "period": float(grid.period),
        "n_nodes": grid.n_nodes,
        "offset_nodes": grid.offset_nodes,
        "boundary": grid.boundary,
    }
    if grid.transverse is not None:
        meta["transverse"] = {
            "n_points": list(grid.transverse.n_points),
            "periods": [float(p) for p in grid.transverse.periods],
        }
    return meta
