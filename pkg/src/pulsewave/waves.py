"""Positive steady states and pulsating front construction/diagnostics.

Fronts are built by evolution with speed selection through the initial
exponential decay rate: seeding min(p, e^(lam*x) v(x)) with (c, lam) on the
dispersion relation produces a front traveling leftward at speed c. The
window follows the front by whole-period recenter shifts (medium
coefficients and the cached factorization are shift-invariant), so runs of
arbitrary duration use a fixed-size grid. All positions are reported in
absolute coordinates (node index times spacing), which recentering leaves
exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .discretize import CLAMP, LineGrid, PeriodicGrid, assemble_divergence
from .dispersion import decay_roots, front_eigenfunction, minimal_speed
from .errors import (
    FrontLeftWindow,
    InsufficientDecayRegion,
    InsufficientRecord,
    NoConvergence,
    NotConverged,
    ZeroUnstableViolated,
)
from .evolution import Field, Stepper, default_dt, invariant_ceiling
from .medium import check_bound_M
from .spectral import principal_eigenpair


@dataclass
class SteadyState:
    """Positive periodic steady state with convergence certificates."""

    field: Field
    residual: float
    uniqueness_witness: float

    @property
    def cell_grid(self):
        return self.field.grid

    def cell_values(self):
        return self.field.shaped()

    @property
    def min_value(self):
        return float(np.min(self.field.values))

    @property
    def max_value(self):
        return float(np.max(self.field.values))

    def window_values(self, grid):
        """Periodic restriction of p to a window grid (exact node sampling)."""
        p = self.cell_values()
        n1 = self.cell_grid.n_points[0]
        idx = (grid.offset_nodes + np.arange(grid.n_nodes)) % n1
        if grid.transverse is None:
            if p.ndim != 1:
                raise ValueError("steady state dimension does not match the window")
            return p[idx]
        if p.ndim != 2 or p.shape[1] != grid.transverse.n_points[0]:
            raise ValueError("steady state transverse size does not match the window")
        return p[idx, :]

    def right_clamp(self, grid):
        """p at the virtual node just past the right window edge."""
        p = self.cell_values()
        n1 = self.cell_grid.n_points[0]
        j = (grid.offset_nodes + grid.n_nodes) % n1
        return p[j] if p.ndim == 1 else p[j, :]


def zero_state_rate(medium, grid):
    """Linearized growth rate of the zero state (instability when positive)."""
    op = assemble_divergence(grid, medium)
    coords = tuple(np.asarray(c, float).ravel() for c in grid.coords())
    weight = np.broadcast_to(np.asarray(medium.fu(coords, 0.0), float), (grid.size,))
    return principal_eigenpair(op.shifted_diag(weight))


def steady_state(medium, grid, residual_tol=1e-9, diff_tol=1e-10, max_time=2000.0, dt=None):
    """Positive periodic steady state by evolution from two independent starts.

    Starts at 0.1*max(mu) and at the saturation bound M; both runs iterate
    until successive snapshots differ by less than diff_tol and the explicit
    residual of div(A grad p) + f(x, p) drops under residual_tol. The
    sup-distance of the two limits is returned as a uniqueness witness.
    """
    rate = zero_state_rate(medium, grid)
    if rate.value <= 0:
        raise ZeroUnstableViolated(f"zero-state growth rate {rate.value:.3e} is not positive")
    ceiling = invariant_ceiling(medium)
    m_bound = check_bound_M(medium, search_ceiling=4.0 * ceiling)
    if dt is None:
        dt = default_dt(medium, grid, u_max=max(ceiling, m_bound))
    stepper = Stepper(medium, grid, dt)
    op = assemble_divergence(grid, medium)
    coords = tuple(np.asarray(c, float).ravel() for c in grid.coords())

    def residual_of(u):
        return float(np.max(np.abs(op.matvec(u) + medium.f(coords, u))))

    def converge(start_value):
        u = np.full(grid.size, start_value)
        chunk = max(1, int(round(0.5 / dt)))
        for _ in range(int(max_time / (chunk * dt)) + 1):
            u_next = stepper.advance_values(u, chunk)
            diff = float(np.max(np.abs(u_next - u)))
            u = u_next
            if diff < diff_tol and residual_of(u) < residual_tol:
                return u
        raise NoConvergence("steady-state iteration did not settle")

    p_low = converge(0.1 * ceiling)
    p_high = converge(m_bound)
    witness = float(np.max(np.abs(p_low - p_high)))
    if witness >= 1e-8:
        raise NoConvergence(f"steady-state limits differ by {witness:.3e}")
    result = SteadyState(
        field=Field(grid=grid, values=p_low, t=0.0),
        residual=residual_of(p_low),
        uniqueness_witness=witness,
    )
    if result.min_value <= 0:
        raise NoConvergence("steady state is not strictly positive")
    return result


def stability_of_p(medium, grid, steady):
    """Principal eigenvalue of the linearization at p (negative when stable)."""
    op = assemble_divergence(grid, medium)
    coords = tuple(np.asarray(c, float).ravel() for c in grid.coords())
    weight = np.asarray(medium.fu(coords, steady.field.values), float)
    return principal_eigenpair(op.shifted_diag(weight))


@dataclass
class WaveRecord:
    """Computed front: trajectory diagnostics and asymptotic fit."""

    c_target: float
    c_meas: float
    lam_seed: float
    critical: bool
    position_times: np.ndarray
    positions: np.ndarray
    pulsating_residual: float
    xi0: float
    weight_lam: float
    fit_amplitude: float
    fit_lambda: float
    final: Field
    steady: SteadyState
    front_mode: np.ndarray
    recenters: list
    theta: float
    c_star: float
    lambda_star: float


def build_front_initial(medium, grid, c, steady, lam, front_mode, theta=0.5, center_at=None):
    """min(p, e^(lam x) v(x)) with the theta-level placed at center_at.

    center_at defaults to the window midpoint.
    """
    if c <= 0 or lam <= 0:
        raise ValueError("speed and decay rate must be positive")
    p_win = steady.window_values(grid)
    v_cell = np.asarray(front_mode, float)
    n1 = steady.cell_grid.n_points[0]
    idx = (grid.offset_nodes + np.arange(grid.n_nodes)) % n1
    v_win = v_cell[idx] if v_cell.ndim == 1 else v_cell[idx, :]
    x = grid.axis_nodes(0)
    center = 0.5 * (grid.x_lo + grid.x_hi) if center_at is None else float(center_at)
    x0 = center
    for _ in range(2):
        tail = np.exp(lam * (x - x0))
        u0 = np.minimum(p_win.T, tail * v_win.T).T if p_win.ndim == 2 else np.minimum(
            p_win, tail * v_win
        )
        pos = _front_position(u0, p_win, x, theta)
        if pos is None:
            raise FrontLeftWindow("seed profile has no interior level crossing")
        x0 += center - pos
    return Field(grid=grid, values=u0.ravel(), t=0.0)


def flight_grid(
    n_per_period,
    period,
    c,
    c_star,
    t_end,
    tail_slack=15.0,
    min_depth=40.0,
    right_margin=10.0,
    transverse=None,
):
    """Window sized for a whole front flight without recentering.

    The seed goes right_margin periods from the right edge; the window is
    long enough that the exponential tail keeps at least
    max(min_depth, (c - c_star) t_end + tail_slack) periods of headroom at
    the final time (supercritical fronts consume their seeded tail at rate
    c - c_star). Returns (grid, seed_center).
    """
    depth = max(min_depth, (c - c_star) * t_end + tail_slack)
    n_window = int(np.ceil((c * t_end + depth + right_margin) / period))
    grid = LineGrid(
        n_per_period=n_per_period,
        period=period,
        n_nodes=n_window * n_per_period + 1,
        offset_nodes=0,
        transverse=transverse,
    )
    seed_center = grid.x_hi - right_margin * period
    return grid, seed_center


def _front_position(values, p_win, x, theta):
    """Leftmost interpolated crossing of u through theta*p, absolute coords."""
    if values.ndim == 2:
        g = np.max(values - theta * p_win, axis=1)
    else:
        g = values - theta * p_win
    above = g >= 0.0
    if not above.any() or above[0]:
        return None
    i = int(np.argmax(above))
    g0, g1 = g[i - 1], g[i]
    frac = -g0 / (g1 - g0) if g1 != g0 else 0.0
    return float(x[i - 1] + frac * (x[i] - x[i - 1]))


def front_position(fld, steady, theta=0.5):
    p_win = steady.window_values(fld.grid)
    return _front_position(fld.shaped(), p_win, fld.grid.axis_nodes(0), theta)


def measure_speed(trajectory, steady, theta=0.5, margin_periods=5.0):
    """Front speed from the position series of a recorded trajectory.

    Positions are the leftmost theta*p level crossings; the speed is minus
    the least-squares slope over the last half of the record. Raises
    FrontLeftWindow when the front comes within margin_periods of a window
    edge or never crosses the level in the interior.
    """
    times, positions = [], []
    for fld in trajectory.fields:
        grid = fld.grid
        pos = front_position(fld, steady, theta)
        if pos is None:
            raise FrontLeftWindow("no interior front in a recorded snapshot")
        margin = margin_periods * grid.period
        if pos - grid.x_lo < margin or grid.x_hi - pos < margin:
            raise FrontLeftWindow(f"front at {pos:.3f} within {margin_periods} periods of an edge")
        times.append(fld.t)
        positions.append(pos)
    return fit_speed(np.array(times), np.array(positions))


def fit_speed(times, positions):
    """(c_meas, times, positions): minus the slope of the last-half LS fit."""
    if times.size < 4:
        raise InsufficientRecord("need at least 4 position samples")
    half = times >= times[0] + 0.5 * (times[-1] - times[0])
    slope, _ = np.polyfit(times[half], positions[half], 1)
    return -float(slope), times, positions


def shift_window(fld, k, steady, fill_lam=None, heal_periods=4.0, band_periods=3.0,
                 right_fill="steady"):
    """Translate a windowed field by k whole periods (new grid, same data).

    With fill_lam set, the deep tail on the left (the newly exposed strip
    plus heal_periods of boundary-layer-tainted data next to the seam) is
    rewritten as amp * e^(fill_lam * x), with amp fitted over the adjacent
    healthy band: the far field then keeps the asymptotic decay the run was
    seeded with. Without fill_lam the strip is zero-filled. Nodes exposed
    on the right take steady-state values ("steady") or zero ("zero",
    for difference fields).
    """
    grid = fld.grid
    new_grid = grid.shifted(k)
    shaped = fld.shaped()
    out = np.empty_like(shaped)
    n_shift = k * grid.n_per_period  # source index offset
    src_lo = max(0, n_shift)
    src_hi = min(grid.n_nodes, grid.n_nodes + n_shift)
    dst_lo = src_lo - n_shift
    dst_hi = src_hi - n_shift
    out[dst_lo:dst_hi] = shaped[src_lo:src_hi]
    if dst_lo > 0:
        if fill_lam is None:
            out[:dst_lo] = 0.0
        else:
            n_per = grid.n_per_period
            b0 = dst_lo + int(round(heal_periods * n_per))
            b1 = b0 + int(round(band_periods * n_per))
            if b1 >= grid.n_nodes:
                raise FrontLeftWindow("window too small for the tail-fill band")
            x_new = new_grid.axis_nodes(0)
            band = out[b0:b1]
            band_flat = band if band.ndim == 1 else band.mean(axis=1)
            if np.any(band_flat <= 0):
                raise FrontLeftWindow("tail-fill band contains non-positive values")
            amp = np.exp(np.mean(np.log(band_flat) - fill_lam * x_new[b0:b1]))
            tail = amp * np.exp(fill_lam * x_new[:b0])
            if out.ndim == 2:
                shape_profile = band.mean(axis=0)
                shape_profile = shape_profile / shape_profile.mean()
                out[:b0] = tail[:, None] * shape_profile[None, :]
            else:
                out[:b0] = tail
    if dst_hi < grid.n_nodes:
        if right_fill == "zero":
            out[dst_hi:] = 0.0
        else:
            p_win_new = steady.window_values(new_grid)
            out[dst_hi:] = p_win_new[dst_hi:]
    return Field(grid=new_grid, values=out.ravel(), t=fld.t)


class FrontRun:
    """Drives one front: chunked stepping, recentering, position tracking."""

    def __init__(
        self, medium, grid, steady, dt=None, theta=0.5, margin_periods=10.0, fill_lam=None
    ):
        if not isinstance(grid, LineGrid) or grid.boundary != CLAMP:
            raise ValueError("front runs need a clamped window grid")
        self.medium = medium
        self.steady = steady
        self.theta = theta
        self.margin = margin_periods * grid.period
        self.fill_lam = fill_lam
        self.dt = default_dt(medium, grid) if dt is None else dt
        self.stepper = Stepper(medium, grid, self.dt, right_clamp=steady.right_clamp(grid))
        self.grid = grid
        self.recenters = []

    def recentered(self, fld):
        """Shift the window by whole periods to keep the front mid-window."""
        grid = fld.grid
        pos = front_position(fld, self.steady, self.theta)
        if pos is None:
            raise FrontLeftWindow("front left the window")
        if pos - grid.x_lo >= self.margin and grid.x_hi - pos >= self.margin:
            return fld
        center = 0.5 * (grid.x_lo + grid.x_hi)
        k = int(round((pos - center) / grid.period))
        if k == 0:
            return fld
        self.recenters.append((fld.t, k))
        return shift_window(fld, k, self.steady, self.fill_lam)

    def run(self, fld, t_end, observe_dt=0.25, snapshot_times=()):
        """Advance to t_end; returns (final, times, positions, snapshots).

        Front positions are sampled every observe_dt (recentering happens at
        those events); snapshot_times are captured exactly, before any
        recenter shift at the same instant.
        """
        t0 = fld.t
        n_total = int(round((t_end - t0) / self.dt))
        obs_every = max(1, int(round(observe_dt / self.dt)))
        obs_steps = set(range(obs_every, n_total + 1, obs_every)) | {n_total}
        snap_steps = set()
        for ts in snapshot_times:
            k = int(round((ts - t0) / self.dt))
            if 0 <= k <= n_total:
                snap_steps.add(k)
        times, positions, snaps = [], [], []
        pos = front_position(fld, self.steady, self.theta)
        if pos is not None:
            times.append(fld.t)
            positions.append(pos)
        if 0 in snap_steps:
            snaps.append(fld)
        done = 0
        for k in sorted(obs_steps | snap_steps):
            if k == 0:
                continue
            vals = self.stepper.advance_values(fld.values, k - done, t0=fld.t)
            done = k
            fld = Field(grid=fld.grid, values=vals, t=t0 + k * self.dt)
            if k in snap_steps:
                snaps.append(fld)
            if k in obs_steps:
                pos = front_position(fld, self.steady, self.theta)
                if pos is None:
                    raise FrontLeftWindow("front left the window during the run")
                times.append(fld.t)
                positions.append(pos)
                fld = self.recentered(fld)
        return fld, np.array(times), np.array(positions), snaps


def verify_pulsating(snapshots, c_meas, period, margin_periods=5.0):
    """sup |u(t + L/c, x) - u(t, x + L)| over snapshot pairs (time-interpolated).

    Certifies the pulsating property: a front propagating toward -x repeats
    itself one period to the left after each period transit time L/c.
    Snapshots must cover at least one interval of length L/c_meas;
    comparison excludes margin_periods near window edges.
    """
    snaps = list(snapshots)
    if len(snaps) < 3:
        raise InsufficientRecord("need at least 3 snapshots")
    tau = period / c_meas
    times = np.array([s.t for s in snaps])
    n_per = snaps[0].grid.n_per_period
    worst = -np.inf
    pairs = 0
    for i, base in enumerate(snaps):
        target = base.t + tau
        j = np.searchsorted(times, target)
        if j >= len(snaps) or j == 0:
            continue
        lo_s, hi_s = snaps[j - 1], snaps[j]
        if hi_s.t - lo_s.t <= 0:
            continue
        w = (target - lo_s.t) / (hi_s.t - lo_s.t)
        diff = _compare_shifted(base, lo_s, hi_s, w, n_per, margin_periods)
        if diff is None:
            continue
        worst = max(worst, diff)
        pairs += 1
    if pairs == 0:
        raise InsufficientRecord("no snapshot pairs separated by one period transit")
    return float(worst)


def _compare_shifted(base, lo_s, hi_s, w, n_per, margin_periods):
    """sup over the valid overlap of |interp(t+tau, x) - base(t, x + L)|."""
    m = int(round(margin_periods * n_per))
    # absolute node index ranges, trimmed by the margin
    def rng(fld):
        return fld.grid.offset_nodes + m, fld.grid.offset_nodes + fld.grid.n_nodes - m

    lo_a, hi_a = rng(lo_s)
    lo_b, hi_b = rng(hi_s)
    lo_c, hi_c = rng(base)
    lo_c, hi_c = lo_c - n_per, hi_c - n_per  # base read one period right (x + L)
    lo_k = max(lo_a, lo_b, lo_c)
    hi_k = min(hi_a, hi_b, hi_c)
    if hi_k <= lo_k:
        return None

    def slice_abs(fld, lo_k, hi_k, shift=0):
        start = lo_k - shift - fld.grid.offset_nodes
        stop = hi_k - shift - fld.grid.offset_nodes
        return fld.shaped()[start:stop]

    interp = (1 - w) * slice_abs(lo_s, lo_k, hi_k) + w * slice_abs(hi_s, lo_k, hi_k)
    shifted_base = slice_abs(base, lo_k, hi_k, shift=-n_per)
    return float(np.max(np.abs(interp - shifted_base)))


def plateau_offset(fld, steady, eps_bar=None):
    """Smallest x beyond which the profile stays eps_bar-close to p."""
    if eps_bar is None:
        eps_bar = 0.05 * steady.min_value
    p_win = steady.window_values(fld.grid)
    d = np.abs(fld.shaped() - p_win)
    if d.ndim == 2:
        d = d.max(axis=1)
    suffix = np.maximum.accumulate(d[::-1])[::-1]
    close = suffix < eps_bar
    if not close.any():
        raise NotConverged("profile never settles near the steady state in the window")
    i = int(np.argmax(close))
    return float(fld.grid.axis_nodes(0)[i])


def tail_weight(xi0, lam):
    """Exponential back-weight: e^(-lam (xi - xi0)) behind, 1 ahead."""

    def w(xi):
        xi = np.asarray(xi, float)
        return np.where(xi <= xi0, np.exp(-lam * (xi - xi0)), 1.0)

    return w


@dataclass
class TailFit:
    amplitude: float
    lam: float
    n_points: int
    span: float


def asymptotic_fit(
    fld,
    steady,
    front_mode,
    c,
    t_ref=0.0,
    critical=False,
    floor=1e-6,
    min_periods=8.0,
    theta=0.5,
):
    """Least-squares decay fit of the leading tail ln(u / v) against xi.

    Fit band: floor < u < 0.01 * min(p), at least 2 periods clear of the
    left edge. In the critical case the linear prefactor |xi - xi_front| is
    divided out first. Returns TailFit(amplitude, lam, ...) where the
    profile behaves like amplitude * e^(lam xi) v(x) (xi = x + c (t - t_ref)).
    """
    grid = fld.grid
    if grid.transverse is not None:
        raise ValueError("tail fits are one-dimensional")
    u = fld.shaped()
    x = grid.axis_nodes(0)
    v_cell = np.asarray(front_mode, float)
    idx = (grid.offset_nodes + np.arange(grid.n_nodes)) % steady.cell_grid.n_points[0]
    v_win = v_cell[idx]
    cap = 1e-2 * steady.min_value
    mask = (u > floor) & (u < cap) & (x > grid.x_lo + 2.0 * grid.period)
    span = float(x[mask].max() - x[mask].min()) if mask.any() else 0.0
    if span < min_periods * grid.period:
        raise InsufficientDecayRegion(
            f"usable tail spans {span:.2f}, need {min_periods} periods"
        )
    xi = x + c * (fld.t - t_ref)
    y = np.log(u[mask] / v_win[mask])
    if critical:
        pos = front_position(fld, steady, theta)
        if pos is None:
            raise InsufficientDecayRegion("no front position for the critical prefactor")
        xi_front = pos + c * (fld.t - t_ref)
        y = y - np.log(xi_front - xi[mask])
    slope, intercept = np.polyfit(xi[mask], y, 1)
    return TailFit(
        amplitude=float(np.exp(intercept)),
        lam=float(slope),
        n_points=int(mask.sum()),
        span=span,
    )


def run_front(
    medium,
    c,
    grid=None,
    n_per_period=128,
    steady=None,
    curve=None,
    t_end=40.0,
    observe_dt=0.25,
    theta=0.5,
    dt=None,
    pulse_window=None,
    pulse_dt=0.02,
    critical_tol=1e-6,
    flight_extra_time=0.0,
):
    """Construct a front of target speed c and measure its diagnostics.

    Picks the seed decay rate from the dispersion relation (slow root for
    c > c*, the critical rate at c = c*). Without an explicit grid the
    window is flight-sized so the whole run needs no recentering and the
    seeded tail survives; with one, recentering with asymptotic tail fill
    keeps the front mid-window. pulse_window defaults to the last stretch
    of the run (2.5 period transits).
    """
    period = medium.periods[0]
    n_pp = grid.n_per_period if grid is not None else n_per_period
    cell = PeriodicGrid((n_pp,), (period,))
    if steady is None:
        steady = steady_state(medium, cell)
    if curve is None:
        c_star, lam_star, curve = minimal_speed(medium, cell)
    else:
        c_star, lam_star = curve.c_star, curve.lambda_star
    if c < c_star - 1e-8:
        raise ValueError(f"target speed {c} below the minimal speed {c_star}")
    critical = abs(c - c_star) <= max(critical_tol, 1e-6 * c_star)
    if critical:
        lam = lam_star
        c_eff = c_star
    else:
        roots = decay_roots(medium, cell, c, curve=curve)
        lam = roots.lam1
        c_eff = c
    mode = front_eigenfunction(medium, cell, c_eff, lam, gate=1e-5)
    if grid is None:
        grid, seed_center = flight_grid(n_pp, period, c_eff, c_star, t_end + flight_extra_time)
    else:
        seed_center = None
    u0 = build_front_initial(
        medium, grid, c_eff, steady, lam, mode, theta=theta, center_at=seed_center
    )
    run = FrontRun(medium, grid, steady, dt=dt, theta=theta, fill_lam=lam, margin_periods=8.0)
    if pulse_window is None:
        tau = period / c_eff
        pulse_window = (max(0.0, t_end - 2.5 * tau), t_end)
    snap_times = _snap_times(pulse_window, pulse_dt, run.dt)
    final, times, positions, snaps = run.run(
        u0, t_end, observe_dt=observe_dt, snapshot_times=snap_times
    )
    c_meas, times, positions = fit_speed(times, positions)
    pulsating = verify_pulsating(snaps, c_meas, grid.period)
    xi0 = plateau_offset(final, steady)
    fit = asymptotic_fit(final, steady, mode, c_meas, t_ref=0.0, critical=critical, theta=theta)
    return WaveRecord(
        c_target=float(c),
        c_meas=float(c_meas),
        lam_seed=float(lam),
        critical=critical,
        position_times=times,
        positions=positions,
        pulsating_residual=float(pulsating),
        xi0=float(xi0),
        weight_lam=float(lam),
        fit_amplitude=fit.amplitude,
        fit_lambda=fit.lam,
        final=final,
        steady=steady,
        front_mode=mode,
        recenters=run.recenters,
        theta=theta,
        c_star=float(c_star),
        lambda_star=float(lam_star),
    )


def _snap_times(window, pulse_dt, dt):
    lo, hi = window
    k = max(1, int(round(pulse_dt / dt)))
    step = k * dt
    n = int(np.floor((hi - lo) / step + 1e-9))
    start = np.ceil(lo / dt - 1e-9) * dt
    return [start + i * step for i in range(n + 1)]


@dataclass
class AlignmentResult:
    shift: float
    distance: float


def align_profiles(fld_a, fld_b, margin_periods=5.0, s_range=(-4.0, 4.0), tol=None):
    """Shift s minimizing sup |a(x + s) - b(x)|; golden section after a scan."""
    grid_a, grid_b = fld_a.grid, fld_b.grid
    if grid_a.transverse is not None:
        raise ValueError("profile alignment is one-dimensional")
    xa = grid_a.axis_nodes(0)
    xb = grid_b.axis_nodes(0)
    ua, ub = fld_a.shaped(), fld_b.shaped()
    m = margin_periods * grid_b.period
    core = (xb > grid_b.x_lo + m + max(abs(s_range[0]), abs(s_range[1]))) & (
        xb < grid_b.x_hi - m - max(abs(s_range[0]), abs(s_range[1]))
    )
    if not core.any():
        raise InsufficientRecord("no overlap core for alignment")
    xq = xb[core]
    target = ub[core]

    def dist(s):
        return float(np.max(np.abs(np.interp(xq + s, xa, ua) - target)))

    scan = np.linspace(s_range[0], s_range[1], 81)
    vals = [dist(s) for s in scan]
    j = int(np.argmin(vals))
    a = scan[max(j - 1, 0)]
    b = scan[min(j + 1, scan.size - 1)]
    if tol is None:
        tol = 1e-4 * grid_b.spacing
    gold = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - gold * (b - a)
    x2 = a + gold * (b - a)
    f1, f2 = dist(x1), dist(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - gold * (b - a)
            f1 = dist(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + gold * (b - a)
            f2 = dist(x2)
    s = 0.5 * (a + b)
    d = dist(s)
    if vals[j] < d:  # degenerate minima (e.g. identical profiles) sit on scan points
        s, d = float(scan[j]), vals[j]
    return AlignmentResult(shift=float(s), distance=float(d))


def uniqueness_experiment(
    medium, grid, c, seed_a, seed_b, steady, t_end=60.0, dt=None, theta=0.5, fill_lam=None
):
    """Evolve two admissible seeds in lockstep and align the final profiles.

    Recenter decisions come from the first run and are applied to both, so
    node correspondences stay exact. Returns (AlignmentResult, final_a,
    final_b).
    """
    run = FrontRun(medium, grid, steady, dt=dt, theta=theta, fill_lam=fill_lam)
    fld_a, fld_b = seed_a, seed_b
    chunk_t = 0.5
    n_chunk = max(1, int(round(chunk_t / run.dt)))
    n_total = int(round(t_end / run.dt))
    done = 0
    while done < n_total:
        n_now = min(n_chunk, n_total - done)
        va = run.stepper.advance_values(fld_a.values, n_now, t0=fld_a.t)
        vb = run.stepper.advance_values(fld_b.values, n_now, t0=fld_b.t)
        done += n_now
        t_now = done * run.dt
        fld_a = Field(grid=fld_a.grid, values=va, t=t_now)
        fld_b = Field(grid=fld_b.grid, values=vb, t=t_now)
        new_a = run.recentered(fld_a)
        if new_a.grid is not fld_a.grid:
            k = run.recenters[-1][1]
            fld_b = shift_window(fld_b, k, steady, fill_lam)
            fld_a = new_a
    return align_profiles(fld_a, fld_b), fld_a, fld_b
