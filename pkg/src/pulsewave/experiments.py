"""Twin-simulation stability experiments and decay-rate fitting.

A stability run evolves the computed front snapshot (reference) and the
same snapshot plus a perturbation (twin) with identical steps, shared
factorizations and shared window shifts, so discretization error cancels
in the difference to leading order. The sup-difference is tracked per
region on either side of the co-moving split line xi = x1 + c t = xi0 and
fitted against the predicted exponential/algebraic envelopes.
"""

from dataclasses import dataclass, field

import numpy as np

from .dispersion import growth_rate
from .errors import (
    DegenerateSeries,
    InadmissiblePerturbation,
    LambdaOutOfBand,
)
from .evolution import Field, Stepper, default_dt
from .waves import front_position, shift_window, tail_weight


@dataclass
class PerturbationSpec:
    """Perturbation recipe applied on top of a front snapshot.

    kind "compact_bump": cos^2 bump of half-width `width` centered
    `offset` to the right of the front position. kind "weighted_tail":
    two-sided exponential e^(-tail_rate |x - ref|); its leading side must
    decay faster than the front tail to stay in the weighted class.
    sign "mixed" modulates the profile with a seeded smooth sign-changing
    factor.
    """

    kind: str = "compact_bump"
    amplitude: float = 0.1
    width: float = 2.0
    tail_rate: float = None
    sign: str = "positive"
    seed: int = 0
    offset: float = 0.0


@dataclass
class Perturbation:
    delta: np.ndarray
    clamp_count: int
    weighted_l1: float
    spec: PerturbationSpec


def build_perturbation(spec, wave):
    """Realize a PerturbationSpec on the wave's final snapshot grid.

    The perturbed data is clamped into [0, p]; the number of clamped nodes
    and the discrete weighted-L1 certificate sum h * W(x) |delta| are
    reported. A weighted_tail whose leading decay does not beat the weight
    growth rate is rejected.
    """
    fld = wave.final
    grid = fld.grid
    x = grid.axis_nodes(0)
    pos = front_position(fld, wave.steady, wave.theta)
    center = pos + spec.offset
    if spec.kind == "compact_bump":
        profile = np.where(
            np.abs(x - center) <= spec.width,
            np.cos(0.5 * np.pi * (x - center) / spec.width) ** 2,
            0.0,
        )
    elif spec.kind == "weighted_tail":
        if spec.tail_rate is None:
            raise ValueError("weighted_tail needs tail_rate")
        if spec.tail_rate <= wave.weight_lam + 1e-12:
            raise InadmissiblePerturbation(
                f"tail rate {spec.tail_rate} does not beat the weight rate {wave.weight_lam}"
            )
        profile = np.exp(-spec.tail_rate * np.abs(x - center))
    else:
        raise ValueError(f"unknown perturbation kind {spec.kind!r}")
    if spec.sign == "negative":
        profile = -profile
    elif spec.sign == "mixed":
        rng = np.random.default_rng(spec.seed)
        coef = rng.standard_normal(4)
        phase = np.pi * (x - center) / max(spec.width, 1.0)
        mod = sum(c * np.sin((k + 1) * phase) for k, c in enumerate(coef))
        mod = mod / max(1e-12, np.max(np.abs(mod)))
        profile = profile * mod
    elif spec.sign != "positive":
        raise ValueError(f"unknown sign {spec.sign!r}")
    delta = spec.amplitude * profile
    if fld.shaped().ndim == 2:
        # keep the perturbation compact in the transverse axis as well
        x2 = grid.axis_nodes(1)
        mid = 0.5 * (x2[0] + x2[-1])
        w2 = min(spec.width, 0.25 * (x2[-1] - x2[0]))
        trans = np.where(
            np.abs(x2 - mid) <= w2,
            np.cos(0.5 * np.pi * (x2 - mid) / w2) ** 2,
            0.0,
        )
        delta = delta[:, None] * trans[None, :]
    p_win = wave.steady.window_values(grid)
    base = fld.shaped()
    # cap at p, but never force the difference negative where the reference
    # itself sits within solver tolerance above p
    cap = np.maximum(p_win, base)
    perturbed = np.clip(base + delta, 0.0, cap)
    delta_eff = perturbed - base
    clamp_count = int(np.sum(np.abs(delta_eff - delta) > 1e-12))
    weight = tail_weight(wave.xi0, wave.weight_lam)
    w_vals = weight(x)
    d_flat = np.abs(delta_eff) if delta_eff.ndim == 1 else np.abs(delta_eff).max(axis=1)
    l1 = float(grid.spacing * np.sum(w_vals * d_flat))
    if not np.isfinite(l1):
        raise InadmissiblePerturbation("weighted sum overflowed")
    return Perturbation(
        delta=delta_eff.ravel(), clamp_count=clamp_count, weighted_l1=l1, spec=spec
    )


@dataclass
class StabilitySeries:
    """Region-wise sup differences of a twin run at recorded times."""

    times: np.ndarray
    e_left: np.ndarray
    e_right: np.ndarray
    e_global: np.ndarray
    xi0: float
    c_meas: float
    clamp_count: int
    weighted_l1: float
    ordered: bool

    def as_rows(self):
        return list(
            zip(
                self.times.tolist(),
                self.e_left.tolist(),
                self.e_right.tolist(),
                self.e_global.tolist(),
            )
        )


def stability_run(
    medium,
    wave,
    pert,
    t_end,
    record_dt=0.5,
    dt=None,
    margin_periods=5.0,
    recenter_margin_periods=10.0,
):
    """Twin simulation of reference vs perturbed front snapshot.

    The reference and the difference field advance together with shared
    factorizations (cancellation-free twin: the difference is propagated
    exactly rather than recovered by subtraction, so it stays meaningful
    down to the underflow scale). Window shifts are decided by the
    reference front and applied to both. The sup-difference is recorded per
    region split at the moving line xi0 - c_meas * t (window interior only,
    margin_periods from the edges). `ordered` reports whether the
    difference stayed nodewise nonnegative to 1e-12 (the comparison gate
    for sign-definite perturbations).
    """
    if isinstance(pert, PerturbationSpec):
        pert = build_perturbation(pert, wave)
    fld_r = wave.final
    grid = fld_r.grid
    if dt is None:
        dt = default_dt(medium, grid)
    stepper = Stepper(medium, grid, dt, right_clamp=wave.steady.right_clamp(grid))
    r = fld_r.values.copy()
    d = pert.delta.copy()
    t = 0.0
    chunk = max(1, int(round(record_dt / dt)))
    n_total = int(round(t_end / dt))
    times = [0.0]
    e_l, e_r, e_g = [], [], []
    ordered = bool(np.min(pert.delta) >= -1e-15)
    cur_grid = grid

    def record(t_now, d_now):
        x = cur_grid.axis_nodes(0)
        m = margin_periods * cur_grid.period
        interior = (x >= cur_grid.x_lo + m) & (x <= cur_grid.x_hi - m)
        diff = np.abs(d_now).reshape(cur_grid.n_nodes, -1).max(axis=1)
        split = wave.xi0 - wave.c_meas * t_now
        left = interior & (x <= split)
        right = interior & (x > split)
        e_left = float(diff[left].max()) if left.any() else 0.0
        e_right = float(diff[right].max()) if right.any() else 0.0
        e_l.append(e_left)
        e_r.append(e_right)
        e_g.append(max(e_left, e_right))

    record(0.0, d)
    done = 0
    while done < n_total:
        n_now = min(chunk, n_total - done)
        r, d = stepper.advance_twin(r, d, n_now, t0=t)
        done += n_now
        t = done * dt
        if ordered and np.min(d) < -1e-12:
            ordered = False
        fld_now = Field(grid=cur_grid, values=r, t=t)
        pos = front_position(fld_now, wave.steady, wave.theta)
        if pos is not None and (
            pos - cur_grid.x_lo < recenter_margin_periods * cur_grid.period
            or cur_grid.x_hi - pos < recenter_margin_periods * cur_grid.period
        ):
            center = 0.5 * (cur_grid.x_lo + cur_grid.x_hi)
            k = int(round((pos - center) / cur_grid.period))
            if k != 0:
                shifted_r = shift_window(fld_now, k, wave.steady, wave.weight_lam)
                shifted_d = shift_window(
                    Field(grid=cur_grid, values=d, t=t), k, wave.steady, None,
                    right_fill="zero",
                )
                cur_grid = shifted_r.grid
                r = shifted_r.values
                d = shifted_d.values
        times.append(t)
        record(t, d)
    return StabilitySeries(
        times=np.array(times),
        e_left=np.array(e_l),
        e_right=np.array(e_r),
        e_global=np.array(e_g),
        xi0=wave.xi0,
        c_meas=wave.c_meas,
        clamp_count=pert.clamp_count,
        weighted_l1=pert.weighted_l1,
        ordered=ordered,
    )


def _ls_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def _window_mask(times, window):
    if window is None:
        lo = times[0] + 0.4 * (times[-1] - times[0])
        window = (lo, times[-1])
    mask = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    if mask.sum() < 4:
        raise DegenerateSeries("fewer than 4 samples in the fit window")
    return mask


FLOAT_FLOOR = 1e-280  # twin differences are propagated, so only underflow is fatal


def fit_exponential(times, e_series, window=None):
    """Slope of -ln E against t over the window; returns (mu_fit, r2)."""
    times = np.asarray(times, float)
    e_series = np.asarray(e_series, float)
    mask = _window_mask(times, window)
    e_w = e_series[mask]
    if np.any(e_w <= FLOAT_FLOOR):
        raise DegenerateSeries("error series hit the floating-point floor in the window")
    slope, _, r2 = _ls_fit(times[mask], -np.log(e_w))
    return slope, r2


def fit_algebraic(times, e_series, window=None):
    """Slope of ln E against ln(1 + t) over the window; returns (slope, r2)."""
    times = np.asarray(times, float)
    e_series = np.asarray(e_series, float)
    if window is not None and window[0] < 10.0:
        raise ValueError("algebraic fit window must start at t >= 10")
    mask = _window_mask(times, window)
    e_w = e_series[mask]
    if np.any(e_w <= FLOAT_FLOOR):
        raise DegenerateSeries("error series hit the floating-point floor in the window")
    slope, _, r2 = _ls_fit(np.log1p(times[mask]), np.log(e_w))
    return slope, r2


def rate_prediction(medium, grid, c, lam, mu_bar1, roots=None, dt=None):
    """Predicted twin-decay exponent min(growth(lam, c), -mu_bar1 / 2).

    lam must lie in the admissible root interval when roots are supplied;
    the best achievable prediction over that interval is reported by
    best_rate_prediction.
    """
    if roots is not None and not (roots.lam1 - 1e-9 <= lam <= roots.lam2 + 1e-9):
        raise LambdaOutOfBand(
            f"lam {lam} outside [{roots.lam1:.6g}, {roots.lam2:.6g}]"
        )
    mu, _ = growth_rate(medium, grid, lam, c, dt=dt)
    return float(min(mu, -0.5 * mu_bar1))


def best_rate_prediction(medium, grid, c, mu_bar1, roots, n_grid=33, dt=None):
    """max over a lam grid in [lam1, lam2] of the rate prediction."""
    lams = np.linspace(roots.lam1, roots.lam2, n_grid)
    best_lam, best = roots.lam1, -np.inf
    for lam in lams:
        val = rate_prediction(medium, grid, c, lam, mu_bar1, roots=roots, dt=dt)
        if val > best:
            best_lam, best = float(lam), val
    return best, best_lam


def envelope_check(times, e_series, rate, n_dim, window=None, headroom=0.2):
    """One-sided consistency with C (1+t)^(-n/2) e^(-rate t).

    The envelope constant is anchored at the window start; the series must
    never exceed it by more than `headroom` relative. Decay faster than the
    envelope is consistent (the prediction is an upper bound).
    Returns (ok, max_relative_excess).
    """
    times = np.asarray(times, float)
    e_series = np.asarray(e_series, float)
    mask = _window_mask(times, window)
    t_w = times[mask]
    e_w = e_series[mask]
    shape = (1.0 + t_w) ** (-0.5 * n_dim) * np.exp(-rate * t_w)
    c0 = e_w[0] / shape[0]
    excess = float(np.max(e_w / (c0 * shape))) - 1.0
    return excess <= headroom, excess


@dataclass
class DecayFit:
    """Fitted decay rates of one twin experiment with theory references."""

    series: StabilitySeries
    mu_fit: float = None
    mu_r2: float = None
    algebraic_slope: float = None
    algebraic_r2: float = None
    prediction: float = None
    prediction_lam: float = None
    mu_bar1: float = None
    envelope_ok: bool = None
    envelope_excess: float = None

    def classified(self):
        """'exponential' or 'algebraic' by comparing fit quality."""
        if self.mu_r2 is None:
            return "algebraic"
        if self.algebraic_r2 is None:
            return "exponential"
        return "exponential" if self.mu_r2 >= self.algebraic_r2 else "algebraic"
