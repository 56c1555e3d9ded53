"""Command-line interface: orchestration and machine-readable reports.

Subcommands: validate, eigen, dispersion, speed, wave, stability,
uniqueness, full. All outputs are CSV/JSON files under --out, written with
fixed 17-significant-digit float formatting so repeated runs with the same
config and seed are byte-identical. Exit codes: 0 success, 2 config error,
3 numerical failure, 4 acceptance-gate failure.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import experiments as xp
from . import waves
from .config import parse_config
from .discretize import PeriodicGrid
from .dispersion import decay_roots, minimal_speed
from .errors import ParseError, PulsewaveError, ValidationError
from .io_utils import write_csv, write_json
from .medium import validation_certificate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4

SUBCOMMANDS = (
    "validate",
    "eigen",
    "dispersion",
    "speed",
    "wave",
    "stability",
    "uniqueness",
    "full",
)


class _Session:
    """Shared state for one CLI invocation: config, output dir, caches."""

    def __init__(self, cfg, out_dir, workers, seed):
        self.cfg = cfg
        self.out = out_dir
        self.workers = workers
        self.seed = seed
        self.artifacts = []
        self._cell = None
        self._steady = None
        self._curve = None

    def path(self, name):
        os.makedirs(self.out, exist_ok=True)
        full = os.path.join(self.out, name)
        self.artifacts.append(name)
        return full

    @property
    def cell(self):
        if self._cell is None:
            n = self.cfg.grid["n_per_period"]
            dims = self.cfg.medium.dimension
            self._cell = PeriodicGrid((n,) * dims, self.cfg.medium.periods)
        return self._cell

    @property
    def steady(self):
        if self._steady is None:
            self._steady = waves.steady_state(self.cfg.medium, self.cell)
        return self._steady

    @property
    def curve(self):
        if self._curve is None:
            d = self.cfg.dispersion
            _, _, self._curve = minimal_speed(
                self.cfg.medium,
                self.cell,
                lam_range=(d["lambda_min"], d["lambda_max"]),
                scan_points=d["scan_points"],
            )
        return self._curve

    def wave_speeds(self):
        w = self.cfg.wave
        speeds = [float(c) for c in w["speeds"]]
        speeds += [float(f) * self.curve.c_star for f in w["speed_factors"]]
        if not speeds:
            speeds = [1.2 * self.curve.c_star]
        return speeds


def run_validate(session):
    cert = validation_certificate(session.cfg.medium)
    write_json(session.path("validate.json"), cert)
    return True, cert


def run_eigen(session):
    medium, cell = session.cfg.medium, session.cell
    rate = waves.zero_state_rate(medium, cell)
    steady = session.steady
    stab = waves.stability_of_p(medium, cell, steady)
    if cell.dimension == 1:
        x = cell.axis_nodes(0)
        write_csv(
            session.path("mode_zero_state.csv"),
            ["x", "value"],
            list(zip(x.tolist(), rate.vector.tolist())),
        )
        write_csv(
            session.path("steady_state.csv"),
            ["x", "value"],
            list(zip(x.tolist(), steady.field.values.tolist())),
        )
    summary = {
        "zero_state_rate": rate.value,
        "zero_state_residual": rate.residual,
        "steady_state_rate": stab.value,
        "steady_state_rate_residual": stab.residual,
        "steady_residual": steady.residual,
        "uniqueness_witness": steady.uniqueness_witness,
        "monostable": rate.value > 0 and stab.value < 0,
    }
    write_json(session.path("eigen.json"), summary)
    return bool(summary["monostable"]), summary


def run_dispersion(session):
    curve = session.curve
    write_csv(
        session.path("dispersion.csv"),
        ["lambda", "mu0", "c_of_lambda"],
        curve.as_rows(),
    )
    summary = {
        "c_star": curve.c_star,
        "lambda_star": curve.lambda_star,
        "max_residual": curve.max_residual,
    }
    write_json(session.path("dispersion.json"), summary)
    return True, summary


def run_speed(session):
    curve = session.curve
    summary = {
        "c_star": curve.c_star,
        "lambda_star": curve.lambda_star,
        "residuals": {"eigen_max": curve.max_residual},
    }
    write_json(session.path("speed.json"), summary)
    return True, summary


def _one_wave(session, c, t_end=None, flight_extra=0.0):
    cfg = session.cfg
    dt = cfg.solver["dt"] or None
    return waves.run_front(
        cfg.medium,
        c,
        n_per_period=cfg.grid["n_per_period"],
        steady=session.steady,
        curve=session.curve,
        t_end=cfg.wave["t_end"] if t_end is None else t_end,
        theta=cfg.wave["theta"],
        dt=dt,
        flight_extra_time=flight_extra,
    )


def _wave_summary(rec):
    return {
        "c_target": rec.c_target,
        "c_meas": rec.c_meas,
        "pulsating_residual": rec.pulsating_residual,
        "xi0": rec.xi0,
        "B": rec.fit_amplitude,
        "lambda_fit": rec.fit_lambda,
        "lambda_seed": rec.lam_seed,
        "critical": rec.critical,
        "c_star": rec.c_star,
    }


def _write_wave_artifacts(session, tag, rec):
    grid = rec.final.grid
    x = grid.axis_nodes(0)
    xi = x + rec.c_meas * rec.final.t
    x_mod = np.mod(x, grid.period)
    write_csv(
        session.path(f"profile_{tag}.csv"),
        ["xi", "x_mod_L", "w"],
        list(zip(xi.tolist(), x_mod.tolist(), rec.final.values.tolist())),
    )
    write_csv(
        session.path(f"positions_{tag}.csv"),
        ["t", "X"],
        list(zip(rec.position_times.tolist(), rec.positions.tolist())),
    )


def run_wave(session):
    speeds = session.wave_speeds()
    summaries = {}

    def build(c):
        return c, _one_wave(session, c)

    with ThreadPoolExecutor(max_workers=session.workers) as pool:
        results = list(pool.map(build, speeds))
    ok = True
    for c, rec in sorted(results, key=lambda r: r[0]):
        tag = f"c{c:.6g}".replace(".", "p")
        _write_wave_artifacts(session, tag, rec)
        summaries[tag] = _wave_summary(rec)
        ok = ok and abs(rec.c_meas - rec.c_target) <= 0.02 * rec.c_target
    write_json(session.path("wave.json"), {"cells": summaries, "speed_gate_2pct": ok})
    return ok, summaries


def run_stability(session):
    cfg = session.cfg
    st = cfg.stability
    pert_cfg = cfg.perturbation
    speeds = session.wave_speeds()
    cell = session.cell
    mu_bar = waves.stability_of_p(cfg.medium, cell, session.steady).value
    summaries = {}
    all_ok = True

    def one_cell(c):
        rec = _one_wave(session, c, t_end=st["settle_time"], flight_extra=st["t_end"] + 2.0)
        spec = xp.PerturbationSpec(
            kind=pert_cfg["kind"],
            amplitude=pert_cfg["amplitude"],
            width=pert_cfg["width"],
            tail_rate=pert_cfg["tail_rate"] or None,
            sign=pert_cfg["sign"],
            seed=session.seed,
            offset=pert_cfg["offset"],
        )
        series = xp.stability_run(cfg.medium, rec, spec, t_end=st["t_end"], record_dt=st["record_dt"])
        return c, rec, series

    with ThreadPoolExecutor(max_workers=session.workers) as pool:
        results = list(pool.map(one_cell, speeds))

    for c, rec, series in sorted(results, key=lambda r: r[0]):
        tag = f"c{c:.6g}".replace(".", "p")
        write_csv(
            session.path(f"stability_{tag}.csv"),
            ["t", "E_left", "E_right", "E_global"],
            series.as_rows(),
        )
        window = (st["t_end"] * 0.4, st["t_end"])
        cellsum = {
            "c_target": rec.c_target,
            "c_meas": rec.c_meas,
            "clamp_count": series.clamp_count,
            "weighted_l1": series.weighted_l1,
            "ordered": series.ordered,
        }
        if rec.critical:
            lo = max(10.0, window[0])
            slope, r2 = xp.fit_algebraic(series.times, series.e_global, window=(lo, window[1]))
            verdict = slope <= st["max_algebraic_slope"]
            cellsum.update({"slope_fit": slope, "r2": r2, "mode": "algebraic",
                            "verdict": verdict})
        else:
            roots = decay_roots(cfg.medium, cell, c, curve=session.curve)
            pred, lam_best = xp.best_rate_prediction(cfg.medium, cell, c, mu_bar, roots)
            mu_fit, r2 = xp.fit_exponential(series.times, series.e_global, window=window)
            verdict = mu_fit >= st["min_rate_fraction"] * pred and r2 >= st["min_r2"]
            cellsum.update(
                {
                    "mu_fit": mu_fit,
                    "r2": r2,
                    "prediction": pred,
                    "prediction_lambda": lam_best,
                    "mode": "exponential",
                    "verdict": verdict,
                }
            )
        all_ok = all_ok and cellsum["verdict"]
        summaries[tag] = cellsum
    write_json(session.path("stability.json"), {"cells": summaries, "all_gates": all_ok})
    return all_ok, summaries


def run_uniqueness(session):
    cfg = session.cfg
    uq = cfg.uniqueness
    c = uq["speed"] or 1.25 * session.curve.c_star
    ratio = uq["amplitude_ratio"]
    cell = session.cell
    roots = decay_roots(cfg.medium, cell, c, curve=session.curve)
    lam = roots.lam1
    from .dispersion import front_eigenfunction

    mode = front_eigenfunction(cfg.medium, cell, c, lam, gate=1e-5)
    grid, seed_center = waves.flight_grid(
        cfg.grid["n_per_period"], cfg.medium.periods[0], c, session.curve.c_star, uq["t_end"]
    )
    seed_a = waves.build_front_initial(
        cfg.medium, grid, c, session.steady, lam, mode, center_at=seed_center
    )
    shift_expected = float(np.log(ratio) / lam)
    seed_b_vals = np.minimum(
        session.steady.window_values(grid), ratio * _tail_of(seed_a, lam, grid)
    )
    from .evolution import Field

    seed_b = Field(grid=grid, values=seed_b_vals, t=0.0)
    result, final_a, final_b = waves.uniqueness_experiment(
        cfg.medium, grid, c, seed_a, seed_b, session.steady, t_end=uq["t_end"], fill_lam=lam
    )
    h = grid.spacing
    summary = {
        "speed": c,
        "amplitude_ratio": ratio,
        "shift": result.shift,
        "shift_expected": shift_expected,
        "shift_error": abs(abs(result.shift) - shift_expected),
        "grid_spacing": h,
        "aligned_distance": result.distance,
        "verdict": result.distance <= 1e-2 and abs(abs(result.shift) - shift_expected) <= h,
    }
    write_json(session.path("uniqueness.json"), summary)
    return bool(summary["verdict"]), summary


def _tail_of(seed, lam, grid):
    """Reconstruct the unclamped exponential tail of a seed profile."""
    x = grid.axis_nodes(0)
    vals = seed.values
    i = np.argmax(vals > 1e-8)  # deep but resolved tail point
    i = max(i + 8, np.argmax(vals > 1e-6))
    anchor_amp = vals[i] / np.exp(lam * x[i])
    return anchor_amp * np.exp(lam * x)


def run_full(session):
    report = {}
    ok_all = True
    for name, fn in (
        ("validate", run_validate),
        ("speed", run_speed),
        ("wave", run_wave),
        ("stability", run_stability),
        ("uniqueness", run_uniqueness),
    ):
        ok, summary = fn(session)
        report[name] = {"ok": ok}
        ok_all = ok_all and ok
    write_json(session.path("full.json"), {"stages": report, "all_gates": ok_all})
    return ok_all, report


RUNNERS = {
    "validate": run_validate,
    "eigen": run_eigen,
    "dispersion": run_dispersion,
    "speed": run_speed,
    "wave": run_wave,
    "stability": run_stability,
    "uniqueness": run_uniqueness,
    "full": run_full,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pulsewave",
        description="Pulsating-front speeds, profiles and stability rates in periodic media",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=os.environ.get("PULSEWAVE_CONFIG"))
    parser.add_argument("--out", default=os.environ.get("PULSEWAVE_OUT", "out"))
    parser.add_argument(
        "--workers", type=int, default=int(os.environ.get("PULSEWAVE_WORKERS", "1"))
    )
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    if args.config is None:
        print("error: --config is required (or set PULSEWAVE_CONFIG)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(args.config)
    except ParseError as exc:
        _error_report(args.out, "parse", str(exc))
        return EXIT_CONFIG
    except ValidationError as exc:
        _error_report(args.out, "validation", exc.violations)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.seed
    session = _Session(cfg, args.out, max(1, args.workers or cfg.workers), seed)
    os.makedirs(args.out, exist_ok=True)
    write_json(session.path("effective_config.json"), cfg.effective)
    try:
        ok, _ = RUNNERS[args.subcommand](session)
    except PulsewaveError as exc:
        _error_report(args.out, type(exc).__name__, str(exc))
        return EXIT_NUMERICAL
    write_json(
        os.path.join(args.out, "manifest.json"),
        {"subcommand": args.subcommand, "seed": seed, "gates_passed": ok,
         "files": session.artifacts},
    )
    return EXIT_OK if ok else EXIT_GATE


def _error_report(out_dir, kind, detail):
    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, "error.json"), {"error": kind, "detail": detail})
    print(f"error [{kind}]: {detail}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
