"""Experiment configuration: TOML parsing, validation, effective echo.

A config declares the medium (trigonometric coefficient series or a
tabulated reaction), grid resolution, solver tolerances and the runs to
perform. Parsing fills documented defaults and validates everything at
once, reporting the full list of violations. The normalized ("effective")
config is echoed next to the outputs for reproducibility.
"""

import os.path
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ParseError, ValidationError
from .medium import (
    TIME_AXIS,
    DiffusionField,
    KPPLogistic,
    Medium,
    TabulatedReaction,
    TrigSeries,
    TrigTerm,
)

GRID_DEFAULTS = {"n_per_period": 256, "window_periods": 40, "boundary": "clamp_to_limits"}
SOLVER_DEFAULTS = {"eig_tol": 1e-10, "residual_gate": 1e-9, "dt": 0.0}
DISPERSION_DEFAULTS = {"lambda_min": 0.05, "lambda_max": 8.0, "scan_points": 64}
WAVE_DEFAULTS = {"speeds": [], "speed_factors": [], "t_end": 40.0, "theta": 0.5}
STABILITY_DEFAULTS = {
    "t_end": 40.0,
    "record_dt": 0.5,
    "settle_time": 30.0,
    "min_rate_fraction": 0.8,
    "min_r2": 0.99,
    "max_algebraic_slope": -0.3,
}
PERTURBATION_DEFAULTS = {
    "kind": "compact_bump",
    "amplitude": 0.2,
    "width": 4.0,
    "sign": "positive",
    "offset": 0.0,
    "tail_rate": 0.0,
}
UNIQUENESS_DEFAULTS = {"speed": 0.0, "t_end": 60.0, "amplitude_ratio": 2.0}
RUN_DEFAULTS = {"seed": 1234, "workers": 1}


@dataclass
class ExperimentConfig:
    """Validated configuration with the constructed Medium attached."""

    medium: Medium
    effective: dict
    path: str

    @property
    def grid(self):
        return self.effective["grid"]

    @property
    def solver(self):
        return self.effective["solver"]

    @property
    def dispersion(self):
        return self.effective["dispersion"]

    @property
    def wave(self):
        return self.effective["wave"]

    @property
    def stability(self):
        return self.effective["stability"]

    @property
    def perturbation(self):
        return self.effective["stability"]["perturbation"]

    @property
    def uniqueness(self):
        return self.effective["uniqueness"]

    @property
    def seed(self):
        return self.effective["run"]["seed"]

    @property
    def workers(self):
        return self.effective["run"]["workers"]


def _series_from(node, periods, time_period, errors, where):
    const = float(node.get("const", 0.0))
    terms = []
    for i, term in enumerate(node.get("terms", [])):
        axis = term.get("axis", 1)
        if axis == "t":
            axis_key = TIME_AXIS
            if time_period is None:
                errors.append(f"{where}.terms[{i}]: time term without medium.time_period")
        elif isinstance(axis, int) and 1 <= axis <= len(periods):
            axis_key = axis - 1
        else:
            errors.append(f"{where}.terms[{i}]: axis must be 't' or 1..{len(periods)}")
            continue
        k = term.get("k", 1)
        if not isinstance(k, int) or k < 1:
            errors.append(f"{where}.terms[{i}]: k must be a positive integer")
            continue
        terms.append(
            TrigTerm(axis=axis_key, k=k, cos=float(term.get("cos", 0.0)), sin=float(term.get("sin", 0.0)))
        )
    return TrigSeries(const=const, terms=tuple(terms), periods=tuple(periods), time_period=time_period)


def _normalized_series(series):
    terms = [
        {
            "axis": "t" if t.axis == TIME_AXIS else int(t.axis) + 1,
            "k": int(t.k),
            "cos": float(t.cos),
            "sin": float(t.sin),
        }
        for t in series.terms
    ]
    return {"const": float(series.const), "terms": terms}


def parse_config(path):
    """Parse and validate a TOML experiment configuration.

    Raises ParseError for malformed files and ValidationError listing every
    violated constraint at once.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc

    errors = []
    med_node = raw.get("medium")
    if med_node is None:
        raise ValidationError(["missing [medium] section"])

    dimension = med_node.get("dimension", 1)
    if dimension not in (1, 2):
        errors.append("medium.dimension must be 1 or 2")
        dimension = 1
    periods = med_node.get("periods", [1.0] * dimension)
    if len(periods) != dimension or any(p <= 0 for p in periods):
        errors.append("medium.periods must list one positive period per dimension")
        periods = [1.0] * dimension
    periods = [float(p) for p in periods]
    time_period = med_node.get("time_period")
    if time_period is not None and time_period <= 0:
        errors.append("medium.time_period must be positive")
        time_period = None

    diff_node = med_node.get("diffusion", {})
    entries_node = diff_node.get("entries")
    if entries_node is None:
        entries_node = [{"const": 1.0} for _ in range(dimension)]
    if len(entries_node) != dimension:
        errors.append("medium.diffusion.entries must have one entry per dimension")
        entries_node = [{"const": 1.0} for _ in range(dimension)]
    entries = tuple(
        _series_from(e, periods, time_period, errors, f"medium.diffusion.entries[{i}]")
        for i, e in enumerate(entries_node)
    )

    reaction_node = med_node.get("reaction", {"kind": "kpp_logistic", "mu": {"const": 1.0}})
    kind = reaction_node.get("kind", "kpp_logistic")
    reaction = None
    reaction_echo = {"kind": kind}
    if kind == "kpp_logistic":
        mu = _series_from(
            reaction_node.get("mu", {"const": 1.0}), periods, time_period, errors, "medium.reaction.mu"
        )
        reaction = KPPLogistic(mu)
        reaction_echo["mu"] = _normalized_series(mu)
    elif kind == "tabulated":
        table_path = reaction_node.get("path")
        if table_path is None:
            errors.append("medium.reaction.path required for tabulated reactions")
        else:
            resolved = os.path.join(os.path.dirname(os.path.abspath(path)), table_path)
            if not os.path.exists(resolved):
                errors.append(f"medium.reaction.path not resolvable: {table_path}")
            else:
                data = np.load(resolved)
                try:
                    reaction = TabulatedReaction(
                        x_nodes=data["x"], u_nodes=data["u"],
                        f_table=data["f"], fu_table=data["fu"],
                    )
                except (KeyError, ValueError) as exc:
                    errors.append(f"medium.reaction table invalid: {exc}")
                reaction_echo["path"] = table_path
    else:
        errors.append(f"unknown reaction kind {kind!r}")

    sections = {}
    for name, defaults in (
        ("grid", GRID_DEFAULTS),
        ("solver", SOLVER_DEFAULTS),
        ("dispersion", DISPERSION_DEFAULTS),
        ("wave", WAVE_DEFAULTS),
        ("stability", STABILITY_DEFAULTS),
        ("uniqueness", UNIQUENESS_DEFAULTS),
        ("run", RUN_DEFAULTS),
    ):
        node = dict(defaults)
        user = raw.get(name, {})
        unknown = set(user) - set(defaults) - ({"perturbation"} if name == "stability" else set())
        if unknown:
            errors.append(f"[{name}] unknown keys: {sorted(unknown)}")
        node.update({k: v for k, v in user.items() if k in defaults})
        sections[name] = node
    pert = dict(PERTURBATION_DEFAULTS)
    pert.update(raw.get("stability", {}).get("perturbation", {}))
    sections["stability"]["perturbation"] = pert

    n = sections["grid"]["n_per_period"]
    if not (isinstance(n, int) and 32 <= n <= 4096 and (n & (n - 1)) == 0):
        errors.append("grid.n_per_period must be a power of two between 32 and 4096")
    if sections["grid"]["window_periods"] < 20:
        errors.append("grid.window_periods must be at least 20")
    if sections["grid"]["boundary"] not in ("clamp_to_limits", "zero_flux"):
        errors.append("grid.boundary must be clamp_to_limits or zero_flux")
    for key in ("eig_tol", "residual_gate"):
        if sections["solver"][key] <= 0:
            errors.append(f"solver.{key} must be positive")
    if sections["solver"]["dt"] < 0:
        errors.append("solver.dt must be nonnegative (0 = automatic)")
    if not 0 < sections["dispersion"]["lambda_min"] < sections["dispersion"]["lambda_max"]:
        errors.append("dispersion lambda range must satisfy 0 < min < max")
    if sections["dispersion"]["scan_points"] < 8:
        errors.append("dispersion.scan_points must be at least 8")
    if not 0 < sections["wave"]["theta"] < 1:
        errors.append("wave.theta must lie in (0, 1)")
    if pert["kind"] not in ("compact_bump", "weighted_tail"):
        errors.append("stability.perturbation.kind must be compact_bump or weighted_tail")
    if pert["sign"] not in ("positive", "negative", "mixed"):
        errors.append("stability.perturbation.sign must be positive, negative or mixed")
    if pert["amplitude"] <= 0:
        errors.append("stability.perturbation.amplitude must be positive")
    if sections["run"]["workers"] < 1:
        errors.append("run.workers must be at least 1")
    if not isinstance(sections["run"]["seed"], int) or sections["run"]["seed"] < 0:
        errors.append("run.seed must be a nonnegative integer")

    medium = None
    if not errors and reaction is not None:
        try:
            medium = Medium(
                diffusion=DiffusionField(dimension, entries),
                reaction=reaction,
                periods=tuple(periods),
                time_period=time_period,
                name=med_node.get("name", os.path.splitext(os.path.basename(path))[0]),
            )
        except ValueError as exc:
            errors.append(str(exc))
    if errors:
        raise ValidationError(errors)

    effective = {
        "medium": {
            "name": medium.name,
            "dimension": dimension,
            "periods": periods,
            "time_period": time_period,
            "diffusion": {"entries": [_normalized_series(e) for e in entries]},
            "reaction": reaction_echo,
        },
        "grid": sections["grid"],
        "solver": sections["solver"],
        "dispersion": sections["dispersion"],
        "wave": sections["wave"],
        "stability": sections["stability"],
        "uniqueness": sections["uniqueness"],
        "run": sections["run"],
    }
    return ExperimentConfig(medium=medium, effective=effective, path=path)
