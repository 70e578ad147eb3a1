"""Run configuration: a flat TOML document with dotted keys.

Example::

    scenario = "fig5"
    model.omega_c = 50.0
    cutoffs.n_a_max = 28
    integrator.steps_per_cycle = 100
    grid.samples_per_period = 2000
    sweep."model.kappa" = [0.01, 0.05, 0.1]
    output.format = "csv"

Keys missing from the document are filled from the scenario preset.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import IntegratorOptions
from .errors import ArgumentError, ConfigError, MolcatError
from .hilbert import FockCutoffs
from .model import ModelParams

SCENARIOS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "custom")

MODEL_KEYS = tuple(f.name for f in dataclasses.fields(ModelParams))
INTEGRATOR_KEYS = tuple(f.name for f in dataclasses.fields(IntegratorOptions) if f.name != "sample_times")
GRID_KEYS = (
    "samples_per_period", "periods", "t_end", "xi_min", "xi_max", "xi_points",
    "omega_c", "omega_v_ratio", "extent", "points", "line_points", "line_extent",
    "line_im_chi", "line_re", "sign", "kind", "quantities", "dissipation",
)
OUTPUT_KEYS = ("dir", "format", "precision")
SECTIONS = ("model", "cutoffs", "integrator", "grid", "sweep", "output")

FIG3 = dict(omega_c=50.0, omega_v=50.5, omega_e=250.0, g=2.5, xi=1.841, n_a=1, n_b=1, delta_a_spec=-0.5)
FIG9 = dict(omega_c=100.0, omega_v=101.0, omega_e=250.0, g=2.5, xi=1.841, n_a=1, n_b=1, delta_a_spec=-1.0)

CLOSED_CUTOFFS = (28, 28)
OPEN_CUTOFFS = (12, 12)
CLOSED_INTEGRATOR = dict(steps_per_cycle=100)
OPEN_INTEGRATOR = dict(steps_per_cycle=60, top_population_tol=1e-5)

# (kappa, gamma_v, gamma_e) triples of the dissipation figures
DISSIPATION_GRID = (
    (0.01, 0.001, 0.001), (0.05, 0.001, 0.001), (0.1, 0.001, 0.001),
    (0.001, 0.01, 0.001), (0.001, 0.05, 0.001), (0.001, 0.1, 0.001),
    (0.001, 0.001, 0.01), (0.001, 0.001, 0.1), (0.001, 0.001, 0.5),
)

PRESETS = {
    "fig2": dict(kind="bessel", model={}, grid=dict(xi_min=0.0, xi_max=3.0, xi_points=30001)),
    "fig3": dict(kind="negativity", model=FIG3, cutoffs=CLOSED_CUTOFFS,
                 grid=dict(samples_per_period=2000, periods=1.0)),
    "fig4": dict(kind="wigner", model=FIG3, cutoffs=CLOSED_CUTOFFS,
                 grid=dict(extent=4.0, points=81, line_points=401, line_extent=4.0,
                           line_im_chi=0.6, line_re=1.0)),
    "fig5": dict(kind="closed", model=FIG3, cutoffs=CLOSED_CUTOFFS, integrator=CLOSED_INTEGRATOR,
                 grid=dict(samples_per_period=2000, periods=1.0, quantities=["excitations"])),
    "fig6": dict(kind="closed", model=FIG3, cutoffs=CLOSED_CUTOFFS, integrator=CLOSED_INTEGRATOR,
                 grid=dict(samples_per_period=2000, periods=1.0, quantities=["probabilities"])),
    "fig7": dict(kind="closed", model=FIG3, cutoffs=CLOSED_CUTOFFS, integrator=CLOSED_INTEGRATOR,
                 grid=dict(samples_per_period=2000, periods=1.0, quantities=["fidelities"],
                           omega_c=[30.0, 50.0, 100.0], omega_v_ratio=1.01)),
    "fig8": dict(kind="rwa_curve", model=FIG3, cutoffs=CLOSED_CUTOFFS, integrator=CLOSED_INTEGRATOR,
                 grid=dict(omega_c=[10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0, 80.0, 100.0],
                           omega_v_ratio=1.01)),
    "fig9": dict(kind="open", model=FIG9, cutoffs=OPEN_CUTOFFS, integrator=OPEN_INTEGRATOR,
                 grid=dict(samples_per_period=2000, periods=1.0, quantities=["probabilities"],
                           dissipation=[list(r) for r in DISSIPATION_GRID])),
    "fig10": dict(kind="open", model=FIG9, cutoffs=OPEN_CUTOFFS, integrator=OPEN_INTEGRATOR,
                  grid=dict(samples_per_period=2000, periods=1.0, quantities=["fidelities"],
                            dissipation=[list(r) for r in DISSIPATION_GRID])),
    "fig11": dict(kind="open", model=FIG9, cutoffs=OPEN_CUTOFFS, integrator=OPEN_INTEGRATOR,
                  grid=dict(samples_per_period=2000, periods=1.0, quantities=["negativity"],
                            dissipation=[list(r) for r in DISSIPATION_GRID])),
    "custom": dict(kind=None, model={}, grid=dict(samples_per_period=2000, periods=1.0)),
}

SCENARIO_NOTES = {
    "fig2": "xi vs |J_-1(xi)|",
    "fig3": "t vs N_+- of the analytic cat states",
    "fig4": "joint Wigner cuts of the cat states at t_s",
    "fig5": "t vs <n_a>, <n_b> (exact and analytic)",
    "fig6": "t vs P_+- (exact and analytic)",
    "fig7": "t vs F, F_+- for omega_c in {30, 50, 100}",
    "fig8": "omega_c vs F(t_s)",
    "fig9": "t vs p_+- over the dissipation grid",
    "fig10": "t vs f, f_+- over the dissipation grid",
    "fig11": "t vs N_+- over the dissipation grid",
    "custom": "explicit parameters; closed or open run",
}


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    format: str = "csv"
    precision: int = 12


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    kind: str
    model: dict
    cutoffs: FockCutoffs | None
    integrator: dict
    grid: dict
    sweep: tuple = ()
    output: OutputSpec = field(default_factory=OutputSpec)

    def model_params(self, **overrides) -> ModelParams:
        return ModelParams(**{**self.model, **overrides})

    def integrator_options(self, sample_times) -> IntegratorOptions:
        return IntegratorOptions(sample_times=tuple(sample_times), **self.integrator)


def parse_text(text: str, source="<config>") -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_raw(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_text(text, str(p))


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _check_keys(section, values, allowed):
    for k in values:
        if k not in allowed:
            raise ConfigError(f"unknown key '{section}.{k}' (allowed: {', '.join(allowed)})")


def _number(path, v, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"'{path}' must be an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"'{path}' must be finite, got {v!r}")
    return int(v) if integer else float(v)


def resolve(raw: dict, scenario_override=None) -> ScenarioConfig:
    """Merge a parsed document with its scenario preset and validate field types."""
    raw = dict(raw)
    scenario = scenario_override or raw.pop("scenario", None)
    raw.pop("scenario", None)
    if scenario is None:
        raise ConfigError("missing key 'scenario'")
    if scenario not in SCENARIOS:
        raise ConfigError(f"'scenario' must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
    for k in raw:
        if k not in SECTIONS:
            raise ConfigError(f"unknown top-level key '{k}' (allowed: scenario, {', '.join(SECTIONS)})")
    preset = PRESETS[scenario]

    model_in = raw.get("model", {})
    _check_keys("model", model_in, MODEL_KEYS)
    if scenario == "custom":
        required = [k for k in ("omega_c", "omega_v", "omega_e", "g", "xi", "n_a", "n_b", "delta_a_spec",
                                "kappa", "gamma_v", "gamma_e") if k not in model_in]
        if required:
            raise ConfigError(f"custom scenario requires explicit model keys: {', '.join(required)}")
    model = dict(preset.get("model", {}))
    for k, v in model_in.items():
        model[k] = _number(f"model.{k}", v, integer=k in ("n_a", "n_b"))

    cut_in = raw.get("cutoffs", {})
    _check_keys("cutoffs", cut_in, ("n_a_max", "n_b_max"))
    base = preset.get("cutoffs", CLOSED_CUTOFFS)
    if scenario == "custom" and set(cut_in) != {"n_a_max", "n_b_max"}:
        raise ConfigError("custom scenario requires cutoffs.n_a_max and cutoffs.n_b_max")
    try:
        cutoffs = FockCutoffs(
            _number("cutoffs.n_a_max", cut_in.get("n_a_max", base[0]), integer=True),
            _number("cutoffs.n_b_max", cut_in.get("n_b_max", base[1]), integer=True),
        )
    except ArgumentError as exc:
        raise ConfigError(f"cutoffs: {exc}") from None

    integ_in = raw.get("integrator", {})
    _check_keys("integrator", integ_in, INTEGRATOR_KEYS)
    integrator = {**preset.get("integrator", {}), **integ_in}
    try:
        IntegratorOptions(sample_times=(0.0,), **integrator)
    except (ArgumentError, TypeError) as exc:
        raise ConfigError(f"integrator: {exc}") from None

    grid_in = raw.get("grid", {})
    _check_keys("grid", grid_in, GRID_KEYS)
    grid = {**preset.get("grid", {}), **grid_in}
    kind = preset["kind"]
    if scenario == "custom":
        kind = grid.get("kind", "auto")
        if kind not in ("auto", "closed", "open"):
            raise ConfigError(f"grid.kind must be 'closed' or 'open', got {kind!r}")
    for k in ("samples_per_period", "points", "line_points", "xi_points"):
        if k in grid and _number(f"grid.{k}", grid[k], integer=True) < 2:
            raise ConfigError(f"'grid.{k}' must be >= 2")
    if "periods" in grid and not _number("grid.periods", grid["periods"]) > 0:
        raise ConfigError("'grid.periods' must be > 0")
    if "t_end" in grid and grid["t_end"] != "ts" and not _number("grid.t_end", grid["t_end"]) > 0:
        raise ConfigError("'grid.t_end' must be > 0 or \"ts\"")

    sweep_in = _flatten(raw.get("sweep", {}))
    sweep = []
    for path, values in sweep_in.items():
        section, _, name = path.partition(".")
        if section != "model" or name not in MODEL_KEYS:
            raise ConfigError(f"sweep path '{path}' must name a model field (model.<field>)")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep '{path}' must be a non-empty list")
        sweep.append((name, tuple(_number(f"sweep.{path}", v, integer=name in ("n_a", "n_b")) for v in values)))

    if kind == "auto":
        rates = ("kappa", "gamma_v", "gamma_e")
        swept = [v for name, vals in sweep if name in rates for v in vals]
        decays = any(model.get(k, 0) > 0 for k in rates) or any(v > 0 for v in swept)
        kind = "open" if decays else "closed"

    out_in = raw.get("output", {})
    _check_keys("output", out_in, OUTPUT_KEYS)
    output = OutputSpec(**out_in)
    if output.format not in ("csv", "json"):
        raise ConfigError(f"'output.format' must be csv or json, got {output.format!r}")
    if _number("output.precision", output.precision, integer=True) < 1:
        raise ConfigError("'output.precision' must be >= 1")

    cfg = ScenarioConfig(scenario, kind, model, cutoffs, integrator, grid, tuple(sweep), output)
    if kind != "bessel":
        try:
            cfg.model_params()
        except (MolcatError, TypeError) as exc:
            raise ConfigError(f"model: {exc}") from None
    return cfg


def load_config(path) -> ScenarioConfig:
    return resolve(load_raw(path))


def preset_config(scenario: str) -> ScenarioConfig:
    return resolve({"scenario": scenario})
