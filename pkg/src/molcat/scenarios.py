"""Scenario runners producing output tables for each preset."""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (
    detection_probabilities, fidelity_mixed, fidelity_pure, joint_wigner, log_negativity,
    log_negativity_pure, mean_excitations, project_electronic,
)
from .analytic import analytic_series, analytic_state, cat_state, detection_time, full_state_analytic, lab_amplitudes
from .config import ScenarioConfig
from .dynamics import evolve_lindblad, evolve_schrodinger, plus_vacuum_state
from .errors import DegenerateCatError, VanishingBranchError
from .hilbert import CompositeSpace, poisson_tail
from .model import bessel_j, derive_effective, rwa_condition_report

TIME_UNIT = "1/lambda"


@dataclass
class OutputTable:
    name: str
    columns: list
    rows: np.ndarray
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.columns):
            raise ValueError(f"table {self.name}: {self.rows.shape} does not match {len(self.columns)} columns")

    def column(self, name) -> np.ndarray:
        for i, c in enumerate(self.columns):
            if c == name or c.split("[")[0] == name:
                return self.rows[:, i]
        raise KeyError(name)


def _manifest(cfg: ScenarioConfig, params=None, eff=None, sample_times=None, **extra):
    m = dict(scenario=cfg.scenario, kind=cfg.kind)
    if params is not None:
        m["model"] = params.to_dict()
    if eff is not None:
        m["effective"] = eff.to_dict()
    if cfg.cutoffs is not None:
        m["cutoffs"] = dict(n_a_max=cfg.cutoffs.n_a_max, n_b_max=cfg.cutoffs.n_b_max)
    if sample_times is not None:
        m["integrator"] = cfg.integrator_options(sample_times).to_dict()
    m["grid"] = dict(cfg.grid)
    if cfg.scenario in ("fig7", "fig8"):
        m["assumptions"] = "omega_e and g not given for this sweep; inherited from the fig3 preset"
    m.update(extra)
    return m


def _time_grid(cfg: ScenarioConfig, eff) -> np.ndarray:
    period = eff.period
    n = int(cfg.grid.get("samples_per_period", 2000))
    t_end = cfg.grid.get("t_end")
    if t_end == "ts":
        t_end = detection_time(eff)
    elif t_end is None:
        t_end = float(cfg.grid.get("periods", 1.0)) * period
    count = max(1, int(round(t_end / period * n)))
    return np.linspace(0.0, float(t_end), count + 1)


def _nan_on_degenerate(fn):
    try:
        return fn()
    except (VanishingBranchError, DegenerateCatError):
        return math.nan


def _fmt(v):
    return f"{v:g}"


# ---------------------------------------------------------------- fig2


def run_bessel(cfg: ScenarioConfig) -> list[OutputTable]:
    g = cfg.grid
    xi = np.linspace(float(g["xi_min"]), float(g["xi_max"]), int(g["xi_points"]))
    j = np.array([abs(bessel_j(-1, x)) for x in xi])
    return [OutputTable("fig2", ["xi[1]", "abs_J_minus1[1]"], np.column_stack([xi, j]),
                        _manifest(cfg, xi_at_max=float(xi[np.argmax(j)])))]


# ---------------------------------------------------------------- fig3


def run_negativity(cfg: ScenarioConfig, params) -> OutputTable:
    eff = derive_effective(params, warn=False)
    t = _time_grid(cfg, eff)
    s = analytic_series(eff, params.omega_e, t)
    dims = cfg.cutoffs.mode_dims
    rows = []
    for i, ti in enumerate(t):
        st = analytic_state(eff, params.omega_e, ti)
        n_p = _nan_on_degenerate(lambda: log_negativity_pure(cat_state(st, "+", dims)))
        n_m = _nan_on_degenerate(lambda: log_negativity_pure(cat_state(st, "-", dims)))
        rows.append((ti, n_p, n_m, abs(s["alpha"][i]), abs(s["beta"][i])))
    cols = [f"t[{TIME_UNIT}]", "N_plus[1]", "N_minus[1]", "abs_alpha[1]", "abs_beta[1]"]
    return OutputTable(cfg.scenario, cols, rows, _manifest(cfg, params, eff))


# ---------------------------------------------------------------- fig4


def run_wigner(cfg: ScenarioConfig, params) -> list[OutputTable]:
    eff = derive_effective(params, warn=False)
    ts = detection_time(eff)
    st = analytic_state(eff, params.omega_e, ts)
    dims = cfg.cutoffs.mode_dims
    g = cfg.grid
    x = np.linspace(-float(g["extent"]), float(g["extent"]), int(g["points"]))
    xl = np.linspace(-float(g["line_extent"]), float(g["line_extent"]), int(g["line_points"]))
    extra = dict(t_s=ts, alpha=[st.alpha.real, st.alpha.imag], beta=[st.beta.real, st.beta.imag])
    tables = []
    cats = {s: cat_state(st, s, dims) for s in "+-"}
    for plane, unit in (("re_re", 1.0), ("im_im", 1j)):
        rows = []
        for sgn, name in (("+", "plus"), ("-", "minus")):
            w = joint_wigner(cats[sgn], unit * x, unit * x).values
            rows.append(w)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        data = np.column_stack([xx.ravel(), yy.ravel(), rows[0].ravel(), rows[1].ravel()])
        lab = "Re" if plane == "re_re" else "Im"
        cols = [f"{lab}_sigma[1]", f"{lab}_chi[1]", "W_plus[1]", "W_minus[1]"]
        tables.append(OutputTable(f"{cfg.scenario}_{plane}", cols, data, _manifest(cfg, params, eff, **extra)))
    # diagonal line cuts
    im_chi, re0 = float(g["line_im_chi"]), float(g["line_re"])
    lines = {
        "line_re": (xl + 0j, xl + 1j * im_chi),
        "line_im": (re0 + 1j * xl, re0 + 1j * xl),
    }
    for name, (sig, chi) in lines.items():
        wp = joint_wigner(cats["+"], sig, chi, mesh=False).values
        wm = joint_wigner(cats["-"], sig, chi, mesh=False).values
        cols = ["s[1]", "W_plus[1]", "W_minus[1]"]
        tables.append(OutputTable(f"{cfg.scenario}_{name}", cols, np.column_stack([xl, wp, wm]),
                                  _manifest(cfg, params, eff, **extra)))
    return tables


# ---------------------------------------------------------------- closed system

CLOSED_COLUMNS = {
    "excitations": ["n_a_exact[1]", "n_b_exact[1]", "n_a_analytic[1]", "n_b_analytic[1]"],
    "probabilities": ["P_plus_exact[1]", "P_minus_exact[1]", "P_plus_analytic[1]", "P_minus_analytic[1]"],
    "fidelities": ["F[1]", "F_plus[1]", "F_minus[1]"],
}
OPEN_COLUMNS = {
    "probabilities": ["p_plus[1]", "p_minus[1]"],
    "fidelities": ["f[1]", "f_plus[1]", "f_minus[1]"],
    "negativity": ["N_plus[1]", "N_minus[1]"],
}


def _quantities(cfg, table):
    q = cfg.grid.get("quantities") or list(table)
    for name in q:
        if name not in table:
            raise ValueError(f"unknown quantity {name!r}")
    return q


def closed_observer(params, eff, space, quantities):
    """Per-sample observable callback for evolve_schrodinger."""
    dims = space.mode_dims

    def observe(t, state):
        out = []
        st = analytic_state(eff, params.omega_e, t)
        if "excitations" in quantities:
            na, nb = mean_excitations(state)
            out += [na, nb, abs(st.alpha) ** 2 / 2, abs(st.beta) ** 2 / 2]
        if "probabilities" in quantities:
            pp, pm = detection_probabilities(state)
            out += [pp, pm, st.p_plus, st.p_minus]
        if "fidelities" in quantities:
            out.append(fidelity_pure(full_state_analytic(st, space), state))
            for s in "+-":
                out.append(_nan_on_degenerate(
                    lambda: fidelity_pure(cat_state(st, s, dims), project_electronic(state, s).collapsed)))
        return out

    return observe


def run_closed(cfg: ScenarioConfig, params) -> OutputTable:
    eff = derive_effective(params, warn=False)
    t = _time_grid(cfg, eff)
    space = CompositeSpace(cfg.cutoffs)
    q = _quantities(cfg, CLOSED_COLUMNS)
    opts = cfg.integrator_options(t)
    traj = evolve_schrodinger(params, eff, plus_vacuum_state(space), opts, space=space,
                              observe=closed_observer(params, eff, space, q), store_states=False)
    cols = [f"t[{TIME_UNIT}]"] + [c for name in q for c in CLOSED_COLUMNS[name]]
    rows = np.column_stack([t, np.array(traj.observations)])
    mon = _monitor_summary(traj)
    return OutputTable(cfg.scenario, cols, rows, _manifest(cfg, params, eff, t, monitors=mon))


def run_rwa_curve(cfg: ScenarioConfig, params) -> OutputTable:
    """F(t_s) of the exact closed-system state against the analytic one, per omega_c."""
    space = CompositeSpace(cfg.cutoffs)
    ratio = float(cfg.grid.get("omega_v_ratio", params.omega_v / params.omega_c))
    rows, effs = [], []
    for wc in cfg.grid["omega_c"]:
        p = replace(params, omega_c=float(wc), omega_v=ratio * float(wc))
        eff = derive_effective(p, warn=False)
        ts = detection_time(eff)
        opts = cfg.integrator_options([ts])
        traj = evolve_schrodinger(p, eff, plus_vacuum_state(space), opts, space=space)
        st = analytic_state(eff, p.omega_e, ts)
        f = fidelity_pure(full_state_analytic(st, space), traj.states[-1])
        rows.append((p.omega_c, p.omega_v, ts, f))
        effs.append(eff.to_dict())
    cols = ["omega_c[lambda]", "omega_v[lambda]", f"t_s[{TIME_UNIT}]", "F_ts[1]"]
    m = _manifest(cfg, params, None, [1.0], effective_per_row=effs)
    return OutputTable(cfg.scenario, cols, rows, m)


# ---------------------------------------------------------------- open system


def open_observer(params, eff, space, quantities):
    dims = space.mode_dims

    def observe(t, rho):
        out = []
        st = analytic_state(eff, params.omega_e, t)
        proj = {}
        for s in "+-":
            try:
                proj[s] = project_electronic(rho, s)
            except VanishingBranchError:
                proj[s] = None
        if "probabilities" in quantities:
            out += list(detection_probabilities(rho))
        if "fidelities" in quantities:
            out.append(fidelity_mixed(full_state_analytic(st, space), rho))
            for s in "+-":
                out.append(math.nan if proj[s] is None else _nan_on_degenerate(
                    lambda: fidelity_mixed(cat_state(st, s, dims), proj[s].collapsed)))
        if "negativity" in quantities:
            for s in "+-":
                out.append(math.nan if proj[s] is None else log_negativity(proj[s].collapsed, herm_tol=1e-8))
        return out

    return observe


def run_open(cfg: ScenarioConfig, params) -> OutputTable:
    eff = derive_effective(params, warn=False)
    t = _time_grid(cfg, eff)
    space = CompositeSpace(cfg.cutoffs)
    q = _quantities(cfg, OPEN_COLUMNS)
    opts = cfg.integrator_options(t)
    rho0 = plus_vacuum_state(space).projector()
    traj = evolve_lindblad(params, eff, rho0, opts, space=space,
                           observe=open_observer(params, eff, space, q), store_states=False)
    cols = [f"t[{TIME_UNIT}]"] + [c for name in q for c in OPEN_COLUMNS[name]]
    rows = np.column_stack([t, np.array(traj.observations)])
    mon = _monitor_summary(traj)
    return OutputTable(cfg.scenario, cols, rows, _manifest(cfg, params, eff, t, monitors=mon))


def _monitor_summary(traj) -> dict:
    out = {"step": traj.step, "flagged": traj.flagged}
    for key in ("norm_drift", "trace_drift", "top_a", "top_b", "hermiticity"):
        vals = [m[key] for m in traj.monitors if m.get(key) is not None]
        if vals:
            out[f"max_{key}"] = float(max(vals))
    eig = [m["min_eig"] for m in traj.monitors if m.get("min_eig") is not None]
    if eig:
        out["min_eigenvalue"] = float(min(eig))
    return out


# ---------------------------------------------------------------- jobs


def expand_jobs(cfg: ScenarioConfig) -> list[tuple[str, dict]]:
    """(name, model overrides) per independent simulation of the scenario."""
    if cfg.sweep:
        names = [n for n, _ in cfg.sweep]
        combos = itertools.product(*(v for _, v in cfg.sweep))
        return [("_".join([cfg.scenario] + [f"{n}={_fmt(v)}" for n, v in zip(names, c)]), dict(zip(names, c)))
                for c in combos]
    if cfg.kind == "open" and cfg.grid.get("dissipation"):
        return [(f"{cfg.scenario}_kappa={_fmt(k)}_gamma_v={_fmt(gv)}_gamma_e={_fmt(ge)}",
                 dict(kappa=float(k), gamma_v=float(gv), gamma_e=float(ge)))
                for k, gv, ge in cfg.grid["dissipation"]]
    if cfg.kind == "closed" and "omega_c" in cfg.grid:
        ratio = float(cfg.grid.get("omega_v_ratio", 1.01))
        return [(f"{cfg.scenario}_omega_c={_fmt(wc)}", dict(omega_c=float(wc), omega_v=ratio * float(wc)))
                for wc in cfg.grid["omega_c"]]
    return [(cfg.scenario, {})]


def run_job(cfg: ScenarioConfig, name: str, overrides: dict) -> list[OutputTable]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if cfg.kind == "bessel":
            return run_bessel(cfg)
        params = cfg.model_params(**overrides)
        runner = {"negativity": run_negativity, "wigner": run_wigner, "closed": run_closed,
                  "open": run_open, "rwa_curve": run_rwa_curve}[cfg.kind]
        out = runner(cfg, params)
    tables = out if isinstance(out, list) else [out]
    if len(tables) == 1:
        tables[0].name = name
    else:
        suffix = name[len(cfg.scenario):]
        for tb in tables:
            tb.name = tb.name + suffix
    return tables


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> list[OutputTable]:
    """Run every job of ``cfg``; jobs are independent and may run in worker processes."""
    jobs = expand_jobs(cfg)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_job, cfg, name, ov) for name, ov in jobs]
            results = [f.result() for f in futures]
    else:
        results = [run_job(cfg, name, ov) for name, ov in jobs]
    return [tb for group in results for tb in group]


# ---------------------------------------------------------------- validation


def validation_report(cfg: ScenarioConfig) -> dict:
    """Hard errors and warnings (RWA conditions, truncation risk) for every job."""
    errors, warns = [], []
    if cfg.kind == "bessel":
        return dict(errors=errors, warnings=warns)
    for name, ov in expand_jobs(cfg):
        try:
            params = cfg.model_params(**ov)
            eff = derive_effective(params, warn=False)
        except Exception as exc:  # noqa: BLE001 - reported, not raised
            errors.append(f"{name}: {exc}")
            continue
        warns += [f"{name}: {m}" for m in rwa_condition_report(params, eff)]
        if eff.delta_a == 0 or eff.delta_b == 0:
            errors.append(f"{name}: zero detuning; closed-form solution undefined")
            continue
        t = np.linspace(0, eff.period, 4001)
        alpha, beta = lab_amplitudes(eff, t)
        na, nb = cfg.cutoffs.mode_dims
        a_max, b_max = float(np.abs(alpha).max()), float(np.abs(beta).max())
        tol = float(cfg.integrator.get("top_population_tol", 1e-6))
        tail_a, tail_b = poisson_tail(a_max, na), poisson_tail(b_max, nb)
        if max(tail_a, tail_b) > tol:
            warns.append(
                f"{name}: truncation risk, predicted |alpha|max = {a_max:.3g}, |beta|max = {b_max:.3g}; "
                f"Poisson tail beyond cutoffs ({na - 1}, {nb - 1}) is {max(tail_a, tail_b):.2e} > {tol:g}")
    return dict(errors=errors, warnings=warns)
