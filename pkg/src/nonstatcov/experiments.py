"""Experiment runners: config in, CSV/JSON report out.

Every runner emits rows in one uniform schema
``(experiment, model_hash, N, kind, i, j, measured, envelope, constant)``
and a list of pass/fail verdicts that are pure functions of those rows.
Reruns with an identical config are byte-identical except for the
timestamp in ``metadata.json``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np
import scipy

from . import __version__ as _pkg_version
from . import models as md
from . import operator_core as oc
from . import partial_cov as pc
from . import var_extraction as vx
from . import verification as vf
from .config import ExperimentConfig, load_config
from .errors import ConfigError, InputError
from .models import SRE, TvARCH, TvVMA
from .reference import reference_sre, reference_tvvar3

COLUMNS = ("experiment", "model_hash", "N", "kind", "i", "j",
           "measured", "envelope", "constant")


@dataclass
class Verdict:
    name: str
    passed: bool
    details: dict


@dataclass
class Report:
    experiment: str
    metadata: dict
    rows: list
    verdicts: list

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def table_csv(self) -> str:
        lines = [",".join(COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_csv_cell(row[c]) for c in COLUMNS))
        return "\r\n".join(lines) + "\r\n"

    def verdicts_json(self) -> str:
        payload = {"all_passed": bool(self.all_passed),
                   "verdicts": [{"name": v.name, "passed": bool(v.passed),
                                 "details": _jsonable(v.details)}
                                for v in self.verdicts]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    text = str(value)
    if any(ch in text for ch in ",\"\r\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    return obj


def _check_schema(rows) -> None:
    for i, row in enumerate(rows):
        if set(row) != set(COLUMNS):
            raise InputError(f"report row {i} violates the column schema: "
                             f"{sorted(row)}")


def _finalize(experiment: str, config: ExperimentConfig, rows, verdicts) -> Report:
    for row in rows:
        row.setdefault("experiment", experiment)
        row.setdefault("model_hash", config.model_hash)
    _check_schema(rows)
    metadata = {
        "experiment": experiment,
        "config_sha256": config.config_hash,
        "model_hash": config.model_hash,
        "seed": config.seed,
        "package_version": _pkg_version,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "kolmogorov_convention": "classical log-det identity, unnormalized "
                                 "spectral density (no 1/2pi in f)",
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return Report(experiment=experiment, metadata=metadata, rows=rows,
                  verdicts=verdicts)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: Report, out_dir: str) -> dict:
    """Write table/verdicts/metadata files atomically; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "table": os.path.join(out_dir, f"{report.experiment.replace('-', '_')}_table.csv"),
        "verdicts": os.path.join(out_dir, "verdicts.json"),
        "metadata": os.path.join(out_dir, "metadata.json"),
    }
    _atomic_write(paths["table"], report.table_csv())
    _atomic_write(paths["verdicts"], report.verdicts_json())
    _atomic_write(paths["metadata"],
                  json.dumps(report.metadata, indent=2, sort_keys=True) + "\n")
    return paths


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _grid_int(grid: dict, key: str, default=None) -> int:
    val = grid.get(key, default)
    if val is None:
        raise ConfigError(f"missing grid field {key!r}", path=f"/grid/{key}")
    if not isinstance(val, (int, np.integer)):
        raise ConfigError(f"grid field {key!r} must be an integer",
                          path=f"/grid/{key}")
    return int(val)


def _run_simulate(config: ExperimentConfig, threads: int):
    grid = config.grid
    n = _grid_int(grid, "N", 200)
    t_lo = _grid_int(grid, "t_lo", 0)
    t_hi = _grid_int(grid, "t_hi", t_lo + n - 1)
    path = md.simulate_path(config.model, n, t_lo, t_hi, config.seed)
    again = md.simulate_path(config.model, n, t_lo, t_hi, config.seed)
    rows = []
    for i, t in enumerate(path.times):
        for comp in range(path.data.shape[1]):
            rows.append(vf.table_row("path", int(t), comp, path.data[i, comp], n=n))
    deterministic = bool(np.array_equal(path.data, again.data))
    return rows, [Verdict("deterministic_replay", deterministic, {})]


def _run_decay(config: ExperimentConfig, threads: int):
    grid = config.grid
    n = _grid_int(grid, "N", 200)
    t_lo = _grid_int(grid, "t_lo", 60)
    t_hi = _grid_int(grid, "t_hi", 140)
    w = md.cov_window(config.model, n, t_lo, t_hi)
    lag_norms = w.lag_max_norms()
    try:
        fit = md.assumption_fit(config.model, n, t_lo, t_hi,
                                kappa=grid.get("kappa"))
    except md.FitError:
        fit = None
    rows = []
    for lag, norm in enumerate(lag_norms):
        shape = float(oc.gu(lag)) ** (-fit.decay.exponent) if fit else 0.0
        const = fit.decay.constant if fit else 0.0
        rows.append(vf.table_row("lag_norm", lag, 0, norm, shape, const, n=n))
    verdicts = []
    order = getattr(config.model, "order", None)
    degenerate_is_fine = isinstance(config.model, TvVMA) and order == 0
    if degenerate_is_fine:
        off = float(lag_norms[1:].max(initial=0.0))
        verdicts.append(Verdict("white_noise_offdiagonal", off <= 1e-12,
                                {"max_offdiagonal": off}))
    if fit is not None:
        rows.append(vf.table_row("smoothness_constant", t_lo, t_hi,
                            fit.smoothness_constant, 0.0, fit.kappa_used, n=n))
        declared = getattr(config.model, "kappa", None)
        if declared is not None:
            ok = abs(fit.decay.exponent - declared) <= 1.0
            verdicts.append(Verdict("decay_exponent_window", ok,
                                    {"fitted": fit.decay.exponent,
                                     "declared": declared}))
        verdicts.append(Verdict("smoothness_constant_finite",
                                math.isfinite(fit.smoothness_constant),
                                {"constant": fit.smoothness_constant}))
    elif not degenerate_is_fine:
        verdicts.append(Verdict("decay_fit_available", False,
                                {"reason": "fewer than 4 usable lags"}))
    return rows, verdicts


def _run_invert(config: ExperimentConfig, threads: int):
    grid = config.grid
    res = vf.check_inverse_decay(config.model,
                                 n=_grid_int(grid, "N", 200),
                                 window=_grid_int(grid, "window", 240),
                                 pad=_grid_int(grid, "pad", 60))
    return res.rows, [Verdict(res.name, res.passed, res.details)]


def _run_neumann(config: ExperimentConfig, threads: int):
    grid = config.grid
    res = vf.check_neumann_certificates(config.model, seed=config.seed,
                                        count=_grid_int(grid, "count", 50),
                                        n=_grid_int(grid, "N", 200))
    return res.rows, [Verdict(res.name, res.passed, res.details)]


def _run_var(config: ExperimentConfig, threads: int):
    grid = config.grid
    n = _grid_int(grid, "N", 200)
    t_index = _grid_int(grid, "t", n // 2)
    orders = grid.get("orders", [1, 2, 4, 8])
    kappa = grid.get("kappa", getattr(config.model, "kappa", None))
    rows = []
    sigmas = {}
    for d in orders:
        coeffs = vx.var_coeffs_finite(config.model, n, t_index, int(d))
        sigmas[int(d)] = coeffs.sigma
        for j, phi in enumerate(coeffs.phis, start=1):
            shape = float(oc.zeta(j)) ** ((kappa - 1.0) if kappa else 1.0)
            rows.append(vf.table_row("phi_norm", int(d), j,
                                float(np.linalg.norm(phi, 2)), shape, n=n))
        rows.append(vf.table_row("sigma_logdet", int(d), 0,
                            float(np.linalg.slogdet(coeffs.sigma)[1]), n=n))
    ordered = sorted(sigmas)
    worst = 0.0
    for lo, hi in zip(ordered, ordered[1:]):
        slack = float(np.linalg.eigvalsh(sigmas[lo] - sigmas[hi])[0])
        worst = min(worst, slack)
    verdicts = [Verdict("innovation_variance_nesting", worst >= -1e-9,
                        {"worst_slack": worst})]
    kol = vx.kolmogorov_gap(config.model, n, t_index)
    rows.append(vf.table_row("kolmogorov_gap", t_index, 0, kol.gap, 10.0 / n, n=n))
    verdicts.append(Verdict("kolmogorov_gap_order", kol.gap <= 10.0 / n,
                            {"lhs": kol.lhs, "rhs": kol.rhs, "gap": kol.gap}))
    return rows, verdicts


def _run_baxter(config: ExperimentConfig, threads: int):
    grid = config.grid
    res = vf.check_baxter(config.model, n=_grid_int(grid, "N", 200),
                          t_index=_grid_int(grid, "t", 100),
                          orders=tuple(grid.get("orders", (5, 10, 20, 40))))
    return res.rows, [
        Verdict("baxter_sums_decreasing", bool(res.details["decreasing"]),
                {"sums": res.details["sums"]}),
        Verdict("baxter_slope_window",
                res.details["slope_window_lo"] <= res.details["slope"]
                <= res.details["slope_window_hi"],
                {k: res.details[k] for k in
                 ("slope", "slope_window_lo", "slope_window_hi")}),
    ]


def _companion(config: ExperimentConfig, key: str, default_builder):
    if key in config.companions:
        return config.companions[key]
    return default_builder()


def _run_smoothness(config: ExperimentConfig, threads: int):
    grid = config.grid
    ns = tuple(grid.get("Ns", (100, 200, 400)))
    var_model = _companion(config, "var_model", reference_tvvar3)
    res = vf.check_smoothness(config.model, var_model, ns=ns)
    return res.rows, [Verdict(res.name, res.passed, res.details)]


def _run_partial(config: ExperimentConfig, threads: int):
    grid = config.grid
    res = vf.check_partial_oracle(seed=config.seed,
                                  count=_grid_int(grid, "count", 100),
                                  p=_grid_int(grid, "p", 3),
                                  length=_grid_int(grid, "length", 20))
    rows = list(res.rows)
    verdicts = [Verdict(res.name, res.passed, res.details)]
    model = config.model
    if getattr(model, "p", 1) >= 2 and not isinstance(model, (SRE, TvARCH)):
        n = _grid_int(grid, "N", 200)
        a = _grid_int(grid, "a", 0)
        b = _grid_int(grid, "b", 1)
        t = _grid_int(grid, "t", n // 2)
        rep = pc.partial_smoothness_gap(model, n, a, b, t - 2, t + 2,
                                        kappa=grid.get("kappa", 4.0))
        for (ti, tj), meas, env in zip(rep.pair_gaps.indices,
                                       rep.pair_gaps.measured,
                                       rep.pair_gaps.bound):
            rows.append(vf.table_row("partial_gap", ti, tj, meas, env,
                                rep.pair_gaps.constant_estimate, n=n))
        verdicts.append(Verdict("partial_gap_constant_finite",
                                math.isfinite(rep.pair_gaps.constant_estimate),
                                {"constant": rep.pair_gaps.constant_estimate}))
    return rows, verdicts


def _run_coherence(config: ExperimentConfig, threads: int):
    grid = config.grid
    model = config.model
    if getattr(model, "p", 1) < 2:
        raise ConfigError("coherence requires a model with p >= 2",
                          path="/model")
    res = vf.check_coherence(var_model=model,
                             ns=tuple(grid.get("Ns", (200, 400))),
                             u=float(grid.get("u", 0.3)),
                             a=_grid_int(grid, "a", 0),
                             b=_grid_int(grid, "b", 1),
                             max_lag=_grid_int(grid, "max_lag", 40),
                             omega_points=_grid_int(grid, "omega_points", 65))
    return res.rows, [Verdict(res.name, res.passed, res.details)]


def _run_physical(config: ExperimentConfig, threads: int):
    grid = config.grid
    n = _grid_int(grid, "N", 200)
    t_index = _grid_int(grid, "t", 100)
    reps = _grid_int(grid, "reps", 5000)
    js = tuple(int(j) for j in grid.get("js", range(1, 9)))
    model = config.model
    if isinstance(model, SRE):
        res = vf.check_physical_dependence(model, n=n, t_index=t_index,
                                           js=js, reps=reps, seed=config.seed)
        return res.rows, [Verdict(res.name, res.passed, res.details)]
    rows = []
    beyond_ok = True
    memory = md.effective_memory(model)
    for j in js:
        est = md.physical_dep_estimate(model, n, t_index, j, reps=reps,
                                       seed=config.seed + j)
        rows.append(vf.table_row("physical_dep", j, 0, est.value, est.stderr, n=n))
        if isinstance(model, TvVMA) and j > model.order:
            beyond_ok = beyond_ok and est.value <= 3.0 * max(est.stderr, 1e-300)
    return rows, [Verdict("beyond_memory_null", beyond_ok, {"memory": memory})]


def _run_verify_all(config: ExperimentConfig, threads: int):
    var_model = _companion(config, "var_model", reference_tvvar3)
    sre_model = _companion(config, "sre_model", reference_sre)
    names = config.grid.get("checks")
    results = vf.run_all(model=config.model, var_model=var_model,
                         sre_model=sre_model, threads=threads, names=names)
    rows = []
    verdicts = []
    for res in results:
        rows.extend(res.rows)
        verdicts.append(Verdict(res.name, res.passed, res.details))
    # byte-level determinism of a table assembly, run twice in process
    sub = load_config({"experiment": "decay", "seed": config.seed,
                       "model": {"reference": "tvvma_kappa4_p2"},
                       "grid": {"N": 100, "t_lo": 30, "t_hi": 70}})
    rep1 = run_experiment(sub)
    rep2 = run_experiment(sub)
    same = rep1.table_csv() == rep2.table_csv()
    verdicts.append(Verdict("determinism", same,
                            {"bytes": len(rep1.table_csv())}))
    return rows, verdicts


_RUNNERS = {
    "simulate": _run_simulate,
    "decay": _run_decay,
    "invert": _run_invert,
    "neumann": _run_neumann,
    "var": _run_var,
    "baxter": _run_baxter,
    "smoothness": _run_smoothness,
    "partial": _run_partial,
    "coherence": _run_coherence,
    "physical": _run_physical,
    "verify-all": _run_verify_all,
}


def run_experiment(config: ExperimentConfig, threads: int = 1) -> Report:
    """Execute one experiment; deterministic given (config, seed).

    Numeric failures inside a check become failed verdicts where the
    runner is structured to continue; hard errors (singular inputs, config
    contradictions) propagate as :class:`NonstatcovError`.
    """
    runner = _RUNNERS.get(config.experiment)
    if runner is None:
        raise ConfigError(f"unknown experiment {config.experiment!r}",
                          path="/experiment")
    rows, verdicts = runner(config, threads)
    return _finalize(config.experiment, config, rows, verdicts)
