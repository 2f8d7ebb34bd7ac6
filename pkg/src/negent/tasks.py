"""Task pipelines behind the command line; each returns a :class:`ResultEnvelope`."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from . import __version__
from .config import RunConfig
from .correlation import occupation_spectrum, truncated_projector
from .entropy import entropy_report, pt_pairing_residual
from .fock import oracle_check
from .models import FourBandParams, Geometry, TwoBandParams, ribbon_matrix
from .scaling import (bulk_ep_scan, fit_log_slope, gapped_scaling, hierarchy_exponents,
                      predicted_gapless_slope, saturation_scan, sweep_entropy_vs_L)
from .spectral import biorth_eig, ep_dispersion_classify, tie_tolerance

SCHEMA_VERSION = 1


@dataclass
class ResultEnvelope:
    config: dict
    task: str
    columns: list
    rows: list
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__
    schema_version: int = SCHEMA_VERSION


def _param_columns(cfg: RunConfig) -> dict:
    p = cfg.model.as_dict()
    p.pop("model")
    return {"model": cfg.model.kind, **p}


def _entropy_fields(rep, orders) -> dict:
    out = {"Re_SA": rep.s_von_neumann.real, "Im_SA": rep.s_von_neumann.imag}
    for n in orders:
        out[f"Re_S{n}"] = rep.renyi[n].real
        out[f"Im_S{n}"] = rep.renyi[n].imag
    return out


def _renyi_columns(orders) -> list:
    cols = []
    for n in orders:
        cols += [f"Re_S{n}", f"Im_S{n}"]
    return cols


def _task_spectrum(cfg: RunConfig, env: ResultEnvelope):
    g = cfg.geometry
    base = _param_columns(cfg)
    for k in g.momenta:
        es = biorth_eig(ribbon_matrix(cfg.model, g.Ly, k, g.y_boundary), balance=True)
        tol = tie_tolerance(es)
        for i, E in enumerate(es.energies):
            env.rows.append({**base, "L": g.L, "Ly": g.Ly, "k": k, "index": i, "Re_E": E.real,
                             "Im_E": E.imag, "occupied": int(E.real < cfg.E_F),
                             "tie": int(abs(E.real - cfg.E_F) < tol),
                             "near_defective": int(es.near_defective)})
        if es.near_defective:
            env.warnings.append(f"near-defective ribbon at k={k:.17g} (rcond={es.rcond:.3g})")
    env.columns = list(base) + ["L", "Ly", "k", "index", "Re_E", "Im_E", "occupied", "tie",
                                "near_defective"]


def _entropy_row(cfg, g, ps):
    rep = entropy_report(ps, cfg.renyi_orders, cfg.branch)
    return {**_param_columns(cfg), "L": g.L, "Ly": g.Ly, "E_F": cfg.E_F,
            **_entropy_fields(rep, cfg.renyi_orders), "max_abs_p": ps.max_abs,
            "pt_residual": pt_pairing_residual(ps), "n_p": len(ps)}


def _task_entropy(cfg: RunConfig, env: ResultEnvelope):
    g = cfg.geometry
    ps = occupation_spectrum(truncated_projector(cfg.model, g, cfg.E_F, cfg.threads))
    env.rows.append(_entropy_row(cfg, g, ps))
    env.columns = list(_param_columns(cfg)) + ["L", "Ly", "E_F", "Re_SA", "Im_SA"] + \
        _renyi_columns(cfg.renyi_orders) + ["max_abs_p", "pt_residual", "n_p"]


def _task_sweep(cfg: RunConfig, env: ResultEnvelope):
    rows = sweep_entropy_vs_L(cfg.model, cfg.geometry, cfg.L_list, cfg.E_F, cfg.renyi_orders,
                              cfg.branch, cfg.threads)
    base = _param_columns(cfg)
    fit = None
    good = [r for r in rows if r.error is None]
    if len(good) >= 4:
        fit = fit_log_slope(rows)
        env.summary.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared,
                           slope_stderr=fit.slope_stderr)
    predicted = (predicted_gapless_slope(cfg.model.B, cfg.geometry.Ly)
                 if isinstance(cfg.model, TwoBandParams) else math.nan)
    env.summary["predicted_slope"] = predicted
    for r in rows:
        if r.error:
            env.warnings.append(f"L={r.L}: {r.error}")
        row = {**base, "L": r.L, "Ly": r.Ly, "E_F": cfg.E_F, "Re_SA": r.S.real, "Im_SA": r.S.imag}
        for n in cfg.renyi_orders:
            v = r.renyi.get(n, complex("nan"))
            row[f"Re_S{n}"], row[f"Im_S{n}"] = v.real, v.imag
        row.update(max_abs_p=r.max_abs_p, pt_residual=r.pt_residual,
                   fit_slope=fit.slope if fit else math.nan,
                   fit_r2=fit.r_squared if fit else math.nan, predicted_slope=predicted,
                   error=r.error or "")
        env.rows.append(row)
    env.columns = list(base) + ["L", "Ly", "E_F", "Re_SA", "Im_SA"] + \
        _renyi_columns(cfg.renyi_orders) + ["max_abs_p", "pt_residual", "fit_slope", "fit_r2",
                                            "predicted_slope", "error"]


def _task_hierarchy(cfg: RunConfig, env: ResultEnvelope):
    import warnings as _w
    with _w.catch_warnings(record=True) as caught:
        _w.simplefilter("always")
        rep = hierarchy_exponents(cfg.model, cfg.geometry, cfg.L_list, E_F=cfg.E_F)
    env.warnings += [str(w.message) for w in caught]
    base = _param_columns(cfg)
    for i, L in enumerate(rep.L):
        for b, exp in enumerate(rep.exponents):
            pred = rep.predicted[b] if b < len(rep.predicted) else math.nan
            env.rows.append({**base, "L": L, "Ly": cfg.geometry.Ly, "branch_rank": b,
                             "abs_p": float(rep.branches[i, b]), "exponent": exp,
                             "predicted_exponent": pred, "rank_swap": int(rep.rank_swap)})
    env.summary.update(exponents=rep.exponents, predicted=rep.predicted)
    env.columns = list(base) + ["L", "Ly", "branch_rank", "abs_p", "exponent",
                                "predicted_exponent", "rank_swap"]


def _task_classify(cfg: RunConfig, env: ResultEnvelope):
    res = ep_dispersion_classify(cfg.model, cfg.geometry)
    env.rows.append({**_param_columns(cfg), "Ly": cfg.geometry.Ly, "kind": res.kind,
                     "exponent": res.exponent, "intercept": res.intercept,
                     "det_R_min_dk": abs(res.det_R[0]), "det_R_max_dk": abs(res.det_R[-1])})
    env.columns = list(_param_columns(cfg)) + ["Ly", "kind", "exponent", "intercept",
                                               "det_R_min_dk", "det_R_max_dk"]


def _task_gapped(cfg: RunConfig, env: ResultEnvelope):
    rep = gapped_scaling(cfg.model, cfg.Ly_list, list(cfg.L_list), cfg.saturation_L, cfg.E_F)
    base = _param_columns(cfg)
    cols = list(base) + ["section", "Ly", "L", "value", "kappa", "xi", "r_squared", "predicted"]
    for Ly, f in zip(rep.Ly, rep.fits):
        env.rows.append({**base, "section": "log_slope", "Ly": Ly, "L": "", "value": f.slope,
                         "kappa": rep.kappa, "xi": rep.xi, "r_squared": f.r_squared,
                         "predicted": math.nan})
    env.summary.update(kappa=rep.kappa, xi=rep.xi)
    if cfg.saturation_L is not None:
        sat = saturation_scan(cfg.model, cfg.Ly_list, cfg.saturation_L, cfg.E_F)
        for Ly, s in zip(sat.Ly, sat.S_min):
            env.rows.append({**base, "section": "saturation", "Ly": Ly, "L": cfg.saturation_L,
                             "value": s, "kappa": math.nan, "xi": math.nan,
                             "r_squared": sat.fit.r_squared, "predicted": sat.predicted_slope})
        env.summary.update(S_min_slope=sat.fit.slope, S_min_r2=sat.fit.r_squared,
                           S_min_predicted_slope=sat.predicted_slope)
    env.columns = cols


def _task_bulk(cfg: RunConfig, env: ResultEnvelope):
    rep = bulk_ep_scan(cfg.model, cfg.geometry, cfg.E_F, cfg.L_list)
    base = _param_columns(cfg)
    for L, s, e in zip(rep.L, rep.S_real, rep.excursion):
        env.rows.append({**base, "L": L, "Ly": cfg.geometry.Ly, "E_F": cfg.E_F, "Re_SA": s,
                         "excursion": e, "exit_L": rep.exit_L if rep.exit_L else "",
                         "dip_L": rep.dip_L if rep.dip_L else "", "trend_slope": rep.trend_slope})
    env.summary.update(exit_L=rep.exit_L, dip_L=rep.dip_L, trend_slope=rep.trend_slope,
                       increasing=rep.increasing)
    env.columns = list(base) + ["L", "Ly", "E_F", "Re_SA", "excursion", "exit_L", "dip_L",
                                "trend_slope"]


def default_oracle_suite() -> list:
    """Eight-mode instances of both models, Hermitian and non-Hermitian."""
    return [
        ("two-band gapless", TwoBandParams(0.5, 2.0, 1.0, 1), Geometry(4, 1)),
        ("two-band gapped B=2", TwoBandParams(0.8, 1.0, 1.2, 2), Geometry(4, 1)),
        ("two-band topological", TwoBandParams(1.0, 0.6, 1.6, 1), Geometry(4, 1)),
        ("two-band trivial", TwoBandParams(0.5, 2.0, 1.5, 1), Geometry(4, 1)),
        ("four-band crossing", FourBandParams(3.0, 2.0, 0.0), Geometry(2, 1)),
        ("four-band hermitian", FourBandParams(1.2, 0.0, 0.0), Geometry(2, 1)),
        ("four-band general", FourBandParams.general(3.0, 1.0, 0.0, 1.0, 0.44), Geometry(2, 1)),
    ]


ORACLE_TOL = 1e-8


def _task_oracle(cfg: RunConfig, env: ResultEnvelope):
    worst = 0.0
    for name, spec, g in default_oracle_suite():
        r = oracle_check(spec, g, 0.0, n_list=(2,))
        resid = max(r["dS_aligned"], r["dtr2"], r["dRe_S2"], r.get("dswap", 0.0),
                    r["wick_residual"], r["trace_residual"])
        worst = max(worst, resid)
        env.rows.append({"instance": name, "model": spec.kind, "L": g.L, "Ly": g.Ly,
                         "modes": r["modes"], "Re_SA_exact": r["S_exact"].real,
                         "Re_SA_corr": r["S_corr"].real, "dS": r["dS"],
                         "dS_aligned": r["dS_aligned"], "windings": r["windings"],
                         "dtr2": r["dtr2"], "dswap": r.get("dswap", math.nan),
                         "wick_residual": r["wick_residual"], "pass": int(resid < ORACLE_TOL)})
    env.summary.update(max_residual=worst, all_pass=worst < ORACLE_TOL)
    env.columns = ["instance", "model", "L", "Ly", "modes", "Re_SA_exact", "Re_SA_corr", "dS",
                   "dS_aligned", "windings", "dtr2", "dswap", "wick_residual", "pass"]


_TASKS = {
    "spectrum": _task_spectrum, "entropy": _task_entropy, "sweep": _task_sweep,
    "hierarchy": _task_hierarchy, "classify-ep": _task_classify,
    "gapped-scaling": _task_gapped, "bulk-ep-scan": _task_bulk, "oracle-check": _task_oracle,
}


def run(cfg: RunConfig) -> ResultEnvelope:
    """Dispatch a validated configuration.  Library errors propagate to the caller."""
    env = ResultEnvelope(config=cfg.echo(), task=cfg.task, columns=[], rows=[])
    t0 = time.perf_counter()
    _TASKS[cfg.task](cfg, env)
    env.wall_time = time.perf_counter() - t0
    return env


def oracle_failed(env: ResultEnvelope) -> bool:
    return env.task == "oracle-check" and not env.summary.get("all_pass", True)
