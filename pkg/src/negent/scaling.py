"""Sweeps over system size and the fits built on them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .correlation import OccupationSpectrum, occupation_spectrum, truncated_projector
from .entropy import pt_pairing_residual, renyi_entropy, von_neumann_entropy
from .errors import ConfigError, NegentError
from .models import FourBandParams, Geometry, ModelSpec, TwoBandParams


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    window: list
    local_slopes: np.ndarray = field(default=None, repr=False)


@dataclass
class SweepRow:
    L: int
    Ly: int
    S: complex = complex("nan")
    renyi: dict = field(default_factory=dict)
    max_abs_p: float = float("nan")
    pt_residual: float = float("nan")
    error: str | None = None
    spectrum: OccupationSpectrum | None = field(default=None, repr=False)


@dataclass(frozen=True)
class HierarchyReport:
    exponents: list
    predicted: list
    branches: np.ndarray
    L: list
    rank_swap: bool


@dataclass(frozen=True)
class GappedReport:
    Ly: list
    fits: list
    kappa: float
    xi: float
    kappa_fit: ScalingFit


@dataclass(frozen=True)
class SaturationReport:
    Ly: list
    S_min: np.ndarray
    fit: ScalingFit
    predicted_slope: float


@dataclass(frozen=True)
class DipReport:
    L: list
    S_real: np.ndarray
    excursion: np.ndarray
    exit_L: int | None
    dip_L: int | None
    trend_slope: float
    increasing: bool


def linear_fit(x, y, window=None) -> ScalingFit:
    """Least squares ``y = slope x + intercept`` with finite-difference slopes."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 4:
        raise ConfigError(f"a fit needs at least 4 points, got {len(x)}")
    if np.ptp(x) == 0:
        raise ConfigError("degenerate fit window: all abscissae equal")
    res = stats.linregress(x, y)
    return ScalingFit(slope=float(res.slope), intercept=float(res.intercept),
                      slope_stderr=float(res.stderr), r_squared=float(res.rvalue ** 2),
                      window=list(window if window is not None else x),
                      local_slopes=np.diff(y) / np.diff(x))


def fit_log_slope(table, column: str = "S") -> ScalingFit:
    """Fit ``Re S`` (or any real column) against ``ln L``.

    ``table`` is a list of :class:`SweepRow` or a pair ``(L_list, values)``.
    Rows carrying an error are skipped.
    """
    if isinstance(table, tuple) and len(table) == 2:
        L, y = map(np.asarray, table)
    else:
        good = [r for r in table if r.error is None]
        L = np.array([r.L for r in good])
        y = np.array([getattr(r, column).real if column == "S" else getattr(r, column) for r in good])
    return linear_fit(np.log(L.astype(float)), np.real(y), window=[int(v) for v in L])


def predicted_gapless_slope(B: int, Ly: int) -> int:
    """``-ceil((B^2 Ly^2 - 1) / 2)``."""
    return -math.ceil((B * B * Ly * Ly - 1) / 2)


def sweep_entropy_vs_L(spec: ModelSpec, g_template: Geometry, L_list, E_F: float = 0.0,
                       n_list=(2, 3), branch: str = "symmetric", threads: int = 1,
                       keep_spectra: bool = False) -> list:
    """One :class:`SweepRow` per L, in input order; failures are recorded and skipped."""
    rows = []
    for L in L_list:
        row = SweepRow(L=int(L), Ly=g_template.Ly)
        try:
            g = g_template.with_L(int(L))
            ps = occupation_spectrum(truncated_projector(spec, g, E_F, threads=threads))
            row.S = von_neumann_entropy(ps, branch)
            row.renyi = {int(n): renyi_entropy(ps, n) for n in n_list}
            row.max_abs_p = ps.max_abs
            row.pt_residual = pt_pairing_residual(ps)
            if keep_spectra:
                row.spectrum = ps
        except NegentError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _branches(values: np.ndarray, n_branches: int, rel_tol: float):
    """Cluster ``|p - 1/2|`` into degenerate groups; return the top group magnitudes and sizes."""
    d = np.sort(np.abs(np.asarray(values) - 0.5))[::-1]
    mags, sizes = [], []
    i = 0
    while i < len(d) and len(mags) < n_branches:
        j = i + 1
        while j < len(d) and d[i] - d[j] <= rel_tol * d[i]:
            j += 1
        mags.append(d[i:j].mean())
        sizes.append(j - i)
        i = j
    return mags, sizes


def predicted_hierarchy(B: int, Ly: int) -> list:
    """``(B Ly - 1)/2, (B Ly - 1)/2 - 1, ...`` down to the last exponent >= 1."""
    top = (B * Ly - 1) / 2
    return [top - j for j in range(int(top)) if top - j >= 1]


def hierarchy_exponents(spec: TwoBandParams, g: Geometry, L_list, spectra=None,
                        E_F: float = 0.0, rel_tol: float = 1e-6) -> HierarchyReport:
    """Growth exponents of the leading occupation branches.

    Eigenvalues are ranked by ``|p - 1/2|``, which treats ``p`` and ``1 - p``
    alike, and numerically degenerate values are merged into one branch.
    """
    predicted = predicted_hierarchy(spec.B, g.Ly)
    n = max(1, len(predicted))
    if spectra is None:
        spectra = [occupation_spectrum(truncated_projector(spec, g.with_L(L), E_F)) for L in L_list]
    mags, sizes = zip(*[_branches(ps.values, n, rel_tol) for ps in spectra])
    branch_mags = np.array(mags)
    swap = len({tuple(s) for s in sizes}) > 1
    if swap:
        warnings.warn("branch degeneracy pattern changes across L; rank tracking may have swapped",
                      RuntimeWarning, stacklevel=2)
    logL = np.log(np.asarray(L_list, float))
    exps = [float(np.polyfit(logL, np.log(branch_mags[:, b]), 1)[0]) for b in range(branch_mags.shape[1])]
    order = np.argsort(exps)[::-1]
    return HierarchyReport(exponents=[exps[i] for i in order], predicted=predicted,
                           branches=branch_mags[:, order], L=[int(v) for v in L_list], rank_swap=swap)


def gapped_scaling(spec: TwoBandParams, Ly_list, L_window, saturation_L: int | None = None,
                   E_F: float = 0.0) -> GappedReport:
    """Fit ``S ~ -(kappa Ly + xi) ln L`` from per-Ly slopes over ``L_window``.

    ``L_window`` is a list of L values or a callable ``Ly -> list``.
    """
    if spec.b0 <= 1:
        raise ConfigError("gapped scaling needs b0 > 1")
    fits = []
    for Ly in Ly_list:
        Ls = list(L_window(Ly)) if callable(L_window) else list(L_window)
        if saturation_L is not None and saturation_L <= max(Ls):
            raise ConfigError(f"saturation L={saturation_L} overlaps the fit window ending at {max(Ls)}")
        rows = sweep_entropy_vs_L(spec, Geometry(Ls[0], Ly), Ls, E_F, n_list=())
        fits.append(fit_log_slope(rows))
    slopes = np.array([f.slope for f in fits])
    kfit = linear_fit(np.asarray(Ly_list, float), -slopes)
    return GappedReport(Ly=list(Ly_list), fits=fits, kappa=kfit.slope, xi=kfit.intercept, kappa_fit=kfit)


def saturation_scan(spec: TwoBandParams, Ly_list, L: int, E_F: float = 0.0) -> SaturationReport:
    """``S_min`` at fixed large L versus Ly, against ``-Ly log(a0 / (b0 - 1)^B)``."""
    if spec.b0 <= 1:
        raise ConfigError("saturation scan needs b0 > 1")
    S = []
    for Ly in Ly_list:
        ps = occupation_spectrum(truncated_projector(spec, Geometry(L, Ly), E_F))
        S.append(von_neumann_entropy(ps).real)
    S = np.array(S)
    return SaturationReport(Ly=list(Ly_list), S_min=S, fit=linear_fit(Ly_list, S),
                            predicted_slope=-math.log(abs(spec.a0 / (spec.b0 - 1) ** spec.B)))


def bulk_ep_scan(spec: FourBandParams, g_template: Geometry, E_F: float, L_list,
                 excursion_tol: float = 0.05) -> DipReport:
    """Locate where ``Re p`` leaves ``[0, 1]`` and the deepest local minimum of ``Re S``."""
    L_list = [int(v) for v in L_list]
    S, exc = [], []
    for L in L_list:
        ps = occupation_spectrum(truncated_projector(spec, g_template.with_L(L), E_F))
        re = ps.values.real
        exc.append(max(0.0, -re.min(), re.max() - 1.0))
        S.append(von_neumann_entropy(ps).real)
    S, exc = np.array(S), np.array(exc)
    exit_L = L_list[int(np.argmax(exc))] if exc.max() > excursion_tol else None
    minima = [i for i in range(1, len(S) - 1) if S[i] < S[i - 1] and S[i] < S[i + 1]]
    dip_L = None
    if minima:
        # depth relative to the higher of the two neighbouring maxima
        def depth(i):
            left = S[:i].max()
            right = S[i + 1:].max()
            return min(left, right) - S[i]
        dip_L = L_list[max(minima, key=depth)]
    trend = float(np.polyfit(np.log(L_list), S, 1)[0])
    return DipReport(L=L_list, S_real=S, excursion=exc, exit_L=exit_L, dip_L=dip_L,
                     trend_slope=trend, increasing=trend > 0)
