"""Biorthogonal eigendecomposition and eigenstate diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import (ClassificationError, ConfigError, DecompositionError,
                     FermiTieError, NotApplicableError, SingularTransformError)
from .models import (FourBandParams, Geometry, ModelSpec, TwoBandParams,
                     ribbon_matrix, topo_region_indicator)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class BiorthEigenSystem:
    """Right eigenvectors as columns of ``right``; left eigenvectors as rows of ``left``.

    ``left @ right`` is the identity up to ``biorth_residual``.  ``scale``
    is the diagonal similarity used for balancing (ones when unbalanced).
    """

    energies: np.ndarray
    right: np.ndarray
    left: np.ndarray
    biorth_residual: float
    near_defective: bool
    rcond: float
    matrix_norm: float
    scale: np.ndarray = field(repr=False)
    left_source: str = "inverse"
    adjoint_residual: float = float("nan")

    @property
    def size(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class OverlapReport:
    eta: float
    band_indices: tuple
    is_edge_pair: bool


@dataclass(frozen=True)
class SurrogateSystem:
    r: float
    Q_diagonal: np.ndarray
    surrogate_matrix: np.ndarray
    spectrum_residual: float


@dataclass(frozen=True)
class EPClassification:
    kind: str
    exponent: float
    intercept: float
    dk: np.ndarray
    abs_det: np.ndarray
    det_R: np.ndarray | None = None


def _pair_residual(left, right):
    return float(np.max(np.abs(left @ right - np.eye(right.shape[1]))))


def _max_column_overlap(V):
    """Largest normalized squared overlap between distinct columns of V."""
    n = V.shape[1]
    if n < 2:
        return 0.0
    Vn = V / np.linalg.norm(V, axis=0)
    G = np.abs(Vn.conj().T @ Vn) ** 2
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def _adjoint_left(M, energies, V):
    """Left eigenvectors from an independent solve of ``M^H``, paired by eigenvalue."""
    w2, W = np.linalg.eig(M.conj().T)
    cost = np.abs(w2.conj()[None, :] - energies[:, None])
    rows, cols = linear_sum_assignment(cost)
    W = W[:, cols[np.argsort(rows)]]
    left = W.conj().T
    norms = np.einsum("mi,im->m", left, V)
    return left / norms[:, None]


def biorth_eig(M: np.ndarray, balance: bool = False, defect_rcond: float = 1e-12,
               parallel_tol: float = 1e-8) -> BiorthEigenSystem:
    """Biorthogonal eigendecomposition of a dense square matrix.

    Left vectors are the rows of ``inv(U)``.  When ``balance`` is set the
    decomposition runs on ``D^-1 M D`` with a power-of-two diagonal ``D``
    (LAPACK balancing), and the vectors are mapped back exactly.

    The system is flagged ``near_defective`` when the eigenvector matrix
    actually inverted has reciprocal condition number below ``defect_rcond``
    or two of its columns are parallel to within ``parallel_tol`` in
    ``1 - eta``.  The adjoint problem is then solved as well and its left
    vectors replace ``inv(U)`` only when they are more nearly biorthogonal;
    ``left_source`` records which set was kept.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DecompositionError("matrix has non-finite entries", size=M.shape[0])
    n = M.shape[0]
    if balance:
        Mb, (scale, _) = sla.matrix_balance(M, permute=False, separate=True)
    else:
        Mb, scale = M, np.ones(n)
    try:
        w, V = np.linalg.eig(Mb)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigensolver failed for {n}x{n} matrix: {exc}",
                                 size=n, condition=float(np.linalg.cond(Mb))) from exc
    order = np.lexsort((w.imag, w.real))
    w, V = w[order], V[:, order]

    sv = np.linalg.svd(V, compute_uv=False)
    rcond = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    near_defective = rcond < defect_rcond or 1.0 - _max_column_overlap(V) < parallel_tol

    left_b = None
    if rcond > 0:
        try:
            left_b = np.linalg.inv(V)
        except np.linalg.LinAlgError:
            near_defective = True
    residual = _pair_residual(left_b, V) if left_b is not None else math.inf
    source = "inverse"
    adjoint_residual = math.nan
    if near_defective:
        left_adj = _adjoint_left(Mb, w, V)
        adjoint_residual = _pair_residual(left_adj, V)
        if not adjoint_residual >= residual:
            left_b, residual, source = left_adj, adjoint_residual, "adjoint"

    right = scale[:, None] * V
    left = left_b / scale[None, :]
    return BiorthEigenSystem(
        energies=w, right=right, left=left, biorth_residual=residual,
        near_defective=bool(near_defective), rcond=rcond,
        matrix_norm=float(np.linalg.norm(M, 2)), scale=scale, left_source=source,
        adjoint_residual=adjoint_residual)


def tie_tolerance(es: BiorthEigenSystem) -> float:
    """Fermi-level tie threshold: floating-point resolution of the spectrum."""
    return 8 * _EPS * max(1.0, es.matrix_norm)


def occupied_indices(es: BiorthEigenSystem, E_F: float = 0.0, tie_tol: float | None = None,
                     k: float | None = None) -> np.ndarray:
    """Indices with ``Re E < E_F``; raises when any ``Re E`` is within the tie threshold."""
    tol = tie_tolerance(es) if tie_tol is None else tie_tol
    gap = np.abs(es.energies.real - E_F)
    if np.any(gap < tol):
        m = int(np.argmin(gap))
        raise FermiTieError(
            f"eigenvalue {es.energies[m]:.6g} ties with E_F={E_F} (tolerance {tol:.3g})"
            + (f" at k={k:.6g}" if k is not None else "")
            + "; shift E_F or change L", energy=complex(es.energies[m]), k=k)
    return np.flatnonzero(es.energies.real < E_F)


def eta_overlap(es: BiorthEigenSystem, m: int, l: int, is_edge_pair: bool = False) -> OverlapReport:
    """Normalized squared overlap of right eigenvectors ``m`` and ``l``."""
    if m == l:
        raise ConfigError("eta_overlap needs two distinct states")
    u, v = es.right[:, m], es.right[:, l]
    nu, nv = np.vdot(u, u).real, np.vdot(v, v).real
    if nu == 0 or nv == 0:
        raise ArithmeticError("zero-norm eigenvector column")
    eta = abs(np.vdot(u, v)) ** 2 / (nu * nv)
    return OverlapReport(eta=float(eta), band_indices=(int(m), int(l)), is_edge_pair=is_edge_pair)


def straddling_pair(es: BiorthEigenSystem, E_F: float = 0.0) -> tuple:
    """Highest occupied and lowest unoccupied state by ``Re E``."""
    re = es.energies.real
    below = np.flatnonzero(re < E_F)
    above = np.flatnonzero(re >= E_F)
    if not len(below) or not len(above):
        raise NotApplicableError("no pair of states straddles E_F")
    return int(below[np.argmax(re[below])]), int(above[np.argmin(re[above])])


def eta_at(spec: ModelSpec, g: Geometry, k: float, E_F: float = 0.0) -> OverlapReport:
    """Overlap of the two states adjacent to ``E_F`` at momentum ``k``."""
    es = biorth_eig(ribbon_matrix(spec, g.Ly, k, g.y_boundary))
    m, l = straddling_pair(es, E_F)
    edge = (isinstance(spec, TwoBandParams) and g.y_boundary == "open"
            and topo_region_indicator(spec, k))
    return eta_overlap(es, m, l, is_edge_pair=bool(edge))


def eta_scan(spec: ModelSpec, g: Geometry, E_F: float = 0.0) -> dict:
    """Overlap at the grid point nearest k=0 and its maximum over the grid."""
    ks = g.momenta
    etas = np.array([eta_at(spec, g, k, E_F).eta for k in ks])
    return {"k1": float(ks[0]), "eta_k1": float(etas[0]),
            "k_max": float(ks[np.argmax(etas)]), "eta_max": float(etas.max()), "eta": etas}


def _multiset_distance(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def surrogate_transform(p: TwoBandParams, g: Geometry, k: float) -> SurrogateSystem:
    """Diagonal similarity ``Q^-1 H Q`` removing the skin effect along y."""
    if g.y_boundary != "open":
        raise ConfigError("surrogate transform is defined for open y-boundaries")
    beta = p.beta(k)
    if beta == 0:
        raise SingularTransformError(
            "r(k) = 0: critical point of the skin compression (nHCSC); transform is singular")
    r = math.sqrt(abs(beta / p.a0))
    expo = np.add.outer(np.arange(g.Ly), np.arange(2)).ravel()
    Q = r ** expo.astype(float)
    H = ribbon_matrix(p, g.Ly, k, "open")
    Hs = H * (Q[None, :] / Q[:, None])
    res = _multiset_distance(np.linalg.eigvals(H), np.linalg.eigvals(Hs))
    return SurrogateSystem(r=r, Q_diagonal=Q, surrogate_matrix=Hs, spectrum_residual=res)


def edge_gap(es: BiorthEigenSystem) -> float:
    """Gap between the two mid-spectrum states, ``|E_a| + |E_b|`` (= 2|E_e1| when chiral)."""
    if es.size < 2:
        raise NotApplicableError("edge gap needs at least two states")
    mags = np.sort(np.abs(es.energies))
    return float(mags[0] + mags[1])


def edge_gap_prediction(p: TwoBandParams, k: float, Ly: int) -> float:
    """Asymptotic ``(a0 beta / t^2)^(Ly/2)``; only the Ly-slope of its log is meaningful."""
    if not topo_region_indicator(p, k):
        raise NotApplicableError(f"k={k:.4g} is outside the topological region")
    return abs(p.a0 * p.beta(k) / p.t ** 2) ** (Ly / 2)


def edge_gap_slope(p: TwoBandParams, Ly_list, k: float) -> dict:
    """Fit ``log Delta`` against Ly and compare with the predicted slope."""
    Ly_list = np.asarray(list(Ly_list))
    gaps = np.array([edge_gap(biorth_eig(ribbon_matrix(p, int(Ly), k, "open"))) for Ly in Ly_list])
    slope, intercept = np.polyfit(Ly_list, np.log(gaps), 1)
    predicted = 0.5 * math.log(abs(p.a0 * p.beta(k)) / p.t ** 2)
    return {"Ly": Ly_list, "gap": gaps, "slope": float(slope), "intercept": float(intercept),
            "predicted_slope": predicted}


def schur_determinant(h0, hp, hm, Ly: int):
    """Determinant of an open block-tridiagonal ribbon by ``h0^(n) = h0 - h+ [h0^(n-1)]^-1 h-``.

    Returns the determinant and the list of intermediate ``h0^(n)`` blocks.
    """
    blocks = [h0]
    for _ in range(Ly - 1):
        blocks.append(h0 - hp @ np.linalg.solve(blocks[-1], hm))
    det = np.prod([np.linalg.det(b) for b in blocks])
    return det, blocks


def ep_dispersion_classify(p: FourBandParams, g: Geometry, dk_window=(1e-4, 1e-2),
                           n_points: int = 9, tol: float = 0.05) -> EPClassification:
    """Classify the determinant scaling ``|det H(dk)| ~ dk^n`` near the k=0 EP.

    ``n = 2`` is ``quadratic_det`` (linear edge dispersion), ``n = 1`` is
    ``linear_det`` (square-root dispersion).  Anything else is refused.
    """
    if g.y_boundary != "open":
        raise ConfigError("EP classification needs an open y-boundary")
    dks = np.logspace(math.log10(dk_window[0]), math.log10(dk_window[1]), n_points)
    dets = []
    det_R = []
    for dk in dks:
        h0, hp, hm = p.harmonics(dk)
        sign, logdet = np.linalg.slogdet(ribbon_matrix(p, g.Ly, dk, "open"))
        dets.append(logdet)
        det_R.append(np.linalg.det(h0[:2, 2:]))
    logdet = np.array(dets)
    slope, intercept = np.polyfit(np.log(dks), logdet, 1)
    fit = {"slope": float(slope), "intercept": float(intercept)}
    if not 0.8 <= slope <= 2.2:
        raise ClassificationError(
            f"determinant exponent {slope:.3f} outside [0.8, 2.2]: no EP at k=0",
            exponent=float(slope), fit=fit)
    if abs(slope - 2) <= tol:
        kind = "quadratic_det"
    elif abs(slope - 1) <= tol:
        kind = "linear_det"
    else:
        raise ClassificationError(
            f"determinant exponent {slope:.3f} is neither 1 nor 2 within {tol}",
            exponent=float(slope), fit=fit)
    return EPClassification(kind=kind, exponent=float(slope), intercept=float(intercept),
                            dk=dks, abs_det=np.exp(logdet), det_R=np.array(det_R))
