"""Band projectors, the truncated projector over subregion A, and its spectrum.

Positions are ordered ``(x, y, s)`` with ``x`` outermost.  Subregion A is
``x in [0, n_A)``.  Because the system is translation invariant along x, the
truncated projector is block Toeplitz::

    <x1, a| Pbar |x2, b> = L^-1 sum_k exp(i k (x1 - x2)) P(k)[a, b]

with the sum running over exactly the ``L`` twisted momenta.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DecompositionError, NotApplicableError, RangeError
from .models import Geometry, ModelSpec, TwoBandParams, ribbon_matrix, topo_region_indicator
from .spectral import BiorthEigenSystem, biorth_eig, occupied_indices, straddling_pair

# natural-log budget for intermediate magnitudes
OVERFLOW_LOG_LIMIT = 600.0
SUBLATTICE_LABELS = ("+", "-")


@dataclass(frozen=True)
class BandProjector:
    k: float
    matrix: np.ndarray
    n_occ: int

    def idempotency_residual(self) -> float:
        P = self.matrix
        return float(np.max(np.abs(P @ P - P)) / max(np.max(np.abs(P)), 1e-300))

    def trace_residual(self) -> float:
        return float(abs(np.trace(self.matrix) - self.n_occ))


@dataclass(frozen=True)
class TruncatedProjector:
    matrix: np.ndarray
    n_orb: int
    Ly: int
    n_A: int
    L: int

    @property
    def cell_size(self) -> int:
        return self.n_orb * self.Ly

    def block(self, y1: int, s1: int, y2: int, s2: int) -> np.ndarray:
        """``n_A x n_A`` submatrix ``<x1, y1, s1| Pbar |x2, y2, s2>`` (0-based labels)."""
        c = self.cell_size
        i, j = y1 * self.n_orb + s1, y2 * self.n_orb + s2
        return self.matrix[i::c, j::c]


@dataclass(frozen=True)
class OccupationSpectrum:
    values: np.ndarray
    pair_map: np.ndarray
    max_abs: float

    def __len__(self):
        return len(self.values)


def band_projector(es: BiorthEigenSystem, occ, k: float = float("nan")) -> BandProjector:
    occ = np.asarray(occ, dtype=int)
    if occ.size == 0:
        raise ValueError("band_projector needs at least one occupied state")
    P = es.right[:, occ] @ es.left[occ, :]
    return BandProjector(k=float(k), matrix=P, n_occ=int(occ.size))


def projector_at(spec: ModelSpec, g: Geometry, k: float, E_F: float = 0.0) -> BandProjector:
    """``P(k)`` from a balanced biorthogonal decomposition of the ribbon at ``k``."""
    es = biorth_eig(ribbon_matrix(spec, g.Ly, k, g.y_boundary), balance=True)
    occ = occupied_indices(es, E_F, k=k)
    if occ.size == 0:
        return BandProjector(k=float(k), matrix=np.zeros_like(es.right), n_occ=0)
    return band_projector(es, occ, k)


def check_overflow(spec: ModelSpec, g: Geometry) -> float:
    """Log-magnitude estimate ``(B Ly) log(L / pi)`` of the dominant element; refuses past the limit."""
    B = getattr(spec, "B", 1)
    est = B * g.Ly * math.log(g.L / math.pi)
    if est > OVERFLOW_LOG_LIMIT:
        max_L = int(math.pi * math.exp(OVERFLOW_LOG_LIMIT / (B * g.Ly)))
        raise RangeError(
            f"B*Ly*log(L/pi) = {est:.1f} exceeds {OVERFLOW_LOG_LIMIT:.0f}; with B*Ly = {B * g.Ly}"
            f" the largest admissible L is {max_L}, or reduce B*Ly below"
            f" {OVERFLOW_LOG_LIMIT / math.log(g.L / math.pi):.1f} at L = {g.L}",
            log_magnitude=est)
    return est


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _toeplitz_assemble(g_of_d, n_A):
    """Dense block matrix with block ``(x1, x2) = g_of_d[x1 - x2 + n_A - 1]``."""
    c = g_of_d.shape[1]
    idx = np.arange(n_A)[:, None] - np.arange(n_A)[None, :] + n_A - 1
    return g_of_d[idx].transpose(0, 2, 1, 3).reshape(n_A * c, n_A * c)


def truncated_projector(spec: ModelSpec, g: Geometry, E_F: float = 0.0,
                        threads: int = 1) -> TruncatedProjector:
    """Dense ``Pbar`` over subregion A from exact discrete k-sums.

    For models with ``P(-k) = P(k)`` real, only the ``k > 0`` half of the grid
    is diagonalized and the Fourier sum collapses to a cosine sum.
    """
    check_overflow(spec, g)
    ks = g.momenta
    n_A = g.n_A
    d = np.arange(-(n_A - 1), n_A)
    if spec.even_in_k and spec.real_valued:
        half = ks[: g.L // 2]
        Pk = np.array([P.matrix.real for P in
                       _map(lambda k: projector_at(spec, g, k, E_F), half, threads)])
        g_of_d = (2.0 / g.L) * np.einsum("dk,kij->dij", np.cos(np.outer(d, half)), Pk)
    else:
        Pk = np.array([P.matrix for P in
                       _map(lambda k: projector_at(spec, g, k, E_F), ks, threads)])
        g_of_d = np.einsum("dk,kij->dij", np.exp(1j * np.outer(d, ks)), Pk) / g.L
    return TruncatedProjector(matrix=_toeplitz_assemble(g_of_d, n_A), n_orb=spec.n_orb,
                              Ly=g.Ly, n_A=n_A, L=g.L)


def pair_conjugates(values: np.ndarray, rel_tol: float = 1e-6) -> np.ndarray:
    """Greedy nearest-conjugate partner for each value, ``-1`` when none lies within tolerance."""
    n = len(values)
    partner = np.full(n, -1, dtype=int)
    free = np.ones(n, dtype=bool)
    for i in np.argsort(-np.abs(values), kind="stable"):
        if not free[i]:
            continue
        tol = rel_tol * max(1.0, abs(values[i]))
        dist = np.abs(values - np.conj(values[i]))
        dist[~free] = np.inf
        if abs(values[i].imag) > tol:
            dist[i] = np.inf
        j = int(np.argmin(dist))
        if dist[j] < tol:
            partner[i], partner[j] = j, i
            free[i] = free[j] = False
    return partner


def spectrum_of(M: np.ndarray) -> OccupationSpectrum:
    """Occupation spectrum of any square matrix, balanced before the eigensolve."""
    M = np.asarray(M)
    if M.size == 0:
        return OccupationSpectrum(np.zeros(0, complex), np.zeros(0, int), 0.0)
    try:
        w = sla.eigvals(sla.matrix_balance(M)[0])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError(f"occupation eigensolve failed: {exc}", size=M.shape[0]) from exc
    w = w.astype(complex)
    w = w[np.lexsort((w.imag, w.real))]
    return OccupationSpectrum(values=w, pair_map=pair_conjugates(w), max_abs=float(np.abs(w).max()))


def occupation_spectrum(tp: TruncatedProjector) -> OccupationSpectrum:
    return spectrum_of(tp.matrix)


def occupied_overlap_matrix(spec: ModelSpec, g: Geometry, E_F: float = 0.0) -> np.ndarray:
    """``C[(k,m),(k',l)] = <psi^L_{k m}| Gamma_A |psi^R_{k' l}>`` over occupied states.

    Shares its nonzero spectrum with ``Pbar`` and is built without any Fourier
    assembly of ``P(k)``, so it serves as an independent route.
    """
    ks = g.momenta
    x = np.arange(g.n_A)
    rights, lefts = [], []
    for k in ks:
        es = biorth_eig(ribbon_matrix(spec, g.Ly, k, g.y_boundary), balance=True)
        occ = occupied_indices(es, E_F, k=k)
        rights.append(es.right[:, occ])
        lefts.append(es.left[occ, :])
    F = np.exp(-1j * np.subtract.outer(ks, ks)[:, :, None] * x).sum(-1) / g.L
    blocks = [[F[a, b] * (lefts[a] @ rights[b]) for b in range(len(ks))] for a in range(len(ks))]
    return np.block(blocks)


def edge_projector_approx(p: TwoBandParams, g: Geometry, k: float, E_F: float = 0.0) -> dict:
    """Compare ``P(k)`` with the rank-one projector onto the occupied edge state."""
    beta = p.beta(k)
    r = math.sqrt(abs(beta / p.a0))
    if r >= 1 or not topo_region_indicator(p, k):
        raise NotApplicableError(f"edge approximation needs r(k) < 1 in the topological region (r={r:.3g})")
    es = biorth_eig(ribbon_matrix(p, g.Ly, k, "open"), balance=True)
    P = band_projector(es, occupied_indices(es, E_F, k=k), k).matrix
    m, _ = straddling_pair(es, E_F)
    P_edge = np.outer(es.right[:, m], es.left[m, :])
    i, j = np.unravel_index(np.argmax(np.abs(P)), P.shape)
    y1, s1 = divmod(int(i), 2)
    y2, s2 = divmod(int(j), 2)
    return {
        "P": P, "P_edge": P_edge, "r": r,
        "dominance_ratio": float(np.max(np.abs(P - P_edge)) / np.max(np.abs(P))),
        "argmax": (y1, SUBLATTICE_LABELS[s1], y2, SUBLATTICE_LABELS[s2]),
        "max_element": complex(P[i, j]),
    }
