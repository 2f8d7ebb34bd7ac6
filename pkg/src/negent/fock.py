"""Exact many-body oracle on tiny lattices.

States are stored as amplitude vectors over occupation bitmasks.  Mode ``i``
is bit ``i`` and a configuration ``{i1 < i2 < ...}`` stands for
``c+_{i1} c+_{i2} ... |0>``.  Subregion A is always placed on the lowest
modes, so its creation operators sit to the left and the partial trace over
the complement needs no extra signs.

Two-copy quantities treat the copies as distinguishable: the two-copy space
is a plain tensor product and ``SWAP_A`` exchanges the A configurations of
the copies without a fermionic sign between them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .entropy import BRANCHES
from .errors import ConfigError, DegeneracyError
from .models import Geometry, ModelSpec, ribbon_matrix
from .spectral import BiorthEigenSystem, biorth_eig, occupied_indices

MAX_MODES = 14
MAX_TWO_COPY_MODES = 20


@dataclass(frozen=True)
class FockState:
    amplitudes: np.ndarray
    mode_count: int
    n_A: int


@dataclass(frozen=True)
class ReducedDensity:
    matrix: np.ndarray
    trace_residual: float


@dataclass(frozen=True)
class ExactEntropies:
    S: complex
    renyi: dict
    traces: dict
    eigenvalues: np.ndarray
    merged_clusters: int


def momentum_orbitals(spec: ModelSpec, g: Geometry, E_F: float = 0.0):
    """Single-particle eigenbasis of the full cylinder assembled from k-blocks.

    Mode order is ``(x, y, s)`` with x outermost.  Returns the combined
    :class:`BiorthEigenSystem` and the occupied column indices.
    """
    ks = g.momenta
    c = spec.n_orb * g.Ly
    N = g.L * c
    x = np.arange(g.L)
    R = np.zeros((N, N), complex)
    Lt = np.zeros((N, N), complex)
    E = np.zeros(N, complex)
    occ = []
    for j, k in enumerate(ks):
        es = biorth_eig(ribbon_matrix(spec, g.Ly, k, g.y_boundary), balance=True)
        cols = slice(j * c, (j + 1) * c)
        phase = np.exp(1j * k * x) / np.sqrt(g.L)
        R[:, cols] = np.kron(phase[:, None], es.right)
        Lt[cols, :] = np.kron(phase.conj()[None, :], es.left)
        E[cols] = es.energies
        occ.extend(j * c + occupied_indices(es, E_F, k=k))
    resid = float(np.max(np.abs(Lt @ R - np.eye(N))))
    system = BiorthEigenSystem(energies=E, right=R, left=Lt, biorth_residual=resid,
                               near_defective=False, rcond=float("nan"),
                               matrix_norm=float("nan"), scale=np.ones(N))
    return system, np.array(occ, dtype=int)


def real_space_hamiltonian(spec: ModelSpec, g: Geometry) -> np.ndarray:
    """Dense real-space Hamiltonian with twisted boundary conditions along x."""
    ks = g.momenta
    Hk = np.array([ribbon_matrix(spec, g.Ly, k, g.y_boundary) for k in ks])
    d = np.subtract.outer(np.arange(g.L), np.arange(g.L))
    F = np.exp(1j * d[:, :, None] * ks[None, None, :]) / g.L
    H = np.einsum("xzk,kab->xazb", F, Hk)
    n = Hk.shape[1]
    return H.reshape(g.L * n, g.L * n)


def _slater(orbitals: np.ndarray) -> np.ndarray:
    """Amplitudes ``det(orbitals[S, :])`` over all N-subsets S, indexed by bitmask."""
    N, n_occ = orbitals.shape
    amp = np.zeros(2 ** N, complex)
    if n_occ == 0:
        amp[0] = 1.0
        return amp
    subsets = np.array(list(itertools.combinations(range(N), n_occ)))
    masks = (1 << subsets).sum(axis=1)
    amp[masks] = np.linalg.det(orbitals[subsets])
    return amp


def build_manybody_states(es: BiorthEigenSystem, occ, A_modes) -> tuple:
    """Right and left many-body states with ``<Psi^L|Psi^R> = 1``.

    ``A_modes`` are moved to the lowest mode positions before the amplitudes
    are built, which keeps the partial trace sign-free.
    """
    N = es.right.shape[0]
    if N > MAX_MODES:
        raise ConfigError(f"oracle supports at most {MAX_MODES} modes, got {N}")
    A_modes = [int(a) for a in A_modes]
    if len(set(A_modes)) != len(A_modes) or not all(0 <= a < N for a in A_modes):
        raise ConfigError("A_modes must be distinct mode indices")
    order = A_modes + [i for i in range(N) if i not in set(A_modes)]
    occ = np.asarray(occ, dtype=int)
    R = es.right[order][:, occ]
    Lrows = es.left[occ][:, order]
    right = _slater(R)
    left = _slater(Lrows.conj().T)
    overlap = np.vdot(left, right)
    if abs(overlap) < 1e-12:
        raise DegeneracyError(f"<Psi^L|Psi^R> = {overlap:.3g} before normalization")
    left = left / np.conj(overlap)
    n_A = len(A_modes)
    return FockState(right, N, n_A), FockState(left, N, n_A)


def reduced_density_matrix(right: FockState, left: FockState, A_modes=None) -> ReducedDensity:
    """``rho_A = Tr_{A^c} |Psi^R><Psi^L|`` over the lowest ``n_A`` modes."""
    n_A = right.n_A if A_modes is None else len(A_modes)
    nb = right.mode_count - n_A
    Psi = right.amplitudes.reshape(2 ** nb, 2 ** n_A)
    Phi = left.amplitudes.reshape(2 ** nb, 2 ** n_A)
    rho = Psi.T @ Phi.conj()
    return ReducedDensity(matrix=rho, trace_residual=float(abs(np.trace(rho) - 1)))


def _cluster_mean(w: np.ndarray, rel_tol: float):
    """Replace numerically coalesced eigenvalues by their cluster mean.

    The tolerance is relative to each eigenvalue, with a roundoff floor set
    by the largest one, so small but distinct eigenvalues stay apart.
    """
    w = w.copy()
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.abs(w).max(initial=0.0)))
    seen = np.zeros(len(w), bool)
    merged = 0
    for i in range(len(w)):
        if seen[i]:
            continue
        group = np.flatnonzero(~seen & (np.abs(w - w[i]) <= rel_tol * abs(w[i]) + floor))
        seen[group] = True
        if len(group) > 1:
            w[group] = w[group].mean()
            merged += 1
    return w, merged


def exact_entropies(rd: ReducedDensity, n_list=(2,), branch: str = "symmetric",
                    cluster_tol: float = 1e-7) -> ExactEntropies:
    """Entropies straight from ``rho_A``.

    Eigenvalues come from the complex Schur form; clusters of coalesced
    eigenvalues are averaged, which is exact for defective blocks.  Renyi
    orders use ``Tr rho^n``.
    """
    if branch not in BRANCHES:
        raise ConfigError(f"branch must be one of {BRANCHES}")
    rho = rd.matrix
    T, _ = sla.schur(rho, output="complex")
    w, merged = _cluster_mean(np.diag(T), cluster_tol)
    S = complex(np.sum(_neg_xlogx(w, branch)))
    traces, renyi = {}, {}
    for n in n_list:
        if int(n) != n or n < 2:
            raise ConfigError(f"Renyi order must be an integer >= 2, got {n!r}")
        tr = complex(np.trace(np.linalg.matrix_power(rho, int(n))))
        traces[int(n)] = tr
        renyi[int(n)] = complex(np.log(tr) / (1 - n))
    return ExactEntropies(S=S, renyi=renyi, traces=traces, eigenvalues=w, merged_clusters=merged)


def _neg_xlogx(w, branch):
    w = np.asarray(w, complex)
    out = np.zeros_like(w)
    live = np.abs(w) >= 1e-300
    logs = np.log(w[live])
    if branch == "symmetric":
        cut = (w[live].imag == 0) & (w[live].real < 0)
        logs[cut] = np.log(np.abs(w[live][cut].real))
    out[live] = -w[live] * logs
    return out


def swap_expectation(right: FockState, left: FockState, A_modes=None) -> complex:
    """``<Psi^L| <Psi^L| SWAP_A |Psi^R> |Psi^R>`` on the explicit two-copy space."""
    N = right.mode_count
    if 2 * N > MAX_TWO_COPY_MODES:
        raise ConfigError(f"two-copy space needs 2N <= {MAX_TWO_COPY_MODES}, got 2N = {2 * N}")
    n_A = right.n_A if A_modes is None else len(A_modes)
    dim = 2 ** N
    mask = (1 << n_A) - 1
    s1, s2 = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    t1 = (s1 & ~mask) | (s2 & mask)
    t2 = (s2 & ~mask) | (s1 & mask)
    R2 = np.outer(right.amplitudes, right.amplitudes)
    L2 = np.outer(left.amplitudes, left.amplitudes)
    # SWAP_A |s1>|s2> = |t1>|t2>
    return complex(np.sum(np.conj(L2[t1, t2]) * R2))


def wick_products(p: np.ndarray) -> np.ndarray:
    """All ``prod_{i in S} p_i prod_{i not in S} (1 - p_i)``, indexed by bitmask S."""
    w = np.ones(1, complex)
    for pi in np.asarray(p, complex):
        w = np.concatenate([w * (1 - pi), w * pi])
    return w


def wick_factor_logs(p: np.ndarray) -> np.ndarray:
    """Branch-additive logs ``sum log p_i + sum log(1 - p_i)`` matching :func:`wick_products`."""
    s = np.zeros(1, complex)
    with np.errstate(divide="ignore"):
        for pi in np.asarray(p, complex):
            s = np.concatenate([s + np.log(1 - pi), s + np.log(pi)])
    return s


def oracle_check(spec: ModelSpec, g: Geometry, E_F: float = 0.0, n_list=(2,)) -> dict:
    """Compare correlation-matrix entropies with the exact many-body values.

    ``dS`` compares the principal-branch ``-Tr rho log rho`` with the
    correlation formula.  The two can differ by ``2 pi i`` windings when the
    principal log of a many-body eigenvalue is not the sum of its factors'
    logs; ``dS_aligned`` removes those windings after matching each
    eigenvalue of ``rho_A`` to its Wick product, and ``windings`` counts them.
    """
    from .correlation import occupation_spectrum, truncated_projector
    from .entropy import renyi_terms, von_neumann_entropy
    from scipy.optimize import linear_sum_assignment

    es, occ = momentum_orbitals(spec, g, E_F)
    n_A = g.n_A * spec.n_orb * g.Ly
    right, left = build_manybody_states(es, occ, range(n_A))
    rd = reduced_density_matrix(right, left)
    ex = exact_entropies(rd, n_list, branch="principal")
    ps = occupation_spectrum(truncated_projector(spec, g, E_F))
    S_corr = von_neumann_entropy(ps, branch="principal")

    lam = ex.eigenvalues
    wick = wick_products(ps.values)
    cost = np.abs(lam[:, None] - wick[None, :])
    rows, cols = linear_sum_assignment(cost)
    live = np.abs(lam[rows]) >= 1e-300
    logs = np.zeros(len(rows), complex)
    logs[live] = np.log(lam[rows][live])
    m = np.round((wick_factor_logs(ps.values)[cols] - logs).imag / (2 * np.pi))
    m[~live] = 0
    S_aligned = ex.S - 2j * np.pi * np.sum(lam[rows] * m)
    out = {
        "modes": right.mode_count, "n_A_modes": n_A,
        "S_exact": ex.S, "S_corr": S_corr, "dS": abs(ex.S - S_corr),
        "S_aligned": complex(S_aligned), "dS_aligned": abs(S_aligned - S_corr),
        "windings": int(np.count_nonzero(m)),
        "wick_residual": float(cost[rows, cols].max()),
        "norm_R": float(np.vdot(right.amplitudes, right.amplitudes).real),
        "trace_residual": rd.trace_residual,
    }
    for n in n_list:
        prod = complex(np.prod(np.exp(renyi_terms(ps, n))))
        out[f"tr{n}_exact"] = ex.traces[n]
        out[f"tr{n}_corr"] = prod
        out[f"dtr{n}"] = abs(ex.traces[n] - prod) / max(1.0, abs(prod))
        out[f"dRe_S{n}"] = abs(ex.renyi[n].real - np.log(abs(prod)) / (1 - n))
    if 2 * right.mode_count <= MAX_TWO_COPY_MODES:
        sw = swap_expectation(right, left)
        out["swap"] = sw
        tr2 = ex.traces[2] if 2 in ex.traces else complex(np.trace(rd.matrix @ rd.matrix))
        out["dswap"] = abs(sw - tr2)
        out["swap_vs_renyi"] = abs(abs(sw) - np.exp(-(-np.log(tr2)).real))
    return out
