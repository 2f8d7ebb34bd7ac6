"""Complex von Neumann and Renyi entropies from occupation spectra.

Terms follow the free-fermion formulas

    S   = sum_i -p log p - (1 - p) log(1 - p)
    S_n = (1 - n)^-1 sum_i log(p^n + (1 - p)^n)

with the principal complex log.  Real ``p`` outside ``[0, 1]`` put the log
argument exactly on the branch cut.  Under the default ``branch="symmetric"``
such a term takes the mean of its two one-sided limits, which is the value
an infinitesimal conjugate pair ``p +- i0`` contributes per member.  Use
``branch="principal"`` for the plain ``log(-x) = log x + i pi`` convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NotApplicableError

_TINY = 1e-300
BRANCHES = ("symmetric", "principal")


@dataclass(frozen=True)
class EntropyReport:
    s_von_neumann: complex
    renyi: dict
    pt_imag_residual: float
    contributions: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ContributionReport:
    exact: complex
    asymptotic_real: float
    c: complex
    nu: float


def _values(ps) -> np.ndarray:
    return np.asarray(getattr(ps, "values", ps), dtype=complex).ravel()


def _xlogx(z: np.ndarray, branch: str) -> np.ndarray:
    out = np.zeros_like(z)
    live = np.abs(z) >= _TINY
    zl = z[live]
    logs = np.log(zl)
    if branch == "symmetric":
        on_cut = (zl.imag == 0) & (zl.real < 0)
        logs[on_cut] = np.log(np.abs(zl[on_cut].real))
    out[live] = zl * logs
    return out


def vn_contributions(ps, branch: str = "symmetric") -> np.ndarray:
    """Per-eigenvalue terms ``-p log p - (1 - p) log(1 - p)``."""
    if branch not in BRANCHES:
        raise ConfigError(f"branch must be one of {BRANCHES}, got {branch!r}")
    p = _values(ps)
    return -_xlogx(p, branch) - _xlogx(1 - p, branch)


def von_neumann_entropy(ps, branch: str = "symmetric") -> complex:
    return complex(np.sum(vn_contributions(ps, branch)))


def _check_order(n):
    if int(n) != n or n < 2:
        raise ConfigError(f"Renyi order must be an integer >= 2, got {n!r}")
    return int(n)


def renyi_terms(ps, n) -> np.ndarray:
    """``log(p^n + (1-p)^n)`` per eigenvalue; ``n`` may be any real > 1 here."""
    p = _values(ps)
    return np.log(p ** n + (1 - p) ** n)


def renyi_entropy(ps, n: int) -> complex:
    n = _check_order(n)
    return complex(np.sum(renyi_terms(ps, n)) / (1 - n))


def boson_renyi_entropy(ps, n: int) -> complex:
    """``(n - 1)^-1 sum log(p^n - (p - 1)^n)``, principal branch per term."""
    n = _check_order(n)
    p = _values(ps)
    return complex(np.sum(np.log(p ** n - (p - 1) ** n)) / (n - 1))


def nonphysical_boson_occupancies(ps, tol: float = 1e-12) -> np.ndarray:
    """Mask of values that are not real and ``>= 1``."""
    p = _values(ps)
    return (np.abs(p.imag) > tol) | (p.real < 1 - tol)


def eigenvalue_contribution(p: complex, L: float, nu: float,
                            branch: str = "symmetric") -> ContributionReport:
    """Exact term for one large eigenvalue ``p = c L^nu`` next to its asymptote.

    For ``|p| >> 1`` the real part tends to ``-nu log L - log|c| - 1``.
    """
    p = complex(p)
    if abs(p) <= 2:
        raise NotApplicableError(f"asymptotic regime needs |p| > 2, got |p| = {abs(p):.4g}")
    c = p / L ** nu
    exact = complex(vn_contributions(np.array([p]), branch)[0])
    return ContributionReport(exact=exact, asymptotic_real=float(-nu * np.log(L) - np.log(abs(c)) - 1),
                              c=c, nu=float(nu))


def pt_pairing_residual(ps) -> float:
    """``max_i min_j |p_j - conj(p_i)| / max(1, |p_i|)``."""
    p = _values(ps)
    if p.size == 0:
        return 0.0
    worst = 0.0
    for chunk in np.array_split(np.arange(p.size), max(1, p.size // 512)):
        d = np.abs(p[None, :] - np.conj(p[chunk])[:, None]).min(axis=1)
        worst = max(worst, float(np.max(d / np.maximum(1.0, np.abs(p[chunk])))))
    return worst


def imag_residual(s: complex) -> float:
    return abs(s.imag) / (abs(s.real) + 1.0)


def entropy_report(ps, n_list=(2, 3), branch: str = "symmetric") -> EntropyReport:
    contrib = vn_contributions(ps, branch)
    s = complex(np.sum(contrib))
    renyi = {int(n): renyi_entropy(ps, n) for n in n_list}
    resid = max([imag_residual(s)] + [imag_residual(v) for v in renyi.values()])
    return EntropyReport(s_von_neumann=s, renyi=renyi, pt_imag_residual=resid, contributions=contrib)
