"""Bloch and ribbon Hamiltonians for the two lattice models.

Two models are provided:

* ``TwoBandParams`` -- the flat-edge-band model with asymmetric,
  k-dependent intra-cell hopping ``(b0 - cos k)**B``.
* ``FourBandParams`` -- the exceptional-crossing model, expanded on
  ``tau (x) sigma`` with ``tau`` acting on sublattice (outer index) and
  ``sigma`` on spin (inner index).

Both only contain the ``ky`` harmonics ``1, exp(+i ky), exp(-i ky)``, so the
ribbon (open along y) is assembled exactly from three blocks.  The block
convention is ``[H]_{y1,y2} = (2 pi)^-1 int exp(i ky (y1 - y2)) H(k, ky) dky``,
so the coefficient of ``exp(+i ky)`` sits on the block super-diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

from .errors import ConfigError, RangeError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# log of the largest finite double, with headroom
_LOG_DOUBLE_MAX = 700.0


@dataclass(frozen=True)
class TwoBandParams:
    """Parameters of the 2-band flat-edge-band model.

    Row/column 0 is the ``+`` sublattice, 1 the ``-`` sublattice.
    """

    t: float
    a0: float
    b0: float
    B: int = 1

    kind: ClassVar[str] = "two-band"
    n_orb: ClassVar[int] = 2
    # H(k) depends on k only through cos k, and all entries are real
    even_in_k: ClassVar[bool] = True
    real_valued: ClassVar[bool] = True

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise ConfigError(f"B must be a positive integer, got {self.B!r}")
        if self.t == 0:
            raise ConfigError("t must be nonzero")
        if self.a0 == 0:
            raise ConfigError("a0 must be nonzero")
        for name in ("t", "a0", "b0"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        object.__setattr__(self, "B", int(self.B))

    def beta(self, k: float) -> float:
        """The k-dependent hopping ``(b0 - cos k)**B``."""
        return (self.b0 - math.cos(k)) ** self.B

    def harmonics(self, k: float):
        """Return ``(h0, h_plus, h_minus)``: constant, exp(+i ky), exp(-i ky) parts."""
        h0 = np.array([[0.0, self.a0], [self.beta(k), 0.0]])
        hp = np.array([[0.0, 0.0], [self.t, 0.0]])
        hm = np.array([[0.0, self.t], [0.0, 0.0]])
        return h0, hp, hm

    def as_dict(self) -> dict:
        return {"model": self.kind, "t": self.t, "a0": self.a0, "b0": self.b0, "B": self.B}


@dataclass(frozen=True)
class FourBandParams:
    """Parameters of the 4-band exceptional-crossing model.

    The defaults ``lam=1, Z=1, k0=pi/2`` give the main-text model.  Use
    :meth:`general` for the family with ``k0 = arcsin(Z)``.
    """

    M: float
    delta: float
    alpha: float = 0.0
    lam: float = 1.0
    Z: float = 1.0
    k0: float = math.pi / 2

    kind: ClassVar[str] = "four-band"
    n_orb: ClassVar[int] = 4
    even_in_k: ClassVar[bool] = False
    real_valued: ClassVar[bool] = False

    def __post_init__(self):
        for name in ("M", "delta", "alpha", "lam", "Z", "k0"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @classmethod
    def general(cls, M, delta, alpha=0.0, lam=1.0, Z=1.0):
        if abs(Z) > 1:
            raise ConfigError(f"k0 = arcsin(Z) needs |Z| <= 1, got Z={Z}")
        return cls(M=M, delta=delta, alpha=alpha, lam=lam, Z=Z, k0=math.asin(Z))

    def zeeman(self):
        return self.Z * (SIGMA_X + SIGMA_Y + SIGMA_Z)

    def harmonics(self, k: float):
        kron = np.kron
        f = math.cos(k + self.k0) + math.cos(self.k0) - self.M
        h0 = (
            f * kron(SIGMA_X, SIGMA_0)
            + self.lam * math.sin(k + self.k0) * kron(SIGMA_Y, SIGMA_X)
            - self.lam * math.sin(self.k0) * kron(SIGMA_Y, SIGMA_Y)
            + math.sin(self.alpha) * kron(SIGMA_0, self.zeeman())
            + math.cos(self.alpha) * kron(SIGMA_X, self.zeeman())
            + 1j * self.delta * kron(SIGMA_Y, SIGMA_0)
        )
        # cos ky -> (e^{+i ky} + e^{-i ky})/2, sin ky -> (e^{+i ky} - e^{-i ky})/(2i)
        hp = 0.5 * kron(SIGMA_X, SIGMA_0) + self.lam * kron(SIGMA_Y, SIGMA_Z) / 2j
        hm = 0.5 * kron(SIGMA_X, SIGMA_0) - self.lam * kron(SIGMA_Y, SIGMA_Z) / 2j
        return h0, hp, hm

    def as_dict(self) -> dict:
        return {
            "model": self.kind, "M": self.M, "delta": self.delta, "alpha": self.alpha,
            "lambda": self.lam, "Z": self.Z, "k0": self.k0,
        }


ModelSpec = Union[TwoBandParams, FourBandParams]


@dataclass(frozen=True)
class Geometry:
    """Cylinder geometry: ``L`` cells around x (twisted), ``Ly`` cells along y.

    Subregion A is ``x in [0, n_A)`` with ``n_A = subregion_fraction * L``.
    The fraction is 1/2 for physics runs; 1 gives the trivial (no-cut) check.
    """

    L: int
    Ly: int
    y_boundary: str = "open"
    subregion_fraction: float = 0.5

    def __post_init__(self):
        if int(self.L) != self.L or self.L <= 0 or self.L % 2:
            raise ConfigError(f"L must be a positive even integer, got {self.L!r}")
        if int(self.Ly) != self.Ly or self.Ly <= 0:
            raise ConfigError(f"Ly must be a positive integer, got {self.Ly!r}")
        if self.y_boundary not in ("open", "periodic"):
            raise ConfigError(f"y_boundary must be 'open' or 'periodic', got {self.y_boundary!r}")
        n_a = self.subregion_fraction * self.L
        if not 0 < self.subregion_fraction <= 1 or abs(n_a - round(n_a)) > 1e-9:
            raise ConfigError(
                f"subregion_fraction*L must be a positive integer <= L, got {n_a}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "Ly", int(self.Ly))

    @property
    def n_A(self) -> int:
        return int(round(self.subregion_fraction * self.L))

    @property
    def momenta(self) -> np.ndarray:
        """Twisted grid ``k_m = (2m + 1) pi / L``; never hits k = 0."""
        return (2 * np.arange(self.L) + 1) * np.pi / self.L

    def with_L(self, L: int) -> "Geometry":
        return Geometry(L, self.Ly, self.y_boundary, self.subregion_fraction)


@dataclass(frozen=True)
class RibbonMatrix:
    k: float
    entries: np.ndarray
    n_orb: int
    Ly: int
    y_boundary: str

    def block(self, y1: int, y2: int) -> np.ndarray:
        n = self.n_orb
        return self.entries[y1 * n:(y1 + 1) * n, y2 * n:(y2 + 1) * n]


def bloch_two_band(p: TwoBandParams, k: float, ky: float) -> np.ndarray:
    return np.array([
        [0, p.t * np.exp(-1j * ky) + p.a0],
        [p.t * np.exp(1j * ky) + (p.b0 - np.cos(k)) ** p.B, 0],
    ], dtype=complex)


def bloch_four_band(p: FourBandParams, k: float, ky: float) -> np.ndarray:
    kron = np.kron
    mass = np.cos(k + p.k0) + np.cos(p.k0) + np.cos(ky) - p.M
    return (
        mass * kron(SIGMA_X, SIGMA_0)
        + p.lam * (np.sin(k + p.k0) * kron(SIGMA_Y, SIGMA_X)
                   + np.sin(-p.k0) * kron(SIGMA_Y, SIGMA_Y)
                   + np.sin(ky) * kron(SIGMA_Y, SIGMA_Z))
        + kron(np.sin(p.alpha) * SIGMA_0 + np.cos(p.alpha) * SIGMA_X, p.zeeman())
        + 1j * p.delta * kron(SIGMA_Y, SIGMA_0)
    )


def bloch(spec: ModelSpec, k: float, ky: float) -> np.ndarray:
    if isinstance(spec, TwoBandParams):
        return bloch_two_band(spec, k, ky)
    return bloch_four_band(spec, k, ky)


def ribbon_matrix(spec: ModelSpec, Ly: int, k: float, y_boundary: str = "open") -> np.ndarray:
    """Dense ribbon Hamiltonian at momentum ``k``, ordered ``(y, orbital)``."""
    h0, hp, hm = spec.harmonics(k)
    n = spec.n_orb
    H = np.zeros((n * Ly, n * Ly), dtype=np.result_type(h0, hp, hm))
    for y in range(Ly):
        H[y * n:(y + 1) * n, y * n:(y + 1) * n] += h0
        if y + 1 < Ly or y_boundary == "periodic":
            y2 = (y + 1) % Ly
            H[y * n:(y + 1) * n, y2 * n:(y2 + 1) * n] += hp
            H[y2 * n:(y2 + 1) * n, y * n:(y + 1) * n] += hm
    return H


def ribbon_hamiltonian(spec: ModelSpec, g: Geometry, k: float) -> RibbonMatrix:
    H = ribbon_matrix(spec, g.Ly, k, g.y_boundary)
    return RibbonMatrix(k=float(k), entries=H, n_orb=spec.n_orb, Ly=g.Ly, y_boundary=g.y_boundary)


def topo_region_indicator(p: TwoBandParams, k: float) -> bool:
    """True inside the topologically nontrivial region ``|a0 beta(k)| <= t^2``."""
    return abs(p.a0 * p.beta(k)) <= p.t ** 2


def predicted_log_det(p: TwoBandParams, Ly: int, k: float) -> float:
    """``log|det|`` of the open ribbon, ``Ly log|a0 beta(k)|``."""
    return Ly * math.log(abs(p.a0 * p.beta(k))) if p.a0 * p.beta(k) != 0 else -math.inf


def det_identity_residual(p: TwoBandParams, g: Geometry, k: float) -> float:
    """Relative deviation of the ribbon determinant from ``(-a0 beta)^Ly``.

    Each off-diagonal 2x2 cell carries a factor ``-1``, so the magnitude
    is ``|a0 beta|^Ly`` and the sign is ``sign(-a0 beta)^Ly``.  Compared in
    log space so that neither side is ever exponentiated on its own;
    refuses when the prediction leaves double range.
    """
    if g.y_boundary != "open":
        raise ConfigError("the determinant identity holds for open y-boundaries only")
    log_pred = predicted_log_det(p, g.Ly, k)
    if not abs(log_pred) < _LOG_DOUBLE_MAX:
        raise RangeError(
            f"predicted determinant out of double range (log|det| = {log_pred})",
            log_magnitude=log_pred)
    sign_pred = np.sign(-p.a0 * p.beta(k)) ** g.Ly
    sign, logdet = np.linalg.slogdet(ribbon_matrix(p, g.Ly, k, "open"))
    ratio = (sign / sign_pred) * np.exp(logdet - log_pred)
    return float(abs(ratio - 1.0))
