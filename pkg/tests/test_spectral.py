import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from negent.errors import (ClassificationError, FermiTieError, NotApplicableError,
                           SingularTransformError)
from negent.models import FourBandParams, Geometry, TwoBandParams, ribbon_matrix
from negent.spectral import (biorth_eig, edge_gap, edge_gap_prediction, edge_gap_slope,
                             ep_dispersion_classify, eta_at, eta_overlap, eta_scan,
                             occupied_indices, schur_determinant, surrogate_transform)

GAPLESS = TwoBandParams(0.5, 2.0, 1.0, 1)
GAPPED = TwoBandParams(0.8, 1.0, 1.2, 1)


def test_hermitian_left_is_adjoint(rng):
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    H = A + A.conj().T
    es = biorth_eig(H)
    assert np.allclose(es.left, es.right.conj().T, atol=1e-10)
    assert es.biorth_residual < 1e-12
    assert not es.near_defective


@given(seed=st.integers(0, 2 ** 31 - 1), n=st.integers(2, 10), balance=st.booleans())
@settings(max_examples=40, deadline=None)
def test_biorthogonality_random(seed, n, balance):
    r = np.random.default_rng(seed)
    M = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    es = biorth_eig(M, balance=balance)
    assert es.biorth_residual < 1e-8
    assert np.allclose(M @ es.right, es.right * es.energies, atol=1e-8 * np.abs(M).max())
    assert np.allclose(es.left @ M, es.energies[:, None] * es.left, atol=1e-8 * np.abs(M).max())


def test_sorted_by_real_then_imag():
    es = biorth_eig(np.diag([1 + 1j, 1 - 1j, -2.0, 0.5]))
    assert np.allclose(es.energies, [-2, 0.5, 1 - 1j, 1 + 1j])


def test_near_defective_flag():
    es = biorth_eig(np.array([[0.0, 1.0], [1e-10, 0.0]]))
    assert es.near_defective
    assert es.biorth_residual < 1e-6


def test_balancing_maps_back_exactly():
    H = ribbon_matrix(TwoBandParams(0.5, 2.0, 1.0, 2), 3, math.pi / 200)
    es = biorth_eig(H, balance=True)
    assert np.all(np.log2(es.scale) == np.round(np.log2(es.scale)))
    resid = np.abs(H @ es.right - es.right * es.energies).max() / np.abs(es.right).max()
    assert resid < 1e-10


def test_fermi_tie_raises():
    es = biorth_eig(np.diag([-1.0, 0.0, 1.0]))
    with pytest.raises(FermiTieError):
        occupied_indices(es, 0.0)
    assert list(occupied_indices(es, 0.5)) == [0, 1]


def test_tiny_edge_energies_are_resolved():
    # edge energies ~3e-14 sit well above the floating-point tie threshold
    H = ribbon_matrix(TwoBandParams(0.5, 2.0, 1.0, 2), 3, math.pi / 600)
    es = biorth_eig(H, balance=True)
    assert np.abs(es.energies).min() < 1e-13
    assert len(occupied_indices(es)) == 3


def test_eta_overlap_bounds(rng):
    M = rng.normal(size=(5, 5))
    es = biorth_eig(M)
    eta = eta_overlap(es, 0, 1).eta
    assert 0 <= eta <= 1 + 1e-12
    H = M + M.T
    assert eta_overlap(biorth_eig(H), 0, 1).eta < 1e-20


def test_edge_pair_near_parallel_gapless():
    rep = eta_at(GAPLESS, Geometry(100, 3), math.pi / 100)
    assert rep.is_edge_pair
    assert rep.eta > 0.99
    scan = eta_scan(GAPLESS, Geometry(20, 3))
    assert scan["k1"] == pytest.approx(math.pi / 20)
    assert scan["eta_max"] >= scan["eta_k1"]


def test_surrogate_spectrum():
    s = surrogate_transform(GAPPED, Geometry(2, 8), math.pi / 3)
    assert s.spectrum_residual < 1e-9
    H = s.surrogate_matrix
    assert np.allclose(H, H.T)


@given(k=st.floats(0.05, math.pi))
@settings(max_examples=25, deadline=None)
def test_surrogate_invariance(k):
    s = surrogate_transform(GAPLESS, Geometry(2, 6), k)
    assert 0 < s.r <= 1 or s.r > 0
    assert s.spectrum_residual < 1e-8


def test_surrogate_singular_at_critical_point():
    with pytest.raises(SingularTransformError):
        surrogate_transform(GAPLESS, Geometry(2, 4), 0.0)


def test_edge_gap_and_prediction():
    k = math.pi / 100
    es = biorth_eig(ribbon_matrix(GAPPED, 16, k), balance=True)
    gap = edge_gap(es)
    pred = edge_gap_prediction(GAPPED, k, 16)
    assert 0 < gap < 1e-3
    assert pred == pytest.approx((0.2 / 0.64) ** 8, rel=0.05)
    with pytest.raises(NotApplicableError):
        edge_gap_prediction(GAPLESS, math.pi, 4)


def test_edge_gap_slope_matches_prediction(frozen):
    rep = edge_gap_slope(GAPPED, range(8, 25), math.pi / 100)
    assert rep["slope"] == pytest.approx(frozen["edge_gap_slope_prediction"], rel=0.1)


def test_schur_determinant_matches_dense():
    p = FourBandParams(3.0, 2.0, 0.0)
    h0, hp, hm = p.harmonics(0.3)
    det, blocks = schur_determinant(h0, hp, hm, 5)
    assert len(blocks) == 5
    assert det == pytest.approx(np.linalg.det(ribbon_matrix(p, 5, 0.3)), rel=1e-9)


def test_classify_quadratic_and_linear():
    q = ep_dispersion_classify(FourBandParams(3.0, 2.0, 0.0), Geometry(2, 6))
    assert q.kind == "quadratic_det"
    assert abs(q.det_R[0]) < 0.1 * abs(q.det_R[-1])
    lin = ep_dispersion_classify(FourBandParams.general(3.0, 1.0, 0.0, 1.0, 0.44), Geometry(2, 6))
    assert lin.kind == "linear_det"


def test_classify_refuses_hermitian():
    with pytest.raises(ClassificationError) as info:
        ep_dispersion_classify(FourBandParams(3.0, 0.0, 0.0), Geometry(2, 6))
    assert info.value.fit is not None


def test_gapless_eigenvector_conditioning():
    es = biorth_eig(ribbon_matrix(TwoBandParams(0.5, 2.0, 1.0, 2), 3, math.pi / 100))
    assert 1 / es.rcond > 1e3
    assert es.near_defective or es.biorth_residual < 1e-10
