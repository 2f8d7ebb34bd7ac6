import math

import numpy as np
import pytest
import scipy.linalg as sla

from negent.correlation import (band_projector, edge_projector_approx, occupation_spectrum,
                                occupied_overlap_matrix, pair_conjugates, projector_at,
                                spectrum_of, truncated_projector)
from negent.entropy import pt_pairing_residual, von_neumann_entropy
from negent.errors import NotApplicableError, RangeError
from negent.models import FourBandParams, Geometry, TwoBandParams, ribbon_matrix
from negent.spectral import biorth_eig

GAPLESS = TwoBandParams(0.5, 2.0, 1.0, 1)
HERM4 = FourBandParams(1.2, 0.0, 0.0)


def _multiset_close(a, b, tol):
    a, b = np.sort_complex(a), np.sort_complex(b)
    cost = np.abs(a[:, None] - b[None, :])
    from scipy.optimize import linear_sum_assignment
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max() < tol


def test_all_occupied_is_identity(rng):
    es = biorth_eig(rng.normal(size=(5, 5)))
    assert np.allclose(band_projector(es, range(5)).matrix, np.eye(5), atol=1e-10)


def test_hermitian_projector(rng):
    A = rng.normal(size=(6, 6))
    es = biorth_eig(A + A.T)
    P = band_projector(es, [0, 1, 2]).matrix
    assert np.allclose(P, P.conj().T, atol=1e-12)
    assert np.abs(P @ P - P).max() < 1e-12


@pytest.mark.parametrize("k", [math.pi / 600, math.pi / 100, 1.0])
def test_projector_invariants_gapless(k):
    P = projector_at(TwoBandParams(0.5, 2.0, 1.0, 2), Geometry(600, 3), k)
    assert P.idempotency_residual() < 1e-8
    assert P.trace_residual() < 1e-8


def test_gapless_projector_dominated_by_edge_state():
    rep = edge_projector_approx(GAPLESS, Geometry(200, 3), math.pi / 200)
    assert rep["argmax"] == (0, "+", 2, "-")
    assert rep["dominance_ratio"] < 1e-3


def test_dominant_element_scale_b2():
    p = TwoBandParams(0.5, 2.0, 1.0, 2)
    k = math.pi / 100
    rep = edge_projector_approx(p, Geometry(100, 3), k)
    target = rep["r"] ** -3
    assert target / 3 < abs(rep["max_element"]) < 3 * target


def test_edge_approx_not_applicable_outside_region():
    with pytest.raises(NotApplicableError):
        edge_projector_approx(GAPLESS, Geometry(10, 3), math.pi)


def test_full_subregion_is_pure():
    g = Geometry(20, 2, subregion_fraction=1.0)
    ps = occupation_spectrum(truncated_projector(GAPLESS, g))
    dist = np.minimum(np.abs(ps.values), np.abs(ps.values - 1))
    assert dist.max() < 1e-8
    assert abs(von_neumann_entropy(ps)) < 1e-6


def test_element_formula_direct_sum():
    g = Geometry(12, 2)
    tp = truncated_projector(FourBandParams(3.0, 2.0, 0.0), g)
    ks = g.momenta
    Pk = [projector_at(FourBandParams(3.0, 2.0, 0.0), g, k).matrix for k in ks]
    x1, x2, a, b = 4, 1, 3, 6
    direct = sum(np.exp(1j * k * (x1 - x2)) * P[a, b] for k, P in zip(ks, Pk)) / g.L
    c = tp.cell_size
    assert tp.matrix[x1 * c + a, x2 * c + b] == pytest.approx(direct, abs=1e-12)
    y1, s1 = divmod(a, 4)
    y2, s2 = divmod(b, 4)
    assert tp.block(y1, s1, y2, s2)[x1, x2] == pytest.approx(direct, abs=1e-12)
    assert tp.block(0, 0, 0, 0).shape == (g.n_A, g.n_A)


def test_real_half_grid_matches_full_sum():
    g = Geometry(16, 3)
    tp = truncated_projector(GAPLESS, g)
    ks = g.momenta
    d = np.arange(-(g.n_A - 1), g.n_A)
    Pk = np.array([projector_at(GAPLESS, g, k).matrix for k in ks])
    gd = np.einsum("dk,kij->dij", np.exp(1j * np.outer(d, ks)), Pk) / g.L
    assert np.abs(gd.imag).max() < 1e-10
    c = tp.cell_size
    assert np.allclose(tp.matrix[:c, c:2 * c], gd[g.n_A - 2].real, atol=1e-10)


def test_dominant_block_growth():
    vals = []
    Ls = [50, 100, 200]
    for L in Ls:
        tp = truncated_projector(GAPLESS, Geometry(L, 3))
        vals.append(np.abs(tp.block(0, 0, 2, 1)).max())
    slope = np.polyfit(np.log(Ls), np.log(vals), 1)[0]
    # B*Ly - 1 = 2
    assert slope == pytest.approx(2.0, abs=0.2)


def test_hermitian_limit_bounds():
    tp = truncated_projector(HERM4, Geometry(24, 2))
    assert np.abs(tp.matrix).max() <= 1 + 1e-12
    ps = occupation_spectrum(tp)
    assert np.abs(ps.values.imag).max() < 1e-10
    assert ps.values.real.min() > -1e-10 and ps.values.real.max() < 1 + 1e-10


def test_trace_sum_rules():
    g = Geometry(16, 3)
    tp = truncated_projector(GAPLESS, g)
    p = occupation_spectrum(tp).values
    tr = np.trace(tp.matrix)
    assert abs(p.sum() - tr) < 1e-8 * max(1, abs(tr))
    tr2 = np.trace(tp.matrix @ tp.matrix)
    assert abs((p ** 2).sum() - tr2) < 1e-8 * abs(tr2)
    C = occupied_overlap_matrix(GAPLESS, g)
    assert abs(np.trace(C @ C) - tr2) < 1e-8 * abs(tr2)


def test_overlap_route_spectrum():
    g = Geometry(40, 3)
    p = occupation_spectrum(truncated_projector(GAPLESS, g)).values
    q = sla.eigvals(occupied_overlap_matrix(GAPLESS, g))
    big = lambda v: np.sort(np.abs(v))[::-1][:8]
    assert np.allclose(big(p), big(q), rtol=1e-8)


def test_conjugation_closure_two_band():
    ps = occupation_spectrum(truncated_projector(TwoBandParams(0.5, 2.0, 1.0, 2), Geometry(60, 3)))
    assert pt_pairing_residual(ps) < 1e-6
    assert np.all(ps.pair_map >= 0)


def test_complement_symmetry():
    tp = truncated_projector(GAPLESS, Geometry(30, 3))
    p = occupation_spectrum(tp).values
    q = spectrum_of(np.eye(len(p)) - tp.matrix).values
    assert _multiset_close(q, 1 - p, 1e-8)


def test_max_p_grows_linearly():
    Ls = [50, 100, 200, 400]
    m = [occupation_spectrum(truncated_projector(GAPLESS, Geometry(L, 3))).max_abs for L in Ls]
    slope = np.polyfit(np.log(Ls), np.log(m), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.15)


def test_overflow_guard():
    with pytest.raises(RangeError) as info:
        truncated_projector(TwoBandParams(0.5, 2.0, 1.0, 10), Geometry(600, 30))
    assert "largest admissible L" in str(info.value)


def test_thread_count_determinism():
    g = Geometry(40, 3)
    a = truncated_projector(FourBandParams(3.0, 2.0, 0.0), g, threads=1).matrix
    b = truncated_projector(FourBandParams(3.0, 2.0, 0.0), g, threads=3).matrix
    assert np.array_equal(a, b)


def test_pairing_tolerance_scales():
    v = np.array([1e10 + 1e5j, 1e10 - 1e5j + 50, 0.3, 2 + 1e-3j, 5e9 + 1.0j])
    pm = pair_conjugates(v)
    assert pm[0] == 1 and pm[1] == 0
    assert pm[2] == 2
    assert pm[3] == -1
    # imaginary part far below 1e-6 |p| counts as real
    assert pm[4] == 4


def test_near_parallel_edge_pair_keeps_inverse():
    g = Geometry(600, 3)
    for k in g.momenta[:3]:
        es = biorth_eig(ribbon_matrix(TwoBandParams(0.5, 2.0, 1.0, 2), 3, k), balance=True)
        assert es.biorth_residual < 1e-8
        if es.near_defective:
            assert es.left_source == "inverse"
