import math

import numpy as np
import pytest

from conftest import random_config
from framepot.analytic import exact_p2, simplex_coherence_sq, welch_check
from framepot.constructions import (
    RealS2Config,
    antipodal_double,
    antiprism,
    balance_rows,
    complete_simplex,
    cosine_curve,
    double_angle_curve,
    doubling_input,
    hadamard4,
    lift_to_cp1,
    tight_frame,
)
from framepot.geometry import Configuration, FieldTag, cp1_to_s2, gram, potential


def _row_sq(A):
    return np.sum(np.abs(A) ** 2, axis=1)


def test_balance_rows_leaves_balanced_matrix_alone():
    W = np.eye(3)
    res = balance_rows(W, return_count=True)
    assert res.rotations == 0
    np.testing.assert_array_equal(res.matrix, W)


def test_balance_rows_single_column():
    res = balance_rows(math.sqrt(2) * np.array([[1.0], [0.0]]), return_count=True)
    np.testing.assert_allclose(_row_sq(res.matrix), [1, 1], atol=1e-12)
    assert res.rotations == 1


def test_balance_rows_scaled_identity_5_3():
    V0 = np.zeros((5, 3))
    V0[:3] = math.sqrt(5 / 3) * np.eye(3)
    A = balance_rows(V0)
    np.testing.assert_allclose(_row_sq(A), 1, atol=1e-12)
    np.testing.assert_allclose(A.T @ A, (5 / 3) * np.eye(3), atol=1e-10)


def test_balance_rows_random_matrices(rng):
    for _ in range(300):
        m, n = int(rng.integers(1, 15)), int(rng.integers(1, 6))
        W = rng.normal(size=(m, n)) * rng.exponential(size=(m, 1))
        if rng.random() < 0.5:
            W = W + 1j * rng.normal(size=(m, n))
        res = balance_rows(W, return_count=True)
        t = np.sum(np.abs(W) ** 2) / m
        assert res.rotations <= m - 1
        np.testing.assert_allclose(_row_sq(res.matrix), t, atol=1e-12 * max(1, t))
        np.testing.assert_allclose(res.matrix.conj().T @ res.matrix, W.conj().T @ W, atol=1e-10)


def test_balance_rows_rejects_zero():
    with pytest.raises(ValueError):
        balance_rows(np.zeros((3, 2)))


@pytest.mark.parametrize("m, n, field", [(3, 3, "R"), (4, 2, "C"), (7, 3, "R"), (10, 4, "C"), (16, 5, "R"), (9, 1, "C")])
def test_tight_frame(m, n, field):
    cfg = tight_frame(m, n, field)
    assert (cfg.m, cfg.n, cfg.field) == (m, n, FieldTag.parse(field))
    np.testing.assert_allclose(cfg.vectors.conj().T @ cfg.vectors, (m / n) * np.eye(n), atol=1e-10)
    assert potential(cfg, 2) == pytest.approx(float(exact_p2(m, n).value), abs=1e-9)
    ok, slack = welch_check(cfg)
    assert ok and slack <= 1e-9


def test_tight_frame_examples():
    assert potential(tight_frame(3, 3, "C"), 2) == pytest.approx(0, abs=1e-15)
    assert potential(tight_frame(4, 2, "C"), 2) == pytest.approx(2, abs=1e-9)
    assert potential(tight_frame(7, 3, "R"), 2) == pytest.approx(14 / 3, abs=1e-9)
    with pytest.raises(ValueError):
        tight_frame(2, 3)


def test_hadamard4_is_regular_tetrahedron():
    pts = hadamard4().points
    G = pts @ pts.T
    np.testing.assert_allclose(G[~np.eye(4, dtype=bool)], -1 / 3, atol=1e-15)
    assert np.abs(pts.sum(axis=0)).max() <= 1e-15
    np.testing.assert_allclose(pts.T @ pts, (4 / 3) * np.eye(3), atol=1e-12)
    assert potential(lift_to_cp1(hadamard4()), 4) == pytest.approx(2 / 3, abs=1e-10)


@pytest.mark.parametrize("m", range(6, 25))
def test_cosine_curve_is_zero_sum_tight(m):
    pts = cosine_curve(m).points
    assert np.abs(pts.sum(axis=0)).max() <= 1e-12
    np.testing.assert_allclose(pts.T @ pts, (m / 3) * np.eye(3), atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1, atol=1e-12)


def test_cosine_curve_lift_values():
    for m in range(6, 13):
        assert potential(lift_to_cp1(cosine_curve(m)), 4) == pytest.approx(m * (m - 3) / 6, abs=1e-8)
    assert potential(lift_to_cp1(cosine_curve(7)), 4) == pytest.approx(14 / 3, abs=1e-8)
    with pytest.raises(ValueError):
        cosine_curve(5)


def test_double_angle_curve_is_not_tight():
    # from m = 7 on no frequency aliases, so the column norms are exact
    for m in range(7, 13):
        pts = double_angle_curve(m).points
        assert np.abs(pts.sum(axis=0)).max() <= 1e-12
        np.testing.assert_allclose(pts.T @ pts, np.diag([m / 2, m / 4, m / 4]), atol=1e-10)
        assert potential(lift_to_cp1(double_angle_curve(m)), 4) > m * (m - 3) / 6 + 0.1


def test_antiprism_octahedron():
    pts = antiprism(6).points
    G = pts @ pts.T
    off = np.sort(G[~np.eye(6, dtype=bool)].round(12))
    # four neighbours at 90 degrees and one antipode per vertex
    assert np.count_nonzero(np.isclose(off, 0, atol=1e-12)) == 24
    assert np.count_nonzero(np.isclose(off, -1, atol=1e-12)) == 6


@pytest.mark.parametrize("r", [3, 4, 5, 6, 7, 8])
def test_antipodal_double(r):
    W = doubling_input(r)
    np.testing.assert_allclose(W.T @ W, (r / 3) * np.eye(3), atol=1e-9)
    pts = antipodal_double(W).points
    G = pts @ pts.T
    assert abs(G.sum()) <= 1e-9
    assert abs((G**3).sum()) <= 1e-9
    m = 2 * r
    assert potential(lift_to_cp1(antipodal_double(W)), 6) == pytest.approx(m * (m - 4) / 8, abs=1e-8)


def test_antipodal_double_examples():
    octa = antipodal_double(np.eye(3))
    assert potential(lift_to_cp1(octa), 6) == pytest.approx(1.5, abs=1e-8)
    assert potential(lift_to_cp1(antipodal_double(hadamard4())), 6) == pytest.approx(4, abs=1e-8)
    with pytest.raises(ValueError):
        antipodal_double(np.eye(3)[:2])
    with pytest.raises(ValueError):
        antipodal_double(np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 0, 1.0]]))


def test_lift_turns_dot_products_into_overlaps(rng):
    pts = rng.normal(size=(30, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    cfg = lift_to_cp1(RealS2Config(pts))
    G = np.abs(cfg.vectors @ cfg.vectors.conj().T) ** 2
    np.testing.assert_allclose(G, (1 + pts @ pts.T) / 2, atol=1e-10)
    for s, u in zip(pts, cfg.vectors):
        np.testing.assert_allclose(cp1_to_s2(u).as_array(), s, atol=1e-10)


def test_lift_antipodes_are_orthogonal():
    cfg = lift_to_cp1(RealS2Config(np.array([[0.3, 0.4, math.sqrt(0.75)], [-0.3, -0.4, -math.sqrt(0.75)]])))
    assert gram(cfg).coherence_max < 1e-12


def test_lift_examples():
    assert potential(lift_to_cp1(antipodal_double(np.eye(3))), 6) == pytest.approx(1.5, abs=1e-8)
    assert potential(lift_to_cp1(hadamard4()), 4) == pytest.approx(2 / 3, abs=1e-8)


def _coherence_sq(cfg):
    return gram(cfg, exponents=()).offdiag_moduli ** 2


def test_complete_simplex_3_2_to_3_1():
    tri = tight_frame(3, 2, "C")
    comp = complete_simplex(tri)
    assert (comp.m, comp.n) == (3, 1)
    np.testing.assert_allclose(gram(comp).offdiag_moduli, 1, atol=1e-10)


def test_complete_simplex_tetrahedron_4_3():
    # tetrahedron Gram: -1/3 off the diagonal, so coherence^2 = 1/9 = (4-3)/(3*3)
    tet = Configuration(FieldTag.REAL, hadamard4().points)
    np.testing.assert_allclose(_coherence_sq(tet), float(simplex_coherence_sq(4, 3).value), atol=1e-12)
    comp = complete_simplex(tet)
    assert (comp.m, comp.n) == (4, 1)
    np.testing.assert_allclose(np.linalg.norm(comp.vectors, axis=1), 1, atol=1e-10)
    np.testing.assert_allclose(_coherence_sq(comp), float(simplex_coherence_sq(4, 1).value), atol=1e-8)


def test_complete_simplex_round_trip():
    for cfg in (tight_frame(3, 2, "C"), Configuration(FieldTag.REAL, hadamard4().points)):
        m, n = cfg.m, cfg.n
        twice = complete_simplex(complete_simplex(cfg))
        assert (twice.m, twice.n) == (m, n)
        np.testing.assert_allclose(_coherence_sq(twice), float(simplex_coherence_sq(m, n).value), atol=1e-8)


def test_complete_simplex_rejects_non_simplex(rng):
    with pytest.raises(ValueError):
        complete_simplex(random_config(rng, 5, 2))
    with pytest.raises(ValueError):
        complete_simplex(tight_frame(5, 2, "C"))  # tight but not equiangular


def test_every_construction_is_valid_configuration():
    outs = [tight_frame(6, 4, "C"), lift_to_cp1(hadamard4()), lift_to_cp1(cosine_curve(9)),
            lift_to_cp1(antipodal_double(doubling_input(5)))]
    for cfg in outs:
        Configuration.from_json(cfg.to_json())
