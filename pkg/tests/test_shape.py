import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bias_probe import shape as S
from bias_probe.errors import DimensionMismatch, EmptyData
from bias_probe.traits import TraitDimension

T = TraitDimension.TRUSTWORTHY


def _tv(seed=0, D=10):
    shapes = S.random_shape(seed, 100, D)
    r = np.random.default_rng(seed).standard_normal(100)
    return S.fit_trait_vector(S.shape_matrix(shapes), r, T)


def test_trait_vector_is_unit_and_recovers_direction():
    D = 20
    w = np.random.default_rng(1).standard_normal(D)
    w /= np.linalg.norm(w)
    shapes = S.whiten(S.random_shape(2, 400, D))
    F = S.shape_matrix(shapes)
    tv = S.fit_trait_vector(F, F.T @ w, T)
    assert np.linalg.norm(tv.direction) == pytest.approx(1.0)
    assert tv.direction @ w == pytest.approx(1.0, abs=1e-9)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 100))
def test_manipulation_is_linear(a, b, seed):
    tv = _tv(seed % 5)
    base = S.random_shape(seed, 1, 10)[0]
    twice = S.manipulate(S.manipulate(base, tv, a).shape, tv, b).shape.coeffs
    once = S.manipulate(base, tv, a + b).shape.coeffs
    assert np.abs(twice - once).max() <= 1e-9


def test_zero_delta_is_identity():
    base = S.random_shape(3, 1, 10)[0]
    assert np.array_equal(S.manipulate(base, _tv(), 0.0).shape.coeffs, base.coeffs)


def test_neutralize_removes_component():
    tv = _tv()
    base = S.random_shape(4, 1, 10)[0]
    assert S.neutralize(base, tv).coeffs @ tv.direction == pytest.approx(0.0, abs=1e-12)


def test_distinct_set_size_and_ids():
    bases = S.random_shape(5, 3, 10, "base")
    faces = S.generate_distinct_set(bases, [_tv()], (-1.0, 0.0, 1.0))
    assert len(faces) == 9
    assert len({f.face_id for f in faces}) == 9
    with pytest.raises(EmptyData):
        S.generate_distinct_set(bases, [_tv()], ())
    with pytest.raises(DimensionMismatch):
        S.generate_distinct_set(S.random_shape(5, 1, 9), [_tv()], (1.0,))


def test_whiten_gives_identity_gram():
    F = S.shape_matrix(S.whiten(S.random_shape(6, 80, 7)))
    assert np.allclose(F @ F.T, 80 * np.eye(7))


def test_shape_and_vector_files_round_trip(tmp_path):
    shapes = S.random_shape(7, 4, 5)
    S.save_shapes(tmp_path / "s.csv", shapes)
    back = S.load_shapes(tmp_path / "s.csv")
    assert all(np.array_equal(a.coeffs, b.coeffs) and a.face_id == b.face_id for a, b in zip(shapes, back))
    tv = _tv(D=10)
    S.save_trait_vectors(tmp_path / "t.csv", [tv])
    (tv2,) = S.load_trait_vectors(tmp_path / "t.csv")
    assert tv2.trait == tv.trait and np.array_equal(tv2.direction, tv.direction)
