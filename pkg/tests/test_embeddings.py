import numpy as np
import pytest

from bias_probe import embeddings as E
from bias_probe.errors import DimensionError, DimensionMismatch, ParseError
from bias_probe.shape import ShapeVector, random_shape


def _spec(leakage, D=6):
    nd = (tuple(np.eye(D)[0]), tuple(np.eye(D)[1]))
    return E.SyntheticEmbedderSpec(11, leakage, D, nd, 16)


def test_mixing_matrix_is_orthonormal():
    A = E.mixing_matrix(_spec(1.0))
    assert np.allclose(A.T @ A, np.eye(6))


def test_full_leakage_preserves_distances():
    shapes = random_shape(0, 5, 6)
    V = E.embedding_matrix(E.embed_all(shapes, _spec(1.0)))
    F = np.vstack([s.coeffs for s in shapes])
    assert np.allclose(np.linalg.norm(V[0] - V[1]), np.linalg.norm(F[0] - F[1]))


def test_zero_leakage_removes_null_directions():
    spec = _spec(0.0)
    a = E.synthetic_embed(ShapeVector("a", [1, 2, 3, 4, 5, 6]), spec).vector
    b = E.synthetic_embed(ShapeVector("b", [9, -7, 3, 4, 5, 6]), spec).vector
    assert np.allclose(a, b)


def test_embed_all_matches_single_and_checks_dims():
    shapes = random_shape(1, 3, 6)
    many = E.embed_all(shapes, _spec(0.5))
    one = E.synthetic_embed(shapes[1], _spec(0.5))
    assert np.allclose(many[1].vector, one.vector)
    with pytest.raises(DimensionMismatch):
        E.synthetic_embed(ShapeVector("x", [1.0, 2.0]), _spec(0.5))


def test_file_round_trip_and_errors(tmp_path):
    embs = E.embed_all(random_shape(2, 3, 6), _spec(0.3))
    E.save_embeddings(tmp_path / "e.csv", embs)
    back = E.load_embeddings(tmp_path / "e.csv", 16)
    assert all(np.array_equal(a.vector, b.vector) for a, b in zip(embs, back))
    with pytest.raises(DimensionError):
        E.load_embeddings(tmp_path / "e.csv", 128)
    (tmp_path / "bad.csv").write_text("face_id,dim_0\nf,nan\n")
    with pytest.raises(ParseError):
        E.load_embeddings(tmp_path / "bad.csv", 1)
