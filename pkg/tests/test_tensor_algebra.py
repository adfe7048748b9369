"""Tests for the truncated tensor algebra"""
import itertools

import numpy as np
import pytest

from src.core.tensor_algebra import (
    dot,
    scale_levels,
    tensor_exp,
    tensor_identity,
    tensor_mul,
    tensor_norm_tail,
)
from src.domain.exceptions import ShapeError
from src.domain.models import TruncatedTensor


def random_tensor(rng, channels, depth):
    levels = tuple(rng.normal(size=channels ** k) for k in range(depth + 1))
    return TruncatedTensor(channels=channels, depth=depth, levels=levels)


def brute_force_mul(a, b):
    """C_k[i1..ik] = sum_j A_j[i1..ij] B_{k-j}[ij+1..ik] with explicit index loops"""
    d, depth = a.channels, a.depth
    out = []
    for k in range(depth + 1):
        level = np.zeros((d,) * k)
        for index in itertools.product(range(d), repeat=k):
            level[index] = sum(a.level(j)[index[:j]] * b.level(k - j)[index[j:]] for j in range(k + 1))
        out.append(level.ravel())
    return out


def test_identity_levels():
    """Test the multiplicative unit layout"""
    identity = tensor_identity(2, 2)
    assert identity.levels[0].tolist() == [1.0]
    assert identity.levels[1].tolist() == [0.0, 0.0]
    assert identity.levels[2].tolist() == [0.0, 0.0, 0.0, 0.0]
    assert [level.tolist() for level in tensor_identity(1, 0).levels] == [[1.0]]


def test_identity_rejects_bad_shape():
    """Test that channels and depth are validated"""
    with pytest.raises(ValueError):
        tensor_identity(0, 2)
    with pytest.raises(ValueError):
        tensor_identity(2, -1)


def test_unit_laws_are_bit_exact(rng):
    """Test identity (x) A = A (x) identity = A exactly"""
    a = random_tensor(rng, 3, 4)
    identity = tensor_identity(3, 4)
    for product in (tensor_mul(identity, a), tensor_mul(a, identity)):
        for x, y in zip(product.levels, a.levels):
            assert np.array_equal(x, y)


def test_mul_one_dimensional_example():
    """Test exp(2) (x) exp(3) = exp(5) levelwise in one dimension"""
    a = TruncatedTensor(channels=1, depth=2, levels=([1.0], [2.0], [2.0]))
    b = TruncatedTensor(channels=1, depth=2, levels=([1.0], [3.0], [4.5]))
    c = tensor_mul(a, b)
    assert [level.tolist() for level in c.levels] == [[1.0], [5.0], [12.5]]


def test_mul_basis_vectors():
    """Test (1 + e1) (x) (1 + e2) has e1 (x) e2 at level 2"""
    a = TruncatedTensor(channels=2, depth=2, levels=([1.0], [1.0, 0.0], [0.0] * 4))
    b = TruncatedTensor(channels=2, depth=2, levels=([1.0], [0.0, 1.0], [0.0] * 4))
    c = tensor_mul(a, b)
    assert c.levels[1].tolist() == [1.0, 1.0]
    assert c.level(2).tolist() == [[0.0, 1.0], [0.0, 0.0]]


def test_mul_matches_brute_force(rng):
    """Test the flat product against nested index loops"""
    a, b = random_tensor(rng, 3, 3), random_tensor(rng, 3, 3)
    for x, y in zip(tensor_mul(a, b).levels, brute_force_mul(a, b)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


def random_shapes(rng, cases):
    for _ in range(cases):
        yield int(rng.integers(1, 4)), int(rng.integers(1, 6))


def test_mul_is_associative(rng):
    """Test (A B) C = A (B C) over random channel counts and depths"""
    for channels, depth in random_shapes(rng, 1000):
        a, b, c = (random_tensor(rng, channels, depth) for _ in range(3))
        left = tensor_mul(tensor_mul(a, b), c)
        right = tensor_mul(a, tensor_mul(b, c))
        for x, y in zip(left.levels, right.levels):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-10)


def test_scaling_is_a_homomorphism(rng):
    """Test scale(A) (x) scale(B) = scale(A (x) B)"""
    for channels, depth in random_shapes(rng, 1000):
        a, b = random_tensor(rng, channels, depth), random_tensor(rng, channels, depth)
        lam = float(rng.uniform(-2.0, 2.0))
        left = tensor_mul(scale_levels(a, lam), scale_levels(b, lam))
        right = scale_levels(tensor_mul(a, b), lam)
        for x, y in zip(left.levels, right.levels):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-10)


def test_mul_shape_mismatch():
    """Test that mixing channel counts raises ShapeError"""
    with pytest.raises(ShapeError):
        tensor_mul(tensor_identity(2, 2), tensor_identity(3, 2))
    with pytest.raises(ShapeError):
        tensor_mul(tensor_identity(2, 2), tensor_identity(2, 3))


def test_exp_examples():
    """Test exp(v) = (v^k / k!)_k on hand-computed cases"""
    assert [level.tolist() for level in tensor_exp([0.0, 0.0], 3).levels] == [
        level.tolist() for level in tensor_identity(2, 3).levels
    ]
    e = tensor_exp([1.0, 2.0], 2)
    assert e.levels[1].tolist() == [1.0, 2.0]
    assert e.level(2).tolist() == [[0.5, 1.0], [1.0, 2.0]]
    np.testing.assert_allclose(np.concatenate(tensor_exp(2.0, 3).levels), [1.0, 2.0, 2.0, 4.0 / 3.0])


def test_exp_of_sum_of_parallel_vectors(rng):
    """Test exp(a v) (x) exp(b v) = exp((a + b) v)"""
    for channels, depth in random_shapes(rng, 1000):
        v = rng.normal(size=channels)
        s, t = rng.uniform(-1.5, 1.5, size=2)
        product = tensor_mul(tensor_exp(s * v, depth), tensor_exp(t * v, depth))
        for x, y in zip(product.levels, tensor_exp((s + t) * v, depth).levels):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-10)


def test_scale_levels():
    """Test level k is multiplied by lambda^k"""
    a = TruncatedTensor(channels=1, depth=3, levels=([1.0], [1.0], [1.0], [1.0]))
    assert np.concatenate(scale_levels(a, 2.0).levels).tolist() == [1.0, 2.0, 4.0, 8.0]
    assert np.concatenate(scale_levels(a, 1.0).levels).tolist() == [1.0, 1.0, 1.0, 1.0]
    assert np.concatenate(scale_levels(a, 0.0).levels).tolist() == [1.0, 0.0, 0.0, 0.0]


def test_tail_norm():
    """Test the Euclidean norm over levels 1..N"""
    assert tensor_norm_tail(tensor_identity(3, 3)) == 0.0
    a = TruncatedTensor(channels=1, depth=2, levels=([1.0], [3.0], [4.0]))
    assert tensor_norm_tail(a) == pytest.approx(5.0)


def test_tail_norm_matches_flattened_norm(rng):
    """Test the tail norm equals the norm of the flattened nonconstant levels"""
    a = random_tensor(rng, 2, 3)
    assert tensor_norm_tail(a) == pytest.approx(np.linalg.norm(np.concatenate(a.levels[1:])))


def test_dot_properties(rng):
    """Test dot products: unit, symmetry and relation to the tail norm"""
    a, b = random_tensor(rng, 2, 3), random_tensor(rng, 2, 3)
    assert dot(tensor_identity(2, 3), tensor_identity(2, 3)) == 1.0
    assert dot(a, b) == pytest.approx(dot(b, a), abs=1e-14)
    assert dot(a, a) == pytest.approx(tensor_norm_tail(a) ** 2 + a.levels[0][0] ** 2)
