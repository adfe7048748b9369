"""Tests for the signature transform"""
import math

import numpy as np
import pytest

from src.core.signature import (
    batch_signature,
    flatten_nonconstant,
    sig_dim,
    signature,
    signature_levels,
    time_augment,
    time_augment_array,
    unflatten_nonconstant,
    update_signature,
)
from src.core.tensor_algebra import tensor_identity, tensor_mul, tensor_norm_tail
from src.domain.exceptions import NumericalError, ShapeError
from src.domain.models import Stream, StreamBatch


def quadrature_signature(points, depth, substeps=2000):
    """Iterated integrals by trapezoidal Stieltjes sums on a refined grid"""
    points = np.asarray(points, dtype=np.float64)
    fine = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        fine.extend(a + (b - a) * s / substeps for s in range(1, substeps + 1))
    fine = np.array(fine)
    d = points.shape[1]
    levels = [np.ones(())] + [np.zeros((d,) * k) for k in range(1, depth + 1)]
    for j in range(len(fine) - 1):
        dx = fine[j + 1] - fine[j]
        updated = [levels[0]]
        for k in range(1, depth + 1):
            average = 0.5 * (levels[k - 1] + updated[k - 1])
            updated.append(levels[k] + np.multiply.outer(average, dx))
        levels = updated
    return [level.ravel() for level in levels]


def assert_levels_close(a, b, atol=1e-12, rtol=0.0):
    for x, y in zip(a.levels, b.levels):
        np.testing.assert_allclose(x, y, rtol=rtol, atol=atol)


def test_two_point_signature(two_point_stream):
    """Test the signature of one segment from (0,0) to (1,2)"""
    sig = signature(two_point_stream, 2)
    assert sig.levels[0].tolist() == [1.0]
    assert sig.levels[1].tolist() == [1.0, 2.0]
    assert sig.level(2).tolist() == [[0.5, 1.0], [1.0, 2.0]]


def test_constant_stream_has_identity_signature():
    """Test a stream that never moves"""
    stream = Stream(points=np.full((5, 3), 2.5))
    assert_levels_close(signature(stream, 3), tensor_identity(3, 3), atol=0.0)


def test_collinear_points_do_not_change_signature():
    """Test inserting points along a segment leaves the signature unchanged"""
    direct = signature(Stream(points=[[0.0, 0.0], [1.0, 2.0]]), 4)
    refined = signature(Stream(points=[[0.0, 0.0], [0.25, 0.5], [0.5, 1.0], [1.0, 2.0]]), 4)
    assert_levels_close(direct, refined)


@pytest.mark.parametrize("n,d,depth", [(2, 1, 3), (3, 2, 3), (4, 2, 2), (4, 1, 3)])
def test_signature_matches_quadrature(rng, n, d, depth):
    """Test the Chen fold against numerically integrated iterated integrals"""
    points = 0.5 * rng.normal(size=(n, d))
    sig = signature(Stream(points=points), depth)
    for level, expected in zip(sig.levels, quadrature_signature(points, depth)):
        np.testing.assert_allclose(level, expected, rtol=0, atol=1e-6)


def test_update_signature_fold(rng):
    """Test streaming one point at a time reproduces the batch signature"""
    points = 0.1 * rng.normal(size=(100, 2)).cumsum(axis=0)
    sig = signature(Stream(points=points[:2]), 4)
    for prev, new in zip(points[1:-1], points[2:]):
        sig = update_signature(sig, prev, new)
    assert_levels_close(sig, signature(Stream(points=points), 4))


def test_update_signature_with_repeated_point(random_stream):
    """Test a zero-length segment leaves the signature unchanged"""
    stream = random_stream(4, 2)
    sig = signature(stream, 3)
    last = stream.points[-1]
    assert_levels_close(update_signature(sig, last, last), sig, atol=0.0)


def test_update_signature_rejects_wrong_point_shape(two_point_stream):
    """Test a point of the wrong dimension raises ShapeError"""
    with pytest.raises(ShapeError):
        update_signature(signature(two_point_stream, 2), [0.0, 0.0], [1.0, 2.0, 3.0])


def random_cases(rng, cases):
    """Random (points, channels, depth) draws with d <= 3, N <= 5 and n <= 12"""
    for _ in range(cases):
        channels, depth = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        yield int(rng.integers(2, 13)), channels, depth


def test_chen_identity(rng):
    """Test Sig(x concatenated with y) = Sig(x) (x) Sig(y) when they share an endpoint"""
    for n, channels, depth in random_cases(rng, 1000):
        x = 0.5 * rng.normal(size=(n, channels))
        tail = 0.5 * rng.normal(size=(int(rng.integers(2, 13)), channels))
        tail = tail - tail[0] + x[-1]
        joined = Stream(points=np.vstack([x, tail[1:]]))
        product = tensor_mul(signature(Stream(points=x), depth), signature(Stream(points=tail), depth))
        assert_levels_close(signature(joined, depth), product, atol=1e-10, rtol=1e-9)


def test_translation_invariance(rng):
    """Test shifting every point by a constant vector"""
    for n, channels, depth in random_cases(rng, 1000):
        x = 0.5 * rng.normal(size=(n, channels))
        shift = rng.uniform(-10.0, 10.0, size=channels)
        assert_levels_close(signature(Stream(points=x), depth), signature(Stream(points=x + shift), depth),
                            atol=1e-10, rtol=1e-9)


def test_reparameterization_invariance_and_time_augmentation():
    """Test one-dimensional resampling is invisible until time is a channel"""
    uniform = Stream(points=[0.0, 1.0, 2.0])
    skewed = Stream(points=[0.0, 0.2, 0.5, 1.0, 2.0])
    assert_levels_close(signature(uniform, 4), signature(skewed, 4))
    augmented = (signature(time_augment(uniform), 4), signature(time_augment(skewed), 4))
    difference = max(np.max(np.abs(a - b)) for a, b in zip(augmented[0].levels, augmented[1].levels))
    assert difference > 1e-3


def test_factorial_decay(rng):
    """Test ||S_k|| <= L^k / k! for the path length L"""
    for _ in range(200):
        points = 0.5 * rng.normal(size=(int(rng.integers(2, 13)), int(rng.integers(1, 4))))
        sig = signature(Stream(points=points), 8)
        length = float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))
        for k in range(1, 9):
            bound = length ** k / math.factorial(k)
            assert np.linalg.norm(sig.levels[k]) <= bound * (1.0 + 1e-10) + 1e-12


def test_sig_dim():
    """Test signature sizes"""
    assert sig_dim(3, 3) == 40
    assert sig_dim(2, 3) == 15
    assert sig_dim(2, 2, include_constant=False) == 6
    assert sig_dim(4, 3, include_constant=False) == 84
    assert sig_dim(1, 4) == 5


def test_flatten_layout(two_point_stream):
    """Test the flat vector is level 1 then level 2 row-major"""
    flat = flatten_nonconstant(signature(two_point_stream, 2))
    assert flat.tolist() == [1.0, 2.0, 0.5, 1.0, 1.0, 2.0]


def test_unflatten_restores_signature(random_stream):
    """Test unflatten_nonconstant undoes flatten_nonconstant"""
    sig = signature(random_stream(5, 3), 3)
    restored = unflatten_nonconstant(flatten_nonconstant(sig), 3, 3)
    assert_levels_close(restored, sig, atol=0.0)
    with pytest.raises(ShapeError):
        unflatten_nonconstant([1.0, 2.0], 3, 3)


def test_time_augment_examples():
    """Test the uniform grid and explicit times"""
    augmented = time_augment(Stream(points=[5.0, 6.0, 7.0]))
    assert augmented.points.tolist() == [[0.0, 5.0], [0.5, 6.0], [1.0, 7.0]]
    timed = time_augment(Stream(points=[[1.0], [2.0]], times=[0.0, 0.1]))
    assert timed.points.tolist() == [[0.0, 1.0], [0.1, 2.0]]
    assert time_augment(Stream(points=[[4.0]])).points.tolist() == [[0.0, 4.0]]


def test_time_augment_array_matches_streams(rng):
    """Test the batched helper agrees with per-stream augmentation"""
    values = rng.normal(size=(3, 6, 2))
    batched = time_augment_array(values)
    for i in range(3):
        np.testing.assert_array_equal(batched[i], time_augment(Stream(points=values[i])).points)


def test_batched_levels_match_single_streams(rng):
    """Test the batched fold equals per-stream signatures"""
    paths = rng.normal(size=(4, 5, 2))
    levels = signature_levels(paths, 3)
    for i in range(4):
        single = signature(Stream(points=paths[i]), 3)
        for k in range(4):
            np.testing.assert_allclose(levels[k][i], single.levels[k], atol=1e-14)


def test_batch_signature_threads(rng):
    """Test thread count does not change results"""
    batch = StreamBatch(points=rng.normal(size=(6, 7, 2)))
    serial = batch_signature(batch, 3, threads=1)
    threaded = batch_signature(batch, 3, threads=3)
    for a, b in zip(serial, threaded):
        assert_levels_close(a, b, atol=0.0)


def test_signature_preconditions():
    """Test short streams, bad depth and non-finite input"""
    with pytest.raises(ValueError):
        signature(Stream(points=[[1.0, 2.0]]), 2)
    with pytest.raises(ValueError):
        signature(Stream(points=[[0.0], [1.0]]), 0)
    with pytest.raises(NumericalError):
        signature(Stream(points=[[0.0], [np.nan]]), 2)


def test_signature_level_one_is_total_increment(random_stream):
    """Test level 1 telescopes to x_n - x_1 and the tail norm is positive"""
    x = random_stream(9, 3)
    sig = signature(x, 2)
    np.testing.assert_allclose(sig.levels[1], x.points[-1] - x.points[0], atol=1e-12)
    assert tensor_norm_tail(sig) > 0.0
