import math
import warnings

import numpy as np
import pytest

from decomplab import wiener_hopf
from decomplab.analytic import pk_transform
from decomplab.errors import DegenerateModelError, HypothesisError, StationarityWarning
from decomplab.model import QueueModel
from decomplab.queue_sim import estimate_joint_transform, estimate_V_transform, replay_queue
from decomplab.risk_sim import PathPair, sample_paths

EMPTY = np.empty(0)


def _single_queue_integral(times, sizes, c, T, s):
    """Reference ``int_0^T exp(-s W(t)) dt`` for one queue emptied at rate ``c``."""
    w, t, acc = 0.0, 0.0, 0.0
    for tk, jk in list(zip(times, sizes)) + [(T, 0.0)]:
        dt = tk - t
        busy = min(dt, w / c)
        if s == 0:
            acc += busy
        else:
            acc += math.exp(-s * w) * (math.exp(s * c * busy) - 1.0) / (s * c)
        acc += dt - busy
        w = max(w - c * dt, 0.0) + jk
        t = tk
    return acc


def test_no_arrivals_stays_empty(queue_a):
    p = PathPair(5.0, EMPTY, EMPTY, EMPTY, EMPTY)
    st = replay_queue(p, queue_a, [0.5], burn_in_fraction=0.0, n_batches=1)
    assert st.both_empty.sum() == pytest.approx(5.0)
    assert st.v.sum() == pytest.approx(5.0)


def test_hand_replay(queue_a):
    # one W1 arrival of size 1 at t = 1 drains at 2 + 3 * 0.4 = 3.2 and empties after 0.3125
    p = PathPair(2.0, np.array([1.0]), np.array([1.0]), EMPTY, EMPTY)
    s = 0.7
    st = replay_queue(p, queue_a, [s], burn_in_fraction=0.0, n_batches=1)
    assert st.both_empty.sum() == pytest.approx(2.0 - 0.3125, abs=1e-14)
    assert st.second_empty.sum() == pytest.approx(2.0)
    busy = (1.0 - math.exp(-s)) / (3.2 * s)
    assert st.v.sum() == pytest.approx(1.6875 + busy, rel=1e-13)


def test_batches_partition_the_window(queue_a):
    p = sample_paths(queue_a, 300.0, seed=3, stream=1, replica=0)
    one = replay_queue(p, queue_a, [0.0, 1.0], burn_in_fraction=0.2, n_batches=1)
    many = replay_queue(p, queue_a, [0.0, 1.0], burn_in_fraction=0.2, n_batches=20)
    np.testing.assert_allclose(many.v.sum(axis=0), one.v.sum(axis=0), rtol=1e-12)
    assert many.batch_length == pytest.approx(240.0 / 20)
    assert many.second_empty.sum() == pytest.approx(one.v[0, 0], rel=1e-12)


def test_uncoupled_queues_match_single_queue_replays(queue_a):
    q = queue_a.with_rates(0.0, 0.0)
    p = sample_paths(q, 200.0, seed=8, stream=2, replica=0)
    s = 0.6
    st = replay_queue(p, q, joint_grid=[(s, 0.0), (0.0, s)], burn_in_fraction=0.0, n_batches=1)
    ref1 = _single_queue_integral(p.times1, p.sizes1, 2.0, 200.0, s)
    ref2 = _single_queue_integral(p.times2, p.sizes2, 3.0, 200.0, s)
    np.testing.assert_allclose(st.joint.sum(axis=0), [ref1, ref2], rtol=1e-10)


def test_degenerate_rates_rejected(queue_a):
    p = PathPair(1.0, EMPTY, EMPTY, EMPTY, EMPTY)
    with pytest.raises(DegenerateModelError):
        replay_queue(p, queue_a.with_rates(2.0, 0.5), [1.0])


def test_estimator_requires_hypotheses(spec_b1, spec_a2):
    with pytest.raises(HypothesisError):
        estimate_V_transform(QueueModel(spec_b1, spec_a2, 0.5, 0.4), [1.0], 100.0, 2)


def test_stand_alone_queue_matches_pk(queue_a, spec_a1):
    s = np.array([0.5, 1.0, 2.0])
    est = estimate_V_transform(queue_a.with_rates(0.0, 0.0), s, 25000.0, 8, seed=1)
    exact = pk_transform(spec_a1, s)
    assert np.all(np.abs(est.normalized - exact) <= 3 * est.normalized_se)
    assert abs(est.raw_at_zero - 1.0) <= 3 * est.raw_at_zero_se


def test_coupled_queue_matches_boundary_transform(queue_a):
    s = np.array([0.5, 1.0, 2.0])
    est = estimate_V_transform(queue_a, s, 25000.0, 8, seed=2)
    exact = wiener_hopf.G1_hat(queue_a, s)
    assert np.all(np.abs(est.normalized - exact) <= 3 * est.normalized_se)
    assert abs(est.raw_at_zero - 1.0) <= 3 * est.raw_at_zero_se
    assert est.total_time == pytest.approx(2e5)


def test_estimator_is_independent_of_jobs(queue_a):
    a = estimate_V_transform(queue_a, [1.0], 2000.0, 3, seed=4, jobs=1)
    b = estimate_V_transform(queue_a, [1.0], 2000.0, 3, seed=4, jobs=2)
    np.testing.assert_array_equal(a.normalized, b.normalized)


def test_short_runs_warn_about_stationarity(queue_a):
    # starting empty biases the first batches of a very short run
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StationarityWarning)
        for seed in range(6):
            estimate_V_transform(queue_a.with_rates(0.0, 0.0), [0.2], 30.0, 40, seed=seed, burn_in_fraction=0.0)
    assert any(issubclass(w.category, StationarityWarning) for w in caught)


def test_joint_transform(queue_a, spec_a1, spec_a2):
    q = queue_a.with_rates(0.0, 0.0)
    grid = [(0.0, 0.0), (0.5, 1.0), (1.0, 0.3)]
    est = estimate_joint_transform(q, grid, 25000.0, 8, seed=5)
    assert est.estimate[0] == pytest.approx(1.0) and est.stderr[0] == pytest.approx(0.0, abs=1e-12)
    for (s1, s2), e, se in list(zip(grid, est.estimate, est.stderr))[1:]:
        exact = pk_transform(spec_a1, s1) * pk_transform(spec_a2, s2)
        assert abs(e - exact) <= 3 * se


def test_joint_transform_kernel_residual(queue_a, spec_a1, spec_a2):
    from decomplab.analytic import laplace_exponent

    s1, s2 = 0.8, 1.5
    est = estimate_joint_transform(queue_a, [(s1, s2)], 25000.0, 8, seed=6)
    denom = laplace_exponent(spec_a1, s1) + laplace_exponent(spec_a2, s2)
    rhs = (s2 - 0.4 * s1) * wiener_hopf.G1_transform(queue_a, s1) + (s1 - 0.5 * s2) * wiener_hopf.G2_transform(
        queue_a, s2
    )
    assert abs(denom * est.estimate[0] - rhs) <= 3 * abs(denom) * est.stderr[0]
