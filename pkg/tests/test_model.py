import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decomplab.errors import (
    DegenerateModelError,
    HypothesisError,
    InfiniteRateWithNonpositiveDriftError,
    ModelError,
    UnstableModelError,
)
from decomplab.model import (
    INF,
    CompoundPoissonSpec,
    Deterministic,
    Erlang,
    ExtendedRate,
    Exponential,
    HyperExponential,
    QueueModel,
    RiskModel,
    Stability,
    mean_drift,
    require_decomposition_hypotheses,
    rescale_queue,
    rescale_risk,
    validate_queue,
    validate_risk,
)

LAWS = [Exponential(1.5), Erlang(3, 2.0), HyperExponential((0.3, 0.7), (0.5, 4.0)), Deterministic(0.8)]


def test_mean_drift_examples():
    assert mean_drift(CompoundPoissonSpec(2.0, 1.0, Exponential(1.0))) == pytest.approx(1.0)
    assert mean_drift(CompoundPoissonSpec(2.0, 0.0, Exponential(3.0))) == 2.0
    assert mean_drift(CompoundPoissonSpec(1.5, 1.0, Erlang(2, 2.0))) == pytest.approx(0.5)


@pytest.mark.parametrize("bad", [dict(drift=0.0, rate=1.0), dict(drift=-1.0, rate=1.0), dict(drift=1.0, rate=-0.5)])
def test_spec_rejects_bad_parameters(bad):
    with pytest.raises(ModelError):
        CompoundPoissonSpec(bad["drift"], bad["rate"], Exponential(1.0))


def test_jump_law_parameter_checks():
    with pytest.raises(ModelError):
        Exponential(0.0)
    with pytest.raises(ModelError):
        Erlang(0, 1.0)
    with pytest.raises(ModelError):
        HyperExponential((0.5, 0.6), (1.0, 2.0))
    with pytest.raises(ModelError):
        Deterministic(-1.0)


def test_extended_rate_parsing():
    assert ExtendedRate.of("inf") is INF
    assert ExtendedRate.of(math.inf) is INF
    assert ExtendedRate.of(2).value == 2.0
    assert ExtendedRate.of(0).is_zero
    assert INF.to_json() == "inf"
    with pytest.raises(ModelError):
        ExtendedRate.of(-1.0)
    with pytest.raises(ModelError):
        ExtendedRate.of("many")


def test_validate_risk_examples(risk_a, spec_b1, spec_a2):
    assert validate_risk(risk_a) is Stability.BOTH_POSITIVE
    assert validate_risk(RiskModel(spec_b1, spec_a2, 2.0, 0.25)) is Stability.FIRST_NONPOSITIVE
    with pytest.raises(UnstableModelError):
        validate_risk(RiskModel(spec_b1, spec_a2, 6.0, 0.25))
    with pytest.raises(InfiniteRateWithNonpositiveDriftError):
        validate_risk(RiskModel(spec_b1, spec_a2, "inf", 0.25))


def test_validate_queue_examples(queue_a, spec_a1, spec_a2, spec_b1):
    assert validate_queue(QueueModel(spec_a1, spec_a2, 0.0, 0.0)) is Stability.BOTH_POSITIVE
    assert validate_queue(queue_a) is Stability.BOTH_POSITIVE
    with pytest.raises(UnstableModelError):
        validate_queue(QueueModel(spec_b1, spec_a2, 0.5, 0.1))


def test_decomposition_hypotheses(queue_a, spec_b1, spec_a2):
    require_decomposition_hypotheses(queue_a)
    with pytest.raises(DegenerateModelError):
        require_decomposition_hypotheses(queue_a.with_rates(2.0, 0.5))
    with pytest.raises(HypothesisError):
        require_decomposition_hypotheses(QueueModel(spec_b1, spec_a2, 0.5, 0.4))


def test_rescale_examples(risk_a, queue_a):
    assert rescale_risk(risk_a, 1.0) == risk_a
    m = rescale_risk(risk_a, 2.0)
    assert m.spec2 == CompoundPoissonSpec(6.0, 2.0, Exponential(0.5))
    assert m.spec1 == risk_a.spec1
    assert (m.r1.value, m.r2.value) == (4.0, 0.125)
    q = rescale_queue(queue_a, 2.0)
    assert (q.rho1, q.rho2) == (1.0, 0.2)
    with pytest.raises(ModelError):
        rescale_risk(risk_a, 0.0)


def test_rescale_keeps_infinite_rate(risk_a):
    m = rescale_risk(risk_a.with_rates("inf", 0.0), 3.0)
    assert m.r1.is_infinite and m.r2.value == 0.0


def test_swapped_exchanges_roles(risk_a):
    s = risk_a.swapped()
    assert s.spec1 == risk_a.spec2 and s.r1 == risk_a.r2
    assert s.swapped() == risk_a


@pytest.mark.parametrize("law", LAWS, ids=lambda x: type(x).__name__)
def test_transform_minus_one_matches_transform(law):
    s = np.array([0.0, 1e-12, 1e-6, 0.3, 2.0, 50.0])
    np.testing.assert_allclose(law.transform_minus_one(s), law.transform(s) - 1.0, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("law", LAWS[:3], ids=lambda x: type(x).__name__)
def test_transform_minus_one_is_accurate_at_tiny_arguments(law):
    s = 1e-10
    assert law.transform_minus_one(s) == pytest.approx(-law.mean * s, rel=1e-8)


@pytest.mark.parametrize("law", LAWS, ids=lambda x: type(x).__name__)
def test_draw_mean(law):
    x = law.draw(np.random.default_rng(5), 200_000)
    assert np.all(x > 0)
    sd = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - law.mean) <= 4 * sd + 1e-12


@pytest.mark.parametrize("law", LAWS, ids=lambda x: type(x).__name__)
def test_draws_are_prefix_consistent(law):
    a = law.draw(np.random.default_rng(11), 50)
    b = law.draw(np.random.default_rng(11), 80)
    np.testing.assert_array_equal(a, b[:50])


@given(
    rate=st.floats(0.1, 10.0),
    c=st.floats(0.1, 10.0),
    s=st.floats(0.0, 20.0),
)
@settings(max_examples=60, deadline=None)
def test_scaled_exponential_transform(rate, c, s):
    law = Exponential(rate)
    # E exp(-s c J) = transform of the scaled law at s
    assert law.scaled(c).transform(s) == pytest.approx(law.transform(c * s), rel=1e-12)


@given(
    mu1=st.floats(-1.5, 2.0).filter(lambda x: abs(x) > 1e-3),
    r1=st.floats(0.0, 10.0),
)
@settings(max_examples=80, deadline=None)
def test_validate_risk_clause_consistency(mu1, r1):
    # company 2 has mu2 = 1; company 1 drift c chosen so that mu1 is as requested
    spec2 = CompoundPoissonSpec(3.0, 2.0, Exponential(1.0))
    spec1 = CompoundPoissonSpec(2.0 + mu1, 2.0, Exponential(1.0))
    m = RiskModel(spec1, spec2, r1, 0.5)
    stable = mean_drift(spec1) > 0 or 1.0 + r1 * mean_drift(spec1) > 0
    if stable:
        validate_risk(m)
    else:
        with pytest.raises(UnstableModelError):
            validate_risk(m)
