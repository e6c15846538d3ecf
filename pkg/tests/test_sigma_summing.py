import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from opideal import (
    DegenerateFamilyError,
    InputError,
    NormedSpace,
    Operator,
    ParameterError,
    SearchConfig,
    SummingParams,
    corollary_inclusion_check,
    pi1_upper_oracle,
    pi_norm_lb,
    sigma_lhs,
    sigma_ratio,
    sigma_rhs,
)
from opideal.oracles import rank_one_oracle
from opideal.sigma_summing import sigma_rhs_at
from opideal.spaces import norming_vector

CFG = SearchConfig(restarts=4, iterations=150)
L2 = NormedSpace(2, 2)
EXPONENTS = st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf])
PARAMS = st.sampled_from([SummingParams(1, 1, 0), SummingParams(2, 1, 0.3), SummingParams(3, 2, 0.5),
                          SummingParams(2, 2, 0.9)])
VEC = arrays(float, 2, elements=st.floats(-5, 5)).filter(lambda v: np.any(np.abs(v) > 1e-3))


def test_params_validation():
    with pytest.raises(ParameterError):
        SummingParams(1, 2, 0)
    with pytest.raises(ParameterError):
        SummingParams(2, 1, 1.0)
    with pytest.raises(ParameterError):
        SummingParams(2, 1, 0.96)
    with pytest.raises(ParameterError):
        SummingParams(math.inf, 1, 0)
    assert SummingParams(2, 1, 0.5).lhs_exponent == 4.0


@given(EXPONENTS, EXPONENTS, VEC, PARAMS)
def test_singleton_family(r1, r2, x, params):
    X, Y = NormedSpace(2, r1), NormedSpace(2, r2)
    u = Operator([[1.0, 2.0], [-1.0, 0.5]], X, Y)
    assert sigma_lhs(u, [x], params) == pytest.approx(Y.norm(u(x)), rel=1e-12)
    assert sigma_rhs(X, [x], params, CFG) == pytest.approx(X.norm(x), rel=1e-6)


def test_lhs_examples():
    assert sigma_lhs(Operator.identity(L2), np.eye(2), SummingParams(2, 1, 0)) == pytest.approx(math.sqrt(2))
    assert sigma_lhs(Operator(np.zeros((2, 2)), L2, L2), np.eye(2), SummingParams(2, 1, 0)) == 0.0
    with pytest.raises(InputError):
        sigma_lhs(Operator.identity(L2), [[1.0, 2.0, 3.0]], SummingParams(1, 1))


def test_rhs_orthonormal_pair():
    assert sigma_rhs(L2, np.eye(2), SummingParams(2, 2, 0), CFG) == pytest.approx(1.0, rel=1e-6)


def test_rhs_homogeneity_and_evaluation():
    F = np.array([[1.0, 0.3], [0.2, -1.0], [0.5, 0.5]])
    X = NormedSpace(2, 3)
    P = SummingParams(3, 2, 0.4)
    a = sigma_rhs(X, F, P, CFG)
    assert sigma_rhs(X, -2.0 * F, P, CFG) == pytest.approx(2.0 * a, rel=1e-6)
    # the sup dominates every point of the dual ball
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.standard_normal(2)
        v /= X.dual.norm(v)
        assert sigma_rhs_at(X, F, P, v) <= a * (1 + 1e-9)


def test_rhs_increases_with_sigma():
    # by Hölder |<x, x'>| <= |x| on the dual ball, so raising sigma can only raise each term
    F = np.array([[1.0, 0.3], [0.2, -1.0]])
    vals = [sigma_rhs(L2, F, SummingParams(2, 2, s), CFG) ** (2 / (1 - s)) for s in (0.0, 0.3, 0.6)]
    assert vals[0] <= vals[1] * (1 + 1e-9) <= vals[2] * (1 + 1e-9) ** 2


def test_ratio_examples():
    u = Operator.identity(NormedSpace(3, 1.5))
    assert sigma_ratio(u, [[0.3, -1.0, 2.0]], SummingParams(2, 1, 0.2), CFG) == pytest.approx(1.0, rel=1e-6)
    X, Y = NormedSpace(2, 3), NormedSpace(2, 1)
    a, y = np.array([1.0, -2.0]), np.array([0.5, 1.5])
    r1 = Operator.rank_one(a, y, X, Y)
    x = norming_vector(X, a)
    assert sigma_ratio(r1, [x], SummingParams(2, 1, 0.5), CFG) == pytest.approx(
        X.dual.norm(a) * Y.norm(y), rel=1e-9)
    with pytest.raises(DegenerateFamilyError):
        sigma_ratio(r1, np.zeros((2, 2)), SummingParams(2, 1, 0.5), CFG)


@pytest.mark.parametrize("r1,r2", [(2.0, 2.0), (1.0, 3.0), (math.inf, 1.5)])
def test_pi_norm_rank_one(r1, r2):
    X, Y = NormedSpace(2, r1), NormedSpace(2, r2)
    u = Operator.rank_one([0.4, -1.3], [2.0, 1.0], X, Y)
    oracle = rank_one_oracle(u)
    for params in (SummingParams(1, 1, 0), SummingParams(3, 2, 0.5)):
        rep = pi_norm_lb(u, params, 2, SearchConfig(restarts=3, iterations=100))
        assert rep.value == pytest.approx(oracle, rel=1e-4)
        assert rep.value <= oracle * (1 + 1e-6)
        assert rep.oracle is not None and rep.oracle.value == pytest.approx(oracle)


def test_pi_norm_identity_hilbert_schmidt():
    rep = pi_norm_lb(Operator.identity(L2), SummingParams(2, 2, 0), None, SearchConfig(restarts=6, iterations=200))
    assert rep.value == pytest.approx(math.sqrt(2), rel=5e-2)
    assert rep.value <= math.sqrt(2) * (1 + 1e-6)


def test_pi_norm_zero_operator():
    rep = pi_norm_lb(Operator(np.zeros((2, 2)), L2, L2), SummingParams(1, 1, 0), 2, CFG)
    assert rep.value == 0.0


def test_pi_norm_homogeneity_and_determinism():
    u = Operator([[1.0, 0.5], [0.0, 2.0]], NormedSpace(2, 3), L2)
    P = SummingParams(2, 1, 0.2)
    a = pi_norm_lb(u, P, 2, CFG)
    b = pi_norm_lb(u.scaled(-2.5), P, 2, CFG)
    c = pi_norm_lb(u, P, 2, CFG)
    assert b.value == pytest.approx(2.5 * a.value, rel=1e-9)
    assert a.value == c.value
    np.testing.assert_array_equal(a.witness, c.witness)


def test_pi1_oracle_examples():
    Xinf = NormedSpace(2, math.inf)
    assert pi1_upper_oracle(Operator.identity(Xinf)) == 2.0
    assert pi1_upper_oracle(Operator(np.diag([1.0, 2.0]), Xinf, L2)) == 3.0
    assert pi1_upper_oracle(Operator(np.zeros((2, 2)), Xinf, L2)) == 0.0
    with pytest.raises(ParameterError):
        pi1_upper_oracle(Operator.identity(L2))


def test_pi1_search_reaches_column_sum():
    Xinf = NormedSpace(2, math.inf)
    rep = pi_norm_lb(Operator(np.diag([1.0, 2.0]), Xinf, L2), SummingParams(1, 1, 0), 2, CFG)
    assert rep.value == pytest.approx(3.0, rel=1e-6)


def test_inclusion_verdicts():
    X = NormedSpace(2, 2)
    u = Operator.rank_one([1.0, 2.0], [0.5, -1.0], X, NormedSpace(2, 1))
    cfg = SearchConfig(restarts=3, iterations=100)
    rep = corollary_inclusion_check(u, SummingParams(1, 1, 0.3), SummingParams(2, 2, 0.3), 2, cfg)
    assert rep.gate and rep.verdict == "CONSISTENT"
    rep = corollary_inclusion_check(u, SummingParams(2, 2, 0.3), SummingParams(2, 1, 0.3), 2, cfg)
    assert not rep.gate and rep.verdict == "NOT-APPLICABLE"
    with pytest.raises(ParameterError):
        corollary_inclusion_check(u, SummingParams(1, 1, 0.3), SummingParams(2, 2, 0.0), 2, cfg)


def test_inclusion_linf_domain():
    Xinf = NormedSpace(2, math.inf)
    u = Operator(np.diag([1.0, 2.0]), Xinf, L2)
    rep = corollary_inclusion_check(u, SummingParams(1, 1, 0), SummingParams(3, 3, 0), 2, CFG)
    assert rep.gate
    assert rep.estimate2.value <= 3.0 * (1 + 1e-6)
    assert rep.verdict == "CONSISTENT"
