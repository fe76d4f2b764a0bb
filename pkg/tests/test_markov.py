import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unicache import (DomainError, EtaConfig, MarkovContext, MarkovSagePolicy,
                      RequestTrace, SagePolicy, offline_markov_hit_rate,
                      online_markov_sage, replay, shift_context)
from util import random_trace


def test_shift_context_drops_oldest():
    ctx = MarkovContext(k=2, window=(1, 5))
    assert shift_context(ctx, 2).window == (5, 2)


def test_shift_context_order_zero():
    ctx = MarkovContext(k=0)
    assert shift_context(ctx, 3).window == ()


def test_shift_context_grows_during_warmup():
    ctx = MarkovContext(k=3)
    for x, expect in [(4, (4,)), (5, (4, 5)), (6, (4, 5, 6)), (7, (5, 6, 7))]:
        ctx = shift_context(ctx, x)
        assert ctx.window == expect


def test_context_validation():
    with pytest.raises(DomainError):
        MarkovContext(k=-1)
    with pytest.raises(DomainError):
        MarkovContext(k=1, window=(0, 1))
    with pytest.raises(DomainError):
        shift_context(MarkovContext(k=1), -2)


def test_order_one_contexts_on_three_requests():
    # trace (a, b, c): rounds are consumed by contexts (), (a), (b)
    trace = RequestTrace(3, [0, 1, 2])
    policy = MarkovSagePolicy(3, 1, k=1, seed=0)
    replay(policy, trace)
    assert set(policy.table) == {(), (0,), (1,)}


def test_offline_order_zero_is_static_best():
    trace = RequestTrace(4, [1, 1, 2, 3, 1, 2])
    rate, hits = offline_markov_hit_rate(trace, 0, 2)
    assert hits == 5 and rate == pytest.approx(5 / 6)


def test_offline_periodic_trace_perfect_with_context():
    trace = RequestTrace(3, [0, 1, 2] * 40)
    rate1, hits1 = offline_markov_hit_rate(trace, 1, 1)
    assert hits1 == len(trace)  # every context pins its successor; warm-up is 1 round
    rate0, _ = offline_markov_hit_rate(trace, 0, 1)
    assert rate0 <= 0.34


def test_offline_monotone_on_past_counterexample():
    # merged warm-up pooling used to lose a hit between orders 1 and 2 here
    trace = RequestTrace(2, [0, 1, 0, 1, 1])
    rates = [offline_markov_hit_rate(trace, k, 1)[0] for k in range(4)]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


@given(st.integers(min_value=2, max_value=5), st.integers(min_value=5, max_value=120),
       st.integers(min_value=0, max_value=2**32))
@settings(max_examples=60, deadline=None)
def test_offline_monotone_in_order(n, length, seed):
    trace = random_trace(n, length, seed)
    prev = -1.0
    for k in range(5):
        rate, _ = offline_markov_hit_rate(trace, k, 1)
        assert rate >= prev - 1e-15
        prev = rate


def test_offline_validates():
    trace = RequestTrace(3, [0, 1])
    with pytest.raises(DomainError):
        offline_markov_hit_rate(trace, -1, 1)
    with pytest.raises(DomainError):
        offline_markov_hit_rate(trace, 1, 4)
    with pytest.raises(DomainError):
        offline_markov_hit_rate(RequestTrace(3, []), 1, 1)


def test_order_zero_policy_identical_to_plain_sage():
    trace = random_trace(5, 400, 17)
    cfg = EtaConfig()
    a = replay(SagePolicy(5, 2, cfg, seed=7), trace)
    b = online_markov_sage(trace, 0, 2, cfg, seed=7)
    assert a.hits == b.hits


def test_online_markov_reproducible():
    trace = random_trace(4, 300, 3)
    a = online_markov_sage(trace, 2, 2, seed=11)
    b = online_markov_sage(trace, 2, 2, seed=11)
    assert a.hits == b.hits and a.cumulative_hits == b.cumulative_hits


def test_context_table_stays_bounded():
    n, k = 3, 2
    trace = random_trace(n, 500, 23)
    policy = MarkovSagePolicy(n, 1, k=k, seed=0)
    replay(policy, trace)
    assert policy.contexts_visited <= min(n**k + k, len(trace))


def test_online_learns_deterministic_cycle():
    trace = RequestTrace(4, [0, 1, 2, 3] * 250)
    rec = online_markov_sage(trace, 1, 1, seed=4)
    # after each context's first few visits the successor is locked in
    assert rec.cumulative_hits >= len(trace) - 40


def test_per_context_regret_bound():
    # mean regret against the per-context oracle stays under the per-state
    # cap evaluated with S = number of visited contexts
    from statistics import mean

    from unicache import fsm_regret_bound, random_fsm, generate_trace

    spec, arrays = random_fsm(10, 4, 2, seed=6)
    trace = generate_trace(spec, arrays, spec.initial_state, 20_000, seed=7)
    horizon = len(trace)
    for k in (1, 2):
        oracle_hits = offline_markov_hit_rate(trace, k, 2)[1]
        regrets = []
        contexts = None
        for seed in range(20):
            policy = MarkovSagePolicy(4, 2, k=k, seed=seed)
            rec = replay(policy, trace)
            regrets.append(oracle_hits - rec.cumulative_hits)
            contexts = policy.contexts_visited
        bound = fsm_regret_bound(contexts, horizon - oracle_hits, 4, 2)
        assert mean(regrets) <= bound, (k, mean(regrets), bound)
