"""Shared test helpers."""

from unicache import FsmSpec, RequestTrace, SplitMix64


def random_trace(n_files: int, length: int, seed: int) -> RequestTrace:
    rng = SplitMix64(seed)
    return RequestTrace(n_files, [rng.next_below(n_files) for _ in range(length)])


def worked_example():
    """3-state machine over 5 files with a 12-request trace; the best
    per-state prefetch at C=2 misses exactly once (rate 11/12)."""
    spec = FsmSpec(
        n_states=3, n_files=5,
        transitions=[[0, 1, 0, 0, 0],
                     [2, 0, 2, 0, 0],
                     [0, 0, 0, 0, 0]],
        initial_state=0)
    trace = RequestTrace(5, [1, 0, 4, 1, 2, 4, 1, 3, 4, 1, 2, 3])
    counts = [[0, 4, 0, 0, 1],
              [1, 0, 2, 1, 0],
              [0, 0, 0, 1, 2]]
    prefetch = [{1, 4}, {0, 2}, {3, 4}]
    return spec, trace, counts, prefetch


def mean(values):
    return sum(values) / len(values)


def stderr(values):
    n = len(values)
    if n < 2:
        return 0.0
    m = mean(values)
    var = sum((v - m) ** 2 for v in values) / (n - 1)
    return (var / n) ** 0.5
