"""Finite state machines and prefetchers.

An FSM is a transition table over (state, requested file); attaching a
per-state cache set turns it into a finite-state prefetcher (FSP). Given a
trace, the best prefetcher for a fixed machine is computed exactly: count
requests per (state, file), then cache the C most-requested files of each
state. LRU and FIFO are materialized as explicit FSPs whose states are
ordered tuples of distinct cached files.
"""

from __future__ import annotations

from dataclasses import dataclass
from heapq import nlargest

from .core import (CacheSet, DataError, DomainError, RequestTrace, RunRecord,
                   ScaleGuardError)

_STATE_CAP = 10**6


@dataclass
class FsmSpec:
    """State set [0, n_states), transition table (state x file -> state), start state."""

    n_states: int
    n_files: int
    transitions: list[list[int]]
    initial_state: int

    def __post_init__(self):
        if self.n_states < 1 or self.n_files < 1:
            raise DomainError("an FSM needs at least one state and one file")
        if not 0 <= self.initial_state < self.n_states:
            raise DomainError(f"initial state {self.initial_state} outside [0, {self.n_states})")
        if len(self.transitions) != self.n_states:
            raise DomainError(f"expected {self.n_states} transition rows, got {len(self.transitions)}")
        for s, row in enumerate(self.transitions):
            if len(row) != self.n_files:
                raise DomainError(f"transition row {s} has {len(row)} entries, expected {self.n_files}")
            for x, nxt in enumerate(row):
                if not 0 <= nxt < self.n_states:
                    raise DomainError(f"transition[{s}][{x}]={nxt} outside [0, {self.n_states})")


@dataclass
class Prefetcher:
    """One cache set per FSM state."""

    caches: list[CacheSet]

    def __post_init__(self):
        if not self.caches:
            raise DomainError("a prefetcher needs at least one state entry")
        size = self.caches[0].size
        for s, c in enumerate(self.caches):
            if c.size != size:
                raise DomainError(f"state {s} caches {c.size} files, expected {size}")

    @property
    def cache_size(self) -> int:
        return self.caches[0].size


@dataclass
class VisitCounts:
    """counts[s][x] = number of requests for file x made while in state s."""

    counts: list[list[int]]
    total: int

    def __post_init__(self):
        if sum(map(sum, self.counts)) != self.total:
            raise DomainError("visit counts must sum to the number of rounds")

    @property
    def n_states(self) -> int:
        return len(self.counts)

    @property
    def n_files(self) -> int:
        return len(self.counts[0]) if self.counts else 0


def fsm_step(spec: FsmSpec, state: int, request: int) -> int:
    """Next state after observing `request` in `state`."""
    if not 0 <= state < spec.n_states:
        raise DomainError(f"state {state} outside [0, {spec.n_states})")
    if not 0 <= request < spec.n_files:
        raise DomainError(f"request {request} outside [0, {spec.n_files})")
    return spec.transitions[state][request]


def visit_counts(spec: FsmSpec, trace: RequestTrace) -> VisitCounts:
    """Replay the trace from the start state, counting requests per state."""
    if trace.n_files > spec.n_files:
        raise DomainError(f"trace uses {trace.n_files} files but FSM only knows {spec.n_files}")
    counts = [[0] * spec.n_files for _ in range(spec.n_states)]
    table = spec.transitions
    s = spec.initial_state
    for x in trace.requests:
        counts[s][x] += 1
        s = table[s][x]
    return VisitCounts(counts=counts, total=len(trace))


def optimal_prefetcher(counts: VisitCounts, cache_size: int) -> Prefetcher:
    """Per state, the C most-requested files; ties broken toward smaller ids."""
    n = counts.n_files
    if not 1 <= cache_size <= n:
        raise DomainError(f"cache size {cache_size} outside [1, {n}]")
    caches = []
    for row in counts.counts:
        top = nlargest(cache_size, range(n), key=lambda i: (row[i], -i))
        caches.append(CacheSet(frozenset(top), n))
    return Prefetcher(caches=caches)


def offline_fsp_hits(spec: FsmSpec, trace: RequestTrace, cache_size: int) -> tuple[int, Prefetcher]:
    """Hit count of the best prefetcher for this FSM on this trace, plus that prefetcher."""
    vc = visit_counts(spec, trace)
    best = optimal_prefetcher(vc, cache_size)
    hits = 0
    for s, cache in enumerate(best.caches):
        row = vc.counts[s]
        hits += sum(row[i] for i in cache.files)
    return hits, best


def simulate_fsp(spec: FsmSpec, prefetcher: Prefetcher, trace: RequestTrace) -> RunRecord:
    """Replay: prefetch f(s_t), observe x_t, score, then transition."""
    if len(prefetcher.caches) != spec.n_states:
        raise DomainError(f"prefetcher covers {len(prefetcher.caches)} states, FSM has {spec.n_states}")
    sets = [c.files for c in prefetcher.caches]
    table = spec.transitions
    s = spec.initial_state
    hits = bytearray()
    for x in trace.requests:
        hits.append(1 if x in sets[s] else 0)
        s = table[s][x]
    return RunRecord(policy_name="fsp", hits=bytes(hits))


# ---------------------------------------------------------------------------
# LRU and FIFO as explicit FSPs

def _tuple_fsp(n_files: int, cache_size: int, advance) -> tuple[FsmSpec, Prefetcher]:
    """Build an FSP whose states are ordered tuples of distinct cached files.

    Only states reachable from the start tuple (0, .., C-1) are materialized;
    the reachable set is closed under `advance`, so the table is total.
    """
    if not 1 <= cache_size <= n_files:
        raise DomainError(f"cache size {cache_size} outside [1, {n_files}]")
    bound = 1
    for i in range(cache_size):
        bound *= n_files - i
        if bound > _STATE_CAP:
            raise ScaleGuardError(
                f"tuple-state space exceeds {_STATE_CAP} states for N={n_files}, C={cache_size}")
    start = tuple(range(cache_size))
    ids = {start: 0}
    order = [start]
    rows = []
    i = 0
    while i < len(order):
        sigma = order[i]
        row = []
        for x in range(n_files):
            nxt = advance(sigma, x)
            nid = ids.get(nxt)
            if nid is None:
                nid = len(order)
                ids[nxt] = nid
                order.append(nxt)
            row.append(nid)
        rows.append(row)
        i += 1
    spec = FsmSpec(n_states=len(order), n_files=n_files, transitions=rows, initial_state=0)
    caches = [CacheSet(frozenset(sigma), n_files) for sigma in order]
    return spec, Prefetcher(caches=caches)


def _lru_advance(sigma: tuple, x: int) -> tuple:
    if x in sigma:
        i = sigma.index(x)
        return sigma[:i] + sigma[i + 1:] + (x,)
    return sigma[1:] + (x,)


def _fifo_advance(sigma: tuple, x: int) -> tuple:
    if x in sigma:
        return sigma
    return sigma[1:] + (x,)


def lru_fsp(n_files: int, cache_size: int) -> tuple[FsmSpec, Prefetcher]:
    """LRU as an FSP: states are the cached files ordered by last request,
    least-recent first; start state (0, .., C-1)."""
    return _tuple_fsp(n_files, cache_size, _lru_advance)


def fifo_fsp(n_files: int, cache_size: int) -> tuple[FsmSpec, Prefetcher]:
    """FIFO as an FSP: states are the cached files ordered by insertion,
    oldest first; a request for a cached file leaves the state unchanged."""
    return _tuple_fsp(n_files, cache_size, _fifo_advance)


class LruPolicy:
    """Direct LRU simulator, seeded with cache (0 .. C-1), 0 least recent."""

    def __init__(self, n_files: int, cache_size: int, name: str = "lru"):
        if not 1 <= cache_size <= n_files:
            raise DomainError(f"cache size {cache_size} outside [1, {n_files}]")
        self.name = name
        self.n_files = n_files
        self.order = list(range(cache_size))
        self.cached = set(self.order)

    def predict(self) -> CacheSet:
        return CacheSet(frozenset(self.cached), self.n_files)

    def step(self, request: int) -> int:
        if request in self.cached:
            self.order.remove(request)
            self.order.append(request)
            return 1
        evicted = self.order.pop(0)
        self.cached.discard(evicted)
        self.order.append(request)
        self.cached.add(request)
        return 0


class FifoPolicy:
    """Direct FIFO simulator, seeded with queue (0 .. C-1), 0 oldest."""

    def __init__(self, n_files: int, cache_size: int, name: str = "fifo"):
        if not 1 <= cache_size <= n_files:
            raise DomainError(f"cache size {cache_size} outside [1, {n_files}]")
        self.name = name
        self.n_files = n_files
        self.queue = list(range(cache_size))
        self.cached = set(self.queue)

    def predict(self) -> CacheSet:
        return CacheSet(frozenset(self.cached), self.n_files)

    def step(self, request: int) -> int:
        if request in self.cached:
            return 1
        evicted = self.queue.pop(0)
        self.cached.discard(evicted)
        self.queue.append(request)
        self.cached.add(request)
        return 0


# ---------------------------------------------------------------------------
# Serialization

def save_fsm(spec: FsmSpec, path, prefetcher: Prefetcher | None = None) -> None:
    """Write the text form: header "Q N C", Q transition rows, the start
    state, and optionally Q rows of prefetched file ids. All ids 0-based."""
    c = prefetcher.cache_size if prefetcher is not None else 0
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{spec.n_states} {spec.n_files} {c}\n")
        for row in spec.transitions:
            fh.write(" ".join(map(str, row)) + "\n")
        fh.write(f"{spec.initial_state}\n")
        if prefetcher is not None:
            for cache in prefetcher.caches:
                fh.write(" ".join(map(str, sorted(cache.files))) + "\n")


def load_fsm(path) -> tuple[FsmSpec, Prefetcher | None]:
    """Read the text form written by `save_fsm`."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise DataError(f"{path}: empty machine file")
    try:
        q, n, c = map(int, lines[0].split())
    except ValueError:
        raise DataError(f"{path}:1: header must be 'Q N C', got {lines[0]!r}") from None
    want = 1 + q + 1 + (q if c else 0)
    if len(lines) != want:
        raise DataError(f"{path}: expected {want} non-empty lines, found {len(lines)}")
    rows = []
    for s in range(q):
        lineno = 2 + s
        try:
            row = [int(v) for v in lines[1 + s].split()]
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad transition row") from None
        rows.append(row)
    try:
        s0 = int(lines[1 + q])
    except ValueError:
        raise DataError(f"{path}:{2 + q}: bad start state line {lines[1 + q]!r}") from None
    try:
        spec = FsmSpec(n_states=q, n_files=n, transitions=rows, initial_state=s0)
    except DomainError as exc:
        raise DataError(f"{path}: {exc}") from None
    prefetcher = None
    if c:
        caches = []
        for s in range(q):
            lineno = 2 + q + 1 + s
            try:
                ids = [int(v) for v in lines[2 + q + s].split()]
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad prefetch row") from None
            if len(set(ids)) != c:
                raise DataError(f"{path}:{lineno}: expected {c} distinct file ids")
            try:
                caches.append(CacheSet(frozenset(ids), n))
            except DomainError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
        prefetcher = Prefetcher(caches=caches)
    return spec, prefetcher


class FspPolicy:
    """Replay a fixed FSP as an online policy (used for oracle verification)."""

    def __init__(self, spec: FsmSpec, prefetcher: Prefetcher, name: str = "fsp"):
        if len(prefetcher.caches) != spec.n_states:
            raise DomainError("prefetcher and FSM disagree on the state count")
        self.name = name
        self.spec = spec
        self.sets = [c.files for c in prefetcher.caches]
        self.caches = prefetcher.caches
        self.state = spec.initial_state

    def predict(self) -> CacheSet:
        return self.caches[self.state]

    def step(self, request: int) -> int:
        hit = 1 if request in self.sets[self.state] else 0
        self.state = self.spec.transitions[self.state][request]
        return hit
