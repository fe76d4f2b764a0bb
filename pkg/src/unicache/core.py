"""Shared domain types: request traces, cache sets, hit accounting, seeded RNG.

File identifiers are 0-based everywhere inside the library. Trace files on
disk may declare 1-based ids via their header and are shifted on load.

Reproducibility contract
------------------------
Every randomized policy owns exactly one `SplitMix64` generator seeded at
construction, and consumes draws in a fixed, documented order: one uniform
per cache sample (see `sage.madow_sample`), nothing else. The trace
generator's draw schedule is documented in `datagen`. SplitMix64 is a
well-known, portable 64-bit generator, so seeds transfer across
implementations; the algorithm is restated in full in `SplitMix64`.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class UniCacheError(Exception):
    """Base class for all library errors."""


class DomainError(UniCacheError):
    """An argument is outside its documented domain (bad id, size, state)."""


class EmptyTraceError(DomainError):
    """An operation that needs at least one round was given an empty run."""


class ScaleGuardError(DomainError):
    """An exhaustive or state-enumerating operation would exceed its size cap."""


class NumericError(UniCacheError):
    """A floating-point computation left its supported range."""


class DataError(UniCacheError):
    """A trace or machine file failed to load; message includes the location."""


class ConfigError(UniCacheError):
    """An experiment configuration is malformed; message names the key."""


_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 pseudorandom generator (Steele, Lea & Flood's mixer).

    State update and output, all in 64-bit wrapping arithmetic:

        state += 0x9E3779B97F4A7C15
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        output = z ^ (z >> 31)

    `next_float` takes the top 53 bits of an output word, giving a uniform
    draw in [0, 1). `next_below(n)` reduces an output word modulo n; the
    modulo bias is below n / 2**64 and is accepted for the sake of a
    one-line cross-language definition.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        if n <= 0:
            raise DomainError(f"next_below needs n >= 1, got {n}")
        return self.next_u64() % n


@dataclass
class RequestTrace:
    """An ordered sequence of file requests over a library of `n_files` files."""

    n_files: int
    requests: list[int]

    def __post_init__(self):
        if self.n_files < 1:
            raise DomainError(f"library size must be >= 1, got {self.n_files}")
        n = self.n_files
        for t, x in enumerate(self.requests):
            if not 0 <= x < n:
                raise DomainError(f"request {x} at round {t} outside [0, {n})")

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)


@dataclass(frozen=True)
class CacheSet:
    """A set of distinct file ids held in cache, with its library size."""

    files: frozenset[int]
    n_files: int

    def __post_init__(self):
        for f in self.files:
            if not 0 <= f < self.n_files:
                raise DomainError(f"cached file {f} outside [0, {self.n_files})")

    def __contains__(self, file_id: int) -> bool:
        return file_id in self.files

    @property
    def size(self) -> int:
        return len(self.files)


@dataclass
class RunRecord:
    """Per-round hit sequence of one policy run plus its cumulative total."""

    policy_name: str
    hits: bytes
    T: int = field(default=-1)
    cumulative_hits: int = field(default=-1)

    def __post_init__(self):
        if self.T < 0:
            self.T = len(self.hits)
        if self.cumulative_hits < 0:
            self.cumulative_hits = sum(self.hits)
        if self.T != len(self.hits):
            raise DomainError(f"declared {self.T} rounds but {len(self.hits)} hit entries")
        if self.cumulative_hits != sum(self.hits):
            raise DomainError("cumulative_hits disagrees with the hit sequence")
        if any(h not in (0, 1) for h in self.hits):
            raise DomainError("hit entries must be 0 or 1")


def score_round(cache: CacheSet, request: int) -> int:
    """Unit reward iff the requested file is in the cache."""
    if not 0 <= request < cache.n_files:
        raise DomainError(f"request {request} outside [0, {cache.n_files})")
    return 1 if request in cache.files else 0


def hit_rate(record: RunRecord) -> float:
    """Fraction of rounds that were hits."""
    if record.T == 0:
        raise EmptyTraceError("hit rate undefined for an empty run")
    return record.cumulative_hits / record.T


def regret(benchmark_hits: int, policy_hits: int) -> int:
    """Signed hit deficit of a policy against a benchmark (may be negative)."""
    return benchmark_hits - policy_hits


def replay(policy, trace: RequestTrace) -> RunRecord:
    """Drive a policy through a trace, one `step(request) -> 0|1` per round.

    Policies expose `name` and `step`. `step` predicts a cache, scores it
    against the incoming request, and performs all internal updates.
    """
    step = policy.step
    hits = bytearray()
    for x in trace.requests:
        hits.append(step(x))
    return RunRecord(policy_name=policy.name, hits=bytes(hits))


def load_trace(path, n_files: int | None = None) -> RequestTrace:
    """Read a trace file: one integer file id per line.

    An optional first line ``# N=<int> BASE=<0|1>`` declares the library
    size and whether ids are 1-based (they are shifted down on load).
    Without a header, ids are taken as 0-based and the library size is
    `n_files` if given, else ``max(id) + 1``. Any malformed line is a hard
    error naming the line number.
    """
    requests: list[int] = []
    declared_n = None
    base = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.startswith("#"):
                declared_n, base = _parse_trace_header(line, path)
                continue
            try:
                requests.append(int(line))
            except ValueError:
                raise DataError(f"{path}:{lineno}: not an integer file id: {line!r}") from None
    if base == 1:
        requests = [x - 1 for x in requests]
    n = declared_n if declared_n is not None else n_files
    if n is None:
        if not requests:
            raise DataError(f"{path}: empty trace with no library size declared")
        n = max(requests) + 1
    try:
        return RequestTrace(n_files=n, requests=requests)
    except DomainError as exc:
        raise DataError(f"{path}: {exc}") from None


def _parse_trace_header(line: str, path) -> tuple[int, int]:
    fields = line.lstrip("#").split()
    n = None
    base = 0
    for f in fields:
        key, _, value = f.partition("=")
        if key == "N":
            try:
                n = int(value)
            except ValueError:
                raise DataError(f"{path}:1: N must be an integer, got {value!r}") from None
        elif key == "BASE":
            if value not in ("0", "1"):
                raise DataError(f"{path}:1: BASE must be 0 or 1, got {value!r}")
            base = int(value)
        else:
            raise DataError(f"{path}:1: unknown header field {key!r}")
    if n is None or n < 1:
        raise DataError(f"{path}:1: header must declare N=<positive int>")
    return n, base


def save_trace(trace: RequestTrace, path, base: int = 0) -> None:
    """Write a trace file with an explicit ``# N=... BASE=...`` header."""
    if base not in (0, 1):
        raise DomainError(f"base must be 0 or 1, got {base}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# N={trace.n_files} BASE={base}\n")
        for x in trace.requests:
            fh.write(f"{x + base}\n")
