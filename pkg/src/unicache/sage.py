"""Sampled-Hedge caching over C-subsets of a file library.

Maintaining Hedge over all (N choose C) subset-experts is infeasible
directly, but the hit reward is linear in the cache incidence vector, so
only the per-file marginal inclusion probabilities matter. With per-file
weights w(i) = exp(eta * R(i)), where R(i) counts past requests for file i,
the Hedge marginal of file i is

    p(i) = w(i) * e_{C-1}(w without i) / e_C(w),

with e_k the elementary symmetric polynomial (ESP) of order k: the sum over
all k-subsets of the product of their weights. A set of exactly C files
with those marginals is then drawn by Madow's systematic sampling, which
needs a single uniform draw.

ESPs are evaluated by the O(N*C) dynamic-programming recurrence
E[j][k] = E[j-1][k] + w_j * E[j-1][k-1]. All terms are nonnegative, so the
forward pass is numerically benign; the leave-one-out values use the
deletion recurrence f_k = e_k - w_i * f_{k-1}, which can cancel
catastrophically, guarded here by an error-amplification bound with a full
per-i recomputation as fallback. Weights are always normalized to
max(w) = 1 before evaluation (marginals depend only on count differences),
and a scaled mantissa/exponent evaluation covers the regimes where plain
doubles would underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .core import CacheSet, DomainError, NumericError, ScaleGuardError, SplitMix64

# Fallback once accumulated cancellation could push the absolute error of a
# marginal past ~1e-11 (C * eps * amplification); the fallback recomputation
# is a fresh all-positive DP and is exact to rounding.
_LOO_AMP_MAX = 1e5

# Plain-double ESP results below this are recomputed in scaled arithmetic.
_PLAIN_FLOOR = 1e-280

_MARGINAL_SUM_TOL = 1e-9


# ---------------------------------------------------------------------------
# ESP evaluation


def _check_esp_args(weights, order: int) -> None:
    if order < 0 or order > len(weights):
        raise DomainError(f"ESP order {order} outside [0, {len(weights)}]")
    for w in weights:
        if not w >= 0.0:
            raise DomainError(f"weights must be nonnegative finite, got {w}")


def _log_to_pair(log_weight: float) -> tuple[float, int]:
    """exp(log_weight) as (mantissa, base-2 exponent) without underflow."""
    x = log_weight * _LOG2E
    e2 = math.floor(x)
    return 2.0 ** (x - e2) * 0.5, int(e2) + 1


_LOG2E = 1.0 / math.log(2.0)


def _esp_scaled_pairs(pairs, order: int, skip: int = -1) -> tuple[list[float], list[int]]:
    """DP with per-column scaling: e_k = m[k] * 2**x[k], mantissas in [0.5, 1).

    Weights arrive as (mantissa, exponent) pairs, mantissa 0 meaning a true
    zero. `skip` optionally deletes one index, for exact leave-one-out.
    """
    frexp, ldexp = math.frexp, math.ldexp
    m = [0.0] * (order + 1)
    x = [0] * (order + 1)
    m[0] = 0.5
    x[0] = 1
    filled = 0
    for j, (wm, wx) in enumerate(pairs):
        if j == skip:
            continue
        filled += 1
        if wm == 0.0:
            continue
        top = order if order < filled else filled
        for k in range(top, 0, -1):
            if m[k - 1] == 0.0:
                continue
            tm = wm * m[k - 1]
            tx = wx + x[k - 1]
            if m[k] == 0.0:
                nm, ne = frexp(tm)
                m[k] = nm
                x[k] = tx + ne
                continue
            d = tx - x[k]
            if d >= 55:
                nm, ne = frexp(tm)
                m[k] = nm
                x[k] = tx + ne
            elif d > -55:
                nm, ne = frexp(m[k] + ldexp(tm, d))
                m[k] = nm
                x[k] += ne
            # else: new term below rounding, keep column as-is
    return m, x


def _esp_scaled(weights, order: int, skip: int = -1) -> tuple[list[float], list[int]]:
    pairs = [math.frexp(w) for w in weights]
    return _esp_scaled_pairs(pairs, order, skip=skip)


def _scaled_to_float(mant: float, ex: int) -> float:
    if mant == 0.0:
        return 0.0
    if ex > 1100:
        raise NumericError("ESP value overflows double precision despite rescaling")
    if ex < -1100:
        return 0.0
    return math.ldexp(mant, ex)


def esp_all(weights, order: int) -> list[float]:
    """Elementary symmetric polynomials e_0..e_order of the given weights."""
    _check_esp_args(weights, order)
    m, x = _esp_scaled(weights, order)
    return [_scaled_to_float(m[k], x[k]) for k in range(order + 1)]


def _esp_without(weights, skip: int, order: int) -> float:
    m, x = _esp_scaled(weights, order, skip=skip)
    return _scaled_to_float(m[order], x[order])


def esp_leave_one_out(weights, order: int) -> list[float]:
    """Per-index order-`order` ESPs of the weights with that index deleted.

    Uses the deletion recurrence f_k = e_k - w_i * f_{k-1} while the
    accumulated cancellation stays small, otherwise recomputes the deleted
    ESP from scratch for that index.
    """
    _check_esp_args(weights, order)
    n = len(weights)
    if order > max(0, n - 1):
        raise DomainError(f"leave-one-out order {order} needs at least {order + 1} weights")
    e = esp_all(weights, order)
    out = []
    for i, wi in enumerate(weights):
        f = 1.0
        amp = 1.0
        bad = False
        for k in range(1, order + 1):
            sub = wi * f
            t = e[k] - sub
            lost = e[k] + sub
            if t <= 0.0 or lost > t * _LOO_AMP_MAX:
                bad = True
                break
            step_amp = lost / t
            if step_amp > 1.0:
                amp *= step_amp
                if amp > _LOO_AMP_MAX:
                    bad = True
                    break
            f = t
        if bad:
            f = _esp_without(weights, i, order)
        out.append(f)
    return out


# ---------------------------------------------------------------------------
# Marginal inclusion probabilities


def _finish_marginals(p: list[float], cache_size: int) -> list[float] | None:
    s = math.fsum(p)
    if abs(s - cache_size) > _MARGINAL_SUM_TOL:
        return None
    scale = cache_size / s
    for i, v in enumerate(p):
        v *= scale
        p[i] = 1.0 if v > 1.0 else (0.0 if v < 0.0 else v)
    return p


def _marginals_fast(w: list[float], cache_size: int) -> list[float] | None:
    """Plain-double path; returns None when scaled arithmetic is needed."""
    n = len(w)
    order = cache_size
    e = [0.0] * (order + 1)
    e[0] = 1.0
    filled = 0
    for wj in w:
        filled += 1
        top = order if order < filled else filled
        for k in range(top, 0, -1):
            e[k] += wj * e[k - 1]
    ec = e[order]
    if not (ec > _PLAIN_FLOOR) or ec == math.inf:
        return None
    p = [0.0] * n
    for i in range(n):
        wi = w[i]
        f = 1.0
        amp = 1.0
        bad = False
        for k in range(1, order):
            sub = wi * f
            t = e[k] - sub
            if t <= 0.0:
                bad = True
                break
            step_amp = (e[k] + sub) / t
            if step_amp > 1.0:
                amp *= step_amp
                if amp > _LOO_AMP_MAX:
                    bad = True
                    break
            f = t
        if bad:
            g = [0.0] * order
            g[0] = 1.0
            filled = 0
            for j in range(n):
                if j == i:
                    continue
                wj = w[j]
                filled += 1
                top = order - 1 if order - 1 < filled else filled
                for k in range(top, 0, -1):
                    g[k] += wj * g[k - 1]
            f = g[order - 1]
        p[i] = wi * f / ec
    return _finish_marginals(p, cache_size)


def _marginals_scaled(pairs, cache_size: int) -> list[float]:
    """Exact fallback: every leave-one-out ESP recomputed in scaled form."""
    n = len(pairs)
    order = cache_size
    m, x = _esp_scaled_pairs(pairs, order)
    em, ex = m[order], x[order]
    if em == 0.0:
        raise NumericError("all order-C weight products vanished; marginals undefined")
    ldexp = math.ldexp
    p = [0.0] * n
    for i in range(n):
        wm, wx = pairs[i]
        if wm == 0.0:
            continue
        fm, fx = _esp_scaled_pairs(pairs, order - 1, skip=i)
        num_m, num_x = fm[order - 1], fx[order - 1]
        if num_m == 0.0:
            continue
        r = wm * num_m / em
        d = wx + num_x - ex
        if d < -1100:
            continue
        p[i] = ldexp(r, d)
    out = _finish_marginals(p, cache_size)
    if out is None:
        raise NumericError("marginals failed to normalize to the cache size")
    return out


def marginals_from_weights(weights, cache_size: int) -> list[float]:
    """Hedge marginals p(i) = w(i) * e_{C-1}(w_{-i}) / e_C(w) for given weights."""
    w = [float(v) for v in weights]
    _check_esp_args(w, cache_size)
    if cache_size < 1 or cache_size > len(w):
        raise DomainError(f"cache size {cache_size} outside [1, {len(w)}]")
    wmax = max(w)
    if wmax <= 0.0:
        raise DomainError("at least one weight must be positive")
    if wmax != 1.0:
        w = [v / wmax for v in w]
    p = _marginals_fast(w, cache_size)
    if p is None:
        p = _marginals_scaled([math.frexp(v) for v in w], cache_size)
    return p


# ---------------------------------------------------------------------------
# Madow's systematic sampling


def madow_sample(p, u: float) -> list[int]:
    """Sample exactly C = sum(p) distinct indices with inclusion probabilities p.

    With cumulative sums P_0 = 0, P_j = P_{j-1} + p_j, index j is selected
    iff some offset i in {0..C-1} has P_{j-1} <= u + i < P_j. One uniform
    u in [0, 1) drives the whole sample.
    """
    if not 0.0 <= u < 1.0:
        raise DomainError(f"uniform draw {u} outside [0, 1)")
    n = len(p)
    cum = [0.0] * (n + 1)
    acc = 0.0
    for j, pj in enumerate(p):
        if pj < -1e-12 or pj > 1.0 + 1e-9:
            raise DomainError(f"inclusion probability p[{j}]={pj} outside [0, 1]")
        acc += pj if pj < 1.0 else 1.0
        cum[j + 1] = acc
    c = round(acc)
    if c < 1 or abs(acc - c) > _MARGINAL_SUM_TOL:
        raise DomainError(f"inclusion probabilities sum to {acc}, not a positive integer")
    selected = []
    j = 0
    last = n - 1
    for i in range(c):
        if j > last:
            raise NumericError("systematic sampling walked past the last element")
        target = u + i
        while j < last and cum[j + 1] <= target:
            j += 1
        selected.append(j)
        j += 1  # the next offset always lands strictly past this element
    return selected


# ---------------------------------------------------------------------------
# Policy state


@dataclass(frozen=True)
class EtaConfig:
    """Learning-rate schedule for a Hedge/SAGE instance.

    mode "fixed": eta stays at its initial value. If `eta` is not given, the
    initial value is sqrt(2 * ln(N e / C) / max(1, C * horizon)) using the
    horizon hint (default horizon 1, which is also the doubling start).

    mode "doubling": eta starts at the same initial value and shrinks by a
    factor sqrt(2) each time the instance's own cumulative miss count
    reaches a doubling threshold, so eta tracks ~ eta0 / sqrt(m) after m
    misses, the rate a loss-adaptive tuning would follow. The first
    threshold is ceil(C ln(N e / C)): misses below the additive term of the
    loss-dependent regret cap are free, so they should not slow learning.
    Counts are kept across shrinks. Both schedules are pragmatic stand-ins
    for a fully adaptive tuning.
    """

    mode: str = "doubling"
    eta: float | None = None
    horizon: int | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "doubling"):
            raise DomainError(f"eta mode must be 'fixed' or 'doubling', got {self.mode!r}")
        if self.eta is not None and not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        if self.horizon is not None and self.horizon < 1:
            raise DomainError(f"horizon hint must be >= 1, got {self.horizon}")

    def initial_eta(self, n_files: int, cache_size: int) -> float:
        if self.eta is not None:
            return self.eta
        rounds = self.horizon if self.horizon is not None else 1
        span = math.log(n_files * math.e / cache_size)
        return math.sqrt(2.0 * span / max(1, cache_size * rounds))


class SageState:
    """Sufficient statistic of one Hedge/SAGE instance: request counts + eta."""

    __slots__ = ("n_files", "cache_size", "counts", "count_max", "eta", "eta_mode",
                 "misses", "_miss_mark")

    def __init__(self, n_files: int, cache_size: int, eta: float, eta_mode: str = "fixed"):
        if not 1 <= cache_size <= n_files:
            raise DomainError(f"cache size {cache_size} outside [1, {n_files}]")
        if not eta > 0:
            raise DomainError(f"eta must be positive, got {eta}")
        if eta_mode not in ("fixed", "doubling"):
            raise DomainError(f"eta mode must be 'fixed' or 'doubling', got {eta_mode!r}")
        self.n_files = n_files
        self.cache_size = cache_size
        self.counts = [0] * n_files
        self.count_max = 0
        self.eta = eta
        self.eta_mode = eta_mode
        self.misses = 0
        self._miss_mark = max(1, math.ceil(cache_size * math.log(n_files * math.e / cache_size)))

    @classmethod
    def fresh(cls, n_files: int, cache_size: int, config: EtaConfig | None = None) -> "SageState":
        cfg = config if config is not None else EtaConfig()
        return cls(n_files, cache_size, cfg.initial_eta(n_files, cache_size), cfg.mode)

    def weights(self) -> list[float]:
        """exp(eta * (R(i) - max R)); the shift keeps every weight in (0, 1]."""
        eta = self.eta
        cmax = self.count_max
        exp = math.exp
        return [exp(eta * (c - cmax)) for c in self.counts]

    def marginals(self) -> list[float]:
        p = _marginals_fast(self.weights(), self.cache_size)
        if p is None:
            # Rebuild the weights from the log domain so that counts far from
            # the maximum survive as mantissa/exponent pairs instead of
            # underflowing inside exp().
            eta = self.eta
            cmax = self.count_max
            pairs = [_log_to_pair(eta * (c - cmax)) for c in self.counts]
            p = _marginals_scaled(pairs, self.cache_size)
        return p

    def update(self, request: int) -> None:
        c = self.counts[request] + 1
        self.counts[request] = c
        if c > self.count_max:
            self.count_max = c

    def note_miss(self) -> None:
        self.misses += 1
        if self.eta_mode == "doubling" and self.misses >= self._miss_mark:
            self.eta *= 0.7071067811865476  # 1/sqrt(2) per miss doubling
            self._miss_mark *= 2


def marginals(state: SageState) -> list[float]:
    """Marginal inclusion probabilities of the Hedge distribution at `state`."""
    return state.marginals()


def sage_predict(state: SageState, rng: SplitMix64) -> CacheSet:
    """Draw a cache set whose inclusion probabilities are exactly `marginals(state)`."""
    ids = madow_sample(state.marginals(), rng.next_float())
    return CacheSet(frozenset(ids), state.n_files)


def sage_update(state: SageState, request: int) -> None:
    """Record one request: counts[request] += 1."""
    if not 0 <= request < state.n_files:
        raise DomainError(f"request {request} outside [0, {state.n_files})")
    state.update(request)


def hedge_bruteforce_marginals(counts, eta: float, n_files: int, cache_size: int) -> list[float]:
    """Test oracle: enumerate all (N choose C) subset-experts explicitly.

    Each subset S carries mass proportional to exp(eta * sum of counts in S);
    the marginal of file i is the mass fraction of subsets containing i.
    Only usable at small scale.
    """
    if len(counts) != n_files:
        raise DomainError(f"expected {n_files} counts, got {len(counts)}")
    if not 1 <= cache_size <= n_files:
        raise DomainError(f"cache size {cache_size} outside [1, {n_files}]")
    if math.comb(n_files, cache_size) > 10**6:
        raise ScaleGuardError("brute-force expert enumeration capped at 1e6 subsets")
    best = sum(sorted(counts, reverse=True)[:cache_size])
    total = 0.0
    acc = [0.0] * n_files
    for subset in combinations(range(n_files), cache_size):
        mass = math.exp(eta * (sum(counts[i] for i in subset) - best))
        total += mass
        for i in subset:
            acc[i] += mass
    return [a / total for a in acc]


class SagePolicy:
    """Single-instance SAGE: predict by Madow-sampling the Hedge marginals,
    then record the revealed request."""

    def __init__(self, n_files: int, cache_size: int,
                 eta_config: EtaConfig | None = None, seed: int = 0, name: str = "sage"):
        self.name = name
        self.state = SageState.fresh(n_files, cache_size, eta_config)
        self.rng = SplitMix64(seed)

    def predict(self) -> CacheSet:
        return sage_predict(self.state, self.rng)

    def update(self, request: int) -> None:
        sage_update(self.state, request)

    def step(self, request: int) -> int:
        st = self.state
        sel = madow_sample(st.marginals(), self.rng.next_float())
        hit = 1 if request in sel else 0
        st.update(request)
        if not hit:
            st.note_miss()
        return hit
