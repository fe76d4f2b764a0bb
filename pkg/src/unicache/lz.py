"""Universal caching via LZ-78 incremental parsing.

The request stream is parsed into phrases, each the shortest string not
previously parsed. The parse tree doubles as a state machine: every request
is consumed at the current node, which predicts it with its own SAGE
instance; following an existing child continues the phrase, while a missing
child completes the phrase (creating that child) and resets the walk to the
root. Children are created lazily on first use, so the node count equals
root + completed phrases; per-node statistics and phrase boundaries are
unaffected by the laziness, and a fully N-ary materialization would hold
(internal nodes) * N + 1 nodes instead.

The partial phrase in flight when the trace ends stays in the per-node
statistics; no special end-of-stream handling.
"""

from __future__ import annotations

from collections import Counter
from heapq import nlargest

from .core import DomainError, RequestTrace, RunRecord, SplitMix64, replay
from .sage import EtaConfig, SageState, madow_sample, sage_predict


class LzNode:
    __slots__ = ("parent", "depth", "symbol", "children", "visits")

    def __init__(self, parent: int, depth: int, symbol: int):
        self.parent = parent
        self.depth = depth
        self.symbol = symbol  # edge label from the parent; -1 at the root
        self.children: dict[int, int] = {}
        self.visits = 0  # requests consumed while this node was current


class LzTree:
    """Parse-tree structure: node records, current-node pointer, phrase count."""

    def __init__(self, n_files: int):
        if n_files < 1:
            raise DomainError(f"library size must be >= 1, got {n_files}")
        self.n_files = n_files
        self.nodes: list[LzNode] = [LzNode(parent=-1, depth=0, symbol=-1)]
        self.current = 0
        self.phrase_count = 0

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def consumed(self) -> int:
        return sum(node.visits for node in self.nodes)


def lz_advance(tree: LzTree, request: int) -> int:
    """Record one request at the current node and walk the parse.

    Returns the id of the node that consumed the request. If the current
    node lacks a child for the request, the phrase is complete: the child is
    created and the walk resets to the root.
    """
    if not 0 <= request < tree.n_files:
        raise DomainError(f"request {request} outside [0, {tree.n_files})")
    cur = tree.current
    node = tree.nodes[cur]
    node.visits += 1
    child = node.children.get(request)
    if child is None:
        child_id = len(tree.nodes)
        tree.nodes.append(LzNode(parent=cur, depth=node.depth + 1, symbol=request))
        node.children[request] = child_id
        tree.phrase_count += 1
        tree.current = 0
    else:
        tree.current = child
    return cur


def parse_phrases(trace: RequestTrace) -> tuple[list[tuple[int, ...]], LzTree]:
    """Parse a trace, returning the completed phrases in order and the tree."""
    tree = LzTree(trace.n_files)
    phrases = []
    phrase: list[int] = []
    for x in trace.requests:
        phrase.append(x)
        at_new_child = tree.nodes[tree.current].children.get(x) is None
        lz_advance(tree, x)
        if at_new_child:
            phrases.append(tuple(phrase))
            phrase = []
    return phrases, tree


def depth_split_counts(tree: LzTree, k: int) -> tuple[int, int]:
    """Partition consumed requests by the depth of the consuming node:
    (requests at depth < k, requests at depth >= k)."""
    if k < 0:
        raise DomainError(f"depth threshold must be >= 0, got {k}")
    shallow = sum(node.visits for node in tree.nodes if node.depth < k)
    return shallow, tree.consumed() - shallow


def dump_tree(tree: LzTree, fh) -> None:
    """Diagnostic dump: one line "node_id parent_id depth symbol visit_count"."""
    for nid, node in enumerate(tree.nodes):
        fh.write(f"{nid} {node.parent} {node.depth} {node.symbol} {node.visits}\n")


class LzSagePolicy:
    """SAGE at every parse-tree node; the node consuming a request predicts it."""

    def __init__(self, n_files: int, cache_size: int,
                 eta_config: EtaConfig | None = None, seed: int = 0, name: str = "lz"):
        self.name = name
        self.n_files = n_files
        self.cache_size = cache_size
        self.eta_config = eta_config if eta_config is not None else EtaConfig()
        self.rng = SplitMix64(seed)
        self.tree = LzTree(n_files)
        self.states: list[SageState] = [SageState.fresh(n_files, cache_size, self.eta_config)]

    def _current_state(self) -> SageState:
        return self.states[self.tree.current]

    def predict(self):
        return sage_predict(self._current_state(), self.rng)

    def step(self, request: int) -> int:
        st = self.states[self.tree.current]
        sel = madow_sample(st.marginals(), self.rng.next_float())
        hit = 1 if request in sel else 0
        st.update(request)
        if not hit:
            st.note_miss()
        lz_advance(self.tree, request)
        if len(self.states) < len(self.tree.nodes):
            self.states.append(SageState.fresh(self.n_files, self.cache_size, self.eta_config))
        return hit


def run_lz_policy(trace: RequestTrace, cache_size: int,
                  eta_config: EtaConfig | None = None, seed: int = 0
                  ) -> tuple[RunRecord, LzTree]:
    """Run the LZ policy over a trace; returns the run record and final tree."""
    policy = LzSagePolicy(trace.n_files, cache_size, eta_config, seed)
    record = replay(policy, trace)
    return record, policy.tree


def offline_lz_oracle(trace: RequestTrace, cache_size: int) -> tuple[int, int]:
    """Best-in-hindsight prefetching aligned with the same parse-tree growth.

    Replays the parse, then scores each node by the total count of its C
    most-consumed files. Returns (miss count, hit count); the two sum to T.
    """
    if not 1 <= cache_size <= trace.n_files:
        raise DomainError(f"cache size {cache_size} outside [1, {trace.n_files}]")
    tree = LzTree(trace.n_files)
    counters: list[Counter] = [Counter()]
    for x in trace.requests:
        counters[tree.current][x] += 1
        lz_advance(tree, x)
        if len(counters) < len(tree.nodes):
            counters.append(Counter())
    hits = 0
    for counter in counters:
        if len(counter) <= cache_size:
            hits += sum(counter.values())
        else:
            hits += sum(nlargest(cache_size, counter.values()))
    return len(trace) - hits, hits
