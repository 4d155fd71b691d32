"""Optimal truthful classification via minimum cut.

Reduces the strategic-withholding problem over the observed vectors to an
s-t min-cut: source arcs carry negative mass, sink arcs positive mass, and
infinite arcs (x, x') for every reportable pair force monotone accept sets
(a reachable accepted report drags its origin into the accept set). The sink
side of the min cut is the loss-optimal truthful accept set.

brute_force_optimal is the independent oracle: it enumerates every monotone
labeling directly, with no flow machinery shared.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .empirical import EmpiricalDistribution, from_dataset
from .features import (
    ENUMERATION_LIMIT,
    Dataset,
    FeatureVector,
    can_report,
    iter_reachable,
    present_indices,
)

BRUTE_FORCE_MAX_VECTORS = 16


# ---------------------------------------------------------------------------
# Independent oracle: exhaustive scan of monotone accept sets


def brute_force_optimal(dist: EmpiricalDistribution) -> tuple[Fraction, frozenset[FeatureVector]]:
    """Exact optimum over all monotone accept sets, by exhaustive enumeration.

    A set f is monotone when any vector that can report into f is itself in f.
    Loss of f = (neg mass inside f + pos mass outside f) / total. Returns the
    exact rational loss and the lowest-bitmask optimal set (vectors numbered in
    distribution order).

    Only feasible for small supports; raises beyond 16 distinct vectors.
    """
    vectors = dist.support()
    n = len(vectors)
    if n > BRUTE_FORCE_MAX_VECTORS:
        raise ValueError(f"{n} distinct vectors exceed brute-force limit {BRUTE_FORCE_MAX_VECTORS}")
    pos = np.array([dist.pos(v) for v in vectors], dtype=np.int64)
    neg = np.array([dist.neg(v) for v in vectors], dtype=np.int64)
    # pred[j] = bitmask of vectors that can report to vector j (j accepted
    # forces all of them accepted)
    pred = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and can_report(vectors[i], vectors[j]):
                pred[j] |= 1 << i
    masks = np.arange(1 << n, dtype=np.int64)
    valid = np.ones(masks.shape, dtype=bool)
    loss = np.full(masks.shape, int(pos.sum()), dtype=np.int64)
    for j in range(n):
        accepted_j = (masks >> j) & 1 == 1
        if pred[j]:
            closed = (masks & pred[j]) == pred[j]
            valid &= ~accepted_j | closed
        loss += np.where(accepted_j, neg[j] - pos[j], 0)
    loss[~valid] = np.iinfo(np.int64).max
    best_mask = int(np.argmin(loss))  # first minimum = lowest bitmask
    best = int(loss[best_mask])
    accept = frozenset(vectors[j] for j in range(n) if best_mask >> j & 1)
    return Fraction(best, dist.total), accept


# ---------------------------------------------------------------------------
# Flow network construction and exact max-flow


@dataclass(frozen=True)
class FlowNetwork:
    """Capacitated digraph for the withholding reduction.

    Node 0 is the source, node len(vectors)+1 the sink, and node i+1 carries
    vectors[i]. Arcs are (from, to, capacity); reporting arcs use the finite
    sentinel `infinite` (total finite capacity + 1), which no feasible flow can
    saturate.
    """

    vectors: tuple[FeatureVector, ...]
    arcs: tuple[tuple[int, int, int], ...]
    infinite: int

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return len(self.vectors) + 1

    @property
    def n_nodes(self) -> int:
        return len(self.vectors) + 2


@dataclass(frozen=True)
class CutResult:
    flow_value: int
    s_side: frozenset[int]
    t_side: frozenset[int]


def build_graph(dist: EmpiricalDistribution) -> FlowNetwork:
    """Source->x arcs carry neg counts, x->sink pos counts, reportable pairs infinity."""
    vectors = tuple(dist.support())
    n = len(vectors)
    finite_total = sum(p + q for p, q in dist.entries.values())
    inf = finite_total + 1
    arcs: list[tuple[int, int, int]] = []
    s, t = 0, n + 1
    for i, v in enumerate(vectors):
        arcs.append((s, i + 1, dist.neg(v)))
        arcs.append((i + 1, t, dist.pos(v)))
    for i in range(n):
        for j in range(n):
            if i != j and can_report(vectors[i], vectors[j]):
                arcs.append((i + 1, j + 1, inf))
    return FlowNetwork(vectors, tuple(arcs), inf)


def max_flow_min_cut(net: FlowNetwork) -> CutResult:
    """Exact integer max flow (Dinic) with the canonical source-minimal cut.

    The s side is the set of nodes reachable from the source in the final
    residual network; that set is identical across all maximum flows, so the
    returned cut does not depend on arc order.
    """
    n = net.n_nodes
    s, t = net.source, net.sink
    head: list[list[int]] = [[] for _ in range(n)]
    to: list[int] = []
    cap: list[int] = []

    def add(u: int, v: int, c: int) -> None:
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0)

    for u, v, c in net.arcs:
        add(u, v, c)

    flow = 0
    level = [0] * n
    it = [0] * n
    while True:
        # BFS level graph over residual arcs
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in head[u]:
                v = to[e]
                if cap[e] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        if level[t] < 0:
            break
        it = [0] * n

        def dfs(u: int, limit: int) -> int:
            if u == t:
                return limit
            while it[u] < len(head[u]):
                e = head[u][it[u]]
                v = to[e]
                if cap[e] > 0 and level[v] == level[u] + 1:
                    pushed = dfs(v, min(limit, cap[e]))
                    if pushed:
                        cap[e] -= pushed
                        cap[e ^ 1] += pushed
                        return pushed
                it[u] += 1
            return 0

        while True:
            pushed = dfs(s, net.infinite)
            if not pushed:
                break
            flow += pushed

    reach = [False] * n
    reach[s] = True
    q = deque([s])
    while q:
        u = q.popleft()
        for e in head[u]:
            v = to[e]
            if cap[e] > 0 and not reach[v]:
                reach[v] = True
                q.append(v)
    s_side = frozenset(i for i in range(n) if reach[i])
    t_side = frozenset(i for i in range(n) if not reach[i])
    return CutResult(flow, s_side, t_side)


def cut_capacity(net: FlowNetwork, s_side: frozenset[int]) -> int:
    """Sum of finite capacities crossing s side -> t side; infinite crossing is an error."""
    total = 0
    for u, v, c in net.arcs:
        if u in s_side and v not in s_side:
            if c >= net.infinite:
                raise ValueError(f"infinite arc ({u}, {v}) crosses the cut")
            total += c
    return total


# ---------------------------------------------------------------------------
# The classifier


@dataclass(frozen=True)
class MincutClassifier:
    """Truthful accept set extracted from the sink side of the min cut."""

    accepted: frozenset[FeatureVector]
    training_nodes: frozenset[FeatureVector]
    flow_value: int
    total: int

    truthful = True

    @property
    def loss(self) -> Fraction:
        """Optimal strategic training loss (flow value over total mass)."""
        return Fraction(self.flow_value, self.total)

    def predict(self, x: FeatureVector) -> int:
        return predict(self, x)


def train_mincut(train: Dataset | EmpiricalDistribution) -> MincutClassifier:
    """Fit the loss-optimal truthful classifier on observed vectors."""
    dist = train if isinstance(train, EmpiricalDistribution) else from_dataset(train)
    net = build_graph(dist)
    cut = max_flow_min_cut(net)
    accepted = frozenset(v for i, v in enumerate(net.vectors) if i + 1 in cut.t_side)
    return MincutClassifier(
        accepted=accepted,
        training_nodes=frozenset(net.vectors),
        flow_value=cut.flow_value,
        total=dist.total,
    )


def predict(model: MincutClassifier, x: FeatureVector, limit: int = ENUMERATION_LIMIT) -> int:
    """Accept iff some report reachable from x is in the accept set.

    This extends the trained rule to unseen vectors as their best-response
    outcome, which is truthful by construction; vectors reaching no accepted
    report are rejected.
    """
    if x in model.accepted:
        return 1
    if len(present_indices(x)) <= limit:
        return 1 if any(r in model.accepted for r in iter_reachable(x, limit)) else 0
    return 1 if any(can_report(x, a) for a in model.accepted) else 0
