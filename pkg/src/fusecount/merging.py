"""Affinity graph construction and subcluster merging.

The affinity between two subclusters sums, over views, the product of
their reliability scores signed by label agreement: positive when both
carry the same mask label, negative when the labels differ, zero when
either label is absent.  Merging partitions the resulting complete
signed graph, by default with an asynchronous label propagation adapted
to signed weights: a node adopts the label whose holders' summed edge
weights are largest, so negative affinities actively repel merging.
Threshold variants (used by the ablation harness) merge by transitive
closure of positive-affinity pairs instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .partition import Subcluster
from .scoring import NO_LABEL, ScoreTable

MERGE_VARIANTS = ("baseline", "visibility", "mask", "reliability-threshold", "full-lpa")
LPA_MAX_PASSES = 100


@dataclass(frozen=True)
class AffinityGraph:
    """Complete signed weighted graph over one supercluster's subclusters."""

    weights: np.ndarray  # (m, m) float64, symmetric, zero diagonal

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be square")
        object.__setattr__(self, "weights", w)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class InstanceLabeling:
    """Total assignment of subcluster index to supercluster-local instance id
    (contiguous from 0)."""

    assignment: np.ndarray  # (m,) int32

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int32)
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def n_instances(self) -> int:
        return 0 if self.assignment.size == 0 else int(self.assignment.max()) + 1


@dataclass(frozen=True)
class CountReport:
    """Aggregated counting result across superclusters."""

    per_supercluster: tuple[int, ...]
    total: int
    point_instance: np.ndarray  # per target-cloud point; -1 for dropped noise

    def __post_init__(self):
        pi = np.asarray(self.point_instance, dtype=np.int32)
        pi.setflags(write=False)
        object.__setattr__(self, "point_instance", pi)


def _signs(table: ScoreTable, i: int, i2: int) -> np.ndarray:
    """Per-view sign: +1 same label, -1 different, 0 when either absent."""
    la = table.label[i]
    lb = table.label[i2]
    both = (la != NO_LABEL) & (lb != NO_LABEL)
    s = np.zeros(table.n_views)
    s[both & (la == lb)] = 1.0
    s[both & (la != lb)] = -1.0
    return s


def _pair_sum(weights: np.ndarray) -> float:
    """Sum per-view terms in ascending view order (cumulative sum), so the
    affinity is bit-for-bit symmetric and run-independent."""
    if weights.size == 0:
        return 0.0
    return float(weights.cumsum()[-1])


def affinity(table: ScoreTable, i: int, i2: int) -> float:
    """Signed reliability-product affinity between two subclusters."""
    if i == i2:
        raise ValueError("affinity is defined for distinct subclusters")
    return _pair_sum(table.r[i] * table.r[i2] * _signs(table, i, i2))


def build_affinity_graph(table: ScoreTable) -> AffinityGraph:
    """All unordered pairs filled via affinity; symmetric by construction."""
    m = table.n_subclusters
    w = np.zeros((m, m))
    for i in range(m):
        for i2 in range(i + 1, m):
            a = affinity(table, i, i2)
            w[i, i2] = a
            w[i2, i] = a
    return AffinityGraph(w)


def label_propagation(graph: AffinityGraph, seed: int,
                      initial: Optional[np.ndarray] = None) -> InstanceLabeling:
    """Asynchronous label propagation on a signed weighted graph.

    Every node starts with a unique label (or `initial`).  In a seeded
    random order, each node adopts the label maximizing the summed edge
    weight to its current holders; ties keep the current label when it is
    among the winners and otherwise take the smallest label id; a node
    whose best foreign option sums to <= 0 keeps its own label, so
    singletons survive all-negative neighborhoods.  Stops when a full
    pass changes nothing or after 100 passes; output ids are contiguous.
    """
    w = graph.weights
    m = graph.n_nodes
    if m == 0:
        return InstanceLabeling(np.empty(0, dtype=np.int32))
    labels = np.arange(m) if initial is None else np.asarray(initial, dtype=np.int64).copy()
    rng = np.random.default_rng(seed)

    for _ in range(LPA_MAX_PASSES):
        changed = False
        for u in rng.permutation(m):
            own = labels[u]
            sums = np.bincount(labels, weights=w[u], minlength=m)
            held = np.bincount(labels, minlength=m)
            held[own] -= 1  # candidacy of own label does not require other holders
            candidates = (held > 0) | (np.arange(m) == own)
            best = sums[candidates].max()
            winners = candidates & (sums == best)
            if winners[own]:
                continue
            target = int(np.flatnonzero(winners)[0])
            if sums[target] <= 0.0:
                continue
            labels[u] = target
            changed = True
        if not changed:
            break

    return InstanceLabeling(_contiguous(labels))


def _contiguous(labels: np.ndarray) -> np.ndarray:
    """Relabel to 0..k-1 in order of first appearance."""
    out = np.empty(len(labels), dtype=np.int32)
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        key = int(lab)
        if key not in mapping:
            mapping[key] = len(mapping)
        out[i] = mapping[key]
    return out


def _union_closure(m: int, pairs: list[tuple[int, int]]) -> np.ndarray:
    parent = list(range(m))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return _contiguous(np.array([find(i) for i in range(m)], dtype=np.int64))


def merge_strategy_ablation(table: ScoreTable, variant: str,
                            seed: int = 0) -> InstanceLabeling:
    """Merge one supercluster's subclusters under a selectable strategy.

    Threshold variants replace the per-view reliability products with
    plain signs (baseline), visibility products, or consistency products,
    then merge by transitive closure of pairs with positive affinity;
    full-lpa runs label propagation on the reliability affinity graph.
    """
    if variant not in MERGE_VARIANTS:
        raise ValueError(f"unknown merge variant {variant!r}; expected one of {MERGE_VARIANTS}")
    if variant == "full-lpa":
        return label_propagation(build_affinity_graph(table), seed)

    m = table.n_subclusters
    pairs = []
    for i in range(m):
        for i2 in range(i + 1, m):
            s = _signs(table, i, i2)
            if variant == "baseline":
                terms = s
            elif variant == "visibility":
                terms = table.v[i] * table.v[i2] * s
            elif variant == "mask":
                terms = table.c[i] * table.c[i2] * s
            else:  # reliability-threshold
                terms = table.r[i] * table.r[i2] * s
            if _pair_sum(terms) > 0.0:
                pairs.append((i, i2))
    return InstanceLabeling(_union_closure(m, pairs))


def count_instances(labelings: Sequence[tuple[Sequence[Subcluster], InstanceLabeling]],
                    n_points: int = 0) -> CountReport:
    """Aggregate per-supercluster labelings into a scene-level count.

    Each entry pairs one supercluster's subclusters with its labeling.
    The per-point assignment uses globally unique instance ids; points
    dropped as noise keep -1.
    """
    per_sc = []
    assignment = np.full(n_points, -1, dtype=np.int32)
    next_id = 0
    for subclusters, labeling in labelings:
        k = labeling.n_instances
        per_sc.append(k)
        for sub, inst in zip(subclusters, labeling.assignment):
            if n_points:
                assignment[sub.indices] = next_id + int(inst)
        next_id += k
    return CountReport(
        per_supercluster=tuple(per_sc),
        total=int(sum(per_sc)),
        point_instance=assignment,
    )


def write_affinity_graph(graph: AffinityGraph, path) -> None:
    """Debug dump: one edge per line as 'i i2 weight'."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i\ti2\taffinity\n")
        m = graph.n_nodes
        for i in range(m):
            for i2 in range(i + 1, m):
                fh.write(f"{i}\t{i2}\t{graph.weights[i, i2]:.9g}\n")
