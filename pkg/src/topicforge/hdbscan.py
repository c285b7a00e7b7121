"""Density-based clustering: mutual-reachability MST, condensed cluster
tree, and stability-based flat cluster extraction with noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS_DIST = 1e-12  # floor for 1/distance lambdas


class HdbscanError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray          # -1 = noise; clusters 0.. by decreasing size
    probabilities: np.ndarray   # membership strength, 0 for noise
    n_clusters: int


@dataclass(frozen=True)
class CondensedTree:
    """Rows (parent, child, lambda = 1/distance at split, child_size).
    Children < n_points are individual points; cluster ids start at
    n_points with the root cluster = n_points."""

    parent: np.ndarray
    child: np.ndarray
    lambda_val: np.ndarray
    child_size: np.ndarray
    n_points: int

    def cluster_ids(self) -> np.ndarray:
        ids = np.unique(np.concatenate([self.parent, self.child[self.child >= self.n_points]]))
        return ids.astype(np.int64)


def core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Euclidean distance to each point's min_samples-th nearest neighbor
    (self excluded)."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if min_samples >= n:
        raise HdbscanError(f"min_samples={min_samples} must be < n={n}")
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    dist = np.sqrt(np.maximum(d2, 0.0))
    return np.sort(dist, axis=1)[:, min_samples]


def mutual_reachability_mst(
    points: np.ndarray, core: np.ndarray
) -> list[tuple[int, int, float]]:
    """Minimum spanning tree under d_mreach(a, b) = max(core_a, core_b,
    d(a, b)). Prim's algorithm; ties resolved toward the lowest index."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 2:
        return []
    dist = np.sqrt(np.maximum(
        np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1), 0.0))
    mreach = np.maximum(dist, np.maximum(core[:, None], core[None, :]))

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = mreach[0].copy()
    best_from = np.zeros(n, dtype=np.int64)
    best[0] = np.inf
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        j = int(np.argmin(best))  # argmin returns the lowest tied index
        edges.append((int(best_from[j]), j, float(best[j])))
        in_tree[j] = True
        best[j] = np.inf
        improve = mreach[j] < best
        improve &= ~in_tree
        best[improve] = mreach[j][improve]
        best_from[improve] = j
    return edges


def _single_linkage(mst: list[tuple[int, int, float]], n: int):
    """Union-find dendrogram from sorted MST edges. Returns per-merge-node
    (left, right, distance); merge nodes are numbered n .. 2n-2."""
    order = sorted(range(len(mst)), key=lambda i: (mst[i][2], mst[i][0], mst[i][1]))
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    height = np.empty(n - 1)
    for merge, ei in enumerate(order):
        a, b, w = mst[ei]
        ra, rb = find(a), find(b)
        node = n + merge
        parent[ra] = node
        parent[rb] = node
        left[merge], right[merge], height[merge] = ra, rb, w
    return left, right, height


def condensed_tree(
    mst: list[tuple[int, int, float]], min_cluster_size: int, n_points: int | None = None
) -> CondensedTree:
    """Condense the single-linkage dendrogram: a split survives as two new
    clusters only when both sides reach min_cluster_size; smaller sides
    fall out of the parent as individual points at that split's lambda."""
    if min_cluster_size < 2:
        raise HdbscanError("min_cluster_size must be >= 2")
    n = n_points if n_points is not None else len(mst) + 1
    rows_parent: list[int] = []
    rows_child: list[int] = []
    rows_lambda: list[float] = []
    rows_size: list[int] = []

    if n < 2:
        return CondensedTree(*(np.array([]) for _ in range(4)), n_points=n)

    left, right, height = _single_linkage(mst, n)

    def leaves(node: int) -> list[int]:
        out, stack = [], [node]
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                stack.append(left[x - n])
                stack.append(right[x - n])
        return out

    sizes = np.ones(2 * n - 1, dtype=np.int64)
    for merge in range(n - 1):
        sizes[n + merge] = sizes[left[merge]] + sizes[right[merge]]

    root = 2 * n - 2
    relabel = {root: n}
    next_label = n + 1
    stack = [root]
    while stack:
        node = stack.pop()
        if node < n:
            continue
        cluster = relabel[node]
        l, r = int(left[node - n]), int(right[node - n])
        lam = 1.0 / max(height[node - n], _EPS_DIST)
        big_l, big_r = sizes[l] >= min_cluster_size, sizes[r] >= min_cluster_size
        if big_l and big_r:
            for side in (l, r):
                relabel[side] = next_label
                rows_parent.append(cluster)
                rows_child.append(next_label)
                rows_lambda.append(lam)
                rows_size.append(int(sizes[side]))
                next_label += 1
                stack.append(side)
        elif not big_l and not big_r:
            for p in leaves(node):
                rows_parent.append(cluster)
                rows_child.append(p)
                rows_lambda.append(lam)
                rows_size.append(1)
        else:
            big, small = (l, r) if big_l else (r, l)
            relabel[big] = cluster
            for p in leaves(small):
                rows_parent.append(cluster)
                rows_child.append(p)
                rows_lambda.append(lam)
                rows_size.append(1)
            stack.append(big)

    return CondensedTree(
        np.asarray(rows_parent, dtype=np.int64),
        np.asarray(rows_child, dtype=np.int64),
        np.asarray(rows_lambda),
        np.asarray(rows_size, dtype=np.int64),
        n_points=n,
    )


def cluster_stability(t: CondensedTree) -> dict[int, float]:
    """Stability of each condensed cluster: sum over children of
    (lambda_child - lambda_birth) * child_size."""
    births: dict[int, float] = {int(t.n_points): 0.0}
    for c, lam in zip(t.child, t.lambda_val):
        if c >= t.n_points:
            births[int(c)] = float(lam)
    stability = {cid: 0.0 for cid in births}
    for p, lam, size in zip(t.parent, t.lambda_val, t.child_size):
        stability[int(p)] += (float(lam) - births[int(p)]) * int(size)
    return stability


def extract_clusters(t: CondensedTree) -> ClusterResult:
    """Excess-of-mass flat extraction: choose the non-overlapping cluster
    set maximizing total stability (a cluster wins over its descendants
    when its own stability exceeds their chosen sum; the root is never
    chosen). Point probability = lambda_point / lambda_max(cluster)."""
    labels = np.full(t.n_points, -1, dtype=np.int64)
    probs = np.zeros(t.n_points)
    if len(t.parent) == 0:
        return ClusterResult(labels, probs, 0)

    stability = cluster_stability(t)
    children: dict[int, list[int]] = {cid: [] for cid in stability}
    for p, c in zip(t.parent, t.child):
        if c >= t.n_points:
            children[int(p)].append(int(c))

    root = t.n_points
    selected: set[int] = set()
    best: dict[int, float] = {}
    for cid in sorted(stability, reverse=True):  # children before parents
        child_sum = sum(best[ch] for ch in children[cid])
        if cid == root:
            best[cid] = max(stability[cid], child_sum)
            continue
        if stability[cid] > child_sum:
            best[cid] = stability[cid]
            selected.add(cid)
            # deselect all descendants
            stack = list(children[cid])
            while stack:
                d = stack.pop()
                selected.discard(d)
                stack.extend(children[d])
        else:
            best[cid] = child_sum

    if not selected:
        return ClusterResult(labels, probs, 0)

    # ownership: each deselected cluster belongs to its nearest selected
    # ancestor, if any
    parent_of: dict[int, int] = {}
    for p, c in zip(t.parent, t.child):
        if c >= t.n_points:
            parent_of[int(c)] = int(p)

    def owner(cid: int) -> int | None:
        while cid is not None:
            if cid in selected:
                return cid
            cid = parent_of.get(cid)
        return None

    members: dict[int, list[tuple[int, float]]] = {c: [] for c in selected}
    for p, c, lam in zip(t.parent, t.child, t.lambda_val):
        if c < t.n_points:
            own = owner(int(p))
            if own is not None:
                members[own].append((int(c), float(lam)))

    ordered = sorted(selected, key=lambda c: (-len(members[c]), c))
    for label, cid in enumerate(ordered):
        pts = members[cid]
        lam_max = max(lam for _, lam in pts)
        for p, lam in pts:
            labels[p] = label
            probs[p] = 1.0 if lam_max <= 0 else min(lam / lam_max, 1.0)
    return ClusterResult(labels, probs, len(ordered))


def cluster(
    points: np.ndarray,
    min_cluster_size: int = 50,
    min_samples: int | None = None,
) -> ClusterResult:
    """Full clustering pipeline on reduced-space points (Euclidean).
    min_samples defaults to min_cluster_size, capped at n - 1."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 2:
        return ClusterResult(np.full(n, -1, dtype=np.int64), np.zeros(n), 0)
    ms = min_cluster_size if min_samples is None else min_samples
    ms = min(ms, n - 1)
    core = core_distances(points, ms)
    mst = mutual_reachability_mst(points, core)
    tree = condensed_tree(mst, min_cluster_size, n_points=n)
    return extract_clusters(tree)
