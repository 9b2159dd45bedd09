"""Graph container, file codecs, and random regular graph generation.

The container is deliberately minimal: vertices are 0..n-1, edges live in
a canonical array (each row (min, max), rows in lexicographic order, row
index = edge id), and adjacency queries go through CSR arrays built once
at construction. All pipeline stages index weights by edge id, so the
canonical ordering is part of the contract, not an implementation detail.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputFormatError, ParameterError, RetryExhausted
from .seeds import derive_seed

_HEADER_RE = re.compile(r"#\s*(\d+)\s+(\d+)\s*$")


class Graph:
    """Undirected simple graph with canonical edge ids and CSR adjacency."""

    def __init__(self, n: int, edges: object = None) -> None:
        if n < 0:
            raise ParameterError(f"vertex count must be nonnegative, got {n}")
        if n > np.iinfo(np.int32).max:
            raise ParameterError(f"vertex count {n} exceeds the 32-bit id range")
        self.n = int(n)
        raw = np.asarray(edges if edges is not None else np.empty((0, 2), dtype=np.int32))
        if raw.size == 0:
            raw = np.empty((0, 2), dtype=np.int32)
        elif not np.issubdtype(raw.dtype, np.integer):
            raw = np.asarray(raw, dtype=np.int64)
        if raw.ndim != 2 or raw.shape[1] != 2:
            raise ParameterError("edges must be a sequence of (u, v) pairs")
        if raw.size and (raw.min() < 0 or raw.max() >= n):
            raise ParameterError("edge endpoint outside 0..n-1")
        # large instances are memory-bound by this constructor, so the
        # working arrays stay int32 and every transient is dropped early;
        # only the duplicate-detection keys need the int64 range
        lo = np.minimum(raw[:, 0], raw[:, 1]).astype(np.int32, copy=False)
        hi = np.maximum(raw[:, 0], raw[:, 1]).astype(np.int32, copy=False)
        del raw
        if np.any(lo == hi):
            raise ParameterError("self-loops are not allowed")
        order = np.lexsort((hi, lo))
        lo, hi = lo[order], hi[order]
        del order
        keys = lo.astype(np.int64) * n + hi
        if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
            raise ParameterError("duplicate edges are not allowed")

        self.edges: np.ndarray = np.stack([lo, hi], axis=1)
        self.num_edges = int(len(self.edges))
        self._keys = keys

        eids = np.arange(self.num_edges, dtype=np.int32)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        eid2 = np.concatenate([eids, eids])
        del lo, hi, eids
        counts = np.bincount(src, minlength=n) if self.num_edges else np.zeros(n, dtype=np.int64)
        csr_order = np.lexsort((dst, src))
        del src
        self.indices: np.ndarray = dst[csr_order]
        del dst
        self.edge_ids: np.ndarray = eid2[csr_order]
        del eid2, csr_order
        self.indptr: np.ndarray = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.degrees: np.ndarray = counts.astype(np.int32)

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbors of v in ascending order (view, do not mutate)."""
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def incident_edges(self, v: int) -> np.ndarray:
        """Edge ids incident to v, aligned with neighbors(v)."""
        return self.edge_ids[self.indptr[v] : self.indptr[v + 1]]

    def edge_between(self, u: int, v: int) -> int | None:
        """Edge id joining u and v, or None if they are not adjacent."""
        if u == v:
            return None
        a, b = (u, v) if u < v else (v, u)
        key = a * self.n + b
        pos = int(np.searchsorted(self._keys, key))
        if pos < self.num_edges and self._keys[pos] == key:
            return pos
        return None

    def regular_degree(self) -> int:
        """The common degree if the graph is regular, else raise."""
        if self.n == 0:
            raise ParameterError("empty graph has no degree")
        d = int(self.degrees[0])
        if not np.all(self.degrees == d):
            raise ParameterError("graph is not regular")
        return d

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


# ---------------------------------------------------------------------------
# file formats


def write_edge_list(graph: Graph, path: str | Path) -> None:
    """Write a plain edge list; the leading comment records the vertex
    count so graphs with isolated vertices survive a round trip."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {graph.n} {graph.num_edges}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path: str | Path) -> Graph:
    n_header: int | None = None
    rows: list[tuple[int, int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                match = _HEADER_RE.match(text)
                if match is not None and n_header is None and not rows:
                    n_header = int(match.group(1))
                continue
            parts = text.split()
            if len(parts) != 2:
                raise InputFormatError(f"line {lineno}: expected two integers, got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise InputFormatError(f"line {lineno}: expected two integers, got {text!r}") from None
            if u < 0 or v < 0:
                raise InputFormatError(f"line {lineno}: negative vertex id")
            rows.append((u, v))
    max_seen = max((max(u, v) for u, v in rows), default=-1)
    n = n_header if n_header is not None else max_seen + 1
    if max_seen >= n:
        raise InputFormatError(f"vertex id {max_seen} exceeds declared count {n}")
    try:
        return Graph(n, rows)
    except ParameterError as exc:
        raise InputFormatError(str(exc)) from None


def write_graph6(graph: Graph) -> str:
    """Encode as one graph6 line (no trailing newline)."""
    n = graph.n
    if n > 68719476735:
        raise ParameterError("graph too large for graph6")
    if n <= 62:
        head = bytes([n + 63])
    elif n <= 258047:
        head = bytes([126, 63 + ((n >> 12) & 63), 63 + ((n >> 6) & 63), 63 + (n & 63)])
    else:
        head = bytes([126, 126] + [63 + ((n >> s) & 63) for s in (30, 24, 18, 12, 6, 0)])
    k = n * (n - 1) // 2
    bits = np.zeros(-(-k // 6) * 6, dtype=np.uint8)
    if graph.num_edges:
        u = graph.edges[:, 0].astype(np.int64)
        v = graph.edges[:, 1].astype(np.int64)
        # column-major upper triangle: bit for (u, v), u < v, at v(v-1)/2 + u
        bits[v * (v - 1) // 2 + u] = 1
    groups = bits.reshape(-1, 6) @ np.array([32, 16, 8, 4, 2, 1], dtype=np.uint8)
    return (head + bytes((groups + 63).astype(np.uint8).tolist())).decode("ascii")


def read_graph6(line: str) -> Graph:
    text = line.strip()
    if text.startswith(">>graph6<<"):
        text = text[len(">>graph6<<") :]
    if not text:
        raise InputFormatError("empty graph6 line")
    data = text.encode("ascii", errors="replace")
    if any(b < 63 or b > 126 for b in data):
        raise InputFormatError("graph6 byte outside printable range 63..126")
    vals = [b - 63 for b in data]
    if vals[0] < 63:
        n, body = vals[0], vals[1:]
    elif len(vals) >= 4 and vals[1] < 63:
        n, body = (vals[1] << 12) | (vals[2] << 6) | vals[3], vals[4:]
    elif len(vals) >= 8:
        n = 0
        for v in vals[2:8]:
            n = (n << 6) | v
        body = vals[8:]
    else:
        raise InputFormatError("truncated graph6 size field")
    k = n * (n - 1) // 2
    expect = -(-k // 6)
    if len(body) != expect:
        raise InputFormatError(f"graph6 body has {len(body)} groups, expected {expect}")
    if body:
        arr = np.array(body, dtype=np.uint8)
        if arr.max() > 63:
            raise InputFormatError("graph6 group out of range")
        bits = np.unpackbits(arr[:, None], axis=1)[:, 2:].ravel()
        if np.any(bits[k:]):
            raise InputFormatError("nonzero padding bits in graph6 body")
        pos = np.nonzero(bits[:k])[0].astype(np.int64)
        # invert pos = v(v-1)/2 + u by searching the triangular numbers
        tri = np.arange(n + 1, dtype=np.int64)
        tri = tri * (tri - 1) // 2
        v = np.searchsorted(tri, pos, side="right") - 1
        u = pos - tri[v]
        edges = np.stack([u, v], axis=1)
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    try:
        return Graph(n, edges)
    except ParameterError as exc:
        raise InputFormatError(str(exc)) from None


# ---------------------------------------------------------------------------
# random regular graphs


def generate_random_regular(n: int, d: int, seed: int, max_attempts: int = 200) -> Graph:
    """Sample a d-regular simple graph on n vertices via stub pairing.

    Each attempt pairs the n*d stubs in shuffled batches, keeps the pairs
    that form new simple edges, and recycles the rest; an attempt dies
    when the leftover stubs provably admit no further edge (or a round
    cap is hit), and a fresh attempt restarts from its own derived seed.
    """
    if n <= 0:
        raise ParameterError(f"need at least one vertex, got n={n}")
    if d < 0 or d >= n:
        raise ParameterError(f"degree must satisfy 0 <= d < n, got d={d}, n={n}")
    if (n * d) % 2:
        raise ParameterError(f"n*d must be even, got n={n}, d={d}")
    if d == 0:
        return Graph(n)
    for attempt in range(max_attempts):
        rng = np.random.default_rng(derive_seed(seed, "pairing", attempt))
        edges = _pairing_attempt(n, d, rng)
        if edges is not None:
            return Graph(n, edges)
    raise RetryExhausted(
        f"no simple {d}-regular graph on {n} vertices in {max_attempts} pairing attempts",
        attempts=max_attempts,
    )


def _pairing_attempt(n: int, d: int, rng: np.random.Generator, max_rounds: int = 200) -> np.ndarray | None:
    stubs = np.repeat(np.arange(n, dtype=np.int32), d)
    accepted = np.empty(0, dtype=np.int64)
    for _ in range(max_rounds):
        if stubs.size == 0:
            del stubs
            out = np.empty((accepted.size, 2), dtype=np.int32)
            np.floor_divide(accepted, n, out=out[:, 0], casting="unsafe")
            np.remainder(accepted, n, out=out[:, 1], casting="unsafe")
            return out
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        ok_rows = np.nonzero(lo != hi)[0]
        keys = lo[ok_rows].astype(np.int64) * n + hi[ok_rows]
        uniq, first = np.unique(keys, return_index=True)
        pos = np.searchsorted(accepted, uniq)
        pos = np.minimum(pos, max(accepted.size - 1, 0))
        fresh = accepted.size == 0
        new_mask = np.ones(uniq.size, dtype=bool) if fresh else accepted[pos] != uniq
        take_rows = ok_rows[first[new_mask]]
        if take_rows.size:
            accepted = np.sort(np.concatenate([accepted, uniq[new_mask]]))
            keep = np.ones(len(pairs), dtype=bool)
            keep[take_rows] = False
            stubs = pairs[keep].ravel()
        elif not _stubs_suitable(stubs, accepted, n):
            return None
    return None


def _stubs_suitable(stubs: np.ndarray, accepted: np.ndarray, n: int) -> bool:
    """True if some pair of leftover stubs can still form a new edge."""
    distinct = np.unique(stubs)
    k = distinct.size
    if k < 2:
        return False
    if k > 1500:
        # too many to test pairwise; almost surely fine, let rounds retry
        return True
    a, b = np.triu_indices(k, 1)
    keys = distinct[a].astype(np.int64) * n + distinct[b]
    pos = np.searchsorted(accepted, keys)
    pos = np.minimum(pos, max(accepted.size - 1, 0))
    present = accepted[pos] == keys if accepted.size else np.zeros(keys.size, dtype=bool)
    return bool(np.any(~present))


# ---------------------------------------------------------------------------
# subgraphs and traversal


@dataclass
class IndexMap:
    """Vertex and edge correspondence between a graph and a parent."""

    new_to_old: np.ndarray
    old_to_new: np.ndarray
    edge_parent: np.ndarray


def induced_subgraph(graph: Graph, vertices: np.ndarray) -> tuple[Graph, IndexMap]:
    """Subgraph induced on ``vertices`` with maps back to the parent.

    Vertices are relabeled 0..k-1 in ascending parent order; that keeps
    the relabeling monotone, so canonical edge order is preserved and
    ``edge_parent[i]`` is the parent edge id of sub edge i.
    """
    verts = np.unique(np.asarray(vertices, dtype=np.int64))
    if verts.size and (verts[0] < 0 or verts[-1] >= graph.n):
        raise ParameterError("subgraph vertex outside parent range")
    old_to_new = np.full(graph.n, -1, dtype=np.int32)
    old_to_new[verts] = np.arange(verts.size, dtype=np.int32)
    inside = np.zeros(graph.n, dtype=bool)
    inside[verts] = True
    emask = inside[graph.edges[:, 0]] & inside[graph.edges[:, 1]]
    sub_edges = old_to_new[graph.edges[emask]]
    sub = Graph(int(verts.size), sub_edges)
    return sub, IndexMap(
        new_to_old=verts.astype(np.int32),
        old_to_new=old_to_new,
        edge_parent=np.nonzero(emask)[0].astype(np.int32),
    )


@dataclass
class ComponentOrder:
    """One connected component with its processing order.

    ``order`` is the reversed BFS order from the component's smallest
    vertex, so the root sits last and its first-visited child second to
    last (they are adjacent). ``forward[j]`` is the BFS parent of
    ``order[j]``, a neighbor appearing later in the order; -1 for the
    root itself.
    """

    order: np.ndarray
    forward: np.ndarray


def components_with_order(graph: Graph) -> list[ComponentOrder]:
    """Connected components, each with a processing order whose every
    non-final vertex has a designated neighbor later in the order.

    Components are returned by ascending smallest vertex id; BFS visits
    neighbors in ascending order, so the whole decomposition is
    deterministic in the graph alone.
    """
    seen = np.zeros(graph.n, dtype=bool)
    out: list[ComponentOrder] = []
    for root in range(graph.n):
        if seen[root]:
            continue
        seen[root] = True
        bfs = [root]
        parent = {root: -1}
        head = 0
        while head < len(bfs):
            v = bfs[head]
            head += 1
            for u in graph.neighbors(v):
                u = int(u)
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    bfs.append(u)
        order = np.array(bfs[::-1], dtype=np.int64)
        forward = np.array([parent[int(v)] for v in order], dtype=np.int64)
        out.append(ComponentOrder(order=order, forward=forward))
    return out
