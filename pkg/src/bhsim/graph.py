"""Port-labeled footprints: representation, validation, generators and file format."""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import networkx as nx

Edge = tuple[int, int, int, int]  # (u, v, port_at_u, port_at_v)

FAMILIES = ("ring", "clique", "path", "random-connected", "bhs1-impossibility", "kf2-clique")


class GraphError(ValueError):
    """Raised for invalid family parameters or malformed graph files."""


@dataclass(frozen=True)
class Footprint:
    """Static port-labeled undirected graph, optionally with one black-hole node.

    Edges are stored normalized (``u < v``) and sorted by ``(u, v)``. Nothing
    is checked at construction time; call :func:`validate` for a report.
    """

    n: int
    edges: tuple[Edge, ...]
    black_hole: int | None = None
    effective_note: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        norm = []
        for u, v, pu, pv in self.edges:
            if u > v:
                u, v, pu, pv = v, u, pv, pu
            norm.append((int(u), int(v), int(pu), int(pv)))
        norm.sort()
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def ports(self) -> tuple[tuple[tuple[int, int, int], ...], ...]:
        """``ports[v][p] = (neighbor, port at neighbor, edge index)``; assumes a valid footprint."""
        table: list[dict[int, tuple[int, int, int]]] = [dict() for _ in range(self.n)]
        for i, (u, v, pu, pv) in enumerate(self.edges):
            table[u][pu] = (v, pv, i)
            table[v][pv] = (u, pu, i)
        return tuple(tuple(t[p] for p in sorted(t)) for t in table)

    def degree(self, v: int) -> int:
        return degree(self, v)

    @cached_property
    def max_degree(self) -> int:
        return max((len(p) for p in self.ports), default=0)

    def edge_index(self, u: int, v: int) -> int:
        a, b = min(u, v), max(u, v)
        for i, e in enumerate(self.edges):
            if e[0] == a and e[1] == b:
                return i
        raise KeyError((u, v))

    @cached_property
    def bridges(self) -> frozenset[int]:
        g = self.to_networkx()
        out = set()
        for a, b in nx.bridges(g):
            out.add(self.edge_index(a, b))
        return frozenset(out)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from((u, v) for u, v, _, _ in self.edges)
        return g

    def connected_without(self, removed: Iterable[int]) -> bool:
        """True if the footprint stays connected after deleting the given edge indices."""
        removed = set(removed)
        if self.n <= 1:
            return True
        seen = [False] * self.n
        seen[0] = True
        stack = [0]
        count = 1
        ports = self.ports
        while stack:
            x = stack.pop()
            for w, _, ei in ports[x]:
                if not seen[w] and ei not in removed:
                    seen[w] = True
                    count += 1
                    stack.append(w)
        return count == self.n

    def with_black_hole(self, bh: int | None) -> "Footprint":
        return Footprint(self.n, self.edges, bh, self.effective_note)

    def to_text(self) -> str:
        return to_text(self)

    @cached_property
    def hash(self) -> str:
        return hashlib.sha256(to_text(self).encode()).hexdigest()


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(fp: Footprint) -> ValidationReport:
    """Check simplicity, port labeling, connectivity and the black-hole degree."""
    bad: list[str] = []
    if fp.n < 1:
        bad.append("empty graph")
        return ValidationReport(bad)
    seen_pairs = set()
    ports: list[list[int]] = [[] for _ in range(fp.n)]
    in_range = True
    for u, v, pu, pv in fp.edges:
        if not (0 <= u < fp.n and 0 <= v < fp.n):
            bad.append(f"node out of range in edge ({u},{v})")
            in_range = False
            continue
        if u == v:
            bad.append(f"self-loop at {u}")
            continue
        if (u, v) in seen_pairs:
            bad.append(f"multi-edge ({u},{v})")
        seen_pairs.add((u, v))
        ports[u].append(pu)
        ports[v].append(pv)
    for v, ps in enumerate(ports):
        if len(set(ps)) != len(ps):
            bad.append(f"duplicate port at {v}")
        elif sorted(ps) != list(range(len(ps))):
            bad.append(f"ports at {v} are not 0..{len(ps) - 1}")
    if in_range:
        g = nx.Graph()
        g.add_nodes_from(range(fp.n))
        g.add_edges_from((u, v) for u, v, _, _ in fp.edges if u != v)
        if not nx.is_connected(g):
            bad.append("disconnected")
    if fp.black_hole is not None:
        if not 0 <= fp.black_hole < fp.n:
            bad.append("black hole out of range")
        elif not ports[fp.black_hole]:
            bad.append("black hole has degree 0")
    return ValidationReport(bad)


def degree(fp: Footprint, v: int) -> int:
    if not 0 <= v < fp.n:
        raise IndexError(f"node {v} out of range [0, {fp.n})")
    return len(fp.ports[v])


def from_networkx(g: nx.Graph, black_hole: int | None = None, port_perm_seed: int | None = None) -> Footprint:
    """Build a footprint from an undirected graph on nodes ``0..n-1``.

    Ports are assigned by ascending neighbor index; with ``port_perm_seed`` they
    are then permuted at every node by a seeded RNG.
    """
    n = g.number_of_nodes()
    rng = random.Random(port_perm_seed) if port_perm_seed is not None else None
    port_of: dict[tuple[int, int], int] = {}
    for v in range(n):
        nbrs = sorted(g.neighbors(v))
        order = list(range(len(nbrs)))
        if rng is not None:
            rng.shuffle(order)
        for w, p in zip(nbrs, order):
            port_of[(v, w)] = p
    edges = [(u, v, port_of[(u, v)], port_of[(v, u)]) for u, v in g.edges()]
    return Footprint(n, tuple(edges), black_hole)


@dataclass(frozen=True)
class GraphFamily:
    kind: str
    n: int | None = None
    f: int | None = None
    seed: int = 0
    p: float = 0.3


def generate(family: GraphFamily | str, n: int | None = None, f: int | None = None,
             seed: int = 0, p: float = 0.3) -> Footprint:
    """Instantiate a graph family. Accepts a :class:`GraphFamily` or keyword parameters."""
    if isinstance(family, str):
        family = GraphFamily(family, n, f, seed, p)
    kind, n = family.kind, family.n
    if kind == "kf2-clique":
        if family.f is None or family.f < 1:
            raise GraphError("kf2-clique needs f >= 1")
        return from_networkx(nx.complete_graph(family.f + 2), black_hole=0)
    if n is None:
        raise GraphError(f"{kind} needs n")
    if kind == "ring":
        if n < 3:
            raise GraphError("ring needs n >= 3")
        return from_networkx(nx.cycle_graph(n))
    if kind == "clique":
        if n < 1:
            raise GraphError("clique needs n >= 1")
        return from_networkx(nx.complete_graph(n))
    if kind == "path":
        if n < 1:
            raise GraphError("path needs n >= 1")
        return from_networkx(nx.path_graph(n))
    if kind == "random-connected":
        return _random_connected(n, family.seed, family.p)
    if kind == "bhs1-impossibility":
        return _bhs1_gadget(n)
    raise GraphError(f"unknown family {kind!r}; expected one of {', '.join(FAMILIES)}")


def _random_connected(n: int, seed: int, p: float) -> Footprint:
    if n < 1:
        raise GraphError("random-connected needs n >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError("edge probability must lie in [0, 1]")
    rng = random.Random(seed)
    if n <= 2:
        g = nx.path_graph(n)
    else:
        # Pruefer sequences are in bijection with labeled trees: uniform spanning tree of K_n.
        g = nx.from_prufer_sequence([rng.randrange(n) for _ in range(n - 2)])
    for u in range(n):
        for v in range(u + 1, n):
            if not g.has_edge(u, v) and rng.random() < p:
                g.add_edge(u, v)
    return from_networkx(g, port_perm_seed=rng.randrange(2**31))


def gadget_shape(n: int) -> tuple[int, int]:
    """Return ``(m1, m2)``: number of cliques and clique size for a requested ``n``."""
    if n < 2:
        raise GraphError("bhs1-impossibility needs n >= 2")
    m1 = math.isqrt(n)
    return m1, (n - 1) // m1


def _bhs1_gadget(n: int) -> Footprint:
    m1, m2 = gadget_shape(n)
    eff = m1 * m2 + 1
    edges: list[Edge] = []
    for c in range(m1):
        base = 1 + c * m2
        # inside the clique, ports follow ascending local index
        for a in range(m2):
            for b in range(a + 1, m2):
                edges.append((base + a, base + b, b - 1, a))
        # bridge: highest port on the clique side, port c at the black hole
        edges.append((0, base, c, m2 - 1))
    note = f"requested n={n}, effective n={eff} (m1={m1}, m2={m2})"
    return Footprint(eff, tuple(edges), 0, note)


def gadget_cliques(fp: Footprint) -> list[list[int]]:
    """Node lists of the cliques of a gadget produced by ``bhs1-impossibility``."""
    m1 = len(fp.ports[0])
    m2 = (fp.n - 1) // m1
    return [list(range(1 + c * m2, 1 + (c + 1) * m2)) for c in range(m1)]


def to_text(fp: Footprint) -> str:
    bh = -1 if fp.black_hole is None else fp.black_hole
    lines = [f"{fp.n} {fp.m} {bh}"]
    lines += [f"{u} {v} {pu} {pv}" for u, v, pu, pv in fp.edges]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Footprint:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise GraphError("empty graph file")
    try:
        head = [int(x) for x in rows[0]]
        body = [tuple(int(x) for x in r) for r in rows[1:]]
    except ValueError as exc:
        raise GraphError(f"non-integer token: {exc}") from None
    if len(head) != 3:
        raise GraphError("header must be 'n m bh'")
    n, m, bh = head
    if len(body) != m:
        raise GraphError(f"header announces {m} edges, found {len(body)}")
    for r in body:
        if len(r) != 4:
            raise GraphError("edge lines must be 'u v pu pv'")
    return Footprint(n, tuple(body), None if bh == -1 else bh)  # type: ignore[arg-type]


def load(path: str) -> Footprint:
    with open(path, encoding="utf-8") as fh:
        return from_text(fh.read())


def save(fp: Footprint, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_text(fp))


def connected_graphs(max_n: int, min_n: int = 1) -> Iterator[Footprint]:
    """All connected simple graphs with ``min_n..max_n`` nodes, one per isomorphism class."""
    if max_n > 7:
        raise GraphError("the graph atlas only covers up to 7 nodes")
    for g in nx.graph_atlas_g():
        k = g.number_of_nodes()
        if k < min_n or k > max_n:
            continue
        if k == 0 or not nx.is_connected(g):
            continue
        yield from_networkx(g)


def edge_pairs(fp: Footprint, idx: Sequence[int]) -> list[list[int]]:
    return [[fp.edges[i][0], fp.edges[i][1]] for i in sorted(idx)]
