"""Exact-rational PL 1-complexes: metric graphs, closed sets, PL functions
and maps between graphs.

Everything here is exact: edge lengths, interval endpoints, function
breakpoints and distances are Fractions, so no tolerance policy exists
anywhere downstream.  The intrinsic path metric uses the declared edge
lengths, not any ambient embedding.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    InputError,
    InvariantViolationError,
    PreconditionError,
    ResourceLimitError,
    UsageError,
)
from .folang import Interpretation
from .lattice import FiniteLattice, generate_sublattice

Frac = Fraction

# A graph point is ("v", vertex_id) or ("e", edge_id, param) with
# 0 < param < length; edge endpoints normalize to their vertices.
Point = tuple


def frac(value) -> Frac:
    if isinstance(value, Frac):
        return value
    if isinstance(value, int):
        return Frac(value)
    if isinstance(value, str):
        return Frac(value)
    raise InputError(f"not an exact rational: {value!r}")


def frac_str(value: Frac) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Edge:
    eid: str
    u: str
    v: str
    length: Frac


class MetricGraph:
    """A 1-complex with positive rational edge lengths."""

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge], meta: dict | None = None):
        self.vertices: tuple[str, ...] = tuple(sorted(set(vertices)))
        vset = set(self.vertices)
        self.edges: dict[str, Edge] = {}
        adj: dict[str, list[tuple[str, int]]] = {v: [] for v in self.vertices}
        for e in sorted(edges, key=lambda e: e.eid):
            if e.eid in self.edges:
                raise InputError(f"duplicate edge id {e.eid!r}")
            if e.u not in vset or e.v not in vset:
                raise InputError(f"edge {e.eid!r} references an unknown vertex")
            if e.u == e.v:
                raise InputError(f"edge {e.eid!r} is a loop; subdivide it")
            if e.length <= 0:
                raise InputError(f"edge {e.eid!r} must have positive length")
            self.edges[e.eid] = e
            adj[e.u].append((e.eid, 0))
            adj[e.v].append((e.eid, 1))
        self.adjacency: dict[str, tuple[tuple[str, int], ...]] = {
            v: tuple(sorted(lst)) for v, lst in adj.items()
        }
        self.meta: dict = meta or {}

    # ---------------------------------------------------------------- points

    def point(self, eid: str, t) -> Point:
        t = frac(t)
        e = self.edges[eid]
        if t < 0 or t > e.length:
            raise InputError(f"parameter {t} outside edge {eid!r}")
        if t == 0:
            return ("v", e.u)
        if t == e.length:
            return ("v", e.v)
        return ("e", eid, t)

    def vertex_point(self, vid: str) -> Point:
        if vid not in self.adjacency:
            raise InputError(f"unknown vertex {vid!r}")
        return ("v", vid)

    def normalize_point(self, p: Point) -> Point:
        if p[0] == "v":
            return self.vertex_point(p[1])
        return self.point(p[1], p[2])

    # ------------------------------------------------------------ structure

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for eid, end in self.adjacency[v]:
                e = self.edges[eid]
                w = e.v if end == 0 else e.u
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def total_length(self) -> Frac:
        return sum((e.length for e in self.edges.values()), Frac(0))

    def scaled(self, factor) -> "MetricGraph":
        factor = frac(factor)
        if factor <= 0:
            raise InputError("scale factor must be positive")
        return MetricGraph(
            self.vertices,
            [Edge(e.eid, e.u, e.v, e.length * factor) for e in self.edges.values()],
            dict(self.meta),
        )

    def normalized(self) -> "MetricGraph":
        """Rescale so the intrinsic diameter is at most 1 (total length is an
        exact upper bound for the diameter of a connected graph)."""
        total = self.total_length()
        return self.scaled(Frac(1, 1) / total) if total > 1 else self

    # -------------------------------------------------------------- closures

    def empty_set(self) -> "ClosedSet":
        return ClosedSet(self, {}, frozenset())

    def whole_set(self) -> "ClosedSet":
        return ClosedSet(
            self,
            {eid: [(Frac(0), e.length)] for eid, e in self.edges.items()},
            frozenset(self.vertices),
        )

    def point_closed_set(self, points: Iterable[Point]) -> "ClosedSet":
        intervals: dict[str, list] = {}
        verts = set()
        for p in points:
            p = self.normalize_point(p)
            if p[0] == "v":
                verts.add(p[1])
            else:
                intervals.setdefault(p[1], []).append((p[2], p[2]))
        return ClosedSet(self, intervals, frozenset(verts))

    def components_of(self, s: "ClosedSet") -> list["ClosedSet"]:
        """Connected components of a closed set, each as a closed set."""
        if s.graph is not self:
            raise UsageError("closed set belongs to a different graph")
        nodes: list[tuple] = [("v", v) for v in sorted(s.vertices)]
        for eid in sorted(s.intervals):
            for k, _ in enumerate(s.intervals[eid]):
                nodes.append(("i", eid, k))
        parent = {n: n for n in nodes}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        for eid in sorted(s.intervals):
            e = self.edges[eid]
            for k, (lo, hi) in enumerate(s.intervals[eid]):
                if lo == 0 and ("v", e.u) in parent:
                    union(("i", eid, k), ("v", e.u))
                if hi == e.length and ("v", e.v) in parent:
                    union(("i", eid, k), ("v", e.v))
        groups: dict[tuple, list[tuple]] = {}
        for n in nodes:
            groups.setdefault(find(n), []).append(n)
        comps = []
        for root in sorted(groups):
            intervals: dict[str, list] = {}
            verts = set()
            for n in groups[root]:
                if n[0] == "v":
                    verts.add(n[1])
                else:
                    _, eid, k = n
                    intervals.setdefault(eid, []).append(s.intervals[eid][k])
            comps.append(ClosedSet(self, intervals, frozenset(verts)))
        return comps

    def __repr__(self) -> str:
        return f"<MetricGraph V={len(self.vertices)} E={len(self.edges)}>"


class ClosedSet:
    """A closed subset: per-edge disjoint closed subintervals plus vertices.

    Normal form: intervals sorted and merged, endpoint-degenerate intervals
    converted to vertex membership, interval endpoints at 0/length implying
    the incident vertex is a member."""

    __slots__ = ("graph", "intervals", "vertices", "_key")

    def __init__(self, graph: MetricGraph, intervals: Mapping[str, Sequence], vertices):
        self.graph = graph
        verts = set(vertices)
        norm: dict[str, tuple] = {}
        for eid in sorted(intervals):
            if eid not in graph.edges:
                raise InputError(f"unknown edge {eid!r} in closed set")
            e = graph.edges[eid]
            items = []
            for lo, hi in intervals[eid]:
                lo, hi = frac(lo), frac(hi)
                if lo > hi:
                    raise InputError(f"inverted interval on edge {eid!r}")
                if lo < 0 or hi > e.length:
                    raise InputError(f"interval outside edge {eid!r}")
                items.append((lo, hi))
            items.sort()
            merged: list[tuple] = []
            for lo, hi in items:
                if merged and lo <= merged[-1][1]:
                    merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
                else:
                    merged.append((lo, hi))
            final = []
            for lo, hi in merged:
                if lo == 0:
                    verts.add(e.u)
                if hi == e.length:
                    verts.add(e.v)
                if lo == hi and (lo == 0 or hi == e.length):
                    continue  # endpoint point = the vertex itself
                final.append((lo, hi))
            if final:
                norm[eid] = tuple(final)
        unknown = verts - set(graph.vertices)
        if unknown:
            raise InputError(f"unknown vertices in closed set: {sorted(unknown)}")
        self.intervals: dict[str, tuple] = norm
        self.vertices: frozenset[str] = frozenset(verts)
        self._key = (
            tuple(sorted(self.vertices)),
            tuple((eid, self.intervals[eid]) for eid in sorted(self.intervals)),
        )

    def is_empty(self) -> bool:
        return not self.vertices and not self.intervals

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ClosedSet)
            and other.graph is self.graph
            and other._key == self._key
        )

    def __hash__(self) -> int:
        return hash((id(self.graph), self._key))

    def _check(self, other: "ClosedSet") -> None:
        if not isinstance(other, ClosedSet) or other.graph is not self.graph:
            raise UsageError("closed sets belong to different graphs")

    def __or__(self, other: "ClosedSet") -> "ClosedSet":
        self._check(other)
        intervals: dict[str, list] = {}
        for src in (self.intervals, other.intervals):
            for eid, items in src.items():
                intervals.setdefault(eid, []).extend(items)
        return ClosedSet(self.graph, intervals, self.vertices | other.vertices)

    def __and__(self, other: "ClosedSet") -> "ClosedSet":
        self._check(other)
        intervals: dict[str, list] = {}
        for eid in set(self.intervals) & set(other.intervals):
            out = []
            for lo1, hi1 in self.intervals[eid]:
                for lo2, hi2 in other.intervals[eid]:
                    lo, hi = max(lo1, lo2), min(hi1, hi2)
                    if lo <= hi:
                        out.append((lo, hi))
            if out:
                intervals[eid] = out
        return ClosedSet(self.graph, intervals, self.vertices & other.vertices)

    def is_subset_of(self, other: "ClosedSet") -> bool:
        return (self & other) == self

    def contains_point(self, p: Point) -> bool:
        p = self.graph.normalize_point(p)
        if p[0] == "v":
            return p[1] in self.vertices
        _, eid, t = p
        return any(lo <= t <= hi for lo, hi in self.intervals.get(eid, ()))

    def sample_points(self) -> list[Point]:
        """Deterministic representative points: vertices, interval endpoints
        and interval midpoints."""
        pts = [("v", v) for v in sorted(self.vertices)]
        for eid in sorted(self.intervals):
            for lo, hi in self.intervals[eid]:
                for t in (lo, (lo + hi) / 2, hi):
                    pts.append(self.graph.normalize_point(("e", eid, t)))
        seen, out = set(), []
        for p in pts:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out

    def to_dict(self) -> dict:
        payload: dict = {
            eid: [[frac_str(lo), frac_str(hi)] for lo, hi in self.intervals[eid]]
            for eid in sorted(self.intervals)
        }
        payload["vertices"] = sorted(self.vertices)
        return payload

    @staticmethod
    def from_dict(graph: MetricGraph, data: Mapping) -> "ClosedSet":
        intervals = {}
        verts = []
        for key, value in data.items():
            if key == "vertices":
                verts = list(value)
            else:
                intervals[key] = [(frac(lo), frac(hi)) for lo, hi in value]
        return ClosedSet(graph, intervals, verts)

    def __repr__(self) -> str:
        return f"<ClosedSet verts={sorted(self.vertices)} intervals={dict(self.intervals)}>"


# --------------------------------------------------------------------------
# Piecewise-linear breakpoint lists: [(x0,y0), ..., (xn,yn)], x strictly
# increasing, linear in between.
# --------------------------------------------------------------------------

def _bp_simplify(bp: list[tuple]) -> tuple:
    out = [bp[0]]
    for pt in bp[1:]:
        if pt[0] == out[-1][0]:
            if pt[1] != out[-1][1]:
                raise InvariantViolationError("discontinuous breakpoint list")
            continue
        out.append(pt)
    i = 1
    while i + 1 < len(out):
        (x0, y0), (x1, y1), (x2, y2) = out[i - 1], out[i], out[i + 1]
        if (y1 - y0) * (x2 - x1) == (y2 - y1) * (x1 - x0):
            del out[i]
        else:
            i += 1
    return tuple(out)


def _bp_eval(bp: Sequence[tuple], x: Frac) -> Frac:
    if x <= bp[0][0]:
        return bp[0][1]
    for (x0, y0), (x1, y1) in zip(bp, bp[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return bp[-1][1]


def _bp_combine(a: Sequence[tuple], b: Sequence[tuple], fn: Callable) -> tuple:
    xs = sorted({x for x, _ in a} | {x for x, _ in b})
    return _bp_simplify([(x, fn(_bp_eval(a, x), _bp_eval(b, x))) for x in xs])


def _bp_min(a: Sequence[tuple], b: Sequence[tuple]) -> tuple:
    xs = sorted({x for x, _ in a} | {x for x, _ in b})
    pts: list[tuple] = []
    for x0, x1 in zip(xs, xs[1:]):
        d0 = _bp_eval(a, x0) - _bp_eval(b, x0)
        d1 = _bp_eval(a, x1) - _bp_eval(b, x1)
        if (d0 < 0 < d1) or (d1 < 0 < d0):
            xc = x0 + (x1 - x0) * d0 / (d0 - d1)
            if x0 < xc < x1 and xc not in xs:
                pts.append(xc)
    xs = sorted(set(xs) | set(pts))
    return _bp_simplify([(x, min(_bp_eval(a, x), _bp_eval(b, x))) for x in xs])


def _bp_affine(bp: Sequence[tuple], mul: Frac, add: Frac) -> tuple:
    return _bp_simplify([(x, y * mul + add) for x, y in bp])


def _bp_clamp(bp: Sequence[tuple], lo: Frac, hi: Frac) -> tuple:
    xs = {x for x, _ in bp}
    for (x0, y0), (x1, y1) in zip(bp, bp[1:]):
        for level in (lo, hi):
            if (y0 - level) * (y1 - level) < 0:
                xs.add(x0 + (x1 - x0) * (level - y0) / (y1 - y0))
    out = [(x, min(hi, max(lo, _bp_eval(bp, x)))) for x in sorted(xs)]
    return _bp_simplify(out)


class PLFunction:
    """A continuous PL function on a metric graph, one breakpoint list per
    edge over its arc-length parameter."""

    __slots__ = ("graph", "per_edge")

    def __init__(self, graph: MetricGraph, per_edge: Mapping[str, Sequence[tuple]]):
        self.graph = graph
        pe: dict[str, tuple] = {}
        for eid, e in graph.edges.items():
            if eid not in per_edge:
                raise InputError(f"PL function missing edge {eid!r}")
            bp = [(frac(x), frac(y)) for x, y in per_edge[eid]]
            if bp[0][0] != 0 or bp[-1][0] != e.length:
                raise InputError(f"breakpoints must span edge {eid!r}")
            if any(x1 <= x0 for (x0, _), (x1, _) in zip(bp, bp[1:])):
                raise InputError(f"breakpoints not increasing on edge {eid!r}")
            pe[eid] = _bp_simplify(bp)
        self.per_edge = pe
        for vid in graph.vertices:
            vals = {self._end_value(eid, end) for eid, end in graph.adjacency[vid]}
            if len(vals) > 1:
                raise InputError(f"PL function discontinuous at vertex {vid!r}")

    def _end_value(self, eid: str, end: int) -> Frac:
        bp = self.per_edge[eid]
        return bp[0][1] if end == 0 else bp[-1][1]

    @staticmethod
    def constant(graph: MetricGraph, value) -> "PLFunction":
        value = frac(value)
        return PLFunction(
            graph,
            {eid: [(Frac(0), value), (e.length, value)] for eid, e in graph.edges.items()},
        )

    def eval(self, p: Point) -> Frac:
        p = self.graph.normalize_point(p)
        if p[0] == "v":
            adj = self.graph.adjacency[p[1]]
            if not adj:
                raise UsageError(f"isolated vertex {p[1]!r} has no function value")
            return self._end_value(*adj[0])
        return _bp_eval(self.per_edge[p[1]], p[2])

    def combine(self, other: "PLFunction", fn: Callable) -> "PLFunction":
        if other.graph is not self.graph:
            raise UsageError("PL functions on different graphs")
        return PLFunction(
            self.graph,
            {eid: _bp_combine(self.per_edge[eid], other.per_edge[eid], fn)
             for eid in self.per_edge},
        )

    def __add__(self, other: "PLFunction") -> "PLFunction":
        return self.combine(other, lambda a, b: a + b)

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        return self.combine(other, lambda a, b: a - b)

    def pointwise_min(self, other: "PLFunction") -> "PLFunction":
        if other.graph is not self.graph:
            raise UsageError("PL functions on different graphs")
        return PLFunction(
            self.graph,
            {eid: _bp_min(self.per_edge[eid], other.per_edge[eid]) for eid in self.per_edge},
        )

    def affine(self, mul, add) -> "PLFunction":
        mul, add = frac(mul), frac(add)
        return PLFunction(
            self.graph,
            {eid: _bp_affine(bp, mul, add) for eid, bp in self.per_edge.items()},
        )

    def clamp(self, lo, hi) -> "PLFunction":
        lo, hi = frac(lo), frac(hi)
        return PLFunction(
            self.graph,
            {eid: _bp_clamp(bp, lo, hi) for eid, bp in self.per_edge.items()},
        )

    def _region(self, level: Frac, side: str) -> ClosedSet:
        intervals: dict[str, list] = {}
        for eid, bp in self.per_edge.items():
            pieces = []
            for (x0, y0), (x1, y1) in zip(bp, bp[1:]):
                if side == "le":
                    ok0, ok1 = y0 <= level, y1 <= level
                elif side == "ge":
                    ok0, ok1 = y0 >= level, y1 >= level
                else:
                    ok0, ok1 = y0 == level, y1 == level
                if side == "eq":
                    if ok0 and ok1:
                        pieces.append((x0, x1))
                    else:
                        if ok0:
                            pieces.append((x0, x0))
                        if ok1:
                            pieces.append((x1, x1))
                        if (y0 - level) * (y1 - level) < 0:
                            xc = x0 + (x1 - x0) * (level - y0) / (y1 - y0)
                            pieces.append((xc, xc))
                    continue
                if ok0 and ok1:
                    pieces.append((x0, x1))
                elif ok0 or ok1:
                    xc = x0 + (x1 - x0) * (level - y0) / (y1 - y0)
                    pieces.append((x0, xc) if ok0 else (xc, x1))
            if pieces:
                intervals[eid] = pieces
        return ClosedSet(self.graph, intervals, frozenset())

    def sublevel_set(self, level) -> ClosedSet:
        return self._region(frac(level), "le")

    def superlevel_set(self, level) -> ClosedSet:
        return self._region(frac(level), "ge")

    def level_set(self, level) -> ClosedSet:
        return self._region(frac(level), "eq")

    def band(self, lo, hi) -> ClosedSet:
        return self.sublevel_set(hi) & self.superlevel_set(lo)

    def extrema_over(self, s: ClosedSet) -> tuple[Frac, Frac]:
        """Exact (min, max) over a nonempty closed set; PL extremes occur at
        interval ends, breakpoints, and member vertices."""
        if s.is_empty():
            raise UsageError("extrema over the empty set")
        vals = [self.eval(("v", v)) for v in s.vertices]
        for eid, items in s.intervals.items():
            bp = self.per_edge[eid]
            for lo, hi in items:
                vals.append(_bp_eval(bp, lo))
                vals.append(_bp_eval(bp, hi))
                vals.extend(y for x, y in bp if lo < x < hi)
        return min(vals), max(vals)

    def min_over(self, s: ClosedSet) -> Frac:
        return self.extrema_over(s)[0]

    def max_over(self, s: ClosedSet) -> Frac:
        return self.extrema_over(s)[1]


# --------------------------------------------------------------------------
# Distances
# --------------------------------------------------------------------------

def distance_to_set(graph: MetricGraph, target: ClosedSet) -> PLFunction:
    """x -> rho(x, target): multi-source shortest path with in-edge interval
    sources, exact everywhere."""
    if target.graph is not graph:
        raise UsageError("closed set belongs to a different graph")
    if target.is_empty():
        raise PreconditionError("distance to the empty set is undefined")
    dist: dict[str, Frac] = {}
    heap: list[tuple] = []
    counter = 0

    def push(v: str, d: Frac) -> None:
        nonlocal counter
        if v not in dist or d < dist[v]:
            counter += 1
            heapq.heappush(heap, (d, counter, v))

    for v in target.vertices:
        push(v, Frac(0))
    for eid, items in target.intervals.items():
        e = graph.edges[eid]
        push(e.u, items[0][0])
        push(e.v, e.length - items[-1][1])
    while heap:
        d, _, v = heapq.heappop(heap)
        if v in dist:
            continue
        dist[v] = d
        for eid, end in graph.adjacency[v]:
            e = graph.edges[eid]
            w = e.v if end == 0 else e.u
            if w not in dist:
                push(w, d + e.length)
    missing = set(graph.vertices) - set(dist)
    if missing:
        raise PreconditionError(
            f"target unreachable from vertices {sorted(missing)}; graph disconnected"
        )
    per_edge: dict[str, tuple] = {}
    for eid, e in graph.edges.items():
        L = e.length
        candidates = [
            ((Frac(0), dist[e.u]), (L, dist[e.u] + L)),
            ((Frac(0), dist[e.v] + L), (L, dist[e.v])),
        ]
        envelope = _bp_simplify(list(candidates[0]))
        envelope = _bp_min(envelope, list(candidates[1]))
        for lo, hi in target.intervals.get(eid, ()):
            local: list[tuple] = []
            if lo > 0:
                local.append((Frac(0), lo))
            local.append((lo, Frac(0)))
            if hi != lo:
                local.append((hi, Frac(0)))
            if hi < L:
                local.append((L, L - hi))
            envelope = _bp_min(envelope, _bp_simplify(local))
        per_edge[eid] = envelope
    return PLFunction(graph, per_edge)


def point_distance(graph: MetricGraph, p: Point, q: Point) -> Frac:
    return distance_to_set(graph, graph.point_closed_set([p])).eval(q)


@dataclass(frozen=True)
class KappaComponent:
    """One coordinate of the barycentric distance map: a quotient of a PL
    numerator by a shared PL denominator (not itself PL)."""

    numerator: PLFunction
    denominator: PLFunction

    def value(self, p: Point) -> Frac:
        return self.numerator.eval(p) / self.denominator.eval(p)


@dataclass(frozen=True)
class KappaMap:
    graph: MetricGraph
    d_a: PLFunction
    d_b: PLFunction
    d_c: PLFunction

    @property
    def denominator(self) -> PLFunction:
        return (self.d_a + self.d_b) + self.d_c

    def components(self) -> tuple[KappaComponent, KappaComponent, KappaComponent]:
        den = self.denominator
        return (
            KappaComponent(self.d_a, den),
            KappaComponent(self.d_b, den),
            KappaComponent(self.d_c, den),
        )

    def values(self, p: Point) -> tuple[Frac, Frac, Frac]:
        da, db, dc = self.d_a.eval(p), self.d_b.eval(p), self.d_c.eval(p)
        den = da + db + dc
        return (da / den, db / den, dc / den)

    def barycenter_locus(self) -> ClosedSet:
        """Points where all three distances agree, i.e. the kappa triple is
        the barycenter (1/3, 1/3, 1/3)."""
        ab = (self.d_a - self.d_b).level_set(0)
        bc = (self.d_b - self.d_c).level_set(0)
        return ab & bc

    def min_region(self, which: int) -> ClosedSet:
        """Closed region where the chosen distance is minimal; equals the
        radial-projection preimage of the triangle side opposite that
        coordinate."""
        ds = (self.d_a, self.d_b, self.d_c)
        me = ds[which]
        others = [d for i, d in enumerate(ds) if i != which]
        region = (me - others[0]).sublevel_set(0)
        return region & (me - others[1]).sublevel_set(0)


def kappa_map(graph: MetricGraph, a: ClosedSet, b: ClosedSet, c: ClosedSet) -> KappaMap:
    """The triple of normalized distance quotients toward a, b, c.

    Requires a, b, c nonempty with empty triple intersection so the shared
    denominator never vanishes; callers handle empty inputs with the
    constant-witness shortcut instead."""
    for name, s in (("a", a), ("b", b), ("c", c)):
        if s.is_empty():
            raise PreconditionError(f"kappa input {name} is empty; use the shortcut")
    if not ((a & b) & c).is_empty():
        raise PreconditionError("kappa inputs must have empty triple intersection")
    return KappaMap(graph, distance_to_set(graph, a), distance_to_set(graph, b),
                    distance_to_set(graph, c))


# --------------------------------------------------------------------------
# Urysohn separation
# --------------------------------------------------------------------------

def urysohn(
    graph: MetricGraph,
    zero_set: ClosedSet,
    one_set: ClosedSet,
    pin_low: ClosedSet | None = None,
    pin_high: ClosedSet | None = None,
) -> PLFunction:
    """An exact PL function that is 0 on `zero_set`, 1 on `one_set`, at most
    1/2 on `pin_low` and at least 1/2 on `pin_high`.

    Built as a clamped affine image of d(., zero u pin_low) - d(., one u
    pin_high); the slope is chosen exactly so the clamps engage on the
    mandatory sets.  Postconditions are verified before returning."""
    low = zero_set if pin_low is None else zero_set | pin_low
    high = one_set if pin_high is None else one_set | pin_high
    if not (zero_set & one_set).is_empty():
        raise PreconditionError("zero and one sets must be disjoint")
    if pin_high is not None and not (zero_set & pin_high).is_empty():
        raise PreconditionError("zero set meets the high pin")
    if pin_low is not None and not (one_set & pin_low).is_empty():
        raise PreconditionError("one set meets the low pin")
    if low.is_empty() and high.is_empty():
        return PLFunction.constant(graph, Frac(1, 2))
    if high.is_empty():
        return PLFunction.constant(graph, 0)
    if low.is_empty():
        return PLFunction.constant(graph, 1)
    d_low = distance_to_set(graph, low)
    d_high = distance_to_set(graph, high)
    bounds = []
    if not zero_set.is_empty():
        m = d_high.min_over(zero_set)
        if m <= 0:
            raise PreconditionError("zero set touches the high side")
        bounds.append(Frac(1, 2) / m)
    if not one_set.is_empty():
        m = d_low.min_over(one_set)
        if m <= 0:
            raise PreconditionError("one set touches the low side")
        bounds.append(Frac(1, 2) / m)
    lam = max(bounds) if bounds else Frac(1)
    f = (d_low - d_high).affine(lam, Frac(1, 2)).clamp(0, 1)
    _urysohn_check(f, zero_set, one_set, pin_low, pin_high)
    return f


def _urysohn_check(f, zero_set, one_set, pin_low, pin_high) -> None:
    if not zero_set.is_empty() and f.max_over(zero_set) != 0:
        raise InvariantViolationError("urysohn: not 0 on the zero set")
    if not one_set.is_empty() and f.min_over(one_set) != 1:
        raise InvariantViolationError("urysohn: not 1 on the one set")
    if pin_low is not None and not pin_low.is_empty():
        if f.max_over(pin_low) > Frac(1, 2):
            raise InvariantViolationError("urysohn: low pin violated")
    if pin_high is not None and not pin_high.is_empty():
        if f.min_over(pin_high) < Frac(1, 2):
            raise InvariantViolationError("urysohn: high pin violated")


# --------------------------------------------------------------------------
# Piecewise-linear maps between graphs
# --------------------------------------------------------------------------

class PLMap:
    """A PL map described per domain edge: constant onto a point, or affine
    onto a segment of one codomain edge."""

    def __init__(
        self,
        domain: MetricGraph,
        codomain: MetricGraph,
        vertex_map: Mapping[str, Point],
        edge_map: Mapping[str, tuple],
    ):
        self.domain = domain
        self.codomain = codomain
        self.vertex_map = {
            v: codomain.normalize_point(p) for v, p in vertex_map.items()
        }
        if set(self.vertex_map) != set(domain.vertices):
            raise InputError("vertex map must cover every domain vertex")
        self.edge_map: dict[str, tuple] = {}
        for eid, e in domain.edges.items():
            if eid not in edge_map:
                raise InputError(f"edge map missing edge {eid!r}")
            entry = edge_map[eid]
            if entry[0] == "const":
                entry = ("const", codomain.normalize_point(entry[1]))
            elif entry[0] == "affine":
                _, target, s0, s1 = entry
                s0, s1 = frac(s0), frac(s1)
                te = codomain.edges[target]
                if not (0 <= s0 <= te.length and 0 <= s1 <= te.length):
                    raise InputError(f"affine image outside edge {target!r}")
                if s0 == s1:
                    raise InputError("degenerate affine entry; use const")
                entry = ("affine", target, s0, s1)
            else:
                raise InputError(f"unknown edge map kind {entry[0]!r}")
            self.edge_map[eid] = entry
            got_u = self._edge_point(eid, Frac(0))
            got_v = self._edge_point(eid, e.length)
            if got_u != self.vertex_map[e.u] or got_v != self.vertex_map[e.v]:
                raise InputError(f"edge map discontinuous at edge {eid!r}")

    def _edge_point(self, eid: str, t: Frac) -> Point:
        entry = self.edge_map[eid]
        if entry[0] == "const":
            return entry[1]
        _, target, s0, s1 = entry
        L = self.domain.edges[eid].length
        return self.codomain.point(target, s0 + (s1 - s0) * t / L)

    @staticmethod
    def identity(graph: MetricGraph) -> "PLMap":
        return PLMap(
            graph,
            graph,
            {v: ("v", v) for v in graph.vertices},
            {eid: ("affine", eid, 0, e.length) for eid, e in graph.edges.items()},
        )

    def image_point(self, p: Point) -> Point:
        p = self.domain.normalize_point(p)
        if p[0] == "v":
            return self.vertex_map[p[1]]
        return self._edge_point(p[1], p[2])

    def image_of(self, s: ClosedSet) -> ClosedSet:
        if s.graph is not self.domain:
            raise UsageError("closed set not on the domain")
        intervals: dict[str, list] = {}
        verts: set[str] = set()

        def add_point(p: Point) -> None:
            if p[0] == "v":
                verts.add(p[1])
            else:
                intervals.setdefault(p[1], []).append((p[2], p[2]))

        for v in s.vertices:
            add_point(self.vertex_map[v])
        for eid, items in s.intervals.items():
            entry = self.edge_map[eid]
            if entry[0] == "const":
                add_point(entry[1])
                continue
            _, target, s0, s1 = entry
            L = self.domain.edges[eid].length
            for lo, hi in items:
                a = s0 + (s1 - s0) * lo / L
                b = s0 + (s1 - s0) * hi / L
                intervals.setdefault(target, []).append((min(a, b), max(a, b)))
        return ClosedSet(self.codomain, intervals, verts)

    def preimage_of(self, t: ClosedSet) -> ClosedSet:
        if t.graph is not self.codomain:
            raise UsageError("closed set not on the codomain")
        intervals: dict[str, list] = {}
        verts: set[str] = set()
        for v in self.domain.vertices:
            if t.contains_point(self.vertex_map[v]):
                verts.add(v)
        for eid, e in self.domain.edges.items():
            entry = self.edge_map[eid]
            if entry[0] == "const":
                if t.contains_point(entry[1]):
                    intervals.setdefault(eid, []).append((Frac(0), e.length))
                continue
            _, target, s0, s1 = entry
            L = e.length
            lo_t, hi_t = min(s0, s1), max(s0, s1)
            for lo, hi in t.intervals.get(target, ()):
                lo2, hi2 = max(lo, lo_t), min(hi, hi_t)
                if lo2 > hi2:
                    continue
                a = (lo2 - s0) * L / (s1 - s0)
                b = (hi2 - s0) * L / (s1 - s0)
                intervals.setdefault(eid, []).append((min(a, b), max(a, b)))
        return ClosedSet(self.domain, intervals, verts)

    def then(self, g: "PLMap") -> "PLMap":
        """Composition g after self."""
        if g.domain is not self.codomain:
            raise UsageError("maps do not compose")
        vmap = {v: g.image_point(p) for v, p in self.vertex_map.items()}
        emap: dict[str, tuple] = {}
        for eid, entry in self.edge_map.items():
            if entry[0] == "const":
                emap[eid] = ("const", g.image_point(entry[1]))
                continue
            _, target, s0, s1 = entry
            inner = g.edge_map[target]
            if inner[0] == "const":
                emap[eid] = ("const", inner[1])
                continue
            _, t2, r0, r1 = inner
            L = g.domain.edges[target].length
            u0 = r0 + (r1 - r0) * s0 / L
            u1 = r0 + (r1 - r0) * s1 / L
            if u0 == u1:
                emap[eid] = ("const", g.codomain.point(t2, u0))
            else:
                emap[eid] = ("affine", t2, u0, u1)
        return PLMap(self.domain, g.codomain, vmap, emap)

    def is_surjective(self) -> bool:
        return self.image_of(self.domain.whole_set()) == self.codomain.whole_set()

    def to_dict(self) -> dict:
        def pt(p):
            return {"v": p[1]} if p[0] == "v" else {"e": p[1], "t": frac_str(p[2])}

        edges = {}
        for eid, entry in sorted(self.edge_map.items()):
            if entry[0] == "const":
                edges[eid] = {"kind": "const", "point": pt(entry[1])}
            else:
                edges[eid] = {
                    "kind": "affine",
                    "edge": entry[1],
                    "s0": frac_str(entry[2]),
                    "s1": frac_str(entry[3]),
                }
        return {
            "vertex_map": {v: pt(p) for v, p in sorted(self.vertex_map.items())},
            "edge_map": edges,
        }

    @staticmethod
    def from_dict(domain: MetricGraph, codomain: MetricGraph, data: Mapping) -> "PLMap":
        def pt(d):
            return ("v", d["v"]) if "v" in d else ("e", d["e"], frac(d["t"]))

        vmap = {v: pt(p) for v, p in data["vertex_map"].items()}
        emap = {}
        for eid, entry in data["edge_map"].items():
            if entry["kind"] == "const":
                emap[eid] = ("const", pt(entry["point"]))
            else:
                emap[eid] = ("affine", entry["edge"], frac(entry["s0"]), frac(entry["s1"]))
        return PLMap(domain, codomain, vmap, emap)


# --------------------------------------------------------------------------
# Sublattice extraction
# --------------------------------------------------------------------------

@dataclass
class ExtractResult:
    lattice: FiniteLattice
    interpretation: Interpretation
    cells: list[tuple]
    graph: MetricGraph
    _cell_index: dict = field(default_factory=dict)

    def closed_set_of(self, element) -> ClosedSet:
        """Geometric realization of a lattice element: the union of its
        (closed) cells."""
        index = element if isinstance(element, int) else element.index
        intervals: dict[str, list] = {}
        verts: set[str] = set()
        for ci in self.lattice.elements[index]:
            cell = self.cells[ci]
            if cell[0] == "v":
                verts.add(cell[1])
            elif cell[0] == "p":
                intervals.setdefault(cell[1], []).append((cell[2], cell[2]))
            else:
                intervals.setdefault(cell[1], []).append((cell[2], cell[3]))
        return ClosedSet(self.graph, intervals, verts)


def arrangement_cells(graph: MetricGraph, sets: Iterable[ClosedSet]) -> list[tuple]:
    """Cells of the common refinement of all interval endpoints: vertices,
    interior 0-cells, and open 1-cells between consecutive breakpoints."""
    cuts: dict[str, set] = {eid: set() for eid in graph.edges}
    for s in sets:
        for eid, items in s.intervals.items():
            e = graph.edges[eid]
            for lo, hi in items:
                for t in (lo, hi):
                    if 0 < t < e.length:
                        cuts[eid].add(t)
    cells: list[tuple] = [("v", v) for v in graph.vertices]
    for eid in sorted(graph.edges):
        e = graph.edges[eid]
        marks = [Frac(0)] + sorted(cuts[eid]) + [e.length]
        for t in marks[1:-1]:
            cells.append(("p", eid, t))
        for lo, hi in zip(marks, marks[1:]):
            cells.append(("o", eid, lo, hi))
    return cells


def _cell_in_set(cell: tuple, s: ClosedSet) -> bool:
    if cell[0] == "v":
        return cell[1] in s.vertices
    if cell[0] == "p":
        return any(lo <= cell[2] <= hi for lo, hi in s.intervals.get(cell[1], ()))
    _, eid, lo, hi = cell
    return any(ilo <= lo and hi <= ihi for ilo, ihi in s.intervals.get(eid, ()))


def extract_sublattice(
    graph: MetricGraph,
    named_sets: Mapping[str, ClosedSet],
    cap: int = 4096,
) -> ExtractResult:
    """A finite closed-set sublattice at arrangement granularity.

    The ground set is the cell decomposition induced by all interval
    endpoints; each named set becomes the element of its cell footprint; the
    whole graph is always adjoined so the lattice top is the space itself."""
    names = sorted(named_sets)
    for name in names:
        if named_sets[name].graph is not graph:
            raise UsageError(f"set {name!r} lives on a different graph")
    cells = arrangement_cells(graph, [named_sets[n] for n in names])
    cell_ids = {cell: i for i, cell in enumerate(cells)}
    footprints = []
    gen_names = []
    for name in names:
        s = named_sets[name]
        footprints.append(
            frozenset(i for i, cell in enumerate(cells) if _cell_in_set(cell, s))
        )
        gen_names.append(name)
    footprints.append(frozenset(range(len(cells))))
    gen_names.append("__whole__")
    lattice = generate_sublattice(
        range(len(cells)), footprints, names=gen_names, cap=cap
    )
    interp = Interpretation()
    for name, fp in zip(gen_names, footprints):
        if name != "__whole__":
            interp.assign(name, lattice.element_for(fp))
    return ExtractResult(lattice, interp, cells, graph, cell_ids)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def graph_to_dict(graph: MetricGraph, closed_sets: Mapping[str, ClosedSet] | None = None) -> dict:
    payload: dict = {
        "vertices": list(graph.vertices),
        "edges": [
            {"id": eid, "u": e.u, "v": e.v, "len": frac_str(e.length)}
            for eid, e in sorted(graph.edges.items())
        ],
        "closed_sets": {
            name: cs.to_dict() for name, cs in sorted((closed_sets or {}).items())
        },
    }
    if graph.meta:
        payload["meta"] = _meta_to_json(graph.meta)
    return payload


def _meta_to_json(meta):
    if isinstance(meta, dict):
        return {k: _meta_to_json(v) for k, v in sorted(meta.items())}
    if isinstance(meta, (list, tuple)):
        return [_meta_to_json(v) for v in meta]
    if isinstance(meta, Frac):
        return frac_str(meta)
    return meta


def graph_from_dict(data: Mapping) -> tuple[MetricGraph, dict[str, ClosedSet]]:
    try:
        vertices = list(data["vertices"])
        edges = [
            Edge(str(e["id"]), str(e["u"]), str(e["v"]), frac(e["len"]))
            for e in data["edges"]
        ]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed graph file: {exc}") from exc
    graph = MetricGraph(vertices, edges, dict(data.get("meta", {})))
    sets = {
        name: ClosedSet.from_dict(graph, spec)
        for name, spec in data.get("closed_sets", {}).items()
    }
    return graph, sets


def load_graph(path: str) -> tuple[MetricGraph, dict[str, ClosedSet]]:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


def dump_graph(graph: MetricGraph, closed_sets=None) -> str:
    return json.dumps(graph_to_dict(graph, closed_sets), indent=2, sort_keys=True) + "\n"


def unit_segment(name: str = "seg") -> MetricGraph:
    """The unit interval as a one-edge graph; the bundled base space."""
    return MetricGraph(["a", "b"], [Edge(name, "a", "b", Frac(1))])
