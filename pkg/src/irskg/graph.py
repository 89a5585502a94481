"""In-memory labeled property multigraph.

Every vertex and edge carries exactly one label plus a flat map of string
keys to scalar values (text, 64-bit signed integer, 64-bit float, or
boolean). Parallel edges between the same endpoints are allowed, so each
observed interaction keeps its own edge. Ids are graph-local non-negative
integers, handed out in ascending order and never reused; iteration over
vertices or edges therefore always runs in ascending-id order, which keeps
exports and tests reproducible.

Concurrency contract: single writer, multiple readers. Mutating calls
require exclusive access to the graph; read-only calls may run concurrently
whenever no writer is active. No locking is done here - callers serialize
writes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    DanglingEndpoint,
    EmptyLabel,
    MissingIdentityKey,
    UnknownEdge,
    UnknownVertex,
)

PropertyValue = str | int | float | bool
PropertyMap = dict[str, PropertyValue]

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


def validate_property_value(key: str, value: PropertyValue) -> None:
    """Reject values outside the four supported scalar variants.

    Booleans are checked before integers because bool is an int subclass in
    Python, yet the two are distinct variants here.
    """
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise ValueError(
                f"property {key!r}: integer {value} outside 64-bit signed range"
            )
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"property {key!r}: non-finite float values are not supported")
        return
    if isinstance(value, str):
        return
    raise TypeError(
        f"property {key!r}: unsupported value type {type(value).__name__} "
        "(expected str, int, float or bool)"
    )


def validate_property_map(properties: PropertyMap) -> None:
    for key, value in properties.items():
        if not isinstance(key, str) or not key:
            raise TypeError(f"property keys must be non-empty strings, got {key!r}")
        validate_property_value(key, value)


def prop_equal(a: PropertyValue, b: PropertyValue) -> bool:
    """Strict variant-aware equality: 1 != True and 1 != 1.0 here."""
    return type(a) is type(b) and a == b


def _index_key(value: PropertyValue) -> tuple[str, PropertyValue]:
    # True and 1 hash alike; tagging with the type name keeps them apart.
    return (type(value).__name__, value)


@dataclass
class Vertex:
    id: int
    label: str
    properties: PropertyMap = field(default_factory=dict)


@dataclass
class Edge:
    id: int
    label: str
    src: int
    dst: int
    properties: PropertyMap = field(default_factory=dict)


class PropertyGraph:
    """Mutable multigraph of single-labeled vertices and edges."""

    def __init__(self) -> None:
        self.vertices: dict[int, Vertex] = {}
        self.edges: dict[int, Edge] = {}
        self._next_vertex_id = 0
        self._next_edge_id = 0
        self._degree: dict[int, int] = {}
        # Lazy per-key lookup of property value -> lowest vertex id carrying
        # it, so upserts stay O(1) on large ingests. Entries are verified on
        # hit and rebuilt when a merge made them stale.
        self._identity_index: dict[str, dict[tuple[str, PropertyValue], int]] = {}

    # -- introspection ------------------------------------------------------

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def vertex(self, vertex_id: int) -> Vertex:
        try:
            return self.vertices[vertex_id]
        except KeyError:
            raise UnknownVertex(f"no vertex with id {vertex_id}") from None

    def edge(self, edge_id: int) -> Edge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownEdge(f"no edge with id {edge_id}") from None

    def vertex_ids(self) -> list[int]:
        return list(self.vertices)

    def edge_ids(self) -> list[int]:
        return list(self.edges)

    # -- mutation -----------------------------------------------------------

    def add_vertex(self, label: str, properties: Optional[PropertyMap] = None) -> int:
        """Add a new vertex and return its fresh id.

        Raises:
            EmptyLabel: label is empty or not a string.
        """
        if not isinstance(label, str) or not label:
            raise EmptyLabel("vertex label must be a non-empty string")
        props = dict(properties) if properties else {}
        validate_property_map(props)
        vid = self._next_vertex_id
        self._next_vertex_id += 1
        self.vertices[vid] = Vertex(id=vid, label=label, properties=props)
        self._degree[vid] = 0
        for key in self._identity_index:
            if key in props:
                self._identity_index[key].setdefault(_index_key(props[key]), vid)
        return vid

    def upsert_vertex(
        self, label: str, identity_key: str, properties: PropertyMap
    ) -> tuple[int, bool]:
        """Merge into the vertex whose ``identity_key`` property matches, or add one.

        On a match the new properties are merged in (new keys win) and the
        existing label is kept. Returns ``(vertex id, created)``.

        Raises:
            MissingIdentityKey: ``properties`` does not carry ``identity_key``.
            EmptyLabel: a new vertex would be created with an empty label.
        """
        if identity_key not in properties:
            raise MissingIdentityKey(
                f"properties do not contain identity key {identity_key!r}"
            )
        props = dict(properties)
        validate_property_map(props)
        existing = self._find_by_property(identity_key, props[identity_key])
        if existing is not None:
            vertex = self.vertices[existing]
            vertex.properties.update(props)
            for key in self._identity_index:
                if key in props:
                    self._identity_index[key].setdefault(_index_key(props[key]), existing)
            return existing, False
        return self.add_vertex(label, props), True

    def add_edge(
        self, src: int, dst: int, label: str, properties: Optional[PropertyMap] = None
    ) -> int:
        """Append an edge; parallel edges between the same endpoints are fine.

        Raises:
            DanglingEndpoint: src or dst is not a vertex of this graph.
            EmptyLabel: label is empty or not a string.
        """
        if src not in self.vertices:
            raise DanglingEndpoint(f"edge source {src} is not a vertex of this graph")
        if dst not in self.vertices:
            raise DanglingEndpoint(f"edge destination {dst} is not a vertex of this graph")
        if not isinstance(label, str) or not label:
            raise EmptyLabel("edge label must be a non-empty string")
        props = dict(properties) if properties else {}
        validate_property_map(props)
        eid = self._next_edge_id
        self._next_edge_id += 1
        self.edges[eid] = Edge(id=eid, label=label, src=src, dst=dst, properties=props)
        self._degree[src] += 1
        self._degree[dst] += 1  # a self-loop contributes 2
        return eid

    # -- queries ------------------------------------------------------------

    def degree(self, vertex_id: int) -> int:
        """Number of edge-endpoint incidences at the vertex (self-loop counts 2)."""
        if vertex_id not in self.vertices:
            raise UnknownVertex(f"no vertex with id {vertex_id}")
        return self._degree[vertex_id]

    def edges_between(self, a: int, b: int) -> list[int]:
        """All edge ids joining a and b in either direction, insertion order."""
        if a not in self.vertices:
            raise UnknownVertex(f"no vertex with id {a}")
        if b not in self.vertices:
            raise UnknownVertex(f"no vertex with id {b}")
        return [
            e.id
            for e in self.edges.values()
            if (e.src == a and e.dst == b) or (e.src == b and e.dst == a)
        ]

    def find_vertices(
        self,
        label: Optional[str] = None,
        key: Optional[str] = None,
        value: Optional[PropertyValue] = None,
    ) -> list[int]:
        """Vertex ids matching every supplied filter, in ascending id order.

        ``key`` alone requires the property to be present; ``key`` plus
        ``value`` requires strict (variant-aware) equality.
        """
        out = []
        for vid, vertex in self.vertices.items():
            if label is not None and vertex.label != label:
                continue
            if key is not None:
                if key not in vertex.properties:
                    continue
                if value is not None and not prop_equal(vertex.properties[key], value):
                    continue
            out.append(vid)
        return out

    # -- integrity ----------------------------------------------------------

    def check_integrity(self) -> None:
        """Assert the single-label law and referential integrity.

        Intended after every mutation batch and after every import.
        """
        for vertex in self.vertices.values():
            if not isinstance(vertex.label, str) or not vertex.label:
                raise EmptyLabel(f"vertex {vertex.id} has no label")
        for edge in self.edges.values():
            if not isinstance(edge.label, str) or not edge.label:
                raise EmptyLabel(f"edge {edge.id} has no label")
            if edge.src not in self.vertices:
                raise DanglingEndpoint(f"edge {edge.id} source {edge.src} missing")
            if edge.dst not in self.vertices:
                raise DanglingEndpoint(f"edge {edge.id} destination {edge.dst} missing")

    # -- copying ------------------------------------------------------------

    def copy(self) -> "PropertyGraph":
        """Independent deep copy (ids and counters preserved)."""
        out = PropertyGraph()
        for vid, vertex in self.vertices.items():
            out.vertices[vid] = Vertex(vid, vertex.label, dict(vertex.properties))
        for eid, edge in self.edges.items():
            out.edges[eid] = Edge(eid, edge.label, edge.src, edge.dst, dict(edge.properties))
        out._next_vertex_id = self._next_vertex_id
        out._next_edge_id = self._next_edge_id
        out._degree = dict(self._degree)
        return out

    # -- internals ----------------------------------------------------------

    def _find_by_property(self, key: str, value: PropertyValue) -> Optional[int]:
        index = self._identity_index.get(key)
        if index is None:
            index = self._build_index(key)
        hit = index.get(_index_key(value))
        if hit is None:
            return None
        current = self.vertices[hit].properties.get(key)
        if current is not None and prop_equal(current, value):
            return hit
        # A later merge overwrote the indexed value; rebuild and retry once.
        index = self._build_index(key)
        return index.get(_index_key(value))

    def _build_index(self, key: str) -> dict[tuple[str, PropertyValue], int]:
        index: dict[tuple[str, PropertyValue], int] = {}
        for vid, vertex in self.vertices.items():
            if key in vertex.properties:
                index.setdefault(_index_key(vertex.properties[key]), vid)
        self._identity_index[key] = index
        return index
