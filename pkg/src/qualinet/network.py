"""Compiled discrete network: immutable nodes, tables, and JSON transport.

The serialized form is the interchange format between the compiler, the
command line, and the HTTP API.  Floats are printed with 17 significant
digits so that identical networks serialize to identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

__all__ = [
    "CompiledNetwork",
    "NetworkFormatError",
    "NetworkNode",
    "UnknownNodeError",
    "canonical_json",
    "network_from_json",
]

NODE_KINDS = ("activity", "fact", "indicator")


class NetworkFormatError(ValueError):
    """Malformed or inconsistent serialized network."""


class UnknownNodeError(LookupError):
    """Evidence or query references a node that is not in the network."""


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise NetworkFormatError(f"non-finite number {value!r} in output")
    return f"{value:.17g}"


def canonical_json(obj) -> str:
    """Deterministic compact JSON with 17-significant-digit floats."""
    parts: list[str] = []

    def emit(value) -> None:
        if value is None or isinstance(value, bool):
            parts.append(json.dumps(value))
        elif isinstance(value, int):
            parts.append(str(value))
        elif isinstance(value, float):
            parts.append(_format_float(value))
        elif isinstance(value, str):
            parts.append(json.dumps(value, ensure_ascii=False))
        elif isinstance(value, (list, tuple)):
            parts.append("[")
            for i, item in enumerate(value):
                if i:
                    parts.append(",")
                emit(item)
            parts.append("]")
        elif isinstance(value, dict):
            parts.append("{")
            for i, (key, item) in enumerate(value.items()):
                if i:
                    parts.append(",")
                if not isinstance(key, str):
                    raise NetworkFormatError(f"non-string key {key!r}")
                parts.append(json.dumps(key, ensure_ascii=False))
                parts.append(":")
                emit(item)
            parts.append("}")
        else:
            raise NetworkFormatError(f"cannot serialize {type(value).__name__}")

    emit(obj)
    return "".join(parts)


@dataclass(frozen=True)
class NetworkNode:
    """One discrete node: ordered states and a conditional table.

    ``cpt`` is flattened state-major: entry ``s * n_combos + c`` is the
    probability of state ``s`` given parent combination ``c``, where parent
    combinations are enumerated row-major with the last parent varying
    fastest.  Root nodes have a single combination (their prior).
    """

    id: str
    kind: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    cpt: tuple[float, ...]
    bounds: tuple[float, ...] | None = None

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise NetworkFormatError(
                f"node {self.id!r} has no state {label!r} (states: {', '.join(self.states)})"
            ) from None


@dataclass(frozen=True)
class CompiledNetwork:
    name: str
    nodes: tuple[NetworkNode, ...]

    def __post_init__(self) -> None:
        self._validate()

    @cached_property
    def node_map(self) -> dict[str, NetworkNode]:
        return {n.id: n for n in self.nodes}

    def node(self, node_id: str) -> NetworkNode:
        found = self.node_map.get(node_id)
        if found is None:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        return found

    @cached_property
    def children_map(self) -> dict[str, tuple[str, ...]]:
        children: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for p in n.parents:
                children[p].append(n.id)
        return {k: tuple(v) for k, v in children.items()}

    @property
    def state_space_size(self) -> int:
        size = 1
        for n in self.nodes:
            size *= n.cardinality
        return size

    def fact_indicator_ids(self) -> tuple[str, ...]:
        """Indicator nodes attached to fact nodes, in network order."""
        out = []
        for n in self.nodes:
            if n.kind == "indicator" and n.parents:
                if self.node_map[n.parents[0]].kind == "fact":
                    out.append(n.id)
        return tuple(out)

    def _validate(self) -> None:
        seen: set[str] = set()
        for n in self.nodes:
            if n.id in seen:
                raise NetworkFormatError(f"duplicate node id {n.id!r}")
            seen.add(n.id)
            if n.kind not in NODE_KINDS:
                raise NetworkFormatError(f"node {n.id!r} has unknown kind {n.kind!r}")
            if n.cardinality < 1:
                raise NetworkFormatError(f"node {n.id!r} has no states")
            if len(set(n.states)) != n.cardinality:
                raise NetworkFormatError(f"node {n.id!r} has duplicate state labels")
            if n.bounds is not None and len(n.bounds) != n.cardinality + 1:
                raise NetworkFormatError(
                    f"node {n.id!r} has {len(n.bounds)} bounds for {n.cardinality} states"
                )
        node_map = {n.id: n for n in self.nodes}
        for n in self.nodes:
            combos = 1
            for p in n.parents:
                parent = node_map.get(p)
                if parent is None:
                    raise NetworkFormatError(f"node {n.id!r} references unknown parent {p!r}")
                combos *= parent.cardinality
            if len(n.cpt) != combos * n.cardinality:
                raise NetworkFormatError(
                    f"node {n.id!r} table has {len(n.cpt)} entries, expected {combos * n.cardinality}"
                )
            for c in range(combos):
                total = math.fsum(n.cpt[s * combos + c] for s in range(n.cardinality))
                if abs(total - 1.0) > 1e-9:
                    raise NetworkFormatError(
                        f"node {n.id!r} column {c} sums to {total!r}, expected 1"
                    )
            if any(v < 0 for v in n.cpt):
                raise NetworkFormatError(f"node {n.id!r} table has negative entries")
        # Parent edges must form a DAG.
        state: dict[str, int] = {}

        def visit(nid: str, trail: tuple[str, ...]) -> None:
            mark = state.get(nid, 0)
            if mark == 1:
                cycle = " -> ".join(trail + (nid,))
                raise NetworkFormatError(f"cycle in network: {cycle}")
            if mark == 2:
                return
            state[nid] = 1
            for p in node_map[nid].parents:
                visit(p, trail + (nid,))
            state[nid] = 2

        for n in self.nodes:
            visit(n.id, ())

    @cached_property
    def topological_order(self) -> tuple[str, ...]:
        """Parents before children, stable within the declared node order."""
        order: list[str] = []
        placed: set[str] = set()

        def visit(nid: str) -> None:
            if nid in placed:
                return
            placed.add(nid)
            for p in self.node_map[nid].parents:
                visit(p)
            order.append(nid)

        for n in self.nodes:
            visit(n.id)
        return tuple(order)

    def to_json_obj(self) -> dict:
        nodes = []
        for n in self.nodes:
            entry: dict = {
                "id": n.id,
                "kind": n.kind,
                "states": list(n.states),
            }
            if n.bounds is not None:
                entry["bounds"] = [float(b) for b in n.bounds]
            entry["parents"] = list(n.parents)
            entry["cpt"] = [float(v) for v in n.cpt]
            nodes.append(entry)
        return {"name": self.name, "nodes": nodes}

    def to_json(self) -> str:
        return canonical_json(self.to_json_obj())


def network_from_json(text: str) -> CompiledNetwork:
    """Parse and validate a serialized network."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc}") from exc
    return network_from_obj(obj)


def network_from_obj(obj) -> CompiledNetwork:
    if not isinstance(obj, dict):
        raise NetworkFormatError("network must be a JSON object")
    name = obj.get("name")
    nodes_raw = obj.get("nodes")
    if not isinstance(name, str) or not isinstance(nodes_raw, list):
        raise NetworkFormatError("network needs a string 'name' and a list 'nodes'")
    nodes = []
    for entry in nodes_raw:
        if not isinstance(entry, dict):
            raise NetworkFormatError("every node must be a JSON object")
        try:
            bounds = entry.get("bounds")
            nodes.append(
                NetworkNode(
                    id=str(entry["id"]),
                    kind=str(entry["kind"]),
                    states=tuple(str(s) for s in entry["states"]),
                    parents=tuple(str(p) for p in entry["parents"]),
                    cpt=tuple(float(v) for v in entry["cpt"]),
                    bounds=None if bounds is None else tuple(float(b) for b in bounds),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise NetworkFormatError(f"malformed node entry: {exc}") from exc
    return CompiledNetwork(name=name, nodes=tuple(nodes))
