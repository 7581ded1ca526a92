"""Compile a quality model and a goal into a discrete network.

Derivation walks the activity tree from the goal activity, collects the
facts whose impacts land in that subtree, attaches the declared indicators,
and synthesizes a conditional table for every node: weighted-mean truncated
Normals for ranked activity nodes, priors for roots, and the declared
partitioned or arithmetic expressions for indicators.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    DEFAULT_VARIANCE,
    FactRef,
    GoalSpec,
    Impact,
    QualityModel,
    Subject,
    expand_inheritance,
)
from .network import CompiledNetwork, NetworkNode
from .npt import ParentLink, RankedScale, build_indicator_npt, build_ranked_npt

__all__ = [
    "CompileError",
    "NetworkSkeleton",
    "SkeletonEdge",
    "SkeletonNode",
    "build_skeleton",
    "collect_impacted_facts",
    "compile_model",
    "derive_activities",
    "interval_labels",
    "resolve_goal",
    "synthesize_network",
]


class CompileError(Exception):
    """Model cannot be compiled against the requested goal."""


@dataclass(frozen=True)
class SkeletonNode:
    id: str
    kind: str  # activity | fact | indicator
    states: tuple[str, ...]
    bounds: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SkeletonEdge:
    source: str
    target: str
    tag: str  # subactivity | impact | indicates
    negative: bool = False


@dataclass(frozen=True)
class NetworkSkeleton:
    nodes: tuple[SkeletonNode, ...]
    edges: tuple[SkeletonEdge, ...]

    def parents_of(self, node_id: str) -> tuple[SkeletonEdge, ...]:
        return tuple(e for e in self.edges if e.target == node_id)


def _fmt_bound(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def interval_labels(bounds: tuple[float, ...]) -> tuple[str, ...]:
    """Half-open interval labels, the last interval closed."""
    labels = []
    for i, (a, b) in enumerate(zip(bounds, bounds[1:])):
        closer = "]" if i == len(bounds) - 2 else ")"
        labels.append(f"[{_fmt_bound(a)},{_fmt_bound(b)}{closer}")
    return tuple(labels)


def resolve_goal(model: QualityModel, goal: str | None) -> GoalSpec:
    """Find a goal by name or by target activity, case-insensitively."""
    if not model.goals:
        raise CompileError("model declares no goals")
    if goal is None:
        if len(model.goals) == 1:
            return model.goals[0]
        names = ", ".join(repr(g.name) for g in model.goals)
        raise CompileError(f"model has several goals ({names}); pick one with --goal")
    wanted = goal.lower()
    for g in model.goals:
        if g.name.lower() == wanted or g.activity.lower() == wanted:
            return g
    raise CompileError(f"no goal named {goal!r} and no goal targeting that activity")


def derive_activities(model: QualityModel, goal: GoalSpec) -> tuple[str, ...]:
    """Goal activity plus its subtree, pre-order, pruned of branches that
    contain no impacted activity.  The goal activity itself always stays."""
    if goal.activity not in model.activity_map:
        raise CompileError(f"unknown activity {goal.activity!r}")
    expanded = expand_inheritance(model)
    impacted = {i.activity for i in expanded.impacts}

    def keep(aid: str) -> bool:
        if aid in impacted:
            return True
        return any(keep(child) for child in model.activity_map[aid].children)

    order: list[str] = []

    def visit(aid: str) -> None:
        order.append(aid)
        for child in model.activity_map[aid].children:
            if keep(child):
                visit(child)

    visit(goal.activity)
    return tuple(order)


def collect_impacted_facts(
    model: QualityModel, activities: tuple[str, ...]
) -> tuple[tuple[FactRef, ...], tuple[Impact, ...]]:
    """Facts with at least one impact into the activity set, post-expansion.

    Returns (facts in model order, impacts in declaration order).
    """
    expanded = expand_inheritance(model)
    in_scope = set(activities)
    impacts = tuple(i for i in expanded.impacts if i.activity in in_scope)
    hit = {i.fact for i in impacts}
    facts = tuple(f.ref for f in expanded.facts if f.ref in hit)
    return facts, impacts


def build_skeleton(model: QualityModel, goal: GoalSpec) -> NetworkSkeleton:
    """Typed node/edge graph before quantification.

    Raises CompileError when an in-scope fact has no indicator, since every
    fact needs at least one measurable expression.
    """
    expanded = expand_inheritance(model)
    activities = derive_activities(expanded, goal)
    facts, impacts = collect_impacted_facts(expanded, activities)

    missing = [str(f) for f in facts if not expanded.indicators_for(f)]
    if missing:
        raise CompileError(
            "every fact needs at least one indicator; missing for: " + ", ".join(missing)
        )

    nodes: list[SkeletonNode] = []
    edges: list[SkeletonEdge] = []
    in_scope = set(activities)

    for aid in activities:
        nodes.append(SkeletonNode(aid, "activity", expanded.scale_for(aid).labels))
        parent = expanded.activity_map[aid].parent
        if parent in in_scope:
            edges.append(SkeletonEdge(aid, parent, "subactivity"))
    for ref in facts:
        nodes.append(SkeletonNode(str(ref), "fact", expanded.scale_for(ref).labels))
    for impact in impacts:
        edges.append(SkeletonEdge(str(impact.fact), impact.activity, "impact", impact.negative))

    subjects: set[Subject] = set(activities) | set(facts)
    for spec in expanded.indicators:
        if spec.subject not in subjects:
            continue
        nodes.append(
            SkeletonNode(spec.id, "indicator", interval_labels(spec.boundaries), spec.boundaries)
        )
        edges.append(SkeletonEdge(str(spec.subject), spec.id, "indicates"))

    seen: set[str] = set()
    for node in nodes:
        if node.id in seen:
            raise CompileError(f"node id {node.id!r} is not unique in the derived network")
        seen.add(node.id)
    return NetworkSkeleton(tuple(nodes), tuple(edges))


def _subject_of(node: SkeletonNode) -> Subject:
    if node.kind == "fact":
        entity, attribute = node.id.split(".", 1)
        return FactRef(entity, attribute)
    return node.id


def synthesize_network(model: QualityModel, skeleton: NetworkSkeleton) -> CompiledNetwork:
    """Attach a conditional table to every skeleton node.

    Parent order per node follows the declaration order of the model text:
    sub-activities first (tree order), then impacting facts (impact order);
    the last parent varies fastest in the table columns.
    """
    expanded = expand_inheritance(model)
    scales: dict[str, RankedScale] = {}
    for node in skeleton.nodes:
        if node.kind != "indicator":
            scales[node.id] = RankedScale.of(len(node.states), node.states)

    nodes: list[NetworkNode] = []
    for node in skeleton.nodes:
        incoming = skeleton.parents_of(node.id)
        sub = [e for e in incoming if e.tag == "subactivity"]
        imp = [e for e in incoming if e.tag == "impact"]
        ind = [e for e in incoming if e.tag == "indicates"]

        if node.kind == "indicator":
            spec = next(s for s in expanded.indicators if s.id == node.id)
            parent_id = ind[0].source
            columns = build_indicator_npt(spec.expression, scales[parent_id], node.bounds)
            cpt = _columns_to_cpt(columns)
            nodes.append(
                NetworkNode(node.id, node.kind, node.states, (parent_id,), cpt, node.bounds)
            )
            continue

        subject = _subject_of(node)
        annotation = expanded.annotation_for(subject)
        parent_edges = sub + imp
        if not parent_edges:
            if annotation is not None and annotation.prior is not None:
                if len(annotation.prior) != len(node.states):
                    raise CompileError(
                        f"prior for {node.id!r} has {len(annotation.prior)} entries "
                        f"for {len(node.states)} states"
                    )
                prior = tuple(float(p) for p in annotation.prior)
            else:
                prior = tuple(1.0 / len(node.states) for _ in node.states)
            nodes.append(NetworkNode(node.id, node.kind, node.states, (), prior))
            continue

        if annotation is not None and annotation.prior is not None:
            raise CompileError(
                f"{node.id!r} has parents; priors are only valid on root nodes"
            )
        weight_map: dict[str, float] = {}
        if annotation is not None:
            parent_ids = {e.source for e in parent_edges}
            for ref, weight in annotation.weights:
                key = str(ref)
                if key not in parent_ids:
                    raise CompileError(
                        f"weight on {node.id!r} references {key!r}, which is not one of its parents"
                    )
                weight_map[key] = weight
        variance = annotation.variance if annotation is not None else DEFAULT_VARIANCE
        links = tuple(
            ParentLink(weight=weight_map.get(e.source, 1.0), negative=e.negative)
            for e in parent_edges
        )
        parent_scales = tuple(scales[e.source] for e in parent_edges)
        columns = build_ranked_npt(parent_scales, links, variance, scales[node.id])
        cpt = _columns_to_cpt(columns)
        parents = tuple(e.source for e in parent_edges)
        nodes.append(NetworkNode(node.id, node.kind, node.states, parents, cpt))

    return CompiledNetwork(name=model.name, nodes=tuple(nodes))


def _columns_to_cpt(columns: list[list[float]]) -> tuple[float, ...]:
    """Flatten per-combination columns into the state-major table layout."""
    states = len(columns[0])
    flat: list[float] = []
    for s in range(states):
        for column in columns:
            flat.append(column[s])
    return tuple(flat)


def compile_model(model: QualityModel, goal: str | None = None) -> CompiledNetwork:
    """Full pipeline: resolve goal, build skeleton, synthesize tables."""
    spec = resolve_goal(model, goal)
    skeleton = build_skeleton(model, spec)
    return synthesize_network(model, skeleton)
