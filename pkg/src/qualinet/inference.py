"""Exact discrete inference: variable elimination and an enumeration oracle.

Marginals and evidence probability run max-one-variable-at-a-time variable
elimination in linear space, renormalizing after each elimination step and
accumulating the normalizers.  The most probable explanation uses
max-product elimination in log space with argmax traceback.  The
brute-force oracle materializes the full joint and exists so that the two
code paths can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import CompiledNetwork, NetworkNode, UnknownNodeError

__all__ = [
    "Factor",
    "ImpossibleEvidenceError",
    "InferenceError",
    "StateSpaceLimitError",
    "UnknownNodeError",
    "brute_force_marginals",
    "evidence_probability",
    "min_fill_order",
    "mpe",
    "posterior_marginals",
]

ENUMERATION_LIMIT = 10**6


class InferenceError(Exception):
    """Base class for inference failures."""


class ImpossibleEvidenceError(InferenceError):
    """The supplied evidence has probability zero."""


class StateSpaceLimitError(InferenceError):
    """Joint state space too large for full enumeration."""


@dataclass(frozen=True)
class Factor:
    """Probability table over an ordered subset of variables."""

    variables: tuple[str, ...]
    table: np.ndarray  # shape = cardinalities of the variables, in order

    def align(self, target: tuple[str, ...], cards: dict[str, int]) -> np.ndarray:
        """View of the table broadcastable over the target variable order."""
        perm = [self.variables.index(v) for v in target if v in self.variables]
        arr = np.transpose(self.table, perm) if perm else self.table
        shape = tuple(cards[v] if v in self.variables else 1 for v in target)
        return arr.reshape(shape)

    def reduce(self, variable: str, state: int) -> "Factor":
        axis = self.variables.index(variable)
        table = np.take(self.table, state, axis=axis)
        rest = self.variables[:axis] + self.variables[axis + 1 :]
        return Factor(rest, table)


def _merge_vars(factors: list[Factor]) -> tuple[str, ...]:
    merged: list[str] = []
    for f in factors:
        for v in f.variables:
            if v not in merged:
                merged.append(v)
    return tuple(merged)


def _product(factors: list[Factor], cards: dict[str, int]) -> Factor:
    target = _merge_vars(factors)
    table = np.ones(tuple(cards[v] for v in target))
    for f in factors:
        table = table * f.align(target, cards)
    return Factor(target, table)


def node_factor(node: NetworkNode, cards: dict[str, int]) -> Factor:
    """CPT as a factor over (parents..., node).

    The flat table is state-major with parent combinations row-major (last
    parent fastest), so reshaping to (state, parents...) and moving the
    state axis last recovers the factor layout.
    """
    parent_cards = tuple(cards[p] for p in node.parents)
    arr = np.asarray(node.cpt, dtype=float).reshape((node.cardinality,) + parent_cards)
    return Factor(node.parents + (node.id,), np.ascontiguousarray(np.moveaxis(arr, 0, -1)))


def _cards(net: CompiledNetwork) -> dict[str, int]:
    return {n.id: n.cardinality for n in net.nodes}


def _check_evidence(net: CompiledNetwork, evidence: dict[str, int]) -> None:
    for node_id, state in evidence.items():
        if node_id not in net.node_map:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        card = net.node_map[node_id].cardinality
        if not 0 <= state < card:
            raise InferenceError(
                f"state index {state} out of range for node {node_id!r} ({card} states)"
            )


def _reduced_factors(net: CompiledNetwork, evidence: dict[str, int]) -> list[Factor]:
    cards = _cards(net)
    factors = []
    for node in net.nodes:
        f = node_factor(node, cards)
        for var in f.variables:
            if var in evidence:
                f = f.reduce(var, evidence[var])
        factors.append(f)
    return factors


def min_fill_order(net: CompiledNetwork, evidence: dict[str, int]) -> tuple[str, ...]:
    """Elimination order by the min-fill heuristic, ties lexicographic."""
    adjacency: dict[str, set[str]] = {
        n.id: set() for n in net.nodes if n.id not in evidence
    }
    for node in net.nodes:
        scope = [v for v in node.parents + (node.id,) if v not in evidence]
        for a in scope:
            for b in scope:
                if a != b:
                    adjacency[a].add(b)
    order: list[str] = []
    remaining = dict(adjacency)
    while remaining:
        best: tuple[int, str] | None = None
        for var in sorted(remaining):
            neighbors = sorted(remaining[var])
            fill = 0
            for i, a in enumerate(neighbors):
                for b in neighbors[i + 1 :]:
                    if b not in remaining[a]:
                        fill += 1
            if best is None or fill < best[0]:
                best = (fill, var)
        _, var = best
        neighbors = remaining.pop(var)
        for a in neighbors:
            if a in remaining:
                remaining[a] |= neighbors - {a}
                remaining[a].discard(var)
        order.append(var)
    return tuple(order)


def _eliminate(
    factors: list[Factor], order: tuple[str, ...], cards: dict[str, int]
) -> tuple[list[Factor], float]:
    """Sum out variables in the given order, renormalizing per step.

    Returns the remaining factors and the accumulated log of the
    normalizers; -inf signals total probability zero.
    """
    log_norm = 0.0
    current = list(factors)
    for var in order:
        related = [f for f in current if var in f.variables]
        if not related:
            continue
        rest = [f for f in current if var not in f.variables]
        product = _product(related, cards)
        axis = product.variables.index(var)
        summed = product.table.sum(axis=axis)
        total = float(summed.sum())
        if total <= 0.0:
            return rest, float("-inf")
        summed = summed / total
        log_norm += math.log(total)
        rest_vars = product.variables[:axis] + product.variables[axis + 1 :]
        current = rest + [Factor(rest_vars, summed)]
    return current, log_norm


def evidence_probability(net: CompiledNetwork, evidence: dict[str, int]) -> float:
    """Exact probability of the evidence; 1.0 for empty evidence."""
    _check_evidence(net, evidence)
    if not net.nodes:
        return 1.0
    cards = _cards(net)
    factors = _reduced_factors(net, evidence)
    order = min_fill_order(net, evidence)
    remaining, log_norm = _eliminate(factors, order, cards)
    if log_norm == float("-inf"):
        return 0.0
    residue = 1.0
    for f in remaining:
        residue *= float(f.table.sum())
    if residue <= 0.0:
        return 0.0
    return math.exp(log_norm + math.log(residue))


def posterior_marginals(net: CompiledNetwork, evidence: dict[str, int]) -> dict[str, list[float]]:
    """Exact posterior distribution of every node given hard evidence."""
    _check_evidence(net, evidence)
    cards = _cards(net)
    if evidence and evidence_probability(net, evidence) <= 0.0:
        raise ImpossibleEvidenceError(
            f"evidence has probability zero: {sorted(evidence.items())}"
        )
    factors = _reduced_factors(net, evidence)
    base_order = min_fill_order(net, evidence)
    posteriors: dict[str, list[float]] = {}
    for node in net.nodes:
        if node.id in evidence:
            point = [0.0] * node.cardinality
            point[evidence[node.id]] = 1.0
            posteriors[node.id] = point
            continue
        order = tuple(v for v in base_order if v != node.id)
        remaining, log_norm = _eliminate(list(factors), order, cards)
        if log_norm == float("-inf"):
            raise ImpossibleEvidenceError(
                f"evidence has probability zero: {sorted(evidence.items())}"
            )
        marginal = _product(remaining, cards)
        if marginal.variables != (node.id,):
            raise InferenceError(f"internal error: stray scope {marginal.variables!r}")
        table = marginal.table.reshape(node.cardinality)
        total = float(table.sum())
        if total <= 0.0:
            raise ImpossibleEvidenceError(
                f"evidence has probability zero: {sorted(evidence.items())}"
            )
        posteriors[node.id] = [float(v) for v in (table / total)]
    return posteriors


def mpe(net: CompiledNetwork, evidence: dict[str, int]) -> tuple[dict[str, int], float]:
    """Most probable joint assignment of the unobserved nodes.

    Returns the assignment and the joint probability of (assignment,
    evidence).  Exact ties resolve to the lowest state index of whichever
    variable is assigned first in the deterministic traceback order.
    """
    _check_evidence(net, evidence)
    if evidence and evidence_probability(net, evidence) <= 0.0:
        raise ImpossibleEvidenceError(
            f"evidence has probability zero: {sorted(evidence.items())}"
        )
    cards = _cards(net)
    with np.errstate(divide="ignore"):
        factors = [
            Factor(f.variables, np.log(f.table))
            for f in _reduced_factors(net, evidence)
        ]
    order = min_fill_order(net, evidence)
    traceback: list[tuple[str, tuple[str, ...], np.ndarray]] = []
    current = list(factors)
    for var in order:
        related = [f for f in current if var in f.variables]
        rest = [f for f in current if var not in f.variables]
        target = _merge_vars(related)
        table = np.zeros(tuple(cards[v] for v in target))
        for f in related:
            table = table + f.align(target, cards)
        axis = target.index(var)
        argmax = np.argmax(table, axis=axis)
        maxed = np.max(table, axis=axis)
        rest_vars = target[:axis] + target[axis + 1 :]
        traceback.append((var, rest_vars, argmax))
        current = rest + [Factor(rest_vars, maxed)]
    # Every non-evidence variable has been eliminated, so only scalars remain.
    log_total = 0.0
    for f in current:
        log_total += float(f.table.reshape(-1)[0])
    assignment: dict[str, int] = {}
    for var, rest_vars, argmax in reversed(traceback):
        index = tuple(assignment[v] for v in rest_vars)
        assignment[var] = int(argmax[index]) if rest_vars else int(argmax)
    probability = math.exp(log_total) if log_total != float("-inf") else 0.0
    return {v: assignment[v] for v in sorted(assignment)}, probability


def brute_force_marginals(
    net: CompiledNetwork, evidence: dict[str, int]
) -> dict[str, list[float]]:
    """Posteriors by materializing the full joint distribution.

    Test oracle for the variable-elimination path; refuses joint state
    spaces above 10^6 assignments.
    """
    _check_evidence(net, evidence)
    if not net.nodes:
        return {}
    size = net.state_space_size
    if size > ENUMERATION_LIMIT:
        raise StateSpaceLimitError(
            f"joint state space {size} exceeds enumeration limit {ENUMERATION_LIMIT}"
        )
    axes = {n.id: i for i, n in enumerate(net.nodes)}
    shape = tuple(n.cardinality for n in net.nodes)
    joint = np.ones(shape)
    for node in net.nodes:
        combos = 1
        for p in node.parents:
            combos *= net.node_map[p].cardinality
        cpt = np.asarray(node.cpt, dtype=float).reshape(
            (node.cardinality,) + tuple(net.node_map[p].cardinality for p in node.parents)
        )
        # Broadcast the CPT over the full joint axis layout: reorder its
        # dimensions by ascending joint axis, then pad with size-1 axes.
        source_axes = [axes[node.id]] + [axes[p] for p in node.parents]
        expand = [1] * len(net.nodes)
        for ax, size_ax in zip(source_axes, cpt.shape):
            expand[ax] = size_ax
        ordered = np.transpose(cpt, np.argsort(source_axes))
        joint = joint * ordered.reshape(expand)
    for node_id, state in evidence.items():
        axis = axes[node_id]
        mask = np.zeros(shape[axis])
        mask[state] = 1.0
        expand = [1] * len(net.nodes)
        expand[axis] = shape[axis]
        joint = joint * mask.reshape(expand)
    total = float(joint.sum())
    if total <= 0.0:
        raise ImpossibleEvidenceError(
            f"evidence has probability zero: {sorted(evidence.items())}"
        )
    posteriors: dict[str, list[float]] = {}
    for node in net.nodes:
        axis = axes[node.id]
        other = tuple(i for i in range(len(net.nodes)) if i != axis)
        marginal = joint.sum(axis=other) if other else joint
        posteriors[node.id] = [float(v) for v in (marginal / total)]
    return posteriors
