"""Scenario execution, comparison, backward explanation and sensitivity.

Evidence values are state labels for ranked nodes and raw measurements for
indicator nodes; a measurement selects its containing interval (half-open,
last closed) and is clamped to the boundary interval with a warning when it
falls outside the indicator range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .inference import (
    ImpossibleEvidenceError,
    UnknownNodeError,
    evidence_probability,
    mpe,
    posterior_marginals,
)
from .network import CompiledNetwork

__all__ = [
    "AnalysisError",
    "CompareReport",
    "ExplainReport",
    "Scenario",
    "ScenarioReport",
    "SensitivityReport",
    "SensitivityRow",
    "compare_scenarios",
    "explain_target",
    "indicator_moments",
    "resolve_evidence",
    "run_scenario",
    "scenario_from_obj",
    "sensitivity",
]


class AnalysisError(ValueError):
    """Malformed scenario, evidence value, or analysis request."""


@dataclass(frozen=True)
class Scenario:
    """Named evidence set; values are state labels or raw indicator values."""

    name: str | None
    evidence: dict[str, float | str] = field(default_factory=dict)


def scenario_from_obj(obj) -> Scenario:
    """Validate the scenario wire format {"name"?, "evidence"?}."""
    if not isinstance(obj, dict):
        raise AnalysisError("scenario must be a JSON object")
    unknown = set(obj) - {"name", "evidence"}
    if unknown:
        raise AnalysisError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    name = obj.get("name")
    if name is not None and not isinstance(name, str):
        raise AnalysisError("scenario name must be a string")
    evidence = obj.get("evidence", {})
    if not isinstance(evidence, dict):
        raise AnalysisError("scenario evidence must be an object")
    cleaned: dict[str, float | str] = {}
    for key, value in evidence.items():
        if not isinstance(key, str):
            raise AnalysisError(f"evidence keys must be node ids, got {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise AnalysisError(
                f"evidence for {key!r} must be a state label or a number, got {value!r}"
            )
        cleaned[key] = value
    return Scenario(name=name, evidence=cleaned)


def resolve_evidence(
    net: CompiledNetwork, evidence: dict[str, float | str]
) -> tuple[dict[str, int], list[str]]:
    """Map raw evidence to state indices; returns (indices, warnings)."""
    resolved: dict[str, int] = {}
    warnings: list[str] = []
    for node_id, value in evidence.items():
        node = net.node_map.get(node_id)
        if node is None:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        if isinstance(value, str):
            if value not in node.states:
                raise AnalysisError(
                    f"node {node_id!r} has no state {value!r} "
                    f"(states: {', '.join(node.states)})"
                )
            resolved[node_id] = node.states.index(value)
            continue
        if node.bounds is None:
            raise AnalysisError(
                f"numeric evidence is only valid on indicator nodes; "
                f"{node_id!r} takes one of: {', '.join(node.states)}"
            )
        value = float(value)
        if not math.isfinite(value):
            raise AnalysisError(f"evidence for {node_id!r} must be finite, got {value!r}")
        bounds = node.bounds
        if value < bounds[0]:
            warnings.append(
                f"{node_id}: value {value:g} below range [{bounds[0]:g}, {bounds[-1]:g}], "
                f"clamped to first interval"
            )
            resolved[node_id] = 0
        elif value > bounds[-1]:
            warnings.append(
                f"{node_id}: value {value:g} above range [{bounds[0]:g}, {bounds[-1]:g}], "
                f"clamped to last interval"
            )
            resolved[node_id] = len(node.states) - 1
        else:
            resolved[node_id] = _interval_index(bounds, value)
    return resolved, warnings


def _interval_index(bounds: tuple[float, ...], value: float) -> int:
    for i in range(len(bounds) - 2):
        if bounds[i] <= value < bounds[i + 1]:
            return i
    return len(bounds) - 2


def indicator_moments(marginal: list[float], bounds: tuple[float, ...]) -> tuple[float, float]:
    """Mean and standard deviation using interval midpoints."""
    if len(marginal) != len(bounds) - 1:
        raise AnalysisError(
            f"{len(marginal)} probabilities for {len(bounds) - 1} intervals"
        )
    midpoints = [(a + b) / 2.0 for a, b in zip(bounds, bounds[1:])]
    mean = math.fsum(p * m for p, m in zip(marginal, midpoints))
    var = math.fsum(p * (m - mean) ** 2 for p, m in zip(marginal, midpoints))
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class ScenarioReport:
    scenario: str | None
    evidence: dict[str, str]  # node id -> resolved state label
    evidence_probability: float
    posteriors: dict[str, list[float]]  # in network node order
    moments: dict[str, tuple[float, float]]  # indicator id -> (mean, sd)
    warnings: tuple[str, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "scenario": self.scenario,
            "evidence": dict(self.evidence),
            "evidenceProbability": self.evidence_probability,
            "posteriors": {k: list(v) for k, v in self.posteriors.items()},
            "moments": {
                k: {"mean": m, "sd": s} for k, (m, s) in self.moments.items()
            },
            "warnings": list(self.warnings),
        }

    def to_text(self, net: CompiledNetwork) -> str:
        lines = [f"scenario: {self.scenario or '(none)'}"]
        if self.evidence:
            lines.append("evidence: " + ", ".join(f"{k}={v}" for k, v in self.evidence.items()))
        lines.append(f"P(evidence) = {self.evidence_probability:.6g}")
        width = max(len(n.id) for n in net.nodes)
        for node in net.nodes:
            cells = "  ".join(
                f"{label} {p:.4f}" for label, p in zip(node.states, self.posteriors[node.id])
            )
            lines.append(f"{node.id.ljust(width)}  {cells}")
            if node.id in self.moments:
                mean, sd = self.moments[node.id]
                lines.append(f"{''.ljust(width)}  mean {mean:.4g}  sd {sd:.4g}")
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines)


def run_scenario(net: CompiledNetwork, scenario: Scenario) -> ScenarioReport:
    """Posteriors, indicator moments and evidence probability for a scenario."""
    resolved, warnings = resolve_evidence(net, scenario.evidence)
    probability = evidence_probability(net, resolved) if resolved else 1.0
    posteriors = posterior_marginals(net, resolved)
    ordered = {n.id: posteriors[n.id] for n in net.nodes}
    moments = {
        n.id: indicator_moments(ordered[n.id], n.bounds)
        for n in net.nodes
        if n.bounds is not None
    }
    labels = {
        node_id: net.node_map[node_id].states[idx] for node_id, idx in resolved.items()
    }
    ordered_labels = {n.id: labels[n.id] for n in net.nodes if n.id in labels}
    return ScenarioReport(
        scenario=scenario.name,
        evidence=ordered_labels,
        evidence_probability=probability,
        posteriors=ordered,
        moments=moments,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class CompareReport:
    scenarios: tuple[str, ...]
    reports: tuple[ScenarioReport, ...]

    def to_json_obj(self) -> dict:
        nodes: dict[str, dict] = {}
        if self.reports:
            first = self.reports[0]
            for node_id in first.posteriors:
                entry: dict = {
                    "posteriors": [list(r.posteriors[node_id]) for r in self.reports],
                }
                if node_id in first.moments:
                    entry["moments"] = [
                        {"mean": r.moments[node_id][0], "sd": r.moments[node_id][1]}
                        for r in self.reports
                    ]
                    base = self.reports[0].moments[node_id][0]
                    entry["meanDelta"] = [
                        r.moments[node_id][0] - base for r in self.reports
                    ]
                nodes[node_id] = entry
        return {"scenarios": list(self.scenarios), "nodes": nodes}

    def to_csv(self, net: CompiledNetwork) -> str:
        lines = ["node,row," + ",".join(self.scenarios)]
        for node in net.nodes:
            for s, label in enumerate(node.states):
                cells = ",".join(f"{r.posteriors[node.id][s]:.17g}" for r in self.reports)
                lines.append(f"{node.id},{label},{cells}")
            if node.bounds is not None:
                means = [r.moments[node.id][0] for r in self.reports]
                sds = [r.moments[node.id][1] for r in self.reports]
                lines.append(f"{node.id},mean," + ",".join(f"{m:.17g}" for m in means))
                lines.append(f"{node.id},sd," + ",".join(f"{s:.17g}" for s in sds))
                lines.append(
                    f"{node.id},delta_mean,"
                    + ",".join(f"{m - means[0]:.17g}" for m in means)
                )
        return "\n".join(lines) + "\n"

    def to_text(self, net: CompiledNetwork) -> str:
        width = max(len(n.id) for n in net.nodes)
        col = max([len(s) for s in self.scenarios] + [10])
        header = "".ljust(width + 8) + "  ".join(s.rjust(col) for s in self.scenarios)
        lines = [header]
        for node in net.nodes:
            for s, label in enumerate(node.states):
                cells = "  ".join(
                    f"{r.posteriors[node.id][s]:.4f}".rjust(col) for r in self.reports
                )
                lines.append(f"{node.id.ljust(width)} {label[:7].ljust(7)}{cells}")
            if node.bounds is not None:
                cells = "  ".join(
                    f"{r.moments[node.id][0]:.4g}".rjust(col) for r in self.reports
                )
                lines.append(f"{node.id.ljust(width)} mean   {cells}")
                base = self.reports[0].moments[node.id][0]
                cells = "  ".join(
                    f"{r.moments[node.id][0] - base:+.4g}".rjust(col) for r in self.reports
                )
                lines.append(f"{node.id.ljust(width)} delta  {cells}")
        return "\n".join(lines)


def compare_scenarios(net: CompiledNetwork, scenarios: list[Scenario]) -> CompareReport:
    """Side-by-side posteriors and moment deltas; first scenario is the base."""
    if len(scenarios) < 2:
        raise AnalysisError("compare needs at least 2 scenarios")
    reports = tuple(run_scenario(net, s) for s in scenarios)
    names = tuple(
        s.name if s.name is not None else f"scenario{i + 1}"
        for i, s in enumerate(scenarios)
    )
    return CompareReport(scenarios=names, reports=reports)


@dataclass(frozen=True)
class ExplainReport:
    target: str
    state: str
    joint_probability: float
    assignment: dict[str, str]  # fact indicators only
    full_assignment: dict[str, str]
    evidence: dict[str, str]

    def to_json_obj(self) -> dict:
        return {
            "target": self.target,
            "state": self.state,
            "jointProbability": self.joint_probability,
            "assignment": dict(self.assignment),
            "fullAssignment": dict(self.full_assignment),
            "evidence": dict(self.evidence),
        }

    def to_text(self) -> str:
        lines = [
            f"target: {self.target} = {self.state}",
            f"joint probability: {self.joint_probability:.6g}",
            "most probable fact-indicator values:",
        ]
        for node_id, label in self.assignment.items():
            lines.append(f"  {node_id} = {label}")
        return "\n".join(lines)


def explain_target(
    net: CompiledNetwork,
    target: str,
    desired: float | str,
    extra_evidence: dict[str, float | str] | None = None,
) -> ExplainReport:
    """Most probable fact-indicator assignment that reaches the target state."""
    evidence: dict[str, float | str] = dict(extra_evidence or {})
    evidence[target] = desired
    resolved, _ = resolve_evidence(net, evidence)
    assignment, probability = mpe(net, resolved)
    order = {n.id: i for i, n in enumerate(net.nodes)}
    full = {
        node_id: net.node_map[node_id].states[state]
        for node_id, state in sorted(assignment.items(), key=lambda kv: order[kv[0]])
    }
    fact_indicators = set(net.fact_indicator_ids())
    restricted = {k: v for k, v in full.items() if k in fact_indicators}
    labels = {
        node_id: net.node_map[node_id].states[idx] for node_id, idx in resolved.items()
    }
    return ExplainReport(
        target=target,
        state=labels[target],
        joint_probability=probability,
        assignment=restricted,
        full_assignment=full,
        evidence=labels,
    )


@dataclass(frozen=True)
class SensitivityRow:
    node: str
    swing: float
    low: float
    high: float
    by_state: dict[str, float | None]  # None when the state is impossible


@dataclass(frozen=True)
class SensitivityReport:
    target: str
    mode: str  # "mean" | "probability"
    target_state: str | None
    baseline: float
    evidence: dict[str, str]
    rows: tuple[SensitivityRow, ...]

    def to_json_obj(self) -> dict:
        return {
            "target": self.target,
            "mode": self.mode,
            "targetState": self.target_state,
            "baseline": self.baseline,
            "evidence": dict(self.evidence),
            "results": [
                {
                    "node": r.node,
                    "swing": r.swing,
                    "low": r.low,
                    "high": r.high,
                    "byState": dict(r.by_state),
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        lines = ["node,swing,low,high"]
        for r in self.rows:
            lines.append(f"{r.node},{r.swing:.17g},{r.low:.17g},{r.high:.17g}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        label = f"P({self.target}={self.target_state})" if self.mode == "probability" else f"mean {self.target}"
        lines = [f"sensitivity of {label}, baseline {self.baseline:.6g}"]
        width = max([len(r.node) for r in self.rows] + [4])
        for r in self.rows:
            lines.append(
                f"{r.node.ljust(width)}  swing {r.swing:.6g}  [{r.low:.6g}, {r.high:.6g}]"
            )
        return "\n".join(lines)


def sensitivity(
    net: CompiledNetwork,
    target: str,
    candidates: list[str] | None = None,
    evidence: dict[str, float | str] | None = None,
    target_state: str | None = None,
) -> SensitivityReport:
    """Swing of the target statistic as each candidate sweeps its states.

    The statistic is the posterior mean for targets with interval bounds,
    or P(target = target_state) when a state is designated.  Candidate
    states that are impossible under the fixed evidence are skipped.
    """
    target_node = net.node(target)
    if target_state is not None:
        if target_state not in target_node.states:
            raise AnalysisError(
                f"node {target!r} has no state {target_state!r} "
                f"(states: {', '.join(target_node.states)})"
            )
        mode = "probability"
        state_idx = target_node.states.index(target_state)
    elif target_node.bounds is not None:
        mode = "mean"
        state_idx = -1
    else:
        raise AnalysisError(
            f"target {target!r} has no interval bounds; designate a state for a probability swing"
        )

    if candidates is None:
        candidate_ids = [c for c in net.fact_indicator_ids() if c != target]
    else:
        candidate_ids = list(candidates)
        for c in candidate_ids:
            if c == target:
                raise AnalysisError(f"candidate {c!r} equals the target")
            net.node(c)  # raises UnknownNodeError

    base_resolved, _ = resolve_evidence(net, evidence or {})

    def statistic(resolved: dict[str, int]) -> float:
        posterior = posterior_marginals(net, resolved)[target]
        if mode == "mean":
            return indicator_moments(posterior, target_node.bounds)[0]
        return posterior[state_idx]

    baseline = statistic(base_resolved)
    rows: list[SensitivityRow] = []
    for candidate in candidate_ids:
        node = net.node(candidate)
        by_state: dict[str, float | None] = {}
        values: list[float] = []
        for idx, label in enumerate(node.states):
            swept = dict(base_resolved)
            swept[candidate] = idx
            try:
                value = statistic(swept)
            except ImpossibleEvidenceError:
                by_state[label] = None
                continue
            by_state[label] = value
            values.append(value)
        low = min(values) if values else baseline
        high = max(values) if values else baseline
        rows.append(
            SensitivityRow(node=candidate, swing=high - low, low=low, high=high, by_state=by_state)
        )
    rows.sort(key=lambda r: (-r.swing, r.node))
    labels = {
        node_id: net.node_map[node_id].states[idx]
        for node_id, idx in base_resolved.items()
    }
    return SensitivityReport(
        target=target,
        mode=mode,
        target_state=target_state,
        baseline=baseline,
        evidence=labels,
        rows=tuple(rows),
    )
