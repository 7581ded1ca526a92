"""Activity-based quality model DSL.

A model declares an entity tree (part-of by nesting, is-a by ``:`` suffix),
facts (entity.attribute pairs), a single activity tree, signed impacts of
facts on activities, quantitative annotations, indicator specifications and
assessment goals.  This module parses and validates the concrete syntax,
expands fact inheritance along is-a edges, renders the fact/activity impact
matrix, and prints models back to canonical source text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Union

from .npt import (
    ArithmeticIndicator,
    PartitionedIndicator,
    RankedScale,
    default_state_labels,
)

__all__ = [
    "Activity",
    "Diagnostic",
    "Entity",
    "Fact",
    "FactRef",
    "GoalSpec",
    "Impact",
    "IndicatorSpec",
    "MatrixView",
    "ModelError",
    "QualityModel",
    "QuantAnnotation",
    "expand_inheritance",
    "export_matrix",
    "parse_model",
    "print_model",
]

DEFAULT_STATE_COUNT = 3
DEFAULT_VARIANCE = 0.05


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class ModelError(Exception):
    """Parse or validation failure with source positions."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class FactRef:
    entity: str
    attribute: str

    def __str__(self) -> str:
        return f"{self.entity}.{self.attribute}"


# A subject is either an activity id or a fact reference.
Subject = Union[str, FactRef]


@dataclass(frozen=True)
class Entity:
    id: str
    parent_part_of: str | None = None
    parent_is_a: str | None = None


@dataclass(frozen=True)
class Fact:
    entity: str
    attribute: str
    inherited_from: str | None = None

    @property
    def ref(self) -> FactRef:
        return FactRef(self.entity, self.attribute)


@dataclass(frozen=True)
class Activity:
    id: str
    parent: str | None = None
    children: tuple[str, ...] = ()


@dataclass(frozen=True)
class Impact:
    fact: FactRef
    activity: str
    negative: bool
    inherited_from: str | None = None

    @property
    def sign(self) -> str:
        return "-" if self.negative else "+"


@dataclass(frozen=True)
class QuantAnnotation:
    subject: Subject
    state_count: int = DEFAULT_STATE_COUNT
    variance: float = DEFAULT_VARIANCE
    weights: tuple[tuple[Subject, float], ...] = ()
    prior: tuple[float, ...] | None = None


@dataclass(frozen=True)
class IndicatorSpec:
    id: str
    subject: Subject
    boundaries: tuple[float, ...]
    expression: PartitionedIndicator | ArithmeticIndicator


@dataclass(frozen=True)
class GoalSpec:
    name: str
    question: str
    metric: str
    activity: str


@dataclass(frozen=True)
class QualityModel:
    name: str
    entities: tuple[Entity, ...] = ()
    facts: tuple[Fact, ...] = ()
    activities: tuple[Activity, ...] = ()
    impacts: tuple[Impact, ...] = ()
    quantifications: tuple[QuantAnnotation, ...] = ()
    indicators: tuple[IndicatorSpec, ...] = ()
    goals: tuple[GoalSpec, ...] = ()

    @cached_property
    def entity_map(self) -> dict[str, Entity]:
        return {e.id: e for e in self.entities}

    @cached_property
    def activity_map(self) -> dict[str, Activity]:
        return {a.id: a for a in self.activities}

    @cached_property
    def fact_map(self) -> dict[FactRef, Fact]:
        return {f.ref: f for f in self.facts}

    @property
    def root_activity(self) -> Activity | None:
        for a in self.activities:
            if a.parent is None:
                return a
        return None

    def annotation_for(self, subject: Subject) -> QuantAnnotation | None:
        for q in self.quantifications:
            if q.subject == subject:
                return q
        return None

    def scale_for(self, subject: Subject) -> RankedScale:
        ann = self.annotation_for(subject)
        k = ann.state_count if ann is not None else DEFAULT_STATE_COUNT
        return RankedScale.of(k)

    def indicators_for(self, subject: Subject) -> tuple[IndicatorSpec, ...]:
        return tuple(i for i in self.indicators if i.subject == subject)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_PUNCT = {"{", "}", "[", "]", "(", ")", ":", ",", ".", "+", "-", "=", "*"}


def _is_ident_start(ch: str) -> bool:
    return "a" <= ch <= "z" or "A" <= ch <= "Z"


def _is_ident_part(ch: str) -> bool:
    return _is_ident_start(ch) or "0" <= ch <= "9" or ch == "_"


def _is_digit(ch: str) -> bool:
    return "0" <= ch <= "9"


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT | STRING | NUMBER | PUNCT | EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == "-" and i + 1 < n and text[i + 1] == ">":
            tokens.append(_Token("PUNCT", "->", start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(_Token("PUNCT", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise ModelError([Diagnostic(start_line, start_col, "unterminated string")])
            tokens.append(_Token("STRING", text[i + 1 : j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if _is_digit(ch):
            j = i
            while j < n and _is_digit(text[j]):
                j += 1
            if j < n and text[j] == "." and j + 1 < n and _is_digit(text[j + 1]):
                j += 1
                while j < n and _is_digit(text[j]):
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and _is_digit(text[k]):
                    j = k
                    while j < n and _is_digit(text[j]):
                        j += 1
            tokens.append(_Token("NUMBER", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if _is_ident_start(ch):
            j = i
            while j < n and _is_ident_part(text[j]):
                j += 1
            tokens.append(_Token("IDENT", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        raise ModelError([Diagnostic(start_line, start_col, f"unexpected character {ch!r}")])
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


@dataclass
class _Raw:
    """Parse result before cross-reference validation, with positions."""

    name: str = ""
    entities: list[tuple[Entity, int, int]] = field(default_factory=list)
    facts: list[tuple[Fact, int, int]] = field(default_factory=list)
    activities: list[tuple[Activity, int, int]] = field(default_factory=list)
    top_activities: list[tuple[str, int, int]] = field(default_factory=list)
    impacts: list[tuple[Impact, int, int]] = field(default_factory=list)
    quantifications: list[tuple[QuantAnnotation, int, int]] = field(default_factory=list)
    indicators: list[tuple["_RawIndicator", int, int]] = field(default_factory=list)
    goals: list[tuple[GoalSpec, int, int]] = field(default_factory=list)


@dataclass
class _RawIndicator:
    id: str
    subject: Subject
    boundaries: tuple[float, ...]
    arithmetic: ArithmeticIndicator | None
    partitioned: list[tuple[str, tuple[float, float], int, int]]  # label, (mean, var), pos


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, tok: _Token, message: str) -> ModelError:
        return ModelError([Diagnostic(tok.line, tok.col, message)])

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text if tok.kind != "EOF" else "end of input"
            raise self.fail(tok, f"expected {want!r}, got {got!r}")
        return self.advance()

    def at_punct(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.text == text

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text == word

    def number(self) -> float:
        neg = False
        if self.at_punct("-"):
            self.advance()
            neg = True
        tok = self.expect("NUMBER")
        value = float(tok.text)
        return -value if neg else value

    def integer(self) -> int:
        tok = self.expect("NUMBER")
        if any(c in tok.text for c in ".eE"):
            raise self.fail(tok, f"expected an integer, got {tok.text!r}")
        return int(tok.text)

    def ref(self) -> Subject:
        head = self.expect("IDENT")
        if self.at_punct("."):
            self.advance()
            attr = self.expect("IDENT")
            return FactRef(head.text, attr.text)
        return head.text

    # -- grammar productions ------------------------------------------------

    def parse(self) -> _Raw:
        raw = _Raw()
        self.expect("IDENT", "model")
        raw.name = self.expect("STRING").text
        self.expect("PUNCT", "{")
        while not self.at_punct("}"):
            self.item(raw)
        self.expect("PUNCT", "}")
        tok = self.peek()
        if tok.kind != "EOF":
            raise self.fail(tok, f"unexpected trailing input {tok.text!r}")
        return raw

    def item(self, raw: _Raw) -> None:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.fail(tok, f"expected a declaration, got {tok.text or tok.kind!r}")
        handler = {
            "activity": self.activity_item,
            "entity": self.entity_item,
            "fact": self.fact_item,
            "impact": self.impact_item,
            "quantify": self.quantify_item,
            "indicator": self.indicator_item,
            "goal": self.goal_item,
        }.get(tok.text)
        if handler is None:
            raise self.fail(tok, f"unknown declaration {tok.text!r}")
        handler(raw)

    def activity_item(self, raw: _Raw, parent: str | None = None) -> None:
        kw = self.expect("IDENT", "activity")
        name = self.expect("IDENT")
        children: list[str] = []
        entry = len(raw.activities)
        raw.activities.append((Activity(name.text, parent), name.line, name.col))
        if parent is None:
            raw.top_activities.append((name.text, kw.line, kw.col))
        if self.at_punct("{"):
            self.advance()
            while not self.at_punct("}"):
                tok = self.peek()
                if not self.at_keyword("activity"):
                    raise self.fail(tok, f"expected 'activity', got {tok.text!r}")
                children.append(self.tokens[self.pos + 1].text)
                self.activity_item(raw, parent=name.text)
            self.expect("PUNCT", "}")
        act, line, col = raw.activities[entry]
        raw.activities[entry] = (replace(act, children=tuple(children)), line, col)

    def entity_item(self, raw: _Raw, parent: str | None = None) -> None:
        self.expect("IDENT", "entity")
        name = self.expect("IDENT")
        is_a: str | None = None
        if self.at_punct(":"):
            self.advance()
            is_a = self.expect("IDENT").text
        raw.entities.append((Entity(name.text, parent, is_a), name.line, name.col))
        if self.at_punct("{"):
            self.advance()
            while not self.at_punct("}"):
                tok = self.peek()
                if not self.at_keyword("entity"):
                    raise self.fail(tok, f"expected 'entity', got {tok.text!r}")
                self.entity_item(raw, parent=name.text)
            self.expect("PUNCT", "}")

    def fact_item(self, raw: _Raw) -> None:
        self.expect("IDENT", "fact")
        ent = self.expect("IDENT")
        self.expect("PUNCT", ".")
        attr = self.expect("IDENT")
        raw.facts.append((Fact(ent.text, attr.text), ent.line, ent.col))

    def impact_item(self, raw: _Raw) -> None:
        self.expect("IDENT", "impact")
        ent = self.expect("IDENT")
        self.expect("PUNCT", ".")
        attr = self.expect("IDENT")
        self.expect("PUNCT", "->")
        act = self.expect("IDENT")
        tok = self.peek()
        if self.at_punct("+") or self.at_punct("-"):
            sign = self.advance().text
        else:
            raise self.fail(tok, f"expected '+' or '-', got {tok.text!r}")
        impact = Impact(FactRef(ent.text, attr.text), act.text, negative=(sign == "-"))
        raw.impacts.append((impact, ent.line, ent.col))

    def quantify_item(self, raw: _Raw) -> None:
        self.expect("IDENT", "quantify")
        head = self.peek()
        subject = self.ref()
        self.expect("PUNCT", "{")
        states: int | None = None
        variance: float | None = None
        weights: list[tuple[Subject, float]] | None = None
        prior: tuple[float, ...] | None = None
        while not self.at_punct("}"):
            key = self.expect("IDENT")
            if key.text == "states":
                if states is not None:
                    raise self.fail(key, "duplicate 'states'")
                states = self.integer()
            elif key.text == "variance":
                if variance is not None:
                    raise self.fail(key, "duplicate 'variance'")
                variance = self.number()
            elif key.text == "weights":
                if weights is not None:
                    raise self.fail(key, "duplicate 'weights'")
                weights = []
                self.expect("PUNCT", "{")
                while not self.at_punct("}"):
                    wref = self.ref()
                    self.expect("PUNCT", ":")
                    weights.append((wref, self.number()))
                self.expect("PUNCT", "}")
                if not weights:
                    raise self.fail(key, "empty 'weights' block")
            elif key.text == "prior":
                if prior is not None:
                    raise self.fail(key, "duplicate 'prior'")
                self.expect("PUNCT", "[")
                values = [self.number()]
                while self.at_punct(","):
                    self.advance()
                    values.append(self.number())
                self.expect("PUNCT", "]")
                prior = tuple(values)
            else:
                raise self.fail(
                    key,
                    f"unknown quantify key {key.text!r} "
                    "(expected states, variance, weights or prior)",
                )
        self.expect("PUNCT", "}")
        ann = QuantAnnotation(
            subject=subject,
            state_count=states if states is not None else DEFAULT_STATE_COUNT,
            variance=variance if variance is not None else DEFAULT_VARIANCE,
            weights=tuple(weights or ()),
            prior=prior,
        )
        raw.quantifications.append((ann, head.line, head.col))

    def indicator_item(self, raw: _Raw) -> None:
        self.expect("IDENT", "indicator")
        name = self.expect("IDENT")
        self.expect("IDENT", "for")
        subject = self.ref()
        self.expect("PUNCT", "{")
        self.expect("IDENT", "intervals")
        self.expect("PUNCT", "[")
        bounds = [self.number()]
        while self.at_punct(","):
            self.advance()
            bounds.append(self.number())
        self.expect("PUNCT", "]")
        if len(bounds) < 2:
            raise self.fail(name, "intervals need at least 2 boundaries")

        arithmetic: ArithmeticIndicator | None = None
        partitioned: list[tuple[str, tuple[float, float], int, int]] = []
        key = self.expect("IDENT")
        if key.text == "partitioned":
            self.expect("PUNCT", "{")
            while not self.at_punct("}"):
                label = self.expect("IDENT")
                self.expect("PUNCT", ":")
                self.expect("IDENT", "tnormal")
                self.expect("PUNCT", "(")
                mean = self.number()
                self.expect("PUNCT", ",")
                var = self.number()
                self.expect("PUNCT", ")")
                partitioned.append((label.text, (mean, var), label.line, label.col))
            self.expect("PUNCT", "}")
            if not partitioned:
                raise self.fail(key, "empty 'partitioned' block")
        elif key.text == "arithmetic":
            self.expect("IDENT", "mean")
            self.expect("PUNCT", "=")
            intercept = self.number()
            tok = self.peek()
            if self.at_punct("+") or self.at_punct("-"):
                op = self.advance().text
            else:
                raise self.fail(tok, f"expected '+' or '-', got {tok.text!r}")
            slope = self.number()
            self.expect("PUNCT", "*")
            self.expect("IDENT", "level")
            self.expect("IDENT", "variance")
            variance = self.number()
            arithmetic = ArithmeticIndicator(
                intercept=intercept,
                slope=-slope if op == "-" else slope,
                variance=variance,
            )
        else:
            raise self.fail(key, f"expected 'partitioned' or 'arithmetic', got {key.text!r}")
        self.expect("PUNCT", "}")
        spec = _RawIndicator(name.text, subject, tuple(bounds), arithmetic, partitioned)
        raw.indicators.append((spec, name.line, name.col))

    def goal_item(self, raw: _Raw) -> None:
        kw = self.expect("IDENT", "goal")
        name = self.expect("STRING").text
        self.expect("PUNCT", "{")
        self.expect("IDENT", "question")
        question = self.expect("STRING").text
        self.expect("IDENT", "metric")
        metric = self.expect("IDENT").text
        self.expect("IDENT", "activity")
        activity = self.expect("IDENT").text
        self.expect("PUNCT", "}")
        raw.goals.append((GoalSpec(name, question, metric, activity), kw.line, kw.col))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _is_a_descendants(entities: Iterable[Entity]) -> dict[str, list[str]]:
    """Map entity id -> is-a descendants in entity declaration order."""
    children: dict[str, list[str]] = {}
    order = [e.id for e in entities]
    for e in entities:
        if e.parent_is_a is not None:
            children.setdefault(e.parent_is_a, []).append(e.id)
    result: dict[str, list[str]] = {}
    for eid in order:
        seen: list[str] = []
        stack = list(reversed(children.get(eid, [])))
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.append(cur)
            stack.extend(reversed(children.get(cur, [])))
        result[eid] = seen
    return result


def _inherited_pairs(entities: Iterable[Entity], facts: Iterable[Fact]) -> set[FactRef]:
    """Fact references that inheritance expansion would materialize."""
    descendants = _is_a_descendants(entities)
    pairs: set[FactRef] = set()
    for f in facts:
        for d in descendants.get(f.entity, []):
            pairs.add(FactRef(d, f.attribute))
    return pairs


def _validate(raw: _Raw) -> QualityModel:
    diags: list[Diagnostic] = []

    # Entities: unique ids, resolvable acyclic is-a edges.
    entity_ids: dict[str, Entity] = {}
    for ent, line, col in raw.entities:
        if ent.id in entity_ids:
            diags.append(Diagnostic(line, col, f"duplicate entity {ent.id!r}"))
        else:
            entity_ids[ent.id] = ent
    entities_ok = not diags
    for ent, line, col in raw.entities:
        if ent.parent_is_a is not None and ent.parent_is_a not in entity_ids:
            diags.append(
                Diagnostic(line, col, f"unknown entity {ent.parent_is_a!r} in is-a reference")
            )
            entities_ok = False
    if entities_ok:
        # is-a acyclicity.
        for ent, line, col in raw.entities:
            seen = {ent.id}
            cur = ent.parent_is_a
            while cur is not None:
                if cur in seen:
                    diags.append(Diagnostic(line, col, f"cyclic is-a chain at entity {ent.id!r}"))
                    entities_ok = False
                    break
                seen.add(cur)
                cur = entity_ids[cur].parent_is_a
    if entities_ok:
        # An entity must not be a kind of one of its own parts.
        part_children: dict[str, list[str]] = {}
        for ent, _, _ in raw.entities:
            if ent.parent_part_of is not None:
                part_children.setdefault(ent.parent_part_of, []).append(ent.id)

        def part_of_descendants(eid: str) -> set[str]:
            out: set[str] = set()
            stack = list(part_children.get(eid, []))
            while stack:
                cur = stack.pop()
                if cur not in out:
                    out.add(cur)
                    stack.extend(part_children.get(cur, []))
            return out

        for ent, line, col in raw.entities:
            if ent.parent_is_a is not None and ent.parent_is_a in part_of_descendants(ent.id):
                diags.append(
                    Diagnostic(
                        line,
                        col,
                        f"entity {ent.id!r} cannot be a kind of its own part {ent.parent_is_a!r}",
                    )
                )

    # Activities: unique ids, a single root.
    activity_ids: set[str] = set()
    for act, line, col in raw.activities:
        if act.id in activity_ids:
            diags.append(Diagnostic(line, col, f"duplicate activity {act.id!r}"))
        activity_ids.add(act.id)
    if len(raw.top_activities) > 1:
        names = ", ".join(name for name, _, _ in raw.top_activities)
        _, line, col = raw.top_activities[1]
        diags.append(
            Diagnostic(line, col, f"multiple root activities ({names}); activities form one tree")
        )

    # Facts: known entity, unique (entity, attribute).
    declared: set[FactRef] = set()
    for fact, line, col in raw.facts:
        if fact.entity not in entity_ids:
            diags.append(Diagnostic(line, col, f"unknown entity {fact.entity!r} in fact"))
        if fact.ref in declared:
            diags.append(Diagnostic(line, col, f"duplicate fact {fact.ref}"))
        declared.add(fact.ref)

    # References may point at facts that inheritance will materialize.
    entities = tuple(e for e, _, _ in raw.entities)
    facts = tuple(f for f, _, _ in raw.facts)
    known_facts = set(declared)
    if entities_ok:
        known_facts |= _inherited_pairs(entities, facts)

    def check_subject(subject: Subject, line: int, col: int, context: str) -> bool:
        if isinstance(subject, FactRef):
            if subject not in known_facts:
                diags.append(Diagnostic(line, col, f"unknown fact {subject} in {context}"))
                return False
        elif subject not in activity_ids:
            diags.append(Diagnostic(line, col, f"unknown activity {subject!r} in {context}"))
            return False
        return True

    # Impacts: resolvable, unique per (fact, activity).
    seen_impacts: set[tuple[FactRef, str]] = set()
    for impact, line, col in raw.impacts:
        if impact.fact not in known_facts:
            diags.append(Diagnostic(line, col, f"unknown fact {impact.fact} in impact"))
        if impact.activity not in activity_ids:
            diags.append(Diagnostic(line, col, f"unknown activity {impact.activity!r} in impact"))
        key = (impact.fact, impact.activity)
        if key in seen_impacts:
            diags.append(Diagnostic(line, col, f"duplicate impact {impact.fact} -> {impact.activity}"))
        seen_impacts.add(key)

    # Quantitative annotations.
    seen_subjects: set[Subject] = set()
    for ann, line, col in raw.quantifications:
        check_subject(ann.subject, line, col, "quantify")
        if ann.subject in seen_subjects:
            diags.append(Diagnostic(line, col, f"duplicate quantify block for {ann.subject}"))
        seen_subjects.add(ann.subject)
        if ann.state_count < 2:
            diags.append(Diagnostic(line, col, f"states must be >= 2, got {ann.state_count}"))
        if not ann.variance > 0:
            diags.append(Diagnostic(line, col, f"variance must be > 0, got {ann.variance!r}"))
        seen_refs: set[Subject] = set()
        for wref, weight in ann.weights:
            check_subject(wref, line, col, "weights")
            if wref in seen_refs:
                diags.append(Diagnostic(line, col, f"duplicate weight for {wref}"))
            seen_refs.add(wref)
            if not weight > 0:
                diags.append(Diagnostic(line, col, f"weight for {wref} must be > 0, got {weight!r}"))
        if ann.prior is not None:
            if len(ann.prior) != ann.state_count:
                diags.append(
                    Diagnostic(
                        line,
                        col,
                        f"prior has {len(ann.prior)} entries for {ann.state_count} states",
                    )
                )
            elif any(p < 0 for p in ann.prior):
                diags.append(Diagnostic(line, col, "prior entries must be non-negative"))
            elif abs(math.fsum(ann.prior) - 1.0) > 1e-9:
                diags.append(
                    Diagnostic(line, col, f"prior sums to {math.fsum(ann.prior)!r}, expected 1")
                )

    annotations = {ann.subject: ann for ann, _, _ in raw.quantifications}

    def scale_labels(subject: Subject) -> tuple[str, ...]:
        ann = annotations.get(subject)
        k = ann.state_count if ann is not None and ann.state_count >= 2 else DEFAULT_STATE_COUNT
        return default_state_labels(k)

    # Indicators.
    indicator_ids: set[str] = set()
    indicators: list[IndicatorSpec] = []
    for spec, line, col in raw.indicators:
        if spec.id in indicator_ids:
            diags.append(Diagnostic(line, col, f"duplicate indicator {spec.id!r}"))
        indicator_ids.add(spec.id)
        if spec.id in activity_ids:
            diags.append(
                Diagnostic(line, col, f"indicator {spec.id!r} collides with an activity name")
            )
        subject_ok = check_subject(spec.subject, line, col, "indicator")
        for a, b in zip(spec.boundaries, spec.boundaries[1:]):
            if not a < b:
                diags.append(
                    Diagnostic(line, col, f"interval boundaries not strictly increasing: {list(spec.boundaries)}")
                )
                break
        expression: PartitionedIndicator | ArithmeticIndicator
        if spec.arithmetic is not None:
            if not spec.arithmetic.variance > 0:
                diags.append(
                    Diagnostic(line, col, f"variance must be > 0, got {spec.arithmetic.variance!r}")
                )
            expression = spec.arithmetic
        else:
            labels = scale_labels(spec.subject) if subject_ok else None
            by_label: dict[str, tuple[float, float]] = {}
            for label, dist, lline, lcol in spec.partitioned:
                if label in by_label:
                    diags.append(Diagnostic(lline, lcol, f"duplicate partitioned state {label!r}"))
                    continue
                if labels is not None and label not in labels:
                    diags.append(
                        Diagnostic(
                            lline,
                            lcol,
                            f"unknown state {label!r} for {spec.subject} (expected one of {', '.join(labels)})",
                        )
                    )
                    continue
                if not dist[1] > 0:
                    diags.append(Diagnostic(lline, lcol, f"variance must be > 0, got {dist[1]!r}"))
                by_label[label] = dist
            if labels is not None:
                missing = [l for l in labels if l not in by_label]
                if missing:
                    diags.append(
                        Diagnostic(
                            line,
                            col,
                            f"partitioned expression for {spec.id!r} missing states: {', '.join(missing)}",
                        )
                    )
                ordered = tuple(by_label[l] for l in labels if l in by_label)
            else:
                ordered = tuple(by_label.values())
            expression = PartitionedIndicator(ordered)
        indicators.append(IndicatorSpec(spec.id, spec.subject, spec.boundaries, expression))

    # Goals.
    for goal, line, col in raw.goals:
        if goal.activity not in activity_ids:
            diags.append(Diagnostic(line, col, f"unknown activity {goal.activity!r} in goal"))
        if goal.metric not in indicator_ids:
            diags.append(Diagnostic(line, col, f"unknown indicator {goal.metric!r} in goal"))
        else:
            spec = next(s for s, _, _ in raw.indicators if s.id == goal.metric)
            if spec.subject != goal.activity:
                diags.append(
                    Diagnostic(
                        line,
                        col,
                        f"goal metric {goal.metric!r} measures {spec.subject}, not activity {goal.activity!r}",
                    )
                )

    if diags:
        raise ModelError(diags)

    return QualityModel(
        name=raw.name,
        entities=entities,
        facts=facts,
        activities=tuple(a for a, _, _ in raw.activities),
        impacts=tuple(i for i, _, _ in raw.impacts),
        quantifications=tuple(q for q, _, _ in raw.quantifications),
        indicators=tuple(indicators),
        goals=tuple(g for g, _, _ in raw.goals),
    )


def parse_model(text: str) -> QualityModel:
    """Parse and validate DSL source, raising ModelError with diagnostics."""
    tokens = _tokenize(text)
    raw = _Parser(tokens).parse()
    return _validate(raw)


# ---------------------------------------------------------------------------
# Inheritance expansion
# ---------------------------------------------------------------------------


def expand_inheritance(model: QualityModel) -> QualityModel:
    """Materialize inherited facts (and their impacts) along is-a edges.

    For every explicitly declared fact on entity E, every is-a descendant D
    of E gains a fact (D, attribute) tagged with the nearest declaring
    ancestor, unless a fact with that reference already exists.  Impacts of
    the source fact are copied to the materialized fact.  Idempotent.
    """
    explicit = {f.ref: f for f in model.facts if f.inherited_from is None}
    existing = {f.ref for f in model.facts}
    entity_map = {e.id: e for e in model.entities}

    def nearest_source(entity: str, attribute: str) -> Fact | None:
        cur = entity_map.get(entity)
        cur = entity_map.get(cur.parent_is_a) if cur and cur.parent_is_a else None
        while cur is not None:
            fact = explicit.get(FactRef(cur.id, attribute))
            if fact is not None:
                return fact
            cur = entity_map.get(cur.parent_is_a) if cur.parent_is_a else None
        return None

    descendants = _is_a_descendants(model.entities)
    new_facts: list[Fact] = []
    for fact in model.facts:
        if fact.inherited_from is not None:
            continue
        for d in descendants.get(fact.entity, []):
            ref = FactRef(d, fact.attribute)
            if ref in existing:
                continue
            source = nearest_source(d, fact.attribute)
            if source is None or source.ref != fact.ref:
                continue  # a nearer ancestor declares this attribute
            new_facts.append(Fact(d, fact.attribute, inherited_from=fact.entity))
            existing.add(ref)

    impact_keys = {(i.fact, i.activity) for i in model.impacts}
    impacts_by_fact: dict[FactRef, list[Impact]] = {}
    for impact in model.impacts:
        impacts_by_fact.setdefault(impact.fact, []).append(impact)
    new_impacts: list[Impact] = []
    for fact in new_facts:
        source_ref = FactRef(fact.inherited_from, fact.attribute)
        for impact in impacts_by_fact.get(source_ref, []):
            key = (fact.ref, impact.activity)
            if key in impact_keys:
                continue
            new_impacts.append(
                Impact(fact.ref, impact.activity, impact.negative, inherited_from=fact.inherited_from)
            )
            impact_keys.add(key)

    if not new_facts and not new_impacts:
        return model
    return replace(
        model,
        facts=model.facts + tuple(new_facts),
        impacts=model.impacts + tuple(new_impacts),
    )


# ---------------------------------------------------------------------------
# Matrix view
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixView:
    """Facts as rows, activities leaf-to-root as columns, signs as cells."""

    facts: tuple[str, ...]
    activities: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]  # "+" | "-" | ""

    def to_json_obj(self) -> dict:
        return {
            "facts": list(self.facts),
            "activities": list(self.activities),
            "cells": [list(row) for row in self.cells],
        }

    def to_text(self) -> str:
        width = max([len(a) for a in self.activities] + [1])
        left = max([len(f) for f in self.facts] + [1])
        lines = [" " * left + " " + " ".join(a.rjust(width) for a in self.activities)]
        for fact, row in zip(self.facts, self.cells):
            cells = " ".join((c or " ").rjust(width) for c in row)
            lines.append(fact.ljust(left) + " " + cells)
        return "\n".join(lines)


def _activity_columns(model: QualityModel) -> list[str]:
    """Leaf-to-root (post-order) activity order.

    A purely structural root spans the matrix header the way the tree root
    does in the matrix picture, so it is dropped as a column; it stays when
    it is childless or carries impact entries of its own.
    """
    root = model.root_activity
    if root is None:
        return []
    order: list[str] = []

    def visit(aid: str) -> None:
        for child in model.activity_map[aid].children:
            visit(child)
        order.append(aid)

    visit(root.id)
    if root.children and all(i.activity != root.id for i in model.impacts):
        order.remove(root.id)
    return order


def _fact_rows(model: QualityModel) -> list[FactRef]:
    """Facts grouped by the entity tree (part-of DFS, declaration order)."""
    children: dict[str | None, list[str]] = {}
    for e in model.entities:
        children.setdefault(e.parent_part_of, []).append(e.id)
    entity_order: list[str] = []

    def visit(eid: str) -> None:
        entity_order.append(eid)
        for child in children.get(eid, []):
            visit(child)

    for top in children.get(None, []):
        visit(top)
    rank = {eid: i for i, eid in enumerate(entity_order)}
    indexed = list(enumerate(model.facts))
    indexed.sort(key=lambda item: (rank.get(item[1].entity, len(rank)), item[0]))
    return [fact.ref for _, fact in indexed]


def export_matrix(model: QualityModel) -> MatrixView:
    """Impact matrix of the inheritance-expanded model."""
    expanded = expand_inheritance(model)
    rows = _fact_rows(expanded)
    cols = _activity_columns(expanded)
    signs = {(i.fact, i.activity): i.sign for i in expanded.impacts}
    cells = tuple(
        tuple(signs.get((fact, act), "") for act in cols) for fact in rows
    )
    return MatrixView(
        facts=tuple(str(f) for f in rows),
        activities=tuple(cols),
        cells=cells,
    )


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def print_model(model: QualityModel) -> str:
    """Canonical DSL source; parse(print_model(m)) == m for parsed models.

    Materialized inherited facts and their copied impacts are derived data
    and are not printed.
    """
    out: list[str] = [f'model "{model.name}" {{']

    ent_children: dict[str | None, list[Entity]] = {}
    for e in model.entities:
        ent_children.setdefault(e.parent_part_of, []).append(e)

    def emit_entity(entity: Entity, depth: int) -> None:
        pad = "  " * depth
        suffix = f" : {entity.parent_is_a}" if entity.parent_is_a else ""
        kids = ent_children.get(entity.id, [])
        if kids:
            out.append(f"{pad}entity {entity.id}{suffix} {{")
            for kid in kids:
                emit_entity(kid, depth + 1)
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}entity {entity.id}{suffix}")

    for top in ent_children.get(None, []):
        emit_entity(top, 1)

    def emit_activity(activity: Activity, depth: int) -> None:
        pad = "  " * depth
        if activity.children:
            out.append(f"{pad}activity {activity.id} {{")
            for child in activity.children:
                emit_activity(model.activity_map[child], depth + 1)
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}activity {activity.id}")

    for activity in model.activities:
        if activity.parent is None:
            emit_activity(activity, 1)

    for fact in model.facts:
        if fact.inherited_from is None:
            out.append(f"  fact {fact.ref}")

    for impact in model.impacts:
        if impact.inherited_from is None:
            out.append(f"  impact {impact.fact} -> {impact.activity} {impact.sign}")

    for ann in model.quantifications:
        out.append(f"  quantify {ann.subject} {{")
        out.append(f"    states {ann.state_count}")
        out.append(f"    variance {_fmt(ann.variance)}")
        if ann.weights:
            out.append("    weights {")
            for ref, weight in ann.weights:
                out.append(f"      {ref} : {_fmt(weight)}")
            out.append("    }")
        if ann.prior is not None:
            out.append(f"    prior [{', '.join(_fmt(p) for p in ann.prior)}]")
        out.append("  }")

    for spec in model.indicators:
        out.append(f"  indicator {spec.id} for {spec.subject} {{")
        out.append(f"    intervals [{', '.join(_fmt(b) for b in spec.boundaries)}]")
        if isinstance(spec.expression, ArithmeticIndicator):
            expr = spec.expression
            op = "-" if expr.slope < 0 else "+"
            out.append(
                f"    arithmetic mean = {_fmt(expr.intercept)} {op} {_fmt(abs(expr.slope))} * level "
                f"variance {_fmt(expr.variance)}"
            )
        else:
            labels = model.scale_for(spec.subject).labels
            out.append("    partitioned {")
            for label, (mean, var) in zip(labels, spec.expression.distributions):
                out.append(f"      {label} : tnormal({_fmt(mean)}, {_fmt(var)})")
            out.append("    }")
        out.append("  }")

    for goal in model.goals:
        out.append(f'  goal "{goal.name}" {{')
        out.append(f'    question "{goal.question}"')
        out.append(f"    metric {goal.metric}")
        out.append(f"    activity {goal.activity}")
        out.append("  }")

    out.append("}")
    return "\n".join(out) + "\n"
