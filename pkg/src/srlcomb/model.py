"""Core domain types shared by every stage of the combination pipeline.

Spans, role labels, annotated sentences, candidate arguments, solutions,
and the constraint rules (c1..c6) that a consistent predicate-argument
structure must satisfy.  Everything here is immutable after construction
and safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence


class StructureError(ValueError):
    """A solution references candidates that do not belong to the sentence."""


# ---------------------------------------------------------------------------
# Spans


class SpanRelation(Enum):
    EQUAL = "equal"
    DISJOINT = "disjoint"
    A_CONTAINS_B = "a_contains_b"
    B_CONTAINS_A = "b_contains_a"
    CROSSING = "crossing"


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token interval: ``start`` and ``end`` both index tokens."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"span start must be >= 0, got {self.start}")
        if self.end < self.start:
            raise ValueError(f"span end {self.end} precedes start {self.start}")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def intersects(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end


def span_relation(a: Span, b: Span) -> SpanRelation:
    """Classify two spans; exactly one relation holds for any pair."""
    if a == b:
        return SpanRelation.EQUAL
    if not a.intersects(b):
        return SpanRelation.DISJOINT
    if a.contains(b):
        return SpanRelation.A_CONTAINS_B
    if b.contains(a):
        return SpanRelation.B_CONTAINS_A
    return SpanRelation.CROSSING


# ---------------------------------------------------------------------------
# Role labels


class LabelKind(Enum):
    VERB = "verb"
    CORE = "core"
    ADJUNCT = "adjunct"
    REFERENCE = "reference"
    CONTINUATION = "continuation"


_CORE_RE = re.compile(r"^A([0-5])$")
_ADJUNCT_RE = re.compile(r"^AM(?:-[A-Za-z]+)?$")


@dataclass(frozen=True, order=True)
class RoleLabel:
    """A role label: V, core A0-A5, adjunct AM-*, or R-/C- prefixed variants.

    ``base`` carries the referred label text for R-/C- kinds, e.g. R-AM-TMP
    is a reference with base AM-TMP.
    """

    text: str
    kind: LabelKind = field(compare=False)
    base: Optional[str] = field(default=None, compare=False)

    @classmethod
    def parse(cls, text: str) -> "RoleLabel":
        if text == "V":
            return cls(text, LabelKind.VERB)
        if _CORE_RE.match(text):
            return cls(text, LabelKind.CORE)
        if _ADJUNCT_RE.match(text):
            return cls(text, LabelKind.ADJUNCT)
        for prefix, kind in (("R-", LabelKind.REFERENCE), ("C-", LabelKind.CONTINUATION)):
            if text.startswith(prefix):
                base = text[len(prefix):]
                base_label = cls.parse(base)
                if base_label.kind in (LabelKind.REFERENCE, LabelKind.CONTINUATION, LabelKind.VERB):
                    raise ValueError(f"role {text!r}: base {base!r} may not itself be R-/C-/V")
                return cls(text, kind, base)
        raise ValueError(f"unknown role label {text!r}")

    @property
    def core_index(self) -> Optional[int]:
        m = _CORE_RE.match(self.text)
        return int(m.group(1)) if m else None

    def is_scored(self) -> bool:
        """Verb pseudo-arguments are stored but excluded from P/R/F1."""
        return self.kind is not LabelKind.VERB

    def __str__(self) -> str:
        return self.text


V_LABEL = RoleLabel.parse("V")


# ---------------------------------------------------------------------------
# Sentences


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    pos: str = "XX"
    chunk: str = "O"   # B-I-O chunk tag
    clause: str = "*"  # bracket tag, e.g. "(S*", "*S)", "(S*S)"
    ne: str = "O"      # B-I-O named-entity tag


@dataclass(frozen=True)
class ParseNode:
    """Phrase-structure node; children are ordered, disjoint, and contained."""

    label: str
    span: Span
    children: tuple["ParseNode", ...] = ()

    def __post_init__(self) -> None:
        prev_end = self.span.start - 1
        for child in self.children:
            if child.span.start <= prev_end:
                raise ValueError("parse children must be ordered and disjoint")
            if not self.span.contains(child.span):
                raise ValueError("parse child escapes parent span")
            prev_end = child.span.end

    def walk(self) -> Iterator["ParseNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


def _decode_bio(tags: Sequence[str]) -> list[tuple[str, Span]]:
    """Decode a B-I-O tag sequence into (type, span) chunks, leniently."""
    out: list[tuple[str, Span]] = []
    current: Optional[tuple[str, int]] = None
    for i, tag in enumerate(tags):
        if tag == "O" or tag == "":
            if current:
                out.append((current[0], Span(current[1], i - 1)))
                current = None
            continue
        mark, _, kind = tag.partition("-")
        if mark == "B" or current is None or current[0] != kind:
            if current:
                out.append((current[0], Span(current[1], i - 1)))
            current = (kind, i)
    if current:
        out.append((current[0], Span(current[1], len(tags) - 1)))
    return out


_CLAUSE_CELL_RE = re.compile(r"^((?:\([A-Z0-9]+)*)\*((?:[A-Z0-9]+\))*)$")


def clause_events(tag: str) -> tuple[list[str], list[str]]:
    """Split a clause bracket tag into labels opened and closed at the token."""
    m = _CLAUSE_CELL_RE.match(tag)
    if not m:
        raise ValueError(f"malformed clause tag {tag!r}")
    opens = [part for part in m.group(1).split("(") if part]
    closes = [part for part in m.group(2).split(")") if part]
    return opens, closes


@dataclass(frozen=True)
class Sentence:
    """One input sentence with token-level annotations and its predicates."""

    id: int
    tokens: tuple[Token, ...]
    predicates: tuple[tuple[int, str], ...] = ()
    parse: Optional[ParseNode] = None

    def __post_init__(self) -> None:
        last = -1
        for idx, _lemma in self.predicates:
            if idx <= last:
                raise ValueError("predicate indices must be strictly increasing")
            if idx >= len(self.tokens):
                raise ValueError(f"predicate index {idx} out of range")
            last = idx
        if self.parse is not None and self.tokens and self.parse.span.end >= len(self.tokens):
            raise ValueError("parse tree exceeds sentence length")

    def __len__(self) -> int:
        return len(self.tokens)

    def chunks(self) -> list[tuple[str, Span]]:
        return _decode_bio([t.chunk for t in self.tokens])

    def named_entities(self) -> list[tuple[str, Span]]:
        return _decode_bio([t.ne for t in self.tokens])

    def clause_spans(self) -> list[Span]:
        """Clause intervals decoded from the bracket column, outermost first."""
        spans: list[Span] = []
        stack: list[int] = []
        for i, tok in enumerate(self.tokens):
            opens, closes = clause_events(tok.clause)
            for _ in opens:
                stack.append(i)
            for _ in closes:
                if not stack:
                    raise ValueError(f"unbalanced clause brackets at token {i}")
                spans.append(Span(stack.pop(), i))
        if stack:
            raise ValueError("unclosed clause bracket")
        spans.sort(key=lambda s: (s.start, -s.end))
        return spans

    def clause_depth(self, span: Span) -> int:
        """Number of clauses that contain ``span`` entirely."""
        return sum(1 for cs in self.clause_spans() if cs.contains(span))


# ---------------------------------------------------------------------------
# Arguments, candidates, solutions


@dataclass(frozen=True, order=True)
class Argument:
    """One labeled argument span of one predicate (``predicate`` indexes
    ``Sentence.predicates``)."""

    predicate: int
    label: RoleLabel
    span: Span


@dataclass(frozen=True)
class FeatureVector:
    """Sparse binary feature vector: a sorted tuple of interned feature ids."""

    ids: tuple[int, ...]

    def __post_init__(self) -> None:
        ids = tuple(sorted(set(self.ids)))
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "_idset", frozenset(ids))

    @property
    def idset(self) -> frozenset:
        return self._idset  # type: ignore[attr-defined]

    def dot(self, other: "FeatureVector") -> int:
        return len(self.idset & other.idset)

    def __len__(self) -> int:
        return len(self.ids)


CandidateKey = tuple[int, int, str, Span]


@dataclass(frozen=True)
class Candidate:
    """One pooled argument hypothesis with its per-system evidence.

    ``raw_scores`` and ``probs`` are stored as sorted (system, value) pairs so
    the candidate stays hashable; both may only mention voting systems.  A
    system that did not propose the argument contributes probability 0.
    """

    sentence_id: int
    argument: Argument
    votes: frozenset
    raw_scores: tuple[tuple[str, float], ...] = ()
    probs: tuple[tuple[str, float], ...] = ()
    features: Optional[FeatureVector] = None
    is_gold: Optional[bool] = None

    def __post_init__(self) -> None:
        if not self.votes:
            raise ValueError("candidate must carry at least one vote")
        object.__setattr__(self, "raw_scores", tuple(sorted(self.raw_scores)))
        object.__setattr__(self, "probs", tuple(sorted(self.probs)))
        for sys_id, _ in self.raw_scores:
            if sys_id not in self.votes:
                raise ValueError(f"raw score for non-voting system {sys_id!r}")
        for sys_id, p in self.probs:
            if sys_id not in self.votes:
                raise ValueError(f"probability for non-voting system {sys_id!r}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} out of [0, 1]")

    @classmethod
    def make(
        cls,
        sentence_id: int,
        argument: Argument,
        votes: Iterable[str],
        raw_scores: Optional[dict] = None,
        probs: Optional[dict] = None,
        features: Optional[FeatureVector] = None,
        is_gold: Optional[bool] = None,
    ) -> "Candidate":
        return cls(
            sentence_id=sentence_id,
            argument=argument,
            votes=frozenset(votes),
            raw_scores=tuple((raw_scores or {}).items()),
            probs=tuple((probs or {}).items()),
            features=features,
            is_gold=is_gold,
        )

    @property
    def key(self) -> CandidateKey:
        a = self.argument
        return (self.sentence_id, a.predicate, a.label.text, a.span)

    @property
    def label(self) -> RoleLabel:
        return self.argument.label

    @property
    def span(self) -> Span:
        return self.argument.span

    @property
    def predicate(self) -> int:
        return self.argument.predicate

    def raw_score(self, system: str) -> Optional[float]:
        for sys_id, v in self.raw_scores:
            if sys_id == system:
                return v
        return None

    def prob(self, system: str) -> float:
        for sys_id, v in self.probs:
            if sys_id == system:
                return v
        return 0.0

    def prob_sum(self) -> float:
        return sum(v for _, v in self.probs)


@dataclass(frozen=True)
class Solution:
    """A per-sentence subset of candidates plus the objective it achieved."""

    sentence_id: int
    selected: tuple[Candidate, ...]
    objective: float

    @classmethod
    def make(cls, sentence_id: int, selected: Iterable[Candidate], objective: float) -> "Solution":
        return cls(sentence_id, tuple(sorted(selected, key=lambda c: c.key)), objective)

    def keys(self) -> frozenset:
        return frozenset(c.key for c in self.selected)

    def __len__(self) -> int:
        return len(self.selected)


# ---------------------------------------------------------------------------
# Constraint rules


CONSTRAINT_IDS = ("c1", "c2", "c3", "c4", "c5", "c6")


@dataclass(frozen=True)
class ConstraintRule:
    mode: str = "off"  # off | hard | soft
    penalty: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("off", "hard", "soft"):
            raise ValueError(f"unknown constraint mode {self.mode!r}")
        if self.mode == "soft":
            if not self.penalty >= 0.0 or self.penalty != self.penalty or self.penalty == float("inf"):
                raise ValueError("soft penalty must be finite and >= 0")
        elif self.penalty != 0.0:
            raise ValueError("penalty only meaningful for soft constraints")

    @property
    def active(self) -> bool:
        return self.mode != "off"


OFF = ConstraintRule("off")
HARD = ConstraintRule("hard")


def soft(penalty: float) -> ConstraintRule:
    return ConstraintRule("soft", penalty)


@dataclass(frozen=True)
class ConstraintSet:
    """Which of c1..c6 are active, each either hard or soft with a penalty.

    c1: same-predicate arguments may not overlap nor embed (Equal included).
    c2: a predicate may not select two core arguments with the same label.
    c3: a selected R-X needs a selected X for the same predicate.
    c4: a selected C-X needs a selected X starting earlier, same predicate.
    c5: arguments of different predicates may not cross (embedding allowed).
    c6: two predicates may not share an identical AM-X / R-AM-X / C-X argument.
    """

    c1: ConstraintRule = OFF
    c2: ConstraintRule = OFF
    c3: ConstraintRule = OFF
    c4: ConstraintRule = OFF
    c5: ConstraintRule = OFF
    c6: ConstraintRule = OFF

    @classmethod
    def hard_rules(cls, *numbers: int) -> "ConstraintSet":
        kwargs = {f"c{n}": HARD for n in numbers}
        return cls(**kwargs)

    @classmethod
    def parse(cls, text: str) -> "ConstraintSet":
        """Parse a constraint string such as ``1+2+5+6`` or ``1+2+3:soft=0.5``."""
        kwargs = {}
        text = text.strip()
        if not text:
            return cls()
        for item in text.split("+"):
            item = item.strip()
            m = re.match(r"^([1-6])(?::soft=([0-9.eE+-]+))?$", item)
            if not m:
                raise ValueError(f"bad constraint item {item!r}")
            cid = f"c{m.group(1)}"
            if cid in kwargs:
                raise ValueError(f"constraint {cid} given twice")
            kwargs[cid] = soft(float(m.group(2))) if m.group(2) is not None else HARD
        return cls(**kwargs)

    def rule(self, cid: str) -> ConstraintRule:
        return getattr(self, cid)

    def active_ids(self) -> tuple[str, ...]:
        return tuple(cid for cid in CONSTRAINT_IDS if self.rule(cid).active)

    def hard_only(self) -> "ConstraintSet":
        kwargs = {cid: HARD for cid in CONSTRAINT_IDS if self.rule(cid).mode == "hard"}
        return ConstraintSet(**kwargs)

    def describe(self) -> str:
        parts = []
        for cid in CONSTRAINT_IDS:
            r = self.rule(cid)
            if r.mode == "hard":
                parts.append(cid[1])
            elif r.mode == "soft":
                parts.append(f"{cid[1]}:soft={r.penalty:g}")
        return "+".join(parts)


@dataclass(frozen=True)
class Violation:
    constraint: str
    candidates: tuple[Candidate, ...]
    hard: bool
    penalty: float = 0.0


def _shared_arg_label(label: RoleLabel) -> bool:
    """Labels covered by c6: AM-X, R-AM-X, and C-X of any base."""
    if label.kind is LabelKind.ADJUNCT or label.kind is LabelKind.CONTINUATION:
        return True
    return label.kind is LabelKind.REFERENCE and bool(label.base) and label.base.startswith("AM")


def enumerate_violations(selected: Sequence[Candidate], cs: ConstraintSet) -> list[Violation]:
    """List every countable constraint violation in a candidate selection.

    Pairwise constraints (c1, c2, c5, c6) yield one violation per offending
    pair; c3 and c4 yield one per unsupported R-/C- candidate.  Soft
    violations carry their penalty; hard ones make the selection invalid.
    """
    cands = sorted(selected, key=lambda c: c.key)
    out: list[Violation] = []

    def emit(cid: str, members: tuple[Candidate, ...]) -> None:
        rule = cs.rule(cid)
        out.append(Violation(cid, members, rule.mode == "hard",
                             rule.penalty if rule.mode == "soft" else 0.0))

    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            a, b = cands[i], cands[j]
            rel = span_relation(a.span, b.span)
            if a.predicate == b.predicate:
                if cs.c1.active and rel is not SpanRelation.DISJOINT:
                    emit("c1", (a, b))
                if (cs.c2.active and a.label.kind is LabelKind.CORE
                        and a.label.text == b.label.text):
                    emit("c2", (a, b))
            else:
                if cs.c5.active and rel is SpanRelation.CROSSING:
                    emit("c5", (a, b))
                if (cs.c6.active and rel is SpanRelation.EQUAL
                        and a.label.text == b.label.text and _shared_arg_label(a.label)):
                    emit("c6", (a, b))
    if cs.c3.active:
        for c in cands:
            if c.label.kind is LabelKind.REFERENCE:
                if not any(o.predicate == c.predicate and o.label.text == c.label.base
                           for o in cands):
                    emit("c3", (c,))
    if cs.c4.active:
        for c in cands:
            if c.label.kind is LabelKind.CONTINUATION:
                if not any(o.predicate == c.predicate and o.label.text == c.label.base
                           and o.span.start < c.span.start for o in cands):
                    emit("c4", (c,))
    return out


def validate(solution: Solution, cs: ConstraintSet, sentence: Sentence) -> list[Violation]:
    """Check a solution against a constraint set.

    Raises StructureError when a candidate does not belong to the sentence.
    The returned list is empty iff the solution satisfies every hard
    constraint and incurs no soft penalty; callers that only care about
    validity should filter on ``Violation.hard``.
    """
    for c in solution.selected:
        if c.sentence_id != sentence.id:
            raise StructureError(
                f"candidate {c.key} belongs to sentence {c.sentence_id}, not {sentence.id}")
        if c.predicate >= len(sentence.predicates):
            raise StructureError(f"candidate {c.key} names unknown predicate {c.predicate}")
        if sentence.tokens and c.span.end >= len(sentence.tokens):
            raise StructureError(f"candidate {c.key} exceeds sentence length")
    return enumerate_violations(solution.selected, cs)


def hard_violations(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.hard]


def with_flags(candidate: Candidate, **changes) -> Candidate:
    """Return a copy of the candidate with fields replaced."""
    return replace(candidate, **changes)
