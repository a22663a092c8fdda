"""Column-format corpus I/O and a synthetic corpus generator.

Three line-oriented formats are supported, all with blank-line sentence
separators and whitespace-delimited columns:

* props: column 1 is the target-verb lemma or "-"; columns 2..k hold one
  bracket column per predicate, where "(LABEL*" opens an argument, "*)"
  closes it, "(LABEL*)" covers a single token, and "*" is filler.
* syntax: word, POS, chunk B-I-O, clause brackets, NE B-I-O, and an
  optional parse-bracket column ("(S(NP*" style).
* scores: one "sentIdx predIdx label start end score" record per line.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .model import (
    Argument,
    LabelKind,
    ParseNode,
    RoleLabel,
    Sentence,
    Span,
    Token,
    V_LABEL,
    clause_events,
)


class FormatError(ValueError):
    """Malformed input file; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SerializationError(ValueError):
    """The in-memory document cannot be expressed in the target format."""


class AlignmentError(ValueError):
    """Documents disagree on the sentence/predicate skeleton."""


# ---------------------------------------------------------------------------
# Props documents


@dataclass(frozen=True)
class PropsSentence:
    """Predicate/argument annotations of one sentence.

    ``arguments[p]`` holds the arguments of predicate ``p`` (including its V
    pseudo-argument), kept sorted by span start; spans of one predicate are
    disjoint, which is what the bracket format can express.
    """

    n_tokens: int
    predicates: tuple[tuple[int, str], ...]
    arguments: tuple[tuple[Argument, ...], ...]

    def __post_init__(self) -> None:
        if len(self.predicates) != len(self.arguments):
            raise ValueError("one argument set required per predicate")
        normalized = []
        for p, args in enumerate(self.arguments):
            for arg in args:
                if arg.predicate != p:
                    raise ValueError("argument filed under the wrong predicate")
                if arg.span.end >= self.n_tokens:
                    raise ValueError("argument span exceeds sentence length")
            normalized.append(tuple(sorted(args, key=lambda a: (a.span.start, a.span.end, a.label.text))))
        object.__setattr__(self, "arguments", tuple(normalized))
        object.__setattr__(self, "predicates", tuple(self.predicates))

    def scored_arguments(self, predicate: int) -> tuple[Argument, ...]:
        """Arguments of one predicate without the V pseudo-argument."""
        return tuple(a for a in self.arguments[predicate] if a.label.is_scored())


@dataclass(frozen=True)
class PropsDocument:
    sentences: tuple[PropsSentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)


def check_skeleton(docs: Sequence[PropsDocument]) -> None:
    """Verify that all documents share sentence count, lengths, and predicates."""
    if not docs:
        return
    first = docs[0]
    for doc in docs[1:]:
        if len(doc) != len(first):
            raise AlignmentError(f"sentence counts differ: {len(first)} vs {len(doc)}")
        for s, (a, b) in enumerate(zip(first.sentences, doc.sentences)):
            if a.n_tokens != b.n_tokens:
                raise AlignmentError(f"sentence {s}: token counts differ")
            if a.predicates != b.predicates:
                raise AlignmentError(f"sentence {s}: predicate skeletons differ")


def _sentence_blocks(text: str) -> list[list[tuple[int, str]]]:
    blocks: list[list[tuple[int, str]]] = []
    current: list[tuple[int, str]] = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        if raw.strip():
            current.append((line_no, raw))
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    return blocks


_OPEN_CELL_RE = re.compile(r"^\(([^()\s*]+)\*$")
_SINGLE_CELL_RE = re.compile(r"^\(([^()\s*]+)\*\)$")


def parse_props(text: str) -> PropsDocument:
    """Parse a props file; raises FormatError with a line number on damage."""
    sentences = []
    for block in _sentence_blocks(text):
        rows = []
        width = None
        for line_no, raw in block:
            cols = raw.split()
            if width is None:
                width = len(cols)
                if width < 1:
                    raise FormatError("empty line inside sentence", line_no)
            elif len(cols) != width:
                raise FormatError(
                    f"expected {width} columns, found {len(cols)}", line_no)
            rows.append((line_no, cols))

        n_tokens = len(rows)
        n_cols = width - 1
        predicates = tuple(
            (i, cols[0]) for i, (_ln, cols) in enumerate(rows) if cols[0] != "-")
        if len(predicates) != n_cols:
            raise FormatError(
                f"{len(predicates)} target verbs but {n_cols} argument columns",
                rows[0][0])

        arguments: list[tuple[Argument, ...]] = []
        for p in range(n_cols):
            args: list[Argument] = []
            open_label: Optional[RoleLabel] = None
            open_start = -1
            for i, (line_no, cols) in enumerate(rows):
                cell = cols[p + 1]
                if cell == "*":
                    continue
                if cell == "*)":
                    if open_label is None:
                        raise FormatError("argument closed but never opened", line_no)
                    args.append(Argument(p, open_label, Span(open_start, i)))
                    open_label = None
                    continue
                single = _SINGLE_CELL_RE.match(cell)
                opener = _OPEN_CELL_RE.match(cell)
                if single or opener:
                    if open_label is not None:
                        raise FormatError("argument opened while another is open", line_no)
                    try:
                        label = RoleLabel.parse((single or opener).group(1))
                    except ValueError as exc:
                        raise FormatError(str(exc), line_no) from exc
                    if single:
                        args.append(Argument(p, label, Span(i, i)))
                    else:
                        open_label = label
                        open_start = i
                    continue
                raise FormatError(f"malformed bracket cell {cell!r}", line_no)
            if open_label is not None:
                raise FormatError(
                    f"argument {open_label.text} never closed", rows[-1][0])
            arguments.append(tuple(args))
        sentences.append(PropsSentence(n_tokens, predicates, tuple(arguments)))
    return PropsDocument(tuple(sentences))


def emit_props(doc: PropsDocument) -> str:
    """Serialize a props document; deterministic, one blank line per sentence."""
    lines: list[str] = []
    for s, sent in enumerate(doc.sentences):
        k = len(sent.predicates)
        cells = [["-"] + ["*"] * k for _ in range(sent.n_tokens)]
        for idx, lemma in sent.predicates:
            cells[idx][0] = lemma
        for p, args in enumerate(sent.arguments):
            prev_end = -1
            for arg in args:  # already sorted by span start
                if arg.span.start <= prev_end:
                    raise SerializationError(
                        f"sentence {s}, predicate {p}: overlapping spans cannot "
                        f"be written to a bracket column")
                prev_end = arg.span.end
                col = p + 1
                if len(arg.span) == 1:
                    cells[arg.span.start][col] = f"({arg.label.text}*)"
                else:
                    cells[arg.span.start][col] = f"({arg.label.text}*"
                    cells[arg.span.end][col] = "*)"
        for row in cells:
            lines.append(" ".join(row))
        lines.append("")
    return "\n".join(lines) + "\n" if lines else ""


# ---------------------------------------------------------------------------
# Syntax documents


_PARSE_CELL_RE = re.compile(r"^((?:\([^()\s*]+)*)\*(\)*)$")


def _parse_tree_column(cells: Sequence[tuple[int, str]], n_tokens: int) -> Optional[ParseNode]:
    stack: list[tuple[str, int, list[ParseNode]]] = []
    roots: list[ParseNode] = []
    for i, (line_no, cell) in enumerate(cells):
        m = _PARSE_CELL_RE.match(cell)
        if not m:
            raise FormatError(f"malformed parse cell {cell!r}", line_no)
        for label in (part for part in m.group(1).split("(") if part):
            stack.append((label, i, []))
        for _ in m.group(2):
            if not stack:
                raise FormatError("parse bracket closed but never opened", line_no)
            label, start, children = stack.pop()
            node = ParseNode(label, Span(start, i), tuple(children))
            if stack:
                stack[-1][2].append(node)
            else:
                roots.append(node)
    if stack:
        raise FormatError(f"unclosed parse bracket ({stack[-1][0]}", cells[-1][0])
    if not roots:
        return None
    if len(roots) == 1:
        return roots[0]
    return ParseNode("TOP", Span(0, n_tokens - 1), tuple(roots))


def _check_bio(tags: Sequence[tuple[int, str]], what: str) -> None:
    prev = "O"
    for line_no, tag in tags:
        if tag == "O":
            prev = tag
            continue
        mark, sep, kind = tag.partition("-")
        if mark not in ("B", "I") or not sep or not kind:
            raise FormatError(f"malformed {what} tag {tag!r}", line_no)
        if mark == "I":
            pmark, _, pkind = prev.partition("-")
            if pmark not in ("B", "I") or pkind != kind:
                raise FormatError(f"{what} tag {tag!r} continues nothing", line_no)
        prev = tag


def parse_syntax(text: str) -> list[Sentence]:
    """Parse a syntax file into Sentences (predicates left empty)."""
    sentences: list[Sentence] = []
    for sent_id, block in enumerate(_sentence_blocks(text)):
        width = None
        rows = []
        for line_no, raw in block:
            cols = raw.split()
            if width is None:
                width = len(cols)
                if width not in (5, 6):
                    raise FormatError(
                        f"expected 5 or 6 columns, found {width}", line_no)
            elif len(cols) != width:
                raise FormatError(
                    f"expected {width} columns, found {len(cols)}", line_no)
            rows.append((line_no, cols))

        _check_bio([(ln, cols[2]) for ln, cols in rows], "chunk")
        _check_bio([(ln, cols[4]) for ln, cols in rows], "named-entity")

        depth = 0
        for line_no, cols in rows:
            try:
                opens, closes = clause_events(cols[3])
            except ValueError as exc:
                raise FormatError(str(exc), line_no) from exc
            depth += len(opens) - len(closes)
            if depth < 0:
                raise FormatError("clause bracket closed but never opened", line_no)
        if depth != 0:
            raise FormatError("unclosed clause bracket", rows[-1][0])

        tokens = tuple(
            Token(i, cols[0], cols[1], cols[2], cols[3], cols[4])
            for i, (_ln, cols) in enumerate(rows))
        parse = None
        if width == 6:
            parse = _parse_tree_column([(ln, cols[5]) for ln, cols in rows], len(rows))
        sentences.append(Sentence(sent_id, tokens, (), parse))
    return sentences


def emit_syntax(sentences: Sequence[Sentence]) -> str:
    lines: list[str] = []
    for sent in sentences:
        opens: dict[int, list[str]] = {}
        closes: dict[int, int] = {}
        if sent.parse is not None:
            for node in sent.parse.walk():  # preorder: outer nodes first
                opens.setdefault(node.span.start, []).append(node.label)
                closes[node.span.end] = closes.get(node.span.end, 0) + 1
        for tok in sent.tokens:
            cols = [tok.form, tok.pos, tok.chunk, tok.clause, tok.ne]
            if sent.parse is not None:
                cell = "".join(f"({lab}" for lab in opens.get(tok.index, []))
                cell += "*" + ")" * closes.get(tok.index, 0)
                cols.append(cell)
            lines.append(" ".join(cols))
        lines.append("")
    return "\n".join(lines) + "\n" if lines else ""


def attach_predicates(sentences: Sequence[Sentence], doc: PropsDocument) -> list[Sentence]:
    """Copy the predicate skeleton of a props document onto parsed sentences."""
    if len(sentences) != len(doc):
        raise AlignmentError(
            f"syntax has {len(sentences)} sentences, props has {len(doc)}")
    out = []
    for sent, props in zip(sentences, doc.sentences):
        if len(sent.tokens) != props.n_tokens:
            raise AlignmentError(f"sentence {sent.id}: token counts differ")
        out.append(Sentence(sent.id, sent.tokens, props.predicates, sent.parse))
    return out


def skeleton_sentences(doc: PropsDocument) -> list[Sentence]:
    """Fabricate plain sentences for a props document lacking a syntax file.

    Tokens get placeholder forms, single-token chunks, and one clause spanning
    the sentence; good enough to make partial-syntax features well defined.
    """
    out = []
    for s, sent in enumerate(doc.sentences):
        preds = dict(sent.predicates)
        tokens = []
        for i in range(sent.n_tokens):
            clause = "*"
            if i == 0:
                clause = "(S*"
            if i == sent.n_tokens - 1:
                clause = "(S*S)" if sent.n_tokens == 1 else "*S)"
            if i in preds:
                tokens.append(Token(i, preds[i], "VBD", "B-VP", clause, "O"))
            else:
                tokens.append(Token(i, f"w{i}", "NN", "B-NP", clause, "O"))
        out.append(Sentence(s, tuple(tokens), sent.predicates, None))
    return out


# ---------------------------------------------------------------------------
# Score sidecars


ScoreKey = tuple[int, int, str, Span]
ScoreTable = dict


def parse_scores(text: str) -> ScoreTable:
    """Parse a raw-score sidecar into a {(sent, pred, label, span): score} table."""
    table: ScoreTable = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 6:
            raise FormatError(f"expected 6 fields, found {len(parts)}", line_no)
        try:
            sent, pred = int(parts[0]), int(parts[1])
            label = RoleLabel.parse(parts[2])
            span = Span(int(parts[3]), int(parts[4]))
            score = float(parts[5])
        except ValueError as exc:
            raise FormatError(str(exc), line_no) from exc
        if not math.isfinite(score):
            raise FormatError(f"non-finite score {parts[5]}", line_no)
        key = (sent, pred, label.text, span)
        if key in table:
            raise FormatError(f"duplicate score entry for {key}", line_no)
        table[key] = score
    return table


def emit_scores(table: ScoreTable) -> str:
    lines = []
    for (sent, pred, label, span), score in sorted(table.items()):
        lines.append(f"{sent} {pred} {label} {span.start} {span.end} {score!r}")
    return "\n".join(lines) + "\n" if lines else ""


# ---------------------------------------------------------------------------
# Synthetic corpus generator


_CORE_LABELS = ("A0", "A1", "A2", "A3", "A4")
_ADJUNCT_LABELS = ("AM-TMP", "AM-LOC", "AM-MNR", "AM-ADV")


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the synthetic corpus generator.

    Per-system precision/recall may be scalars (shared) or one value per
    system.  Label and boundary noise corrupt kept arguments; the keep
    probability is compensated so measured recall tracks the recall knob.
    """

    n_sentences: int = 100
    tokens_range: tuple[int, int] = (8, 26)
    predicates_range: tuple[int, int] = (1, 3)
    args_range: tuple[int, int] = (1, 4)
    n_systems: int = 3
    precision: object = 0.80
    recall: object = 0.75
    label_noise: float = 0.05
    boundary_noise: float = 0.05
    seed: int = 0
    correct_score_mean: float = 15.0
    wrong_score_mean: float = -15.0
    score_sd: float = 6.0

    def __post_init__(self) -> None:
        if self.n_sentences < 0 or self.n_systems < 1:
            raise ValueError("need n_sentences >= 0 and n_systems >= 1")
        for lo, hi in (self.tokens_range, self.predicates_range, self.args_range):
            if lo < 1 or hi < lo:
                raise ValueError("ranges must be non-empty with lo >= 1")
        for p in (*self.precisions, *self.recalls, self.label_noise, self.boundary_noise):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} out of [0, 1]")

    @property
    def precisions(self) -> tuple[float, ...]:
        return self._per_system(self.precision)

    @property
    def recalls(self) -> tuple[float, ...]:
        return self._per_system(self.recall)

    def _per_system(self, value) -> tuple[float, ...]:
        if isinstance(value, (int, float)):
            return (float(value),) * self.n_systems
        values = tuple(float(v) for v in value)
        if len(values) != self.n_systems:
            raise ValueError("need one knob per system")
        return values


def _carve_span(rng: random.Random, segments: list[tuple[int, int]],
                max_len: int = 4) -> Optional[Span]:
    if not segments:
        return None
    idx = rng.randrange(len(segments))
    lo, hi = segments.pop(idx)
    length = rng.randint(1, min(max_len, hi - lo + 1))
    start = rng.randint(lo, hi - length + 1)
    end = start + length - 1
    if lo <= start - 1:
        segments.append((lo, start - 1))
    if end + 1 <= hi:
        segments.append((end + 1, hi))
    segments.sort()
    return Span(start, end)


def _pick_label(rng: random.Random, used_cores: set) -> RoleLabel:
    free_cores = [c for c in _CORE_LABELS if c not in used_cores]
    if free_cores and rng.random() < 0.7:
        text = rng.choice(free_cores)
        used_cores.add(text)
    else:
        text = rng.choice(_ADJUNCT_LABELS)
    return RoleLabel.parse(text)


def _generate_gold(cfg: SyntheticConfig, rng: random.Random) -> PropsDocument:
    sentences = []
    for _s in range(cfg.n_sentences):
        n_tok = rng.randint(*cfg.tokens_range)
        n_pred = min(rng.randint(*cfg.predicates_range), max(1, n_tok // 4))
        positions = sorted(rng.sample(range(n_tok), n_pred))
        predicates = tuple((pos, f"verb{pos}") for pos in positions)

        segments: list[tuple[int, int]] = []
        prev = -1
        for pos in positions + [n_tok]:
            if prev + 1 <= pos - 1:
                segments.append((prev + 1, pos - 1))
            prev = pos

        arguments: list[list[Argument]] = []
        for p, (pos, _lemma) in enumerate(predicates):
            args = [Argument(p, V_LABEL, Span(pos, pos))]
            used_cores: set = set()
            for _ in range(rng.randint(*cfg.args_range)):
                span = _carve_span(rng, segments)
                if span is None:
                    break
                args.append(Argument(p, _pick_label(rng, used_cores), span))
            arguments.append(args)
        sentences.append(PropsSentence(n_tok, predicates, tuple(tuple(a) for a in arguments)))
    return PropsDocument(tuple(sentences))


def _relabel(rng: random.Random, arg: Argument, taken_cores: set) -> Argument:
    choices = [c for c in _CORE_LABELS if c not in taken_cores and c != arg.label.text]
    choices += [a for a in _ADJUNCT_LABELS if a != arg.label.text]
    return Argument(arg.predicate, RoleLabel.parse(rng.choice(choices)), arg.span)


def _jitter(rng: random.Random, arg: Argument, n_tok: int, blocked: list[Span]) -> Optional[Argument]:
    moves = []
    s, e = arg.span.start, arg.span.end
    for cand in (Span(s, e + 1) if e + 1 < n_tok else None,
                 Span(s, e - 1) if e > s else None,
                 Span(s - 1, e) if s > 0 else None,
                 Span(s + 1, e) if s < e else None):
        if cand is not None and not any(cand.intersects(b) for b in blocked):
            moves.append(cand)
    if not moves:
        return None
    return Argument(arg.predicate, arg.label, rng.choice(moves))


def _corrupt_system(cfg: SyntheticConfig, rng: random.Random, gold: PropsDocument,
                    precision: float, recall: float):
    keep_prob = min(1.0, recall / max(1e-9, (1 - cfg.label_noise) * (1 - cfg.boundary_noise)))
    sentences = []
    table: ScoreTable = {}
    for s, gsent in enumerate(gold.sentences):
        gold_keys = {(s, a.predicate, a.label.text, a.span)
                     for args in gsent.arguments for a in args if a.label.is_scored()}
        per_pred: list[list[Argument]] = []
        n_correct = 0
        n_corrupted = 0
        for p, (pos, _lemma) in enumerate(gsent.predicates):
            args = [Argument(p, V_LABEL, Span(pos, pos))]
            taken_cores: set = set()
            kept = [arg for arg in gsent.scored_arguments(p)
                    if rng.random() < keep_prob]
            spans = [arg.span for arg in kept]
            for i, arg in enumerate(kept):
                r = rng.random()
                out_arg = arg
                if r < cfg.label_noise:
                    out_arg = _relabel(rng, arg, taken_cores)
                elif r < cfg.label_noise + cfg.boundary_noise:
                    # must stay clear of the predicate token and every other
                    # kept argument's current span
                    blocked = [Span(pos, pos)] + spans[:i] + spans[i + 1:]
                    jittered = _jitter(rng, arg, gsent.n_tokens, blocked)
                    if jittered is not None:
                        out_arg = jittered
                        spans[i] = jittered.span
                if (s, p, out_arg.label.text, out_arg.span) in gold_keys:
                    n_correct += 1
                else:
                    n_corrupted += 1
                if out_arg.label.kind is LabelKind.CORE:
                    taken_cores.add(out_arg.label.text)
                args.append(out_arg)
            per_pred.append(args)

        # spuriously add wrong arguments until the precision knob is met
        target_bad = n_correct * (1 - precision) / max(precision, 1e-9)
        want = max(0.0, target_bad - n_corrupted)
        n_spurious = int(want) + (1 if rng.random() < want - int(want) else 0)
        for _ in range(n_spurious):
            for _attempt in range(8):
                p = rng.randrange(len(gsent.predicates))
                length = rng.randint(1, 3)
                start = rng.randrange(max(1, gsent.n_tokens - length + 1))
                span = Span(start, min(start + length - 1, gsent.n_tokens - 1))
                if any(span.intersects(a.span) for a in per_pred[p]):
                    continue
                taken = {a.label.text for a in per_pred[p] if a.label.kind is LabelKind.CORE}
                choices = [c for c in _CORE_LABELS if c not in taken] + list(_ADJUNCT_LABELS)
                label = RoleLabel.parse(rng.choice(choices))
                if (s, p, label.text, span) in gold_keys:
                    continue
                per_pred[p].append(Argument(p, label, span))
                break

        for p, args in enumerate(per_pred):
            for arg in args:
                if not arg.label.is_scored():
                    continue
                correct = (s, p, arg.label.text, arg.span) in gold_keys
                mean = cfg.correct_score_mean if correct else cfg.wrong_score_mean
                table[(s, p, arg.label.text, arg.span)] = rng.gauss(mean, cfg.score_sd)
        sentences.append(PropsSentence(
            gsent.n_tokens, gsent.predicates, tuple(tuple(a) for a in per_pred)))
    return PropsDocument(tuple(sentences)), table


def generate_synthetic(cfg: SyntheticConfig):
    """Generate a gold document plus noisy per-system outputs with raw scores.

    Deterministic for a fixed seed.  Each system is a corruption of gold that
    keeps same-predicate spans disjoint and approximately hits the configured
    precision/recall; raw scores of correct arguments stochastically dominate
    those of wrong ones.
    """
    rng = random.Random(cfg.seed)
    gold = _generate_gold(cfg, rng)
    systems = []
    for j in range(cfg.n_systems):
        systems.append(_corrupt_system(cfg, rng, gold, cfg.precisions[j], cfg.recalls[j]))
    return gold, systems
