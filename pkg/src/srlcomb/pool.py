"""Merge per-system solutions into a unique candidate-argument pool.

Candidates are deduplicated on exact (predicate, label, span); votes and raw
scores are merged, V pseudo-arguments stay out of the pool.  Gold alignment
marks each candidate as correct or not, which feeds the oracles, the training
targets, and the agreement statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .corpus_io import (
    AlignmentError,
    PropsDocument,
    PropsSentence,
    ScoreTable,
    check_skeleton,
)
from .model import Argument, Candidate, RoleLabel, Solution, Span, V_LABEL


@dataclass(frozen=True)
class SentencePool:
    sentence_id: int
    n_tokens: int
    predicates: tuple[tuple[int, str], ...]
    candidates: tuple[Candidate, ...]

    def by_predicate(self, predicate: int) -> tuple[Candidate, ...]:
        return tuple(c for c in self.candidates if c.predicate == predicate)

    def gold_candidates(self) -> tuple[Candidate, ...]:
        return tuple(c for c in self.candidates if c.is_gold)


@dataclass(frozen=True)
class CandidatePool:
    """All candidates of a corpus plus the system roster that produced them."""

    system_ids: tuple[str, ...]
    sentences: tuple[SentencePool, ...]
    feature_digest: Optional[str] = None
    feature_space: Optional[object] = None

    @property
    def m(self) -> int:
        return len(self.system_ids)

    def __len__(self) -> int:
        return len(self.sentences)

    def all_candidates(self) -> Iterable[Candidate]:
        for sent in self.sentences:
            yield from sent.candidates

    def is_aligned(self) -> bool:
        return all(c.is_gold is not None for c in self.all_candidates())

    def with_candidates(self, per_sentence: Sequence[Sequence[Candidate]],
                        feature_digest: Optional[str] = None,
                        feature_space: Optional[object] = None) -> "CandidatePool":
        sentences = tuple(
            replace(sp, candidates=tuple(sorted(cands, key=lambda c: c.key)))
            for sp, cands in zip(self.sentences, per_sentence))
        return CandidatePool(self.system_ids, sentences,
                             feature_digest or self.feature_digest,
                             feature_space or self.feature_space)


def build_pool(systems: Sequence[tuple[str, PropsDocument, Optional[ScoreTable]]]) -> CandidatePool:
    """Pool the outputs of several systems over one shared skeleton."""
    if not systems:
        raise ValueError("need at least one system")
    ids = [sid for sid, _, _ in systems]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate system ids")
    check_skeleton([doc for _, doc, _ in systems])

    first = systems[0][1]
    sentences = []
    for s, skeleton in enumerate(first.sentences):
        merged: dict = {}
        for sid, doc, table in systems:
            sent = doc.sentences[s]
            for p in range(len(sent.predicates)):
                for arg in sent.scored_arguments(p):
                    key = (s, p, arg.label.text, arg.span)
                    votes, raws = merged.setdefault(key, (set(), {}))
                    votes.add(sid)
                    if table is not None and key in table:
                        raws[sid] = table[key]
        candidates = tuple(
            Candidate.make(s, Argument(key[1], RoleLabel.parse(key[2]), key[3]),
                           votes=votes, raw_scores=raws)
            for key, (votes, raws) in sorted(merged.items()))
        sentences.append(SentencePool(s, skeleton.n_tokens, skeleton.predicates, candidates))
    return CandidatePool(tuple(ids), tuple(sentences))


def gold_keys(gold: PropsDocument) -> list[frozenset]:
    out = []
    for s, sent in enumerate(gold.sentences):
        out.append(frozenset(
            (s, p, a.label.text, a.span)
            for p in range(len(sent.predicates)) for a in sent.scored_arguments(p)))
    return out


def align_gold(pool: CandidatePool, gold: PropsDocument) -> CandidatePool:
    """Return a pool whose candidates carry is_gold flags."""
    _check_pool_skeleton(pool, gold)
    keys = gold_keys(gold)
    per_sentence = []
    for sent in pool.sentences:
        per_sentence.append([replace(c, is_gold=c.key in keys[sent.sentence_id])
                             for c in sent.candidates])
    return pool.with_candidates(per_sentence)


def _check_pool_skeleton(pool: CandidatePool, doc: PropsDocument) -> None:
    if len(doc) != len(pool.sentences):
        raise AlignmentError(
            f"sentence counts differ: pool {len(pool.sentences)} vs document {len(doc)}")
    for sp, ds in zip(pool.sentences, doc.sentences):
        if sp.n_tokens != ds.n_tokens or sp.predicates != ds.predicates:
            raise AlignmentError(f"sentence {sp.sentence_id}: skeletons differ")


@dataclass(frozen=True)
class PoolStats:
    """Per-label distribution of correct candidates by system agreement."""

    columns: tuple[str, ...]
    rows: tuple[tuple[str, tuple[float, ...]], ...]   # label -> percentages
    counts: tuple[tuple[str, tuple[int, ...]], ...]

    def text_table(self) -> str:
        widths = [max(len("label"), *(len(r[0]) for r in self.rows))] if self.rows else [5]
        header = ["label"] + [f"{c:>10}" for c in self.columns]
        lines = ["  ".join([header[0].ljust(widths[0])] + header[1:])]
        for label, pcts in self.rows:
            cells = [label.ljust(widths[0])] + [f"{p:>9.2f}%" for p in pcts]
            lines.append("  ".join(cells))
        return "\n".join(lines)


def pool_stats(pool: CandidatePool) -> PoolStats:
    """Agreement table over gold candidates: full / partial / single-system."""
    if not pool.is_aligned():
        raise ValueError("pool_stats requires gold alignment (run align_gold first)")
    m = pool.m
    columns = tuple(f"∩ of {k}" for k in range(m, 1, -1)) + pool.system_ids

    def column_of(cand: Candidate) -> str:
        v = len(cand.votes)
        if v >= 2:
            return f"∩ of {v}"
        return next(iter(cand.votes))

    per_label: dict = {}
    for cand in pool.all_candidates():
        if cand.is_gold:
            row = per_label.setdefault(cand.label.text, {c: 0 for c in columns})
            row[column_of(cand)] += 1
    rows = []
    counts = []
    for label in sorted(per_label):
        row = per_label[label]
        total = sum(row.values())
        counts.append((label, tuple(row[c] for c in columns)))
        rows.append((label, tuple(100.0 * row[c] / total for c in columns)))
    return PoolStats(columns, tuple(rows), tuple(counts))


def system_view(pool: CandidatePool, system_id: str) -> tuple[PropsDocument, ScoreTable]:
    """Reconstruct one system's document (and score table) from the pool."""
    if system_id not in pool.system_ids:
        raise ValueError(f"unknown system {system_id!r}")
    sentences = []
    table: ScoreTable = {}
    for sent in pool.sentences:
        per_pred: list[list[Argument]] = [
            [Argument(p, V_LABEL, Span(pos, pos))]
            for p, (pos, _lemma) in enumerate(sent.predicates)]
        for cand in sent.candidates:
            if system_id in cand.votes:
                per_pred[cand.predicate].append(cand.argument)
                raw = cand.raw_score(system_id)
                if raw is not None:
                    table[cand.key] = raw
        sentences.append(PropsSentence(
            sent.n_tokens, sent.predicates, tuple(tuple(a) for a in per_pred)))
    return PropsDocument(tuple(sentences)), table


def solutions_to_props(pool: CandidatePool, solutions: Sequence[Solution]) -> PropsDocument:
    """Turn per-sentence solutions back into a props document over the pool skeleton."""
    by_id = {sol.sentence_id: sol for sol in solutions}
    sentences = []
    for sent in pool.sentences:
        per_pred: list[list[Argument]] = [
            [Argument(p, V_LABEL, Span(pos, pos))]
            for p, (pos, _lemma) in enumerate(sent.predicates)]
        sol = by_id.get(sent.sentence_id)
        if sol is not None:
            for cand in sol.selected:
                per_pred[cand.predicate].append(cand.argument)
        sentences.append(PropsSentence(
            sent.n_tokens, sent.predicates, tuple(tuple(a) for a in per_pred)))
    return PropsDocument(tuple(sentences))


# ---------------------------------------------------------------------------
# Pool dump (JSON, line oriented enough for diffing)


def dump_pool(pool: CandidatePool) -> str:
    doc = {
        "systems": list(pool.system_ids),
        "sentences": [
            {
                "id": sent.sentence_id,
                "n_tokens": sent.n_tokens,
                "predicates": [[i, lemma] for i, lemma in sent.predicates],
                "candidates": [
                    {
                        "predicate": c.predicate,
                        "label": c.label.text,
                        "span": [c.span.start, c.span.end],
                        "votes": sorted(c.votes),
                        "raw_scores": {k: v for k, v in c.raw_scores},
                        "probs": {k: v for k, v in c.probs},
                        "is_gold": c.is_gold,
                    }
                    for c in sent.candidates
                ],
            }
            for sent in pool.sentences
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def load_pool(text: str) -> CandidatePool:
    doc = json.loads(text)
    sentences = []
    for sent in doc["sentences"]:
        candidates = tuple(
            Candidate.make(
                sent["id"],
                Argument(c["predicate"], RoleLabel.parse(c["label"]),
                         Span(c["span"][0], c["span"][1])),
                votes=c["votes"],
                raw_scores=c["raw_scores"],
                probs=c["probs"],
                is_gold=c["is_gold"],
            )
            for c in sent["candidates"])
        sentences.append(SentencePool(
            sent["id"], sent["n_tokens"],
            tuple((i, lemma) for i, lemma in sent["predicates"]), candidates))
    return CandidatePool(tuple(doc["systems"]), tuple(sentences))
