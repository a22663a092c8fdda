"""Candidate-scoring models: per-label max-margin classifiers trained in
batch (SMO) and kernel Perceptrons trained locally or with global feedback
through the inference engine.

All scorers are dual-form: a list of (coefficient, update tick, support
vector) rows under a polynomial kernel (u.v + 1)^d.  Averaged predictions
weight each update by how many parameter states it survived, following the
standard averaging trick, so both the final and the averaged predictor are
recoverable from the same rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .calibrate import IntervalTable
from .features import FeatureConfig, FeatureSpace
from .infer_cs import Scope
from .infer_dp import ScoredCandidate, infer_sentence
from .model import Candidate, FeatureVector
from .pool import CandidatePool

MODEL_HEADER = "SRLCOMB-MODEL v1"
DEFAULT_DEGREE = 2
DEFAULT_EPOCHS = 5
DEFAULT_C = 1.0
DEFAULT_KKT_TOL = 1e-3


class ModelMismatchError(ValueError):
    """Pool features were not extracted with this model's configuration."""


def kernel(u: FeatureVector, v: FeatureVector, degree: int) -> float:
    """Polynomial kernel (u.v + 1)^degree over binary sparse vectors."""
    if degree < 1:
        raise ValueError("kernel degree must be >= 1")
    return float((u.dot(v) + 1) ** degree)


@dataclass
class LabelScorer:
    """Dual-form scorer for one role label."""

    label: str
    degree: int = DEFAULT_DEGREE
    bias: float = 0.0
    supports: list = field(default_factory=list)   # (coef, tick, FeatureVector)
    updates: int = 0                               # averaging horizon
    degenerate: bool = False                       # single-class training data

    def raw_score(self, fv: FeatureVector) -> float:
        total = self.bias
        for coef, _tick, sv in self.supports:
            total += coef * kernel(sv, fv, self.degree)
        return total

    def averaged_score(self, fv: FeatureVector) -> float:
        if self.updates <= 0:
            return self.raw_score(fv)
        total = self.bias
        u = self.updates
        for coef, tick, sv in self.supports:
            total += coef * ((u - tick) / u) * kernel(sv, fv, self.degree)
        return total


@dataclass
class ScoreModel:
    kind: str                      # svm | perceptron-local | perceptron-global
    degree: int
    feature_config: FeatureConfig
    space: FeatureSpace
    scorers: dict
    intervals: Optional[IntervalTable] = None

    def score(self, candidate: Candidate, averaged: bool = True) -> float:
        if candidate.features is None:
            raise ValueError("candidate has no extracted features")
        scorer = self.scorers.get(candidate.label.text)
        if scorer is None:
            return 0.0
        if averaged:
            return scorer.averaged_score(candidate.features)
        return scorer.raw_score(candidate.features)

    # -- persistence ---------------------------------------------------------

    def saves(self) -> str:
        lines = [MODEL_HEADER,
                 f"kind {self.kind}",
                 f"degree {self.degree}",
                 "config groups={} ngram_cap={} path_threshold={} count_cap={}".format(
                     ",".join(self.feature_config.groups),
                     self.feature_config.ngram_cap,
                     self.feature_config.path_threshold,
                     self.feature_config.count_cap)]
        table = self.intervals or IntervalTable()
        lines.append(f"intervals {len(table.cuts)}")
        for (sys_id, label), cuts in sorted(table.cuts.items()):
            flag = "degenerate" if (sys_id, label) in table.degenerate else "ok"
            lines.append(f"{sys_id} {label} {cuts[0]!r} {cuts[1]!r} {cuts[2]!r} {cuts[3]!r} {flag}")
        lines.append(f"vocab {len(self.space)}")
        for i in range(len(self.space)):
            lines.append(f"{i}\t{self.space.name(i)}")
        lines.append(f"labels {len(self.scorers)}")
        for label in sorted(self.scorers):
            sc = self.scorers[label]
            lines.append(f"label {label}")
            lines.append(f"degree {sc.degree}")
            lines.append(f"bias {sc.bias!r}")
            lines.append(f"updates {sc.updates}")
            lines.append(f"degenerate {int(sc.degenerate)}")
            lines.append(f"supports {len(sc.supports)}")
            for coef, tick, sv in sc.supports:
                lines.append(" ".join([repr(coef), str(tick)] + [str(i) for i in sv.ids]))
            lines.append("end")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.saves())

    @classmethod
    def loads(cls, text: str) -> "ScoreModel":
        lines = text.splitlines()
        pos = 0

        def take(prefix: str) -> str:
            nonlocal pos
            if pos >= len(lines) or not lines[pos].startswith(prefix):
                raise ValueError(f"model file: expected {prefix!r} at line {pos + 1}")
            value = lines[pos][len(prefix):].strip()
            pos += 1
            return value

        if take("") != MODEL_HEADER:
            raise ValueError("not a model file")
        kind = take("kind ")
        degree = int(take("degree "))
        cfg_line = take("config ")
        cfg_map = dict(part.split("=", 1) for part in cfg_line.split())
        config = FeatureConfig(
            groups=tuple(cfg_map["groups"].split(",")),
            ngram_cap=int(cfg_map["ngram_cap"]),
            path_threshold=int(cfg_map["path_threshold"]),
            count_cap=int(cfg_map["count_cap"]))
        n_intervals = int(take("intervals "))
        cuts = {}
        degenerate = set()
        for _ in range(n_intervals):
            parts = lines[pos].split()
            pos += 1
            key = (parts[0], parts[1])
            cuts[key] = tuple(float(x) for x in parts[2:6])
            if parts[6] == "degenerate":
                degenerate.add(key)
        intervals = IntervalTable(cuts, degenerate) if cuts else None
        n_vocab = int(take("vocab "))
        space = FeatureSpace.load("\n".join(lines[pos:pos + n_vocab]))
        pos += n_vocab
        n_labels = int(take("labels "))
        scorers = {}
        for _ in range(n_labels):
            label = take("label ")
            sc = LabelScorer(label, degree=int(take("degree ")),
                             bias=float(take("bias ")),
                             updates=int(take("updates ")),
                             degenerate=bool(int(take("degenerate "))))
            n_sup = int(take("supports "))
            for _ in range(n_sup):
                parts = lines[pos].split()
                pos += 1
                sc.supports.append((float(parts[0]), int(parts[1]),
                                    FeatureVector(tuple(int(x) for x in parts[2:]))))
            take("end")
            scorers[label] = sc
        return cls(kind, degree, config, space, scorers, intervals)

    @classmethod
    def load(cls, path) -> "ScoreModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())


def score_pool(model: ScoreModel, pool: CandidatePool,
               averaged: bool = True) -> list[list[ScoredCandidate]]:
    """Score every pool candidate with its label's scorer.

    The pool must have been feature-extracted with the model's configuration
    and feature space; anything else is a vocabulary mismatch.
    """
    if pool.feature_digest != model.feature_config.digest():
        raise ModelMismatchError(
            f"pool features {pool.feature_digest} do not match model "
            f"{model.feature_config.digest()}")
    if pool.feature_space is not model.space:
        raise ModelMismatchError("pool was extracted with a different feature space")
    return [[ScoredCandidate(c, model.score(c, averaged)) for c in sent.candidates]
            for sent in pool.sentences]


# ---------------------------------------------------------------------------
# Local training: one binary problem per label


LabelDataset = Mapping[str, Sequence[tuple[FeatureVector, int]]]


def label_datasets(pool: CandidatePool) -> dict:
    """Group (features, +-1) pairs by label; requires alignment + features."""
    datasets: dict = {}
    for cand in pool.all_candidates():
        if cand.is_gold is None or cand.features is None:
            raise ValueError("training pool needs gold alignment and features")
        datasets.setdefault(cand.label.text, []).append(
            (cand.features, 1 if cand.is_gold else -1))
    return datasets


def _gram(vectors: Sequence[FeatureVector], degree: int) -> np.ndarray:
    cols: dict = {}
    for v in vectors:
        for fid in v.ids:
            cols.setdefault(fid, len(cols))
    x = np.zeros((len(vectors), max(len(cols), 1)))
    for r, v in enumerate(vectors):
        for fid in v.ids:
            x[r, cols[fid]] = 1.0
    return (x @ x.T + 1.0) ** degree


def _smo(k: np.ndarray, y: np.ndarray, c: float, tol: float,
         max_passes: int = 500) -> tuple[np.ndarray, float]:
    """Sequential pairwise optimization of the soft-margin dual.

    Deterministic variant of the classic working-set scheme: pick the first
    KKT violator, pair it with the largest-error-gap partner, and fall back
    to every other index before declaring it stuck.
    """
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0

    def f(i: int) -> float:
        return float((alpha * y) @ k[:, i] + b)

    def objective_with(i: int, j: int, a_i: float, a_j: float) -> float:
        old_i, old_j = alpha[i], alpha[j]
        alpha[i], alpha[j] = a_i, a_j
        v = alpha * y
        value = float(alpha.sum() - 0.5 * v @ k @ v)
        alpha[i], alpha[j] = old_i, old_j
        return value

    def take_step(i: int, j: int) -> bool:
        nonlocal b
        if i == j:
            return False
        a_i, a_j = alpha[i], alpha[j]
        s = y[i] * y[j]
        if s < 0:
            lo, hi = max(0.0, a_j - a_i), min(c, c + a_j - a_i)
        else:
            lo, hi = max(0.0, a_i + a_j - c), min(c, a_i + a_j)
        if hi - lo < 1e-12:
            return False
        e_i, e_j = f(i) - y[i], f(j) - y[j]
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if eta > 1e-12:
            new_j = float(np.clip(a_j + y[j] * (e_i - e_j) / eta, lo, hi))
        else:
            # flat or concave along the segment: the optimum sits at an end
            lo_obj = objective_with(i, j, a_i + s * (a_j - lo), lo)
            hi_obj = objective_with(i, j, a_i + s * (a_j - hi), hi)
            if lo_obj > hi_obj + 1e-12:
                new_j = lo
            elif hi_obj > lo_obj + 1e-12:
                new_j = hi
            else:
                return False
        if abs(new_j - a_j) < 1e-10:
            return False
        new_i = a_i + s * (a_j - new_j)
        alpha[i], alpha[j] = new_i, new_j
        b_i = b - e_i - y[i] * (new_i - a_i) * k[i, i] - y[j] * (new_j - a_j) * k[i, j]
        b_j = b - e_j - y[i] * (new_i - a_i) * k[i, j] - y[j] * (new_j - a_j) * k[j, j]
        if 0.0 < new_i < c:
            b = b_i
        elif 0.0 < new_j < c:
            b = b_j
        else:
            b = (b_i + b_j) / 2.0
        return True

    def examine(i: int) -> bool:
        e_i = f(i) - y[i]
        r = y[i] * e_i
        if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0)):
            return False
        nonbound = [j for j in range(n) if 1e-12 < alpha[j] < c - 1e-12]
        if nonbound:
            gaps = [abs(f(j) - y[j] - e_i) for j in nonbound]
            if take_step(i, nonbound[int(np.argmax(gaps))]):
                return True
        for j in nonbound:
            if take_step(i, j):
                return True
        for j in range(n):
            if take_step(i, j):
                return True
        return False

    passes = 0
    examine_all = True
    while passes < max_passes:
        changed = 0
        targets = range(n) if examine_all else [
            i for i in range(n) if 1e-12 < alpha[i] < c - 1e-12]
        for i in targets:
            changed += examine(i)
        passes += 1
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alpha, b


def train_local_svm(datasets: LabelDataset, *, degree: int = DEFAULT_DEGREE,
                    c: float = DEFAULT_C, tol: float = DEFAULT_KKT_TOL,
                    space: FeatureSpace, feature_config: FeatureConfig,
                    intervals: Optional[IntervalTable] = None) -> ScoreModel:
    """One soft-margin binary SVM per label, trained with SMO."""
    scorers = {}
    for label in sorted(datasets):
        data = list(datasets[label])
        ys = np.array([y for _, y in data], dtype=float)
        if len(set(ys.tolist())) < 2:
            scorers[label] = LabelScorer(label, degree=degree, bias=float(ys[0]),
                                         degenerate=True)
            continue
        vectors = [fv for fv, _ in data]
        k = _gram(vectors, degree)
        alpha, bias = _smo(k, ys, c, tol)
        sc = LabelScorer(label, degree=degree, bias=float(bias))
        for i, a in enumerate(alpha):
            if a > 1e-10:
                sc.supports.append((float(a * ys[i]), 0, vectors[i]))
        scorers[label] = sc
    return ScoreModel("svm", degree, feature_config, space, scorers, intervals)


def train_local_perceptron(datasets: LabelDataset, *, degree: int = DEFAULT_DEGREE,
                           epochs: int = DEFAULT_EPOCHS,
                           space: FeatureSpace, feature_config: FeatureConfig,
                           intervals: Optional[IntervalTable] = None) -> ScoreModel:
    """Kernel Perceptron per label, updated on every sign error; averaged."""
    scorers = {}
    for label in sorted(datasets):
        sc = LabelScorer(label, degree=degree)
        tick = 0
        for _epoch in range(epochs):
            for fv, y in datasets[label]:
                if y * sc.raw_score(fv) <= 0.0:
                    sc.supports.append((float(y), tick, fv))
                    tick += 1
        sc.updates = tick
        scorers[label] = sc
    return ScoreModel("perceptron-local", degree, feature_config, space, scorers, intervals)


# ---------------------------------------------------------------------------
# Global training: Perceptron through inference


@dataclass(frozen=True)
class TrainExample:
    """One sentence's candidates plus the reachable correct argument set.

    Gold arguments no system proposed cannot be promoted; they are counted in
    ``n_unreachable`` and only weigh on the recall metric.
    """

    sentence_id: int
    candidates: tuple
    gold_keys: frozenset
    n_unreachable: int = 0


def make_examples(pool: CandidatePool, gold=None) -> list[TrainExample]:
    from .pool import gold_keys as _gold_keys
    unreachable = [0] * len(pool.sentences)
    if gold is not None:
        for s, keys in enumerate(_gold_keys(gold)):
            have = {c.key for c in pool.sentences[s].candidates}
            unreachable[s] = len(keys - have)
    out = []
    for sent in pool.sentences:
        golds = frozenset(c.key for c in sent.candidates if c.is_gold)
        out.append(TrainExample(sent.sentence_id, sent.candidates, golds,
                                unreachable[sent.sentence_id]))
    return out


@dataclass
class GlobalTrainLog:
    ledger: list          # per example: (n_promoted, n_demoted, |y\yhat|, |yhat\y|)
    epoch_f1: list
    selected_epoch: int


def _example_f1(examples: Sequence[TrainExample], predictions: Sequence[frozenset]) -> float:
    correct = predicted = gold = 0
    for ex, pred in zip(examples, predictions):
        correct += len(pred & ex.gold_keys)
        predicted += len(pred)
        gold += len(ex.gold_keys) + ex.n_unreachable
    p = correct / predicted if predicted else 1.0
    r = correct / gold if gold else 1.0
    return 200.0 * p * r / (p + r) if p + r else 0.0


def train_global_perceptron(examples: Sequence[TrainExample], *,
                            scope: Scope = Scope.PRED_BY_PRED,
                            degree: int = DEFAULT_DEGREE,
                            epochs: int = DEFAULT_EPOCHS,
                            space: FeatureSpace, feature_config: FeatureConfig,
                            intervals: Optional[IntervalTable] = None,
                            validation: Optional[Sequence[TrainExample]] = None,
                            ) -> tuple[ScoreModel, GlobalTrainLog]:
    """Online Perceptron corrected by post-inference mistakes.

    For each example the current scorers rank the candidates, inference picks
    a structure, and arguments missing from it are promoted while spurious
    ones are demoted.  Epoch-end F1 on the validation split selects the
    parameter state that is kept.
    """
    model = ScoreModel("perceptron-global", degree, feature_config, space, {}, intervals)
    scope_name = "pred" if scope is Scope.PRED_BY_PRED else "sentence"
    holdout = validation if validation is not None else examples
    tick = 0
    ledger = []
    epoch_f1 = []
    snapshots = []   # (tick, {label: n_supports}) at each epoch end

    def scorer_for(label: str) -> LabelScorer:
        sc = model.scorers.get(label)
        if sc is None:
            sc = LabelScorer(label, degree=degree)
            model.scorers[label] = sc
        return sc

    def predict(ex: TrainExample, averaged: bool) -> frozenset:
        for sc in model.scorers.values():
            sc.updates = tick
        scored = [ScoredCandidate(c, model.score(c, averaged)) for c in ex.candidates]
        return infer_sentence(scored, scope_name, ex.sentence_id).keys()

    for _epoch in range(epochs):
        for ex in examples:
            yhat = predict(ex, averaged=False)
            promote = [c for c in ex.candidates if c.key in ex.gold_keys and c.key not in yhat]
            demote = [c for c in ex.candidates if c.key in yhat and c.key not in ex.gold_keys]
            for cand in promote:
                scorer_for(cand.label.text).supports.append((1.0, tick, cand.features))
                tick += 1
            for cand in demote:
                scorer_for(cand.label.text).supports.append((-1.0, tick, cand.features))
                tick += 1
            ledger.append((len(promote), len(demote),
                           len(ex.gold_keys - yhat), len(yhat - ex.gold_keys)))
        snapshots.append((tick, {lab: len(sc.supports) for lab, sc in model.scorers.items()}))
        epoch_f1.append(_example_f1(holdout, [predict(ex, averaged=True) for ex in holdout]))

    best_epoch = max(range(len(epoch_f1)), key=lambda i: (epoch_f1[i], -i))
    keep_tick, keep_counts = snapshots[best_epoch]
    for label, sc in model.scorers.items():
        del sc.supports[keep_counts.get(label, 0):]
        sc.updates = keep_tick
    model.scorers = {lab: sc for lab, sc in sorted(model.scorers.items()) if sc.supports}
    return model, GlobalTrainLog(ledger, epoch_f1, best_epoch)
