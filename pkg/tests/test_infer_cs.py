import random

import pytest

from srlcomb.corpus_io import SyntheticConfig, generate_synthetic, skeleton_sentences
from srlcomb.calibrate import attach_probs
from srlcomb.infer_cs import (
    CsConfig,
    DEFAULT_O_GRID,
    InferenceTimeout,
    Scope,
    infer_corpus,
    solve,
    sweep_bias,
)
from srlcomb.model import ConstraintSet, ConstraintRule, enumerate_violations, hard_violations, soft, validate
from srlcomb.pool import align_gold, build_pool
from conftest import cand, random_candidates
from enum_oracle import enumerate_best


def _cfg(constraints, bias=0.0, scope=Scope.FULL_SENTENCE):
    return CsConfig(bias=bias, scope=scope, constraints=constraints)


def random_constraints(rng: random.Random) -> ConstraintSet:
    kwargs = {}
    for cid in ("c1", "c2", "c3", "c4", "c5", "c6"):
        mode = rng.choice(["off", "hard", "soft"])
        kwargs[cid] = soft(round(rng.uniform(0.05, 0.5), 3)) if mode == "soft" \
            else ConstraintRule(mode)
    return ConstraintSet(**kwargs)


class TestSolveExamples:
    def test_single_candidate_above_bias(self):
        c = cand(probs={"M1": 0.9})
        sol = solve([c], _cfg(ConstraintSet.hard_rules(1, 2), bias=0.3))
        assert sol.selected == (c,)
        assert abs(sol.objective - 0.9) < 1e-12

    def test_single_candidate_below_bias(self):
        c = cand(probs={"M1": 0.2})
        sol = solve([c], _cfg(ConstraintSet.hard_rules(1, 2), bias=0.3))
        assert sol.selected == ()
        assert abs(sol.objective - 0.3) < 1e-12

    def test_crossing_pair_keeps_stronger(self):
        a = cand(label="A0", span=(0, 5), probs={"M1": 0.9})
        b = cand(label="A1", span=(3, 8), probs={"M1": 0.8})
        sol = solve([a, b], _cfg(ConstraintSet.hard_rules(1)))
        assert sol.selected == (a,)
        want, _ = enumerate_best([a, b], [0.9, 0.8], ConstraintSet.hard_rules(1))
        assert abs(sol.objective - want) < 1e-9

    def test_duplicate_core_keeps_best_plus_other(self):
        a0_hi = cand(label="A0", span=(0, 1), probs={"M1": 0.9})
        a0_lo = cand(label="A0", span=(3, 4), probs={"M1": 0.8})
        a1 = cand(label="A1", span=(6, 7), probs={"M1": 0.7})
        sol = solve([a0_hi, a0_lo, a1], _cfg(ConstraintSet.hard_rules(2)))
        assert set(sol.selected) == {a0_hi, a1}
        want, _ = enumerate_best([a0_hi, a0_lo, a1], [0.9, 0.8, 0.7],
                                 ConstraintSet.hard_rules(2))
        assert abs(sol.objective - want) < 1e-9

    def test_empty_input(self):
        sol = solve([], _cfg(ConstraintSet.hard_rules(1)), sentence_id=7)
        assert sol.sentence_id == 7 and sol.selected == ()

    def test_reference_dragged_in_by_base(self):
        # R-A0 is worth selecting only together with its cheap base argument
        r = cand(label="R-A0", span=(0, 0), probs={"M1": 0.9, "M2": 0.9, "M3": 0.9})
        base = cand(label="A0", span=(2, 3), probs={"M1": 0.4})
        cfg = _cfg(ConstraintSet.hard_rules(3), bias=0.5)
        sol = solve([r, base], cfg)
        assert set(sol.selected) == {r, base}


class TestExactness:
    def test_matches_enumeration_random(self):
        rng = random.Random(77)
        for trial in range(120):
            n = rng.randint(1, 12)
            cands = random_candidates(rng, n)
            cs = random_constraints(rng)
            bias = rng.choice([0.0, 0.2, 0.5])
            sol = solve(cands, _cfg(cs, bias=bias))
            margins = [c.prob_sum() - bias for c in cands]
            want, _ = enumerate_best(cands, margins, cs, bias * len(cands))
            assert abs(sol.objective - want) < 1e-9, f"trial {trial}"

    def test_matches_reference_violations_semantics(self):
        # three-way check: the model-level violation enumerator prices every
        # subset; solve must reach the same optimum
        rng = random.Random(5)
        for _trial in range(30):
            n = rng.randint(1, 8)
            cands = random_candidates(rng, n)
            cs = random_constraints(rng)
            best = float("-inf")
            for mask in range(1 << n):
                subset = [cands[i] for i in range(n) if mask >> i & 1]
                violations = enumerate_violations(subset, cs)
                if hard_violations(violations):
                    continue
                value = sum(c.prob_sum() for c in subset) - \
                    sum(v.penalty for v in violations)
                best = max(best, value)
            sol = solve(cands, _cfg(cs, bias=0.0))
            assert abs(sol.objective - best) < 1e-9

    def test_objective_formulation_invariance(self):
        # argmax is the same whether the bias enters as O*(1-l) or as margins
        rng = random.Random(3)
        for _ in range(40):
            cands = random_candidates(rng, rng.randint(1, 10))
            cs = random_constraints(rng)
            bias = rng.uniform(0.0, 1.0)
            sol = solve(cands, _cfg(cs, bias=bias))
            margins = [c.prob_sum() - bias for c in cands]
            reduced, _ = enumerate_best(cands, margins, cs, 0.0)
            chosen_margin = sum(c.prob_sum() - bias for c in sol.selected)
            penalties = sum(v.penalty for v in
                            enumerate_violations(sol.selected, cs))
            assert abs((chosen_margin - penalties) - reduced) < 1e-9

    def test_every_solution_validates(self):
        rng = random.Random(13)
        for _ in range(60):
            cands = random_candidates(rng, rng.randint(1, 12))
            cs = random_constraints(rng)
            sol = solve(cands, _cfg(cs, bias=0.3))
            assert hard_violations(enumerate_violations(sol.selected, cs)) == []


def _disjoint_candidates(values):
    labels = ["A0", "A1", "A2", "A3", "A4", "AM-TMP", "AM-LOC", "AM-MNR"]
    return [cand(label=labels[i], span=(2 * i, 2 * i), probs={"M1": v})
            for i, v in enumerate(values)]


class TestThresholdLaw:
    def test_selection_is_threshold_set(self):
        values = [0.05, 0.15, 0.30, 0.45, 0.60, 0.85, 1.0]
        cands = _disjoint_candidates(values)
        prev_keys = None
        for o in DEFAULT_O_GRID:
            sol = solve(cands, _cfg(ConstraintSet.hard_rules(1, 2), bias=o))
            got = {c.key for c in sol.selected}
            want = {c.key for c, v in zip(cands, values) if v > o}
            assert got == want, f"O={o}"
            if prev_keys is not None:
                assert got <= prev_keys
            prev_keys = got

    def test_tie_at_bias_not_selected(self):
        c = cand(probs={"M1": 0.3})
        sol = solve([c], _cfg(ConstraintSet.hard_rules(1, 2), bias=0.3))
        assert sol.selected == ()


class TestScope:
    def test_pred_scope_rejects_sentence_constraints(self):
        with pytest.raises(ValueError):
            CsConfig(scope=Scope.PRED_BY_PRED,
                     constraints=ConstraintSet.hard_rules(1, 2, 5))

    def test_pred_scope_equals_sentence_when_independent(self, rng):
        for _ in range(20):
            cands = random_candidates(rng, 8, n_predicates=2)
            cs = ConstraintSet.hard_rules(1, 2)
            a = solve(cands, CsConfig(bias=0.3, scope=Scope.PRED_BY_PRED, constraints=cs))
            b = solve(cands, CsConfig(bias=0.3, scope=Scope.FULL_SENTENCE, constraints=cs))
            assert abs(a.objective - b.objective) < 1e-9

    def test_defaults(self):
        assert CsConfig().bias == 0.30
        assert CsConfig().constraints.describe() == "1+2+5+6"
        assert CsConfig.for_scope(Scope.PRED_BY_PRED).constraints.describe() == "1+2"


class TestTimeout:
    def test_budget_carries_best_so_far(self):
        rng = random.Random(1)
        cands = random_candidates(rng, 14)
        with pytest.raises(InferenceTimeout) as err:
            solve(cands, CsConfig(bias=0.3, node_budget=3,
                                  constraints=ConstraintSet.hard_rules(1, 2, 5, 6)))
        assert err.value.nonoptimal
        assert err.value.best is not None


@pytest.fixture(scope="module")
def pool():
    gold, systems = generate_synthetic(SyntheticConfig(n_sentences=30, seed=6))
    pool = attach_probs(align_gold(build_pool(
        [(f"M{i+1}", d, t) for i, (d, t) in enumerate(systems)]), gold))
    return pool, gold


class TestSweep:
    def test_default_grid_has_21_rows(self, pool):
        p, gold = pool
        result = sweep_bias(p, gold, CsConfig())
        assert len(result.rows) == 21
        assert result.csv().startswith("O,precision,recall,f1\n")
        assert len(result.csv().strip().splitlines()) == 22

    def test_huge_bias_empties_selection(self, pool):
        p, gold = pool
        result = sweep_bias(p, gold, CsConfig(), o_values=[4.0])
        row = result.rows[0]
        assert row.precision == 100.0 and row.recall == 0.0 and row.f1 == 0.0

    def test_zero_bias_recall_at_least_default(self, pool):
        p, gold = pool
        result = sweep_bias(p, gold, CsConfig(), o_values=[0.0, 0.3])
        assert result.rows[0].recall >= result.rows[1].recall


class TestValidatorIntegration:
    def test_corpus_outputs_validate(self):
        gold, systems = generate_synthetic(SyntheticConfig(n_sentences=25, seed=17))
        pool = attach_probs(align_gold(build_pool(
            [(f"M{i+1}", d, t) for i, (d, t) in enumerate(systems)]), gold))
        cfg = CsConfig()
        sentences = skeleton_sentences(gold)
        for sol, sent in zip(infer_corpus(pool, cfg), sentences):
            assert hard_violations(validate(sol, cfg.constraints, sent)) == []
