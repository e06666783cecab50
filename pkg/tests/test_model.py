import random
from fractions import Fraction

import pytest

from conftest import brute_quad, corpus_models
from lhvlab import (
    ContextualModel,
    DomainMismatchError,
    NonlocalPairModel,
    OutcomeTable,
    Pmf,
    Setting,
    behavior_from_model,
    correlation_quad,
    counterexample_model,
    exact_expectation,
    exact_side_expectation,
    is_setting_factorizable,
    nonlocal_quad,
    validate_model,
)
from lhvlab.corpus import random_contextual_model


def constant_model(value=1):
    source = Pmf.uniform([("a", "b")])
    unit = Pmf.point("*")
    table_a = OutcomeTable({("a", "*"): Fraction(value)})
    table_b = OutcomeTable({("b", "*"): Fraction(value)})
    return ContextualModel(
        source,
        (Setting("x", unit, table_a), Setting("x'", unit, table_a)),
        (Setting("y", unit, table_b), Setting("y'", unit, table_b)),
    )


class TestValidate:
    def test_well_formed_model_gives_empty_report(self):
        assert validate_model(counterexample_model()).ok

    def test_non_normalized_instrument_pmf_is_named(self):
        m = constant_model()
        bad = Setting("x", Pmf({"*": Fraction(9, 10)}), m.alice[0].outcomes)
        report = validate_model(ContextualModel(m.source, (bad, m.alice[1]), m.bob))
        assert not report.ok
        assert any("alice setting 'x' instrument pmf" in v and "9/10" in v for v in report.violations)

    def test_out_of_range_outcome_is_named(self):
        m = constant_model()
        bad_table = OutcomeTable({("a", "*"): Fraction(3, 2)})
        bad = Setting("x", Pmf.point("*"), bad_table)
        report = validate_model(ContextualModel(m.source, (bad, m.alice[1]), m.bob))
        assert any("3/2" in v and "outside [-1, 1]" in v for v in report.violations)

    def test_domain_mismatch_reported(self):
        m = constant_model()
        sparse = Setting("x", Pmf.point("*"), OutcomeTable({}))
        report = validate_model(ContextualModel(m.source, (sparse, m.alice[1]), m.bob))
        assert any("missing entries" in v for v in report.violations)

    def test_ternary_flag_enforced(self):
        m = constant_model()
        t = Setting("x", Pmf.point("*"), OutcomeTable({("a", "*"): Fraction(1, 2)}, ternary=True))
        report = validate_model(ContextualModel(m.source, (t, m.alice[1]), m.bob))
        assert any("non-ternary value" in v for v in report.violations)


class TestCounterexample:
    def test_quad_is_1_0_0_minus1(self):
        quad = correlation_quad(counterexample_model())
        assert quad.ordered() == (1, 0, 0, -1)

    def test_signature_combination_is_zero(self):
        # E(++) - E(-+) + E(+-) + E(--) == 0
        q = correlation_quad(counterexample_model())
        v = q.value("+1", "+1") - q.value("-1", "+1") + q.value("+1", "-1") + q.value("-1", "-1")
        assert v == 0

    def test_alice_single_expectations(self):
        m = counterexample_model()
        assert exact_side_expectation(m, "alice", "+1") == 1
        assert exact_side_expectation(m, "alice", "-1") == 0

    def test_validates(self):
        assert validate_model(counterexample_model()).ok


class TestExactExpectation:
    def test_constant_plus_one_model(self):
        m = constant_model(1)
        for ctx in m.contexts():
            assert exact_expectation(m, ctx) == 1

    def test_matches_brute_force_on_random_models(self):
        rng = random.Random(11)
        for _ in range(40):
            m = random_contextual_model(
                rng, max_source_side=2, max_instrument=2, outcome_kind="interval"
            )
            assert correlation_quad(m).values == brute_quad(m).values

    def test_expectations_in_unit_interval(self):
        for m in corpus_models(40, seed=5):
            for ctx in m.contexts():
                v = exact_expectation(m, ctx)
                assert -1 <= v <= 1

    def test_domain_mismatch_raises(self):
        m = constant_model()
        sparse = Setting("x", Pmf.point("*"), OutcomeTable({}))
        broken = ContextualModel(m.source, (sparse, m.alice[1]), m.bob)
        with pytest.raises(DomainMismatchError):
            exact_expectation(broken, ("x", "y"))

    def test_relabel_invariance(self):
        rng = random.Random(3)
        m = random_contextual_model(rng, max_source_side=3, max_instrument=3)
        relabeled = ContextualModel(
            Pmf({(f"A{p[0]}", f"B{p[1]}"): mass for p, mass in m.source.items()}),
            tuple(
                Setting(
                    s.name,
                    Pmf({f"I{lab}": mass for lab, mass in s.instrument.items()}),
                    OutcomeTable(
                        {(f"A{k[0]}", f"I{k[1]}"): v for k, v in s.outcomes.entries.items()},
                        ternary=s.outcomes.ternary,
                    ),
                )
                for s in m.alice
            ),
            tuple(
                Setting(
                    s.name,
                    Pmf({f"I{lab}": mass for lab, mass in s.instrument.items()}),
                    OutcomeTable(
                        {(f"B{k[1 - 1]}", f"I{k[1]}"): v for k, v in s.outcomes.entries.items()},
                        ternary=s.outcomes.ternary,
                    ),
                )
                for s in m.bob
            ),
        )
        assert correlation_quad(relabeled).ordered() == correlation_quad(m).ordered()

    def test_merging_identical_atoms_preserves_expectations(self):
        # two source atoms with identical outcome rows merge into one
        source = Pmf({("a", "b"): Fraction(1, 3), ("a2", "b2"): Fraction(2, 3)})
        unit = Pmf.point("*")

        def table(side_labels):
            return OutcomeTable({(lab, "*"): Fraction(1, 2) for lab in side_labels})

        m = ContextualModel(
            source,
            (Setting("x", unit, table(["a", "a2"])), Setting("x'", unit, table(["a", "a2"]))),
            (Setting("y", unit, table(["b", "b2"])), Setting("y'", unit, table(["b", "b2"]))),
        )
        merged = ContextualModel(
            Pmf({("a", "b"): Fraction(1)}),
            (Setting("x", unit, table(["a"])), Setting("x'", unit, table(["a"]))),
            (Setting("y", unit, table(["b"])), Setting("y'", unit, table(["b"]))),
        )
        assert correlation_quad(m).ordered() == correlation_quad(merged).ordered()

    def test_scaling_one_side_scales_quad(self):
        rng = random.Random(9)
        m = random_contextual_model(rng, max_source_side=3, max_instrument=2, outcome_kind="interval")
        c = Fraction(3, 4)
        scaled_alice = tuple(
            Setting(
                s.name,
                s.instrument,
                OutcomeTable({k: c * v for k, v in s.outcomes.entries.items()}),
            )
            for s in m.alice
        )
        scaled = ContextualModel(m.source, scaled_alice, m.bob)
        base = correlation_quad(m)
        got = correlation_quad(scaled)
        for ctx in m.contexts():
            assert got.values[ctx] == c * base.values[ctx]


class TestBehavior:
    def test_counterexample_context_pp_is_point_mass(self):
        b = behavior_from_model(counterexample_model())
        assert b.prob(("+1", "+1"), 1, 1) == 1
        assert sum(b.context_pmf(("+1", "+1")).values()) == 1

    def test_deterministic_all_plus_one(self):
        b = behavior_from_model(constant_model(1))
        for ctx in b.contexts():
            assert b.prob(ctx, 1, 1) == 1

    def test_rows_normalized_and_quad_matches_exact(self):
        rng = random.Random(21)
        for _ in range(25):
            m = random_contextual_model(rng, max_source_side=3, max_instrument=3, outcome_kind="ternary")
            b = behavior_from_model(m)
            assert b.is_normalized()
            assert b.quad().values == correlation_quad(m).values

    def test_fractional_outcomes_rejected(self):
        m = constant_model()
        frac = Setting("x", Pmf.point("*"), OutcomeTable({("a", "*"): Fraction(1, 2)}))
        bad = ContextualModel(m.source, (frac, m.alice[1]), m.bob)
        with pytest.raises(ValueError, match="fractional"):
            behavior_from_model(bad)

    def test_zero_in_unflagged_table_rejected(self):
        m = constant_model()
        z = Setting("x", Pmf.point("*"), OutcomeTable({("a", "*"): Fraction(0)}))
        bad = ContextualModel(m.source, (z, m.alice[1]), m.bob)
        with pytest.raises(ValueError, match="fractional"):
            behavior_from_model(bad)


def _pair_model(joints):
    """NonlocalPairModel with identity outcomes on +/-1 pair labels."""
    identity = {1: Fraction(1), -1: Fraction(-1)}
    return NonlocalPairModel(
        ("x", "x'"),
        ("y", "y'"),
        joints,
        {"x": identity, "x'": identity},
        {"y": identity, "y'": identity},
    )


class TestFactorization:
    def test_explicit_products_factorize(self):
        cell = Pmf({(u, v): Fraction(1, 4) for u in (1, -1) for v in (1, -1)})
        m = _pair_model({ctx: cell for ctx in (("x", "y"), ("x", "y'"), ("x'", "y"), ("x'", "y'"))})
        assert is_setting_factorizable(m).all_factorizable

    def test_perfect_correlation_is_not_factorizable(self):
        diag = Pmf({(1, 1): Fraction(1, 2), (-1, -1): Fraction(1, 2)})
        m = _pair_model({ctx: diag for ctx in (("x", "y"), ("x", "y'"), ("x'", "y"), ("x'", "y'"))})
        report = is_setting_factorizable(m)
        assert not any(report.factorizable.values())
        assert report.max_deviation[("x", "y")] == Fraction(1, 4)

    def test_tolerance_loosens_the_verdict(self):
        diag = Pmf({(1, 1): Fraction(1, 2), (-1, -1): Fraction(1, 2)})
        m = _pair_model({ctx: diag for ctx in (("x", "y"), ("x", "y'"), ("x'", "y"), ("x'", "y'"))})
        assert is_setting_factorizable(m, tolerance=Fraction(1, 4)).all_factorizable

    def test_chsh_violating_pair_model_is_nonfactorizable_somewhere(self):
        # per-context pmfs tuned to reproduce a CHSH-violating quad
        target = {
            ("x", "y"): Fraction(-7, 10),
            ("x", "y'"): Fraction(7, 10),
            ("x'", "y"): Fraction(-7, 10),
            ("x'", "y'"): Fraction(-7, 10),
        }
        joints = {
            ctx: Pmf({(u, v): (1 + u * v * e) / 4 for u in (1, -1) for v in (1, -1)})
            for ctx, e in target.items()
        }
        m = _pair_model(joints)
        quad = nonlocal_quad(m)
        assert quad.values == target
        from lhvlab import chsh_values

        assert not chsh_values(quad).satisfied
        assert not is_setting_factorizable(m).all_factorizable
