import json
import random
from fractions import Fraction

import pytest

from lhvlab import (
    AngleSet,
    AveragedModel,
    BehaviorTable,
    ContextualModel,
    FlatModel,
    bell_average,
    correlation_quad,
    counterexample_model,
    product_flatten,
    quantum_singlet_behavior,
    uniform_reduce,
)
from lhvlab.corpus import random_contextual_model
from lhvlab.modelio import ModelParseError, parse_path, parse_text, serialize

FIXTURES = "fixtures"


class TestRoundTrip:
    def test_counterexample_roundtrips_exactly(self):
        m = counterexample_model()
        assert parse_text(serialize(m)) == m

    def test_random_models_roundtrip(self):
        rng = random.Random(71)
        for i in range(20):
            kind = ("binary", "ternary", "interval")[i % 3]
            m = random_contextual_model(rng, max_source_side=3, max_instrument=3, outcome_kind=kind)
            again = parse_text(serialize(m))
            assert again == m
            assert correlation_quad(again).values == correlation_quad(m).values

    def test_serialize_parse_is_identity_on_canonical_text(self):
        rng = random.Random(72)
        m = random_contextual_model(rng, max_source_side=2, max_instrument=2)
        text = serialize(m)
        assert serialize(parse_text(text)) == text

    def test_flat_model_roundtrips(self):
        fm = product_flatten(counterexample_model())
        again = parse_text(serialize(fm))
        assert isinstance(again, FlatModel)
        assert again.quad().values == fm.quad().values

    def test_uniform_reduced_model_roundtrips(self):
        fm = uniform_reduce(counterexample_model())
        again = parse_text(serialize(fm))
        assert again.quad().ordered() == (1, 0, 0, -1)

    def test_averaged_model_roundtrips(self):
        am = bell_average(counterexample_model())
        again = parse_text(serialize(am))
        assert isinstance(again, AveragedModel)
        assert again == am

    def test_behavior_roundtrips(self):
        b = quantum_singlet_behavior(AngleSet.chsh_optimal())
        again = parse_text(serialize(b))
        assert isinstance(again, BehaviorTable)
        assert again == b


class TestFixtures:
    def test_counterexample_fixture_matches_builder(self):
        assert parse_path(f"{FIXTURES}/counterexample.model.json") == counterexample_model()

    def test_quantum_fixture_matches_builder(self):
        expected = quantum_singlet_behavior(AngleSet.chsh_optimal())
        assert parse_path(f"{FIXTURES}/quantum_chsh_optimal.behavior.json") == expected

    def test_loophole_winner_fixture_parses(self):
        m = parse_path(f"{FIXTURES}/loophole_winner.model.json")
        assert isinstance(m, ContextualModel)
        assert m.is_ternary()


class TestParseErrors:
    def expect_error(self, doc, match):
        with pytest.raises(ModelParseError, match=match):
            parse_text(json.dumps(doc), source="test.json")

    def base_doc(self):
        return json.loads(serialize(counterexample_model()))

    def test_mass_deficit_is_named(self):
        doc = self.base_doc()
        doc["source"][0]["mass"] = "1/12"
        self.expect_error(doc, r"source pmf sums to 11/12 \(deficit 1/12\)")

    def test_instrument_deficit_is_named(self):
        doc = self.base_doc()
        doc["alice"][0]["instrument"][0]["mass"] = "99/100"
        self.expect_error(doc, r"deficit 1/100")

    def test_malformed_fraction_names_token(self):
        doc = self.base_doc()
        doc["source"][0]["mass"] = "1/6oops"
        self.expect_error(doc, "malformed fraction '1/6oops'")

    def test_unknown_key_rejected(self):
        doc = self.base_doc()
        doc["extra"] = 1
        self.expect_error(doc, "unknown key 'extra'")

    def test_unknown_kind_rejected(self):
        self.expect_error({"kind": "mystery"}, "unknown kind")

    def test_row_shape_mismatch(self):
        doc = self.base_doc()
        doc["alice"][0]["outcomes"] = doc["alice"][0]["outcomes"][:-1]
        self.expect_error(doc, "rows")

    def test_syntax_error_names_line(self):
        with pytest.raises(ModelParseError, match="test.json: line"):
            parse_text("{\n  broken\n}", source="test.json")

    def test_decimal_strings_convert_exactly(self):
        doc = self.base_doc()
        for atom in doc["source"]:
            atom["mass"] = "0.25" if atom["pair"][0] in ("1", "2") else "0.125"
        m = parse_text(json.dumps(doc))
        assert m.source.mass(("1", "1")) == Fraction(1, 4)
        assert m.source.mass(("3", "3")) == Fraction(1, 8)

    def test_behavior_cell_outside_alphabet(self):
        b = json.loads(serialize(quantum_singlet_behavior(AngleSet.chsh_optimal())))
        b["contexts"][0]["cells"][0]["x"] = 0
        self.expect_error(b, "outside alphabet")

    def test_behavior_context_deficit_named(self):
        b = json.loads(serialize(quantum_singlet_behavior(AngleSet.chsh_optimal())))
        b["contexts"][0]["cells"] = b["contexts"][0]["cells"][:-1]
        self.expect_error(b, "deficit")

    def test_missing_context_rejected(self):
        b = json.loads(serialize(quantum_singlet_behavior(AngleSet.chsh_optimal())))
        b["contexts"] = b["contexts"][:3]
        self.expect_error(b, "all four contexts")
