"""Finite two-party measurement models with exact rational probabilities.

The central object is :class:`ContextualModel`: a source distribution over
hidden-variable pairs, plus two measurement settings per side, each carrying
its own instrument distribution and outcome table.  All probability masses
are `fractions.Fraction`, so expectation values and distribution identities
can be checked with exact equality rather than tolerances.

Floats never enter this module; stochastic estimation lives in
:mod:`lhvlab.montecarlo`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Iterator, Mapping, Sequence, Union

Label = Hashable
Context = tuple[str, str]

Numberish = Union[Fraction, int, str, float]


def as_fraction(value: Numberish) -> Fraction:
    """Convert a number-like value to an exact Fraction.

    Accepts Fractions, ints, fraction strings ("1/6"), decimal strings
    ("0.25", converted exactly), and floats (converted via their exact
    binary expansion).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str, float)):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to a Fraction")


class DomainMismatchError(LookupError):
    """An outcome-table lookup fell outside the table's domain."""


class Pmf:
    """A finite probability mass function over opaque labels.

    Labels may be any hashable token; masses are exact Fractions.
    Construction does not enforce normalization (so that ill-formed
    models can be built and then diagnosed by :func:`validate_model`);
    use :meth:`is_normalized` or the validator to check it.
    """

    __slots__ = ("_atoms",)

    def __init__(self, atoms: Union[Mapping[Label, Numberish], Iterable[tuple[Label, Numberish]]]):
        if isinstance(atoms, Mapping):
            pairs = atoms.items()
        else:
            pairs = list(atoms)
        d: dict[Label, Fraction] = {}
        for label, mass in pairs:
            if label in d:
                raise ValueError(f"duplicate pmf label {label!r}")
            d[label] = as_fraction(mass)
        self._atoms = d

    @classmethod
    def uniform(cls, labels: Sequence[Label]) -> "Pmf":
        n = len(labels)
        return cls({lab: Fraction(1, n) for lab in labels})

    @classmethod
    def point(cls, label: Label) -> "Pmf":
        return cls({label: Fraction(1)})

    @classmethod
    def from_weights(cls, weights: Mapping[Label, int]) -> "Pmf":
        """Normalize nonnegative integer weights into an exact pmf."""
        total = sum(weights.values())
        if total <= 0:
            raise ValueError("weights must have positive total")
        return cls({lab: Fraction(w, total) for lab, w in weights.items()})

    def labels(self) -> tuple[Label, ...]:
        return tuple(self._atoms)

    def mass(self, label: Label) -> Fraction:
        return self._atoms.get(label, Fraction(0))

    def items(self) -> Iterator[tuple[Label, Fraction]]:
        return iter(self._atoms.items())

    def support(self) -> Iterator[tuple[Label, Fraction]]:
        """Atoms with strictly positive mass."""
        return ((lab, m) for lab, m in self._atoms.items() if m > 0)

    def total(self) -> Fraction:
        return sum(self._atoms.values(), Fraction(0))

    def is_normalized(self) -> bool:
        return all(m >= 0 for m in self._atoms.values()) and self.total() == 1

    def __len__(self) -> int:
        return len(self._atoms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Pmf) and self._atoms == other._atoms

    def __repr__(self) -> str:
        return f"Pmf({self._atoms!r})"


class OutcomeTable:
    """Measurement outcomes indexed by (source label, instrument label).

    Values are Fractions in [-1, +1].  A table flagged ``ternary``
    restricts values to {-1, 0, +1}, the three-valued reading where 0
    means "no detection".  Unflagged tables may hold any rational in
    [-1, +1], read as conditional expectations of a +/-1 outcome.
    """

    __slots__ = ("entries", "ternary")

    def __init__(self, entries: Mapping[tuple[Label, Label], Numberish], ternary: bool = False):
        self.entries = {key: as_fraction(v) for key, v in entries.items()}
        self.ternary = ternary

    def value(self, source_label: Label, instrument_label: Label) -> Fraction:
        try:
            return self.entries[(source_label, instrument_label)]
        except KeyError:
            raise DomainMismatchError(
                f"no outcome for (source={source_label!r}, instrument={instrument_label!r})"
            ) from None

    def values_are_point(self) -> bool:
        """True when every entry is an actual outcome, not an expectation.

        +/-1 entries always qualify; a 0 entry qualifies only in a
        ternary-flagged table (in an unflagged table 0 reads as the
        expectation of a fair coin).
        """
        allowed = {Fraction(-1), Fraction(1)}
        if self.ternary:
            allowed.add(Fraction(0))
        return all(v in allowed for v in self.entries.values())

    def has_zero(self) -> bool:
        return any(v == 0 for v in self.entries.values())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OutcomeTable)
            and self.entries == other.entries
            and self.ternary == other.ternary
        )

    def __repr__(self) -> str:
        return f"OutcomeTable({self.entries!r}, ternary={self.ternary})"


@dataclass(frozen=True)
class Setting:
    """One measurement setting: a name, an instrument pmf, an outcome table."""

    name: str
    instrument: Pmf
    outcomes: OutcomeTable


@dataclass(frozen=True)
class ContextualModel:
    """A local model with per-setting instrument hidden variables.

    ``source`` is a pmf over pairs (lambda1, lambda2) shared by all four
    measurement contexts.  Each side has exactly two settings; each
    setting owns an instrument pmf (its private randomness) and an
    outcome table over (own source coordinate) x (own instrument atoms).
    """

    source: Pmf
    alice: tuple[Setting, Setting]
    bob: tuple[Setting, Setting]

    def alice_setting(self, name: str) -> Setting:
        for s in self.alice:
            if s.name == name:
                return s
        raise KeyError(f"unknown Alice setting {name!r}")

    def bob_setting(self, name: str) -> Setting:
        for s in self.bob:
            if s.name == name:
                return s
        raise KeyError(f"unknown Bob setting {name!r}")

    def contexts(self) -> tuple[Context, Context, Context, Context]:
        """The four joint setting choices, Alice-major order."""
        return tuple(
            (a.name, b.name) for a in self.alice for b in self.bob
        )  # type: ignore[return-value]

    def source_first_labels(self) -> tuple[Label, ...]:
        seen: dict[Label, None] = {}
        for pair in self.source.labels():
            seen.setdefault(pair[0])
        return tuple(seen)

    def source_second_labels(self) -> tuple[Label, ...]:
        seen: dict[Label, None] = {}
        for pair in self.source.labels():
            seen.setdefault(pair[1])
        return tuple(seen)

    def is_ternary(self) -> bool:
        return any(s.outcomes.ternary for s in self.alice + self.bob)


@dataclass(frozen=True)
class CorrelationQuad:
    """The four context expectations E(A_a B_b).

    Values are exact Fractions for rational models, floats where the
    inputs were irrational (e.g. the singlet reference fixture).
    """

    alice_settings: tuple[str, str]
    bob_settings: tuple[str, str]
    values: Mapping[Context, Union[Fraction, float]]

    def value(self, alice_name: str, bob_name: str):
        return self.values[(alice_name, bob_name)]

    def ordered(self) -> tuple:
        """Values in Alice-major context order (xy, xy', x'y, x'y')."""
        return tuple(
            self.values[(a, b)] for a in self.alice_settings for b in self.bob_settings
        )

    def contexts(self) -> tuple[Context, ...]:
        return tuple((a, b) for a in self.alice_settings for b in self.bob_settings)

    def in_range(self) -> bool:
        return all(-1 <= v <= 1 for v in self.values.values())


@dataclass(frozen=True)
class BehaviorTable:
    """The experimentally accessible object: P(x, y | a, b) per context.

    ``outcomes`` is the shared outcome alphabet, (-1, 1) or (-1, 0, 1).
    Probabilities are exact Fractions.
    """

    alice_settings: tuple[str, str]
    bob_settings: tuple[str, str]
    outcomes: tuple[int, ...]
    probs: Mapping[Context, Mapping[tuple[int, int], Fraction]]

    @property
    def ternary(self) -> bool:
        return 0 in self.outcomes

    def contexts(self) -> tuple[Context, ...]:
        return tuple((a, b) for a in self.alice_settings for b in self.bob_settings)

    def prob(self, context: Context, x: int, y: int) -> Fraction:
        return self.probs[context].get((x, y), Fraction(0))

    def context_pmf(self, context: Context) -> Mapping[tuple[int, int], Fraction]:
        return self.probs[context]

    def is_normalized(self) -> bool:
        for ctx in self.contexts():
            cells = self.probs[ctx]
            if any(p < 0 for p in cells.values()):
                return False
            if sum(cells.values(), Fraction(0)) != 1:
                return False
        return True

    def quad(self) -> CorrelationQuad:
        """Correlations E(XY | a, b) recovered from the table."""
        values = {}
        for ctx in self.contexts():
            values[ctx] = sum(
                (Fraction(x * y) * p for (x, y), p in self.probs[ctx].items()),
                Fraction(0),
            )
        return CorrelationQuad(self.alice_settings, self.bob_settings, values)

    def alice_marginal(self, context: Context) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {x: Fraction(0) for x in self.outcomes}
        for (x, _y), p in self.probs[context].items():
            out[x] += p
        return out

    def bob_marginal(self, context: Context) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {y: Fraction(0) for y in self.outcomes}
        for (_x, y), p in self.probs[context].items():
            out[y] += p
        return out


@dataclass(frozen=True)
class NonlocalPairModel:
    """A pair-hidden-variable model whose joint pmf may depend on both settings.

    For each context (i, j) there is a pmf over pairs (lambda_i, lambda_j)
    and per-setting outcome maps lambda -> value.  Unlike
    :class:`ContextualModel` there is no shared source distribution, so
    this object cannot in general be simulated locally; its purpose is
    the factorization diagnostic below.
    """

    alice_settings: tuple[str, str]
    bob_settings: tuple[str, str]
    joints: Mapping[Context, Pmf]
    alice_outcomes: Mapping[str, Mapping[Label, Fraction]]
    bob_outcomes: Mapping[str, Mapping[Label, Fraction]]

    def contexts(self) -> tuple[Context, ...]:
        return tuple((a, b) for a in self.alice_settings for b in self.bob_settings)


@dataclass
class ValidationReport:
    """Accumulated invariant violations; empty means well-formed."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str) -> None:
        self.violations.append(message)


def _check_pmf(report: ValidationReport, pmf: Pmf, name: str) -> None:
    negative = [lab for lab, m in pmf.items() if m < 0]
    if negative:
        report.add(f"{name}: negative mass at {negative!r}")
    total = pmf.total()
    if total != 1:
        report.add(f"{name}: masses sum to {total}, not 1")


def _check_table(
    report: ValidationReport,
    setting: Setting,
    source_labels: Sequence[Label],
    side: str,
) -> None:
    name = f"{side} setting {setting.name!r} outcome table"
    expected = set(itertools.product(source_labels, setting.instrument.labels()))
    actual = set(setting.outcomes.entries)
    missing = expected - actual
    extra = actual - expected
    if missing:
        report.add(f"{name}: missing entries for {sorted(map(repr, missing))[:4]}")
    if extra:
        report.add(f"{name}: entries outside domain {sorted(map(repr, extra))[:4]}")
    for key, v in setting.outcomes.entries.items():
        if not -1 <= v <= 1:
            report.add(f"{name}: value {v} at {key!r} outside [-1, 1]")
        elif setting.outcomes.ternary and v not in (Fraction(-1), Fraction(0), Fraction(1)):
            report.add(f"{name}: ternary table holds non-ternary value {v} at {key!r}")


def validate_model(model: ContextualModel) -> ValidationReport:
    """Report every violated invariant of a contextual model.

    Validation never raises; an empty report means the model is
    well-formed.
    """
    report = ValidationReport()
    for pair in model.source.labels():
        if not (isinstance(pair, tuple) and len(pair) == 2):
            report.add(f"source pmf: label {pair!r} is not a (lambda1, lambda2) pair")
            return report
    _check_pmf(report, model.source, "source pmf")
    for side_name, side in (("alice", model.alice), ("bob", model.bob)):
        if len(side) != 2:
            report.add(f"{side_name}: needs exactly 2 settings, has {len(side)}")
            continue
        if side[0].name == side[1].name:
            report.add(f"{side_name}: duplicate setting name {side[0].name!r}")
        source_labels = (
            model.source_first_labels() if side_name == "alice" else model.source_second_labels()
        )
        for setting in side:
            _check_pmf(
                report, setting.instrument, f"{side_name} setting {setting.name!r} instrument pmf"
            )
            _check_table(report, setting, source_labels, side_name)
    return report


def exact_expectation(model: ContextualModel, context: Context) -> Fraction:
    """E(A_a B_b) for one context, as the exact sum over all hidden variables.

    Computed term by term over (lambda1, lambda2) x (Alice instrument atom)
    x (Bob instrument atom); no factorization or averaging shortcut is
    taken, so this serves as the reference value for the constructions in
    :mod:`lhvlab.flatten`.
    """
    a = model.alice_setting(context[0])
    b = model.bob_setting(context[1])
    total = Fraction(0)
    for (l1, l2), p_src in model.source.support():
        for la, p_a in a.instrument.support():
            va = a.outcomes.value(l1, la)
            if va == 0:
                continue
            for lb, p_b in b.instrument.support():
                total += va * b.outcomes.value(l2, lb) * p_a * p_b * p_src
    return total


def exact_side_expectation(model: ContextualModel, side: str, setting_name: str) -> Fraction:
    """E(A_a) or E(B_b): the single-outcome expectation for one setting."""
    if side == "alice":
        setting = model.alice_setting(setting_name)
        coord = 0
    elif side == "bob":
        setting = model.bob_setting(setting_name)
        coord = 1
    else:
        raise ValueError(f"side must be 'alice' or 'bob', got {side!r}")
    total = Fraction(0)
    for pair, p_src in model.source.support():
        for lam, p_i in setting.instrument.support():
            total += setting.outcomes.value(pair[coord], lam) * p_i * p_src
    return total


def correlation_quad(model: ContextualModel) -> CorrelationQuad:
    """All four context expectations of a model."""
    values = {ctx: exact_expectation(model, ctx) for ctx in model.contexts()}
    return CorrelationQuad(
        (model.alice[0].name, model.alice[1].name),
        (model.bob[0].name, model.bob[1].name),
        values,
    )


def counterexample_model() -> ContextualModel:
    """The die-and-coins model: a six-sided die at the source, no instrument noise.

    The source is uniform on pairs (k, k), k = 1..6; each side's two
    settings are labelled "+1" and "-1"; Alice's outcome at setting a is
    a**k and Bob's at setting b is b**(k+1).  Its correlation quad is
    exactly (1, 0, 0, -1).
    """
    die = [str(k) for k in range(1, 7)]
    source = Pmf.uniform([(k, k) for k in die])
    unit = Pmf.point("*")

    def alice_table(a: int) -> OutcomeTable:
        return OutcomeTable({(k, "*"): Fraction(a ** int(k)) for k in die})

    def bob_table(b: int) -> OutcomeTable:
        return OutcomeTable({(k, "*"): Fraction(b ** (int(k) + 1)) for k in die})

    alice = (
        Setting("+1", unit, alice_table(1)),
        Setting("-1", unit, alice_table(-1)),
    )
    bob = (
        Setting("+1", unit, bob_table(1)),
        Setting("-1", unit, bob_table(-1)),
    )
    return ContextualModel(source, alice, bob)


def behavior_from_model(model: ContextualModel) -> BehaviorTable:
    """The outcome distribution P(x, y | a, b) induced by a point-outcome model.

    Requires every outcome table to hold actual outcomes (+/-1, or 0 in
    ternary-flagged tables).  Models with fractional entries represent
    conditional expectations, not distributions, and are rejected.
    """
    for side_name, side in (("alice", model.alice), ("bob", model.bob)):
        for setting in side:
            if not setting.outcomes.values_are_point():
                raise ValueError(
                    f"{side_name} setting {setting.name!r} has fractional outcomes; "
                    "behavior tables need point outcomes"
                )
    ternary = model.is_ternary()
    outcomes = (-1, 0, 1) if ternary else (-1, 1)
    probs: dict[Context, dict[tuple[int, int], Fraction]] = {}
    for ctx in model.contexts():
        a = model.alice_setting(ctx[0])
        b = model.bob_setting(ctx[1])
        cells: dict[tuple[int, int], Fraction] = {}
        for (l1, l2), p_src in model.source.support():
            for la, p_a in a.instrument.support():
                x = int(a.outcomes.value(l1, la))
                for lb, p_b in b.instrument.support():
                    y = int(b.outcomes.value(l2, lb))
                    key = (x, y)
                    cells[key] = cells.get(key, Fraction(0)) + p_src * p_a * p_b
        probs[ctx] = cells
    return BehaviorTable(
        (model.alice[0].name, model.alice[1].name),
        (model.bob[0].name, model.bob[1].name),
        outcomes,
        probs,
    )


@dataclass
class FactorizationReport:
    """Per-context verdicts of the product-form test p(l_i, l_j) = p(l_i) p(l_j)."""

    factorizable: dict[Context, bool]
    max_deviation: dict[Context, Fraction]

    @property
    def all_factorizable(self) -> bool:
        return all(self.factorizable.values())


def is_setting_factorizable(
    model: NonlocalPairModel, tolerance: Numberish = 0
) -> FactorizationReport:
    """Check, per context, whether the joint pair pmf is the product of its marginals.

    With tolerance 0 the comparison is exact.  A context that fails is
    one where the hidden-variable pair carries dependence beyond what
    two independent local draws could produce.
    """
    tol = as_fraction(tolerance)
    factorizable: dict[Context, bool] = {}
    deviation: dict[Context, Fraction] = {}
    for ctx in model.contexts():
        joint = model.joints[ctx]
        first: dict[Label, Fraction] = {}
        second: dict[Label, Fraction] = {}
        for (li, lj), p in joint.items():
            first[li] = first.get(li, Fraction(0)) + p
            second[lj] = second.get(lj, Fraction(0)) + p
        worst = Fraction(0)
        for li, mi in first.items():
            for lj, mj in second.items():
                gap = abs(joint.mass((li, lj)) - mi * mj)
                if gap > worst:
                    worst = gap
        factorizable[ctx] = worst <= tol
        deviation[ctx] = worst
    return FactorizationReport(factorizable, deviation)


def nonlocal_quad(model: NonlocalPairModel) -> CorrelationQuad:
    """Context correlations of a pair model (no locality assumed)."""
    values = {}
    for ctx in model.contexts():
        a_out = model.alice_outcomes[ctx[0]]
        b_out = model.bob_outcomes[ctx[1]]
        values[ctx] = sum(
            (p * a_out[li] * b_out[lj] for (li, lj), p in model.joints[ctx].items()),
            Fraction(0),
        )
    return CorrelationQuad(model.alice_settings, model.bob_settings, values)
