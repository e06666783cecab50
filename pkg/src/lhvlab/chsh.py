"""The eight one-sided CHSH combinations, post-selection, and the zero-to-coin reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .model import (
    BehaviorTable,
    Context,
    ContextualModel,
    CorrelationQuad,
    OutcomeTable,
    Pmf,
    Setting,
)

Value = Union[Fraction, float]


@dataclass(frozen=True)
class ChshCombination:
    """One signed combination: three terms share a sign, one carries the opposite.

    ``flipped`` names the context whose term has the minority sign and
    ``sign`` is the sign of the three majority terms.
    """

    flipped: Context
    sign: int
    value: Value
    contexts: tuple[Context, ...] = ()

    def describe(self) -> str:
        terms = []
        for ctx in self.contexts:
            term_sign = self.sign if ctx != self.flipped else -self.sign
            terms.append(f"{'+' if term_sign > 0 else '-'}E{ctx}")
        return " ".join(terms)


@dataclass
class ChshReport:
    """All eight one-sided combinations of a correlation quad."""

    quad: CorrelationQuad
    combinations: list[ChshCombination]

    @property
    def max_abs(self) -> Value:
        return max(abs(c.value) for c in self.combinations)

    @property
    def satisfied(self) -> bool:
        return self.max_abs <= 2

    def worst(self) -> ChshCombination:
        return max(self.combinations, key=lambda c: abs(c.value))


def chsh_values(quad: CorrelationQuad) -> ChshReport:
    """Evaluate all 8 one-sided CHSH combinations of a quad exactly.

    For each choice of the single opposite-sign term and each overall
    sign, the combination is sign * (sum of the four values - 2 * flipped
    value).  The quad satisfies CHSH iff every combination is at most 2
    in absolute value.  Arithmetic stays in the quad's own number type
    (Fraction in, Fraction out).
    """
    contexts = quad.contexts()
    for ctx in contexts:
        v = quad.values[ctx]
        if not -1 <= v <= 1:
            raise ValueError(f"correlation {v} at context {ctx} outside [-1, 1]")
    total = sum(quad.values[ctx] for ctx in contexts)
    combos = []
    for flipped in contexts:
        base = total - 2 * quad.values[flipped]
        for sign in (1, -1):
            combos.append(ChshCombination(flipped, sign, sign * base, contexts))
    return ChshReport(quad, combos)


@dataclass
class PostSelectionReport:
    """Raw versus detected-only correlations of a ternary behavior.

    ``conditional[ctx]`` is E(XY | X != 0, Y != 0), or None when the
    coincidence probability for that context is zero (an undefined
    correlation is reported as absent, never as a number).
    """

    raw_quad: CorrelationQuad
    conditional: dict[Context, Optional[Fraction]]
    coincidence_rate: dict[Context, Fraction]
    alice_detect: dict[Context, Fraction]
    bob_detect: dict[Context, Fraction]

    def conditional_quad(self) -> CorrelationQuad:
        """The post-selected quad; raises if any context is undefined."""
        for ctx, v in self.conditional.items():
            if v is None:
                raise ValueError(f"post-selected correlation undefined in context {ctx}")
        return CorrelationQuad(
            self.raw_quad.alice_settings,
            self.raw_quad.bob_settings,
            dict(self.conditional),
        )


def postselected_correlations(behavior: BehaviorTable) -> PostSelectionReport:
    """Condition each context's correlation on both outcomes being nonzero.

    This is what an experimenter does when discarding no-detection
    trials.  The conditioned values are free to leave the CHSH polytope
    even though the raw ones cannot.
    """
    if not behavior.ternary:
        raise ValueError("post-selection needs a ternary behavior (no zero outcomes to discard)")
    if not behavior.is_normalized():
        raise ValueError("behavior table is not normalized")
    conditional: dict[Context, Optional[Fraction]] = {}
    coincidence: dict[Context, Fraction] = {}
    alice_detect: dict[Context, Fraction] = {}
    bob_detect: dict[Context, Fraction] = {}
    for ctx in behavior.contexts():
        cells = behavior.context_pmf(ctx)
        num = Fraction(0)
        den = Fraction(0)
        a_det = Fraction(0)
        b_det = Fraction(0)
        for (x, y), p in cells.items():
            if x != 0:
                a_det += p
            if y != 0:
                b_det += p
            if x != 0 and y != 0:
                den += p
                num += x * y * p
        coincidence[ctx] = den
        alice_detect[ctx] = a_det
        bob_detect[ctx] = b_det
        conditional[ctx] = num / den if den > 0 else None
    return PostSelectionReport(
        raw_quad=behavior.quad(),
        conditional=conditional,
        coincidence_rate=coincidence,
        alice_detect=alice_detect,
        bob_detect=bob_detect,
    )


def _coin_extend(setting: Setting) -> Setting:
    """Product the instrument space with a fair coin that resolves zero outcomes."""
    atoms = []
    for lab, mass in setting.instrument.items():
        half = mass / 2
        atoms.append(((lab, "H"), half))
        atoms.append(((lab, "T"), half))
    entries = {}
    for (src, lab), v in setting.outcomes.entries.items():
        entries[(src, (lab, "H"))] = v if v != 0 else Fraction(1)
        entries[(src, (lab, "T"))] = v if v != 0 else Fraction(-1)
    return Setting(setting.name, Pmf(atoms), OutcomeTable(entries, ternary=False))


def zero_to_coin(model: ContextualModel) -> ContextualModel:
    """Replace every zero outcome by an independent fair coin.

    Each setting whose table contains a 0 gets its instrument space
    extended by a coin component; the 0 entries split into +1/-1 halves.
    A zero outcome contributes nothing to any product, so the returned
    binary model has exactly the same four expectations as the input.
    Settings without zeros are kept as they are (minus the ternary flag).
    """
    for side_name, side in (("alice", model.alice), ("bob", model.bob)):
        for setting in side:
            bad = [
                v
                for v in setting.outcomes.entries.values()
                if v not in (Fraction(-1), Fraction(0), Fraction(1))
            ]
            if bad:
                raise ValueError(
                    f"{side_name} setting {setting.name!r} has non-ternary outcome {bad[0]}; "
                    "the coin reduction applies to outcomes in {-1, 0, +1}"
                )

    def convert(setting: Setting) -> Setting:
        if setting.outcomes.has_zero():
            return _coin_extend(setting)
        if setting.outcomes.ternary:
            return Setting(
                setting.name,
                setting.instrument,
                OutcomeTable(setting.outcomes.entries, ternary=False),
            )
        return setting

    return ContextualModel(
        source=model.source,
        alice=(convert(model.alice[0]), convert(model.alice[1])),
        bob=(convert(model.bob[0]), convert(model.bob[1])),
    )


def finite_sample_bound(n_trials: int, observed_s: float) -> float:
    """Hoeffding-style tail bound for an observed CHSH statistic.

    Upper-bounds the probability that n_trials of any local
    hidden-variable process, split equally over the four contexts,
    produce an empirical |S| at least as large as ``observed_s``:
    min(1, exp(-n * (|S| - 2)^2 / 32)).  The constant 32 comes from a
    range-8 increment argument; below the classical bound of 2 the
    bound is vacuously 1.
    """
    if not isinstance(n_trials, int) or n_trials < 1:
        raise ValueError(f"n_trials must be a positive integer, got {n_trials!r}")
    s = abs(float(observed_s))
    if s > 4:
        raise ValueError(f"|S| cannot exceed 4, got {observed_s!r}")
    excess = max(0.0, s - 2.0)
    return min(1.0, math.exp(-n_trials * excess * excess / 32.0))
