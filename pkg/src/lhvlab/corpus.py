"""Seeded random models and behaviors for property testing and demos."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .model import BehaviorTable, ContextualModel, OutcomeTable, Pmf, Setting

OutcomeKind = str  # "binary" | "ternary" | "interval"


def _random_weights(rng: random.Random, n: int, max_weight: int = 12) -> list[int]:
    """Nonnegative integer weights with at least one strictly positive."""
    while True:
        w = [rng.randint(0, max_weight) for _ in range(n)]
        if any(w):
            return w


def _random_pmf(rng: random.Random, labels) -> Pmf:
    weights = _random_weights(rng, len(labels))
    return Pmf.from_weights(dict(zip(labels, weights)))


def _random_outcome(rng: random.Random, kind: OutcomeKind) -> Fraction:
    if kind == "binary":
        return Fraction(rng.choice((-1, 1)))
    if kind == "ternary":
        return Fraction(rng.choice((-1, 0, 1)))
    if kind == "interval":
        return Fraction(rng.randint(-8, 8), 8)
    raise ValueError(f"unknown outcome kind {kind!r}")


def random_contextual_model(
    rng: random.Random,
    max_source_side: int = 6,
    max_instrument: int = 4,
    outcome_kind: OutcomeKind = "ternary",
) -> ContextualModel:
    """A random well-formed model with canonical string labels.

    Source pairs range over a full grid of up to max_source_side x
    max_source_side labels (some with zero mass); each setting gets its
    own instrument space of up to max_instrument atoms.  ``outcome_kind``
    picks the outcome alphabet: strict +/-1, ternary with zeros, or
    rational values in [-1, 1] with denominator 8.
    """
    n1 = rng.randint(1, max_source_side)
    n2 = rng.randint(1, max_source_side)
    first = [f"a{i}" for i in range(n1)]
    second = [f"b{i}" for i in range(n2)]
    pairs = [(f, s) for f in first for s in second]
    source = _random_pmf(rng, pairs)

    def make_setting(name: str, source_labels) -> Setting:
        atoms = [f"u{i}" for i in range(rng.randint(1, max_instrument))]
        instrument = _random_pmf(rng, atoms)
        entries = {
            (sl, il): _random_outcome(rng, outcome_kind)
            for sl in source_labels
            for il in atoms
        }
        return Setting(name, instrument, OutcomeTable(entries, ternary=outcome_kind == "ternary"))

    alice = (make_setting("x", first), make_setting("x'", first))
    bob = (make_setting("y", second), make_setting("y'", second))
    return ContextualModel(source, alice, bob)


def _clamped_correlation(rng: random.Random, denominator: int) -> Fraction:
    return Fraction(rng.randint(-denominator, denominator), denominator)


def random_nosignalling_behavior(
    rng: random.Random,
    mode: str = "generic",
    denominator: int = 16,
) -> BehaviorTable:
    """A random binary behavior with exactly setting-independent marginals.

    Parameterized as P(x, y | a, b) = (1 + x m_a + y m_b + x y c_ab) / 4
    with rational singles m and correlations c; no-signalling then holds
    by construction.  ``mode="generic"`` draws everything at random
    (rejecting parameter sets with negative cells); ``mode="near_quantum"``
    keeps the singles at zero and interpolates the correlations toward a
    CHSH-violating corner, so the output population straddles the local
    polytope boundary.
    """
    settings_a = ("x", "x'")
    settings_b = ("y", "y'")
    if mode == "near_quantum":
        corner = {
            ("x", "y"): Fraction(-7, 10),
            ("x", "y'"): Fraction(7, 10),
            ("x'", "y"): Fraction(-7, 10),
            ("x'", "y'"): Fraction(-7, 10),
        }
        t = Fraction(rng.randint(0, denominator), denominator)
        m_a = {a: Fraction(0) for a in settings_a}
        m_b = {b: Fraction(0) for b in settings_b}
        noise = {ctx: _clamped_correlation(rng, 4) for ctx in corner}
        c = {ctx: t * corner[ctx] + (1 - t) * noise[ctx] for ctx in corner}
    elif mode == "generic":
        while True:
            m_a = {a: _clamped_correlation(rng, denominator) for a in settings_a}
            m_b = {b: _clamped_correlation(rng, denominator) for b in settings_b}
            c = {
                (a, b): _clamped_correlation(rng, denominator)
                for a in settings_a
                for b in settings_b
            }
            ok = all(
                1 + x * m_a[a] + y * m_b[b] + x * y * c[(a, b)] >= 0
                for a in settings_a
                for b in settings_b
                for x in (-1, 1)
                for y in (-1, 1)
            )
            if ok:
                break
    else:
        raise ValueError(f"unknown mode {mode!r}")

    probs = {}
    for a in settings_a:
        for b in settings_b:
            probs[(a, b)] = {
                (x, y): (1 + x * m_a[a] + y * m_b[b] + x * y * c[(a, b)]) / 4
                for x in (-1, 1)
                for y in (-1, 1)
            }
    return BehaviorTable(settings_a, settings_b, (-1, 1), probs)
