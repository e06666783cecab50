"""Shared helpers: an independent brute-force expectation oracle and corpus iteration."""

from __future__ import annotations

import random
from fractions import Fraction

from lhvlab import ContextualModel, CorrelationQuad
from lhvlab.corpus import random_contextual_model


def brute_expectation(model: ContextualModel, context) -> Fraction:
    """Reference oracle: enumerate the full six-coordinate product space.

    Sums A*B*mass over every tuple (l1, l2, la, la', lb, lb') with the
    product mass, including the two instrument coordinates the context
    never reads.  Structurally different from exact_expectation (which
    never builds the irrelevant coordinates), so agreement is meaningful.
    """
    a = model.alice_setting(context[0])
    b = model.bob_setting(context[1])
    ax, ax2 = model.alice
    by, by2 = model.bob
    total = Fraction(0)
    for (l1, l2), p_src in model.source.items():
        for la, pa in ax.instrument.items():
            for la2, pa2 in ax2.instrument.items():
                lam_a = la if a is ax else la2
                va = a.outcomes.value(l1, lam_a)
                for lb, pb in by.instrument.items():
                    for lb2, pb2 in by2.instrument.items():
                        lam_b = lb if b is by else lb2
                        total += (
                            va
                            * b.outcomes.value(l2, lam_b)
                            * p_src
                            * pa
                            * pa2
                            * pb
                            * pb2
                        )
    return total


def brute_quad(model: ContextualModel) -> CorrelationQuad:
    values = {ctx: brute_expectation(model, ctx) for ctx in model.contexts()}
    return CorrelationQuad(
        (model.alice[0].name, model.alice[1].name),
        (model.bob[0].name, model.bob[1].name),
        values,
    )


def corpus_models(n: int, seed: int = 2024, **kwargs):
    """Yield n random models alternating ternary and interval outcomes."""
    rng = random.Random(seed)
    for i in range(n):
        kind = "ternary" if i % 2 == 0 else "interval"
        yield random_contextual_model(rng, outcome_kind=kind, **kwargs)
