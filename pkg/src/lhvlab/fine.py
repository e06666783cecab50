"""Joint-distribution feasibility for the four pairwise-measurable variables.

A behavior admits a single distribution over (A_x, A_x', B_y, B_y')
reproducing all four context marginals iff its single-variable marginals
are setting-independent and its quad satisfies every CHSH inequality.
This module checks both sides of that equivalence independently: an
exact rational linear program on one side, the inequality test on the
other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .chsh import ChshCombination, chsh_values
from .model import BehaviorTable, Context, ContextualModel
from .simplex import find_feasible
from . import flatten as _flatten

SIGNS = (-1, 1)


class InternalInconsistencyError(RuntimeError):
    """The LP and the inequality test disagreed; one of them is buggy."""


class JointDistribution16:
    """A pmf over the 16 sign patterns of (A_x, A_x', B_y, B_y').

    Nonnegativity and exact unit total are enforced on construction.
    Coordinates follow (alice_settings[0], alice_settings[1],
    bob_settings[0], bob_settings[1]).
    """

    def __init__(
        self,
        alice_settings: tuple[str, str],
        bob_settings: tuple[str, str],
        mass: Mapping[tuple[int, int, int, int], Fraction],
    ):
        self.alice_settings = alice_settings
        self.bob_settings = bob_settings
        full: dict[tuple[int, int, int, int], Fraction] = {}
        for key in itertools.product(SIGNS, SIGNS, SIGNS, SIGNS):
            full[key] = Fraction(mass.get(key, Fraction(0)))
        extra = set(mass) - set(full)
        if extra:
            raise ValueError(f"mass on non-sign pattern {sorted(extra)[0]!r}")
        if any(v < 0 for v in full.values()):
            raise ValueError("negative mass in joint distribution")
        total = sum(full.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"joint distribution mass sums to {total}, not 1")
        self.mass = full

    def prob(self, pattern: tuple[int, int, int, int]) -> Fraction:
        return self.mass[pattern]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, JointDistribution16)
            and self.alice_settings == other.alice_settings
            and self.bob_settings == other.bob_settings
            and self.mass == other.mass
        )


def marginalize_context(
    joint: JointDistribution16, context: Context
) -> dict[tuple[int, int], Fraction]:
    """Sum out the two coordinates not selected by (alice setting, bob setting)."""
    ai = joint.alice_settings.index(context[0])
    bi = joint.bob_settings.index(context[1])
    out: dict[tuple[int, int], Fraction] = {
        (x, y): Fraction(0) for x in SIGNS for y in SIGNS
    }
    for pattern, p in joint.mass.items():
        out[(pattern[ai], pattern[2 + bi])] += p
    return out


@dataclass
class NoSignallingReport:
    """Outcome marginals of each setting under both partner settings.

    ``alice[a][b]`` is Alice's outcome marginal in context (a, b);
    equal-across-b marginals (and the mirror for Bob) is the
    no-signalling property.
    """

    alice: dict[str, dict[str, dict[int, Fraction]]]
    bob: dict[str, dict[str, dict[int, Fraction]]]
    per_setting_deviation: dict[tuple[str, str], Fraction]
    max_deviation: Fraction
    tolerance: Fraction = Fraction(0)

    @property
    def holds(self) -> bool:
        return self.max_deviation <= self.tolerance


def check_no_signalling(behavior: BehaviorTable, tolerance: Fraction = Fraction(0)) -> NoSignallingReport:
    """Compare each side's outcome marginal across the other side's settings.

    The default tolerance 0 demands exact equality, appropriate for
    model-generated behaviors.  A positive tolerance is only for
    externally supplied tables whose probabilities went through floating
    point on the way in.
    """
    if behavior.ternary:
        raise ValueError(
            "no-signalling check expects a binary behavior; reduce ternary input first"
        )
    alice: dict[str, dict[str, dict[int, Fraction]]] = {}
    bob: dict[str, dict[str, dict[int, Fraction]]] = {}
    per_setting: dict[tuple[str, str], Fraction] = {}
    for a in behavior.alice_settings:
        alice[a] = {b: behavior.alice_marginal((a, b)) for b in behavior.bob_settings}
        b0, b1 = behavior.bob_settings
        per_setting[("alice", a)] = max(
            abs(alice[a][b0][x] - alice[a][b1][x]) for x in behavior.outcomes
        )
    for b in behavior.bob_settings:
        bob[b] = {a: behavior.bob_marginal((a, b)) for a in behavior.alice_settings}
        a0, a1 = behavior.alice_settings
        per_setting[("bob", b)] = max(
            abs(bob[b][a0][y] - bob[b][a1][y]) for y in behavior.outcomes
        )
    max_dev = max(per_setting.values())
    return NoSignallingReport(alice, bob, per_setting, max_dev, Fraction(tolerance))


@dataclass
class JointSearchResult:
    """Outcome of the joint-distribution feasibility problem."""

    feasible: bool
    joint: Optional[JointDistribution16] = None
    certificate: Optional[ChshCombination] = None


def find_joint(behavior: BehaviorTable) -> JointSearchResult:
    """Search for a joint distribution reproducing all four context marginals.

    Solved as an exact rational feasibility problem over the 16 sign
    patterns: nonnegativity, unit total, and one equality per context
    and outcome pair.  When infeasible, the violated CHSH combination is
    attached as a certificate; by Fine's theorem one must exist for an
    exactly no-signalling behavior, and we raise if that self-check ever
    fails.
    """
    if behavior.ternary:
        raise ValueError("joint feasibility expects a binary behavior; reduce ternary input first")
    if not behavior.is_normalized():
        raise ValueError("behavior table is not normalized")
    report = check_no_signalling(behavior)
    if not report.holds:
        raise ValueError(
            "behavior signals (marginal deviation "
            f"{report.max_deviation}); no joint distribution can match its marginals"
        )

    patterns = list(itertools.product(SIGNS, SIGNS, SIGNS, SIGNS))
    index = {t: k for k, t in enumerate(patterns)}
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    rows.append([Fraction(1)] * 16)
    rhs.append(Fraction(1))
    for ai, a in enumerate(behavior.alice_settings):
        for bi, b in enumerate(behavior.bob_settings):
            for x in SIGNS:
                for y in SIGNS:
                    row = [Fraction(0)] * 16
                    for t in patterns:
                        if t[ai] == x and t[2 + bi] == y:
                            row[index[t]] = Fraction(1)
                    rows.append(row)
                    rhs.append(behavior.prob((a, b), x, y))

    solution = find_feasible(rows, rhs)
    if solution is not None:
        joint = JointDistribution16(
            behavior.alice_settings,
            behavior.bob_settings,
            {t: solution[index[t]] for t in patterns},
        )
        return JointSearchResult(feasible=True, joint=joint)

    report = chsh_values(behavior.quad())
    worst = report.worst()
    if abs(worst.value) <= 2:
        raise InternalInconsistencyError(
            "LP found no joint yet every CHSH combination holds; "
            f"max |S| = {report.max_abs}"
        )
    return JointSearchResult(feasible=False, certificate=worst)


def fine_criterion(behavior: BehaviorTable) -> bool:
    """True iff no-signalling holds exactly and all 8 CHSH inequalities hold.

    This is the closed-form side of the equivalence that
    :func:`find_joint` decides by linear programming.
    """
    if behavior.ternary:
        raise ValueError("criterion applies to binary behaviors; reduce ternary input first")
    if not check_no_signalling(behavior).holds:
        return False
    return chsh_values(behavior.quad()).satisfied


def coupling_joint(model: ContextualModel) -> JointDistribution16:
    """Push a binary model forward onto (A_x, A_x', B_y, B_y') jointly.

    Evaluates all four settings on every point of the flattened product
    space; the resulting distribution marginalizes to the model's
    behavior in every context.  Requires strictly +/-1 outcomes (apply
    the coin reduction first if there are zeros).
    """
    flat = _flatten.product_flatten(model)
    mass: dict[tuple[int, int, int, int], Fraction] = {}
    for lam, p in flat.lambda_pmf.support():
        vals = []
        for setting in flat.alice + flat.bob:
            v = setting.evaluate(lam)
            if v not in (Fraction(-1), Fraction(1)):
                raise ValueError(f"outcome {v} is not +/-1; coupling needs a binary model")
            vals.append(int(v))
        key = (vals[0], vals[1], vals[2], vals[3])
        mass[key] = mass.get(key, Fraction(0)) + p
    return JointDistribution16(
        (flat.alice[0].name, flat.alice[1].name),
        (flat.bob[0].name, flat.bob[1].name),
        mass,
    )
