"""Reference singlet behavior and a search for post-selection CHSH violations.

The search looks for small ternary models whose detected-only
correlations break the CHSH bound while their raw (coin-reduced)
correlations necessarily satisfy it.  Every candidate is scored by exact
rational evaluation, so a reported violation is a theorem about the
returned model, not a numerical artifact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import modelio
from .chsh import ChshReport, PostSelectionReport, chsh_values, postselected_correlations, zero_to_coin
from .model import (
    BehaviorTable,
    ContextualModel,
    CorrelationQuad,
    OutcomeTable,
    Pmf,
    Setting,
    behavior_from_model,
    correlation_quad,
)

DETECTION_THRESHOLD = Fraction(2, 3)


@dataclass(frozen=True)
class AngleSet:
    """Analyzer angles (radians) for the two settings on each side."""

    theta_x: float
    theta_xp: float
    theta_y: float
    theta_yp: float

    @classmethod
    def chsh_optimal(cls) -> "AngleSet":
        return cls(0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


def quantum_singlet_behavior(angles: AngleSet) -> BehaviorTable:
    """The singlet-state behavior at the given angles, exactly rationalized.

    Correlations follow E(a, b) = -cos(theta_a - theta_b) with unbiased
    singles.  Each cosine is taken as a float and then embedded exactly:
    the equal-outcomes cells get (1 + E)/4 as an exact Fraction of the
    float, the unequal cells get 1/2 minus that, so every context pmf
    sums to exactly 1 and no-signalling holds exactly by construction.
    """
    pairs = {
        "x": angles.theta_x,
        "x'": angles.theta_xp,
        "y": angles.theta_y,
        "y'": angles.theta_yp,
    }
    probs = {}
    for a in ("x", "x'"):
        for b in ("y", "y'"):
            e = -math.cos(pairs[a] - pairs[b])
            e = max(-1.0, min(1.0, e))
            agree = (1 + Fraction(e)) / 4
            disagree = Fraction(1, 2) - agree
            probs[(a, b)] = {
                (1, 1): agree,
                (-1, -1): agree,
                (1, -1): disagree,
                (-1, 1): disagree,
            }
    return BehaviorTable(("x", "x'"), ("y", "y'"), (-1, 1), probs)


@dataclass
class DetectionReport:
    """Per-side, per-setting probability of a nonzero outcome."""

    alice: dict[str, Fraction]
    bob: dict[str, Fraction]
    threshold: Fraction = DETECTION_THRESHOLD

    def relation(self, rate: Fraction) -> str:
        if rate < self.threshold:
            return "below"
        if rate == self.threshold:
            return "at"
        return "above"

    def relations(self) -> dict[tuple[str, str], str]:
        out = {}
        for name, rate in self.alice.items():
            out[("alice", name)] = self.relation(rate)
        for name, rate in self.bob.items():
            out[("bob", name)] = self.relation(rate)
        return out

    @property
    def all_below(self) -> bool:
        rates = list(self.alice.values()) + list(self.bob.values())
        return all(r < self.threshold for r in rates)


def detection_rates(model: ContextualModel) -> DetectionReport:
    """Exact probability that each side's outcome is nonzero, per setting."""

    def side_rates(settings, coord) -> dict[str, Fraction]:
        rates = {}
        for setting in settings:
            total = Fraction(0)
            for pair, p_src in model.source.support():
                for atom, p_i in setting.instrument.support():
                    if setting.outcomes.value(pair[coord], atom) != 0:
                        total += p_src * p_i
            rates[setting.name] = total
        return rates

    return DetectionReport(side_rates(model.alice, 0), side_rates(model.bob, 1))


@dataclass
class SearchConfig:
    """Search-space sizes, budget, and the rate constraints.

    ``min_coincidence`` bounds every context's both-detected probability
    from below (no cheap wins by discarding almost everything);
    ``max_detection`` keeps each side's per-setting detection rate
    strictly below the given cap, by default the 2/3 critical threshold.
    Set it to None to search unconstrained.
    """

    seed: int
    source_atoms: int = 10
    instrument_atoms: int = 1
    budget: int = 4000
    min_coincidence: Fraction = Fraction(3, 10)
    max_detection: Optional[Fraction] = DETECTION_THRESHOLD
    mass_denominator: int = 32
    target_stat: Optional[Fraction] = None
    stall_limit: int = 80

    def validate(self) -> None:
        if self.budget < 1 or self.source_atoms < 1 or self.instrument_atoms < 1:
            raise ValueError("budgets and space sizes must be positive")
        if not 0 < self.min_coincidence <= 1:
            raise ValueError("min_coincidence must lie in (0, 1]")
        if self.max_detection is not None and not 0 < self.max_detection <= 1:
            raise ValueError("max_detection must lie in (0, 1] or be None")
        if not 1 <= self.mass_denominator <= 64:
            raise ValueError("mass grid denominator must lie in 1..64")


@dataclass
class SearchOutcome:
    """Best model found plus its exact certificates."""

    model: ContextualModel
    report: PostSelectionReport
    score: Fraction
    violating: bool
    evaluations: int
    history: list[tuple[int, Fraction]] = field(default_factory=list)
    raw_quad: Optional[CorrelationQuad] = None
    raw_chsh: Optional[ChshReport] = None
    detection: Optional[DetectionReport] = None


def _composition(rng: random.Random, n: int, total: int) -> list[int]:
    w = [0] * n
    for _ in range(total):
        w[rng.randrange(n)] += 1
    return w


def _random_search_model(rng: random.Random, cfg: SearchConfig) -> ContextualModel:
    n = cfg.source_atoms
    d = cfg.mass_denominator
    pairs = [(f"s{k}", f"s{k}") for k in range(n)]
    source = Pmf({p: Fraction(w, d) for p, w in zip(pairs, _composition(rng, n, d))})

    def make_setting(name: str) -> Setting:
        atoms = [f"u{i}" for i in range(cfg.instrument_atoms)]
        if len(atoms) == 1:
            instrument = Pmf.point(atoms[0])
        else:
            instrument = Pmf(
                {a: Fraction(w, d) for a, w in zip(atoms, _composition(rng, len(atoms), d))}
            )
        entries = {
            (f"s{k}", a): Fraction(rng.choice((-1, 0, 1)))
            for k in range(n)
            for a in atoms
        }
        return Setting(name, instrument, OutcomeTable(entries, ternary=True))

    return ContextualModel(
        source,
        (make_setting("x"), make_setting("x'")),
        (make_setting("y"), make_setting("y'")),
    )


def _move_grid_unit(rng: random.Random, pmf: Pmf, d: int) -> Pmf:
    weights = {lab: int(m * d) for lab, m in pmf.items()}
    donors = [lab for lab, w in weights.items() if w > 0]
    src = rng.choice(donors)
    dst = rng.choice(list(weights))
    weights[src] -= 1
    weights[dst] += 1
    return Pmf({lab: Fraction(w, d) for lab, w in weights.items()})


def _replace_setting(model: ContextualModel, side: str, idx: int, new_setting: Setting):
    settings = model.alice if side == "alice" else model.bob
    new_side = tuple(new_setting if i == idx else s for i, s in enumerate(settings))
    if side == "alice":
        return ContextualModel(model.source, new_side, model.bob)
    return ContextualModel(model.source, model.alice, new_side)


def _mutate(rng: random.Random, model: ContextualModel, cfg: SearchConfig) -> ContextualModel:
    kind = rng.random()
    if kind < 0.6:
        # flip one outcome entry
        side = rng.choice(("alice", "bob"))
        settings = model.alice if side == "alice" else model.bob
        idx = rng.randrange(2)
        setting = settings[idx]
        key = rng.choice(list(setting.outcomes.entries))
        old = setting.outcomes.entries[key]
        new = Fraction(rng.choice([v for v in (-1, 0, 1) if v != old]))
        entries = dict(setting.outcomes.entries)
        entries[key] = new
        return _replace_setting(
            model, side, idx, Setting(setting.name, setting.instrument, OutcomeTable(entries, ternary=True))
        )
    if kind >= 0.85 and cfg.instrument_atoms > 1:
        # move one grid unit of instrument mass within a random setting
        side = rng.choice(("alice", "bob"))
        settings = model.alice if side == "alice" else model.bob
        idx = rng.randrange(2)
        setting = settings[idx]
        instrument = _move_grid_unit(rng, setting.instrument, cfg.mass_denominator)
        return _replace_setting(
            model, side, idx, Setting(setting.name, instrument, setting.outcomes)
        )
    # move one grid unit of source mass between atoms
    source = _move_grid_unit(rng, model.source, cfg.mass_denominator)
    return ContextualModel(source, model.alice, model.bob)


def _score(model: ContextualModel, cfg: SearchConfig):
    """Rank a candidate: (feasible, key, post-selection report).

    Feasible candidates rank by post-selected max |S|; candidates outside
    the rate constraints rank by the negated constraint violation, which
    lets the greedy walk climb back into the feasible region but keeps
    every infeasible rank below every feasible one.
    """
    behavior = behavior_from_model(model)
    ps = postselected_correlations(behavior)
    penalty = Fraction(0)
    for ctx, rate in ps.coincidence_rate.items():
        if ps.conditional[ctx] is None:
            penalty += 1
        if rate < cfg.min_coincidence:
            penalty += cfg.min_coincidence - rate
    if cfg.max_detection is not None:
        det = detection_rates(model)
        for rate in list(det.alice.values()) + list(det.bob.values()):
            if rate >= cfg.max_detection:
                # the cap is exclusive, so sitting exactly on it still counts
                penalty += rate - cfg.max_detection + Fraction(1, 256)
    feasible = penalty == 0
    rank = chsh_values(ps.conditional_quad()).max_abs if feasible else -penalty
    coincidence_total = sum(ps.coincidence_rate.values(), Fraction(0))
    return feasible, (rank, coincidence_total, modelio.serialize(model)), ps


def _better(key, other) -> bool:
    """Higher score wins; ties prefer lower coincidence, then smaller text."""
    if key[0] != other[0]:
        return key[0] > other[0]
    if key[1] != other[1]:
        return key[1] < other[1]
    return key[2] < other[2]


def search_postselection_violation(config: SearchConfig) -> SearchOutcome:
    """Seeded random-restart greedy search for a post-selection CHSH violation.

    Candidates are ternary models with grid-rational masses; the score is
    the post-selected max |S| subject to every context's coincidence rate
    meeting the configured minimum.  Ties prefer lower total coincidence,
    then the smaller canonical serialization, so the outcome is a pure
    function of the config.  The returned model's raw coin-reduced quad
    is re-verified to satisfy CHSH exactly; if the budget never produces
    a violation the best model is still returned, flagged accordingly.
    """
    config.validate()
    rng = random.Random(config.seed)
    best_key = None
    best: Optional[ContextualModel] = None
    best_ps: Optional[PostSelectionReport] = None
    history: list[tuple[int, Fraction]] = []

    current: Optional[ContextualModel] = None
    current_key = None
    stall = 0
    evaluations = 0
    while evaluations < config.budget:
        if current is None or stall >= config.stall_limit:
            candidate = _random_search_model(rng, config)
            restarting = True
        else:
            candidate = _mutate(rng, current, config)
            restarting = False
        feasible, key, ps = _score(candidate, config)
        evaluations += 1
        if restarting or current_key is None or _better(key, current_key):
            current, current_key = candidate, key
            stall = 0
        else:
            stall += 1
        if feasible and (best_key is None or _better(key, best_key)):
            best, best_key, best_ps = candidate, key, ps
            history.append((evaluations, key[0]))
            if config.target_stat is not None and key[0] >= config.target_stat:
                break

    if best is None or best_ps is None:
        raise RuntimeError(
            "no candidate met the coincidence-rate constraint within the budget; "
            "lower min_coincidence or raise the budget"
        )

    raw_model = zero_to_coin(best)
    raw_quad = correlation_quad(raw_model)
    raw_chsh = chsh_values(raw_quad)
    if not raw_chsh.satisfied:
        raise RuntimeError(
            "search returned a model whose raw quad violates CHSH; "
            "this cannot happen for a well-formed model and indicates a bug"
        )
    score = best_key[0]
    return SearchOutcome(
        model=best,
        report=best_ps,
        score=score,
        violating=score > 2,
        evaluations=evaluations,
        history=history,
        raw_quad=raw_quad,
        raw_chsh=raw_chsh,
        detection=detection_rates(best),
    )
