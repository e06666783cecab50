"""Constructions that rewrite a contextual model as an ordinary product-space model.

Three routes, all preserving the four context expectations exactly:

* :func:`product_flatten` - one tuple space carrying every hidden variable
  at once, with a single setting-independent pmf;
* :func:`uniform_reduce` - replaces each side's two instrument
  distributions by one shared discrete uniform-like variable via
  inverse-CDF cells;
* :func:`bell_average` - integrates the instrument variables out,
  leaving per-source-label conditional expectations.

Equality of expectations is exact rational equality, checkable with ==.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import (
    Context,
    ContextualModel,
    CorrelationQuad,
    Label,
    OutcomeTable,
    Pmf,
)


@dataclass(frozen=True)
class FlatSetting:
    """One setting of a flat model: which tuple coordinates it reads, and its table.

    ``coords`` gives the positions (i, j) in the hidden tuple; the
    outcome table is keyed by (tuple[i], tuple[j]).
    """

    name: str
    coords: tuple[int, int]
    outcomes: OutcomeTable

    def evaluate(self, lam: tuple) -> Fraction:
        i, j = self.coords
        return self.outcomes.value(lam[i], lam[j])


@dataclass(frozen=True)
class FlatModel:
    """A single product-space hidden-variable model.

    One pmf over tuples serves all four contexts; each setting's outcome
    function just projects out its own coordinates.  The pmf being a
    single shared object is the structural form of setting independence.
    """

    lambda_pmf: Pmf
    alice: tuple[FlatSetting, FlatSetting]
    bob: tuple[FlatSetting, FlatSetting]

    def alice_setting(self, name: str) -> FlatSetting:
        for s in self.alice:
            if s.name == name:
                return s
        raise KeyError(f"unknown Alice setting {name!r}")

    def bob_setting(self, name: str) -> FlatSetting:
        for s in self.bob:
            if s.name == name:
                return s
        raise KeyError(f"unknown Bob setting {name!r}")

    def contexts(self) -> tuple[Context, ...]:
        return tuple((a.name, b.name) for a in self.alice for b in self.bob)

    def expectation(self, context: Context) -> Fraction:
        a = self.alice_setting(context[0])
        b = self.bob_setting(context[1])
        total = Fraction(0)
        for lam, mass in self.lambda_pmf.support():
            total += a.evaluate(lam) * b.evaluate(lam) * mass
        return total

    def quad(self) -> CorrelationQuad:
        return CorrelationQuad(
            (self.alice[0].name, self.alice[1].name),
            (self.bob[0].name, self.bob[1].name),
            {ctx: self.expectation(ctx) for ctx in self.contexts()},
        )


@dataclass(frozen=True)
class AveragedModel:
    """A model with the instrument variables integrated out.

    ``alice_bar[name]`` maps each first source coordinate to the
    expectation of Alice's outcome given that coordinate, and likewise
    for Bob; both are bounded by 1 in absolute value pointwise.
    """

    source: Pmf
    alice_settings: tuple[str, str]
    bob_settings: tuple[str, str]
    alice_bar: Mapping[str, Mapping[Label, Fraction]]
    bob_bar: Mapping[str, Mapping[Label, Fraction]]

    def contexts(self) -> tuple[Context, ...]:
        return tuple((a, b) for a in self.alice_settings for b in self.bob_settings)

    def expectation(self, context: Context) -> Fraction:
        abar = self.alice_bar[context[0]]
        bbar = self.bob_bar[context[1]]
        total = Fraction(0)
        for (l1, l2), mass in self.source.support():
            total += abar[l1] * bbar[l2] * mass
        return total

    def quad(self) -> CorrelationQuad:
        return CorrelationQuad(
            self.alice_settings,
            self.bob_settings,
            {ctx: self.expectation(ctx) for ctx in self.contexts()},
        )


def product_flatten(model: ContextualModel) -> FlatModel:
    """Rebuild a contextual model on the product of all its hidden-variable spaces.

    The tuple is (l1, l2, la, la', lb, lb') with the product pmf; each
    setting reads its own source coordinate and its own instrument
    coordinate.  All four context expectations equal the original's
    exactly.
    """
    ax, ax2 = model.alice
    by, by2 = model.bob
    atoms = []
    for pair, p_src in model.source.support():
        for la, pa in ax.instrument.support():
            for la2, pa2 in ax2.instrument.support():
                for lb, pb in by.instrument.support():
                    for lb2, pb2 in by2.instrument.support():
                        lam = (pair[0], pair[1], la, la2, lb, lb2)
                        atoms.append((lam, p_src * pa * pa2 * pb * pb2))
    lambda_pmf = Pmf(atoms)
    alice = (
        FlatSetting(ax.name, (0, 2), ax.outcomes),
        FlatSetting(ax2.name, (0, 3), ax2.outcomes),
    )
    bob = (
        FlatSetting(by.name, (1, 4), by.outcomes),
        FlatSetting(by2.name, (1, 5), by2.outcomes),
    )
    return FlatModel(lambda_pmf, alice, bob)


def refine_breakpoints(first: Pmf, second: Pmf) -> list[tuple[Fraction, Fraction]]:
    """Common inverse-CDF cells for two pmfs over the unit interval.

    Returns the half-open cells [lo, hi) cut by the union of both pmfs'
    cumulative breakpoints.  Cell lengths are exact and sum to 1; every
    cell lies inside exactly one atom interval of each pmf.
    """
    points = {Fraction(0), Fraction(1)}
    for pmf in (first, second):
        cum = Fraction(0)
        for _lab, mass in pmf.support():
            cum += mass
            points.add(cum)
    grid = sorted(points)
    return [(grid[i], grid[i + 1]) for i in range(len(grid) - 1)]


def _cell_atom_map(pmf: Pmf, cells: Sequence[tuple[Fraction, Fraction]]) -> dict[tuple, Label]:
    """Assign each cell to the pmf atom whose cumulative interval contains it."""
    spans = []
    cum = Fraction(0)
    for lab, mass in pmf.support():
        spans.append((cum, cum + mass, lab))
        cum += mass
    mapping: dict[tuple, Label] = {}
    for lo, hi in cells:
        for s_lo, s_hi, lab in spans:
            if s_lo <= lo < s_hi:
                if hi > s_hi:
                    raise AssertionError("cell crosses an atom boundary; refinement is broken")
                mapping[(lo, hi)] = lab
                break
        else:
            raise AssertionError(f"cell [{lo}, {hi}) not covered by pmf")
    return mapping


def _cell_label(cell: tuple[Fraction, Fraction]) -> str:
    return f"[{cell[0]},{cell[1]})"


def uniform_reduce(model: ContextualModel) -> FlatModel:
    """Flatten with one shared quantile variable per side instead of two instrument spaces.

    Each side's two instrument pmfs are realized as functions of a single
    variable u ranging over the common refinement of their cumulative
    breakpoints; the per-setting outcome tables compose with the
    inverse-CDF cell map.  The tuple is (l1, l2, u1-cell, u2-cell) and
    context expectations match the original model exactly.
    """
    ax, ax2 = model.alice
    by, by2 = model.bob
    cells_a = refine_breakpoints(ax.instrument, ax2.instrument)
    cells_b = refine_breakpoints(by.instrument, by2.instrument)
    map_ax = _cell_atom_map(ax.instrument, cells_a)
    map_ax2 = _cell_atom_map(ax2.instrument, cells_a)
    map_by = _cell_atom_map(by.instrument, cells_b)
    map_by2 = _cell_atom_map(by2.instrument, cells_b)

    atoms = []
    for pair, p_src in model.source.support():
        for cell_a in cells_a:
            len_a = cell_a[1] - cell_a[0]
            for cell_b in cells_b:
                len_b = cell_b[1] - cell_b[0]
                lam = (pair[0], pair[1], _cell_label(cell_a), _cell_label(cell_b))
                atoms.append((lam, p_src * len_a * len_b))
    lambda_pmf = Pmf(atoms)

    def composed(setting, cell_map, cells, source_labels) -> OutcomeTable:
        entries = {}
        for l_src in source_labels:
            for cell in cells:
                entries[(l_src, _cell_label(cell))] = setting.outcomes.value(
                    l_src, cell_map[cell]
                )
        return OutcomeTable(entries, ternary=setting.outcomes.ternary)

    first = model.source_first_labels()
    second = model.source_second_labels()
    alice = (
        FlatSetting(ax.name, (0, 2), composed(ax, map_ax, cells_a, first)),
        FlatSetting(ax2.name, (0, 2), composed(ax2, map_ax2, cells_a, first)),
    )
    bob = (
        FlatSetting(by.name, (1, 3), composed(by, map_by, cells_b, second)),
        FlatSetting(by2.name, (1, 3), composed(by2, map_by2, cells_b, second)),
    )
    return FlatModel(lambda_pmf, alice, bob)


def bell_average(model: ContextualModel) -> AveragedModel:
    """Integrate out the instrument variables, per setting and source coordinate.

    The averaged outcome for Alice's setting a at source label l1 is
    sum over la of A_a(l1, la) p_a(la); likewise for Bob.  The averaged
    model's expectations equal the original's for every context, and
    every averaged value is bounded by 1 in absolute value.  Fractional
    outcome tables are welcome (averaging is linear), so the output
    drops any ternary flag.
    """

    def bars(settings, coord) -> dict[str, dict[Label, Fraction]]:
        labels = (
            model.source_first_labels() if coord == 0 else model.source_second_labels()
        )
        out: dict[str, dict[Label, Fraction]] = {}
        for setting in settings:
            bar = {}
            for lab in labels:
                bar[lab] = sum(
                    (setting.outcomes.value(lab, li) * p for li, p in setting.instrument.support()),
                    Fraction(0),
                )
            out[setting.name] = bar
        return out

    return AveragedModel(
        source=model.source,
        alice_settings=(model.alice[0].name, model.alice[1].name),
        bob_settings=(model.bob[0].name, model.bob[1].name),
        alice_bar=bars(model.alice, 0),
        bob_bar=bars(model.bob, 1),
    )
