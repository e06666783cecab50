"""Seeded simulation of the causal sampling story behind a contextual model.

Each trial draws a joint setting choice and a hidden-variable bundle
from separate random streams, then evaluates deterministic outcome
functions.  Four domain-separated counter-based streams (settings,
source, Alice's instrument, Bob's instrument) make the independence of
settings and hidden variables structural rather than aspirational: the
streams are distinct Philox keys derived from one user seed.

Floats live here by design; exact expectations stay in the model
modules and are carried along for comparison.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np
from scipy.stats import chi2 as _chi2_dist

from .chsh import zero_to_coin
from .flatten import refine_breakpoints, _cell_atom_map
from .model import (
    Context,
    ContextualModel,
    CorrelationQuad,
    Pmf,
    correlation_quad,
    validate_model,
)

# stream tags for domain separation; sharing the source tag with the
# settings stream is exactly the confounding defect simulate() can inject
TAG_SETTINGS = np.uint64(0)
TAG_SOURCE = np.uint64(1)
TAG_ALICE = np.uint64(2)
TAG_BOB = np.uint64(3)


def _stream(seed: int, tag: np.uint64) -> np.random.Generator:
    key = np.array([np.uint64(seed), tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class TrialRecord:
    """One spreadsheet line: settings chosen and outcomes observed."""

    a: str
    b: str
    x: int
    y: int


class Spreadsheet:
    """Column-wise trial data (settings as indices, outcomes as +/-1)."""

    def __init__(
        self,
        alice_settings: tuple[str, str],
        bob_settings: tuple[str, str],
        a_index: np.ndarray,
        b_index: np.ndarray,
        x: np.ndarray,
        y: np.ndarray,
        hidden: Optional[np.ndarray] = None,
    ):
        self.alice_settings = alice_settings
        self.bob_settings = bob_settings
        self.a_index = a_index
        self.b_index = b_index
        self.x = x
        self.y = y
        self.hidden = hidden

    def __len__(self) -> int:
        return len(self.x)

    def record(self, t: int) -> TrialRecord:
        return TrialRecord(
            self.alice_settings[self.a_index[t]],
            self.bob_settings[self.b_index[t]],
            int(self.x[t]),
            int(self.y[t]),
        )

    def __iter__(self) -> Iterator[TrialRecord]:
        return (self.record(t) for t in range(len(self)))

    def to_records(self) -> list[TrialRecord]:
        return list(self)

    def tobytes(self) -> bytes:
        """Canonical byte image, for exact reproducibility comparisons."""
        return (
            self.a_index.tobytes()
            + self.b_index.tobytes()
            + self.x.tobytes()
            + self.y.tobytes()
        )

    def write_csv(self, fp: IO[str]) -> None:
        writer = csv.writer(fp)
        writer.writerow(["trial", "a", "b", "x", "y"])
        for t in range(len(self)):
            writer.writerow(
                [
                    t,
                    self.alice_settings[self.a_index[t]],
                    self.bob_settings[self.b_index[t]],
                    int(self.x[t]),
                    int(self.y[t]),
                ]
            )


class DagModel:
    """A contextual model compiled for trial-by-trial causal sampling.

    The hidden bundle per trial is (source pair, one quantile uniform and
    one auxiliary uniform per side).  Outcome rule: look up the table
    value e in [-1, +1] selected by the setting, the source coordinate
    and the quantile cell, then return +1 when the auxiliary uniform
    falls below (1 + e) / 2.  For +/-1 table values the auxiliary has no
    effect and the outcome is a deterministic function of the setting
    and the bundle.
    """

    def __init__(self, model: ContextualModel, setting_pmf: Pmf):
        self.model = model
        self.alice_settings = (model.alice[0].name, model.alice[1].name)
        self.bob_settings = (model.bob[0].name, model.bob[1].name)
        self.setting_pmf = setting_pmf
        self.exact_quad: CorrelationQuad = correlation_quad(model)

        self._pairs = [pair for pair, _m in model.source.support()]
        masses = [m for _p, m in model.source.support()]
        self._source_cum = np.cumsum(np.array([float(m) for m in masses]))

        ctx_labels = list(setting_pmf.labels())
        self._ctx_a = np.array(
            [self.alice_settings.index(ctx[0]) for ctx in ctx_labels], dtype=np.int8
        )
        self._ctx_b = np.array(
            [self.bob_settings.index(ctx[1]) for ctx in ctx_labels], dtype=np.int8
        )
        self._setting_cum = np.cumsum(np.array([float(m) for _l, m in setting_pmf.items()]))

        def compile_side(settings, coord):
            cells = refine_breakpoints(settings[0].instrument, settings[1].instrument)
            breaks = np.array([float(hi) for _lo, hi in cells])
            tables = []
            for setting in settings:
                atom_map = _cell_atom_map(setting.instrument, cells)
                thresh = np.empty((len(self._pairs), len(cells)))
                for pi, pair in enumerate(self._pairs):
                    for ci, cell in enumerate(cells):
                        e = setting.outcomes.value(pair[coord], atom_map[cell])
                        thresh[pi, ci] = float((1 + e) / 2)
                tables.append(thresh)
            return breaks, tables

        self._alice_breaks, self._alice_thresh = compile_side(model.alice, 0)
        self._bob_breaks, self._bob_thresh = compile_side(model.bob, 1)

    def contexts(self) -> tuple[Context, ...]:
        return tuple((a, b) for a in self.alice_settings for b in self.bob_settings)

    def _draw_hidden(self, n: int, seed: int):
        u_src = _stream(seed, TAG_SOURCE).random(n)
        pair_idx = np.searchsorted(self._source_cum, u_src, side="right")
        pair_idx = np.minimum(pair_idx, len(self._pairs) - 1)
        ua, va = _stream(seed, TAG_ALICE).random((2, n))
        ub, vb = _stream(seed, TAG_BOB).random((2, n))
        return pair_idx, ua, va, ub, vb

    def _evaluate(self, side: str, s: int, pair_idx, u, v) -> np.ndarray:
        breaks = self._alice_breaks if side == "alice" else self._bob_breaks
        thresh = self._alice_thresh if side == "alice" else self._bob_thresh
        cells = np.searchsorted(breaks, u, side="right")
        cells = np.minimum(cells, len(breaks) - 1)
        th = thresh[s][pair_idx, cells]
        return np.where(v < th, 1, -1).astype(np.int8)


def from_contextual(model: ContextualModel, setting_bias: Optional[Pmf] = None) -> DagModel:
    """Compile a contextual model into a sampleable causal model.

    Ternary tables are first put through the coin reduction; fractional
    tables are realized through the per-side auxiliary uniform.  The
    compiled model's exact quad equals the input model's.  ``setting_bias``
    is a pmf over the four (a, b) contexts and defaults to uniform.
    """
    report = validate_model(model)
    if not report.ok:
        raise ValueError("model is not well-formed: " + "; ".join(report.violations))
    point_ternary = all(
        set(s.outcomes.entries.values()) <= {Fraction(-1), Fraction(0), Fraction(1)}
        for s in model.alice + model.bob
    )
    has_zero = any(s.outcomes.has_zero() for s in model.alice + model.bob)
    if point_ternary and has_zero:
        model = zero_to_coin(model)

    contexts = tuple((a.name, b.name) for a in model.alice for b in model.bob)
    if setting_bias is None:
        setting_bias = Pmf.uniform(list(contexts))
    else:
        if set(setting_bias.labels()) != set(contexts):
            raise ValueError(f"setting bias must cover exactly the contexts {contexts}")
        if not setting_bias.is_normalized():
            raise ValueError("setting bias pmf is not normalized")
    return DagModel(model, setting_bias)


def simulate_spreadsheet(
    dag: DagModel,
    n_trials: int,
    seed: int,
    confound: bool = False,
    keep_hidden: bool = False,
) -> Spreadsheet:
    """Run seeded trials; identical arguments give byte-identical output.

    With ``confound=True`` the settings stream deliberately reuses the
    source stream's key, coupling setting choices to the hidden pair -
    the textbook hidden-confounder defect that
    :func:`independence_diagnostic` exists to expose.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    tag = TAG_SOURCE if confound else TAG_SETTINGS
    u_set = _stream(seed, tag).random(n_trials)
    ctx_idx = np.searchsorted(dag._setting_cum, u_set, side="right")
    ctx_idx = np.minimum(ctx_idx, len(dag._setting_cum) - 1)
    a_idx = dag._ctx_a[ctx_idx]
    b_idx = dag._ctx_b[ctx_idx]
    return _simulate_outcomes(dag, a_idx, b_idx, n_trials, seed, keep_hidden)


def simulate_given_settings(
    dag: DagModel, a_index: np.ndarray, b_index: np.ndarray, seed: int
) -> Spreadsheet:
    """Simulate with externally supplied setting streams.

    The hidden streams depend only on the seed, so editing one side's
    setting array cannot move the other side's outcome column; that
    structural-locality property is checkable bit for bit.
    """
    a_idx = np.asarray(a_index, dtype=np.int8)
    b_idx = np.asarray(b_index, dtype=np.int8)
    if a_idx.shape != b_idx.shape or a_idx.ndim != 1:
        raise ValueError("setting arrays must be 1-d and equally long")
    if len(a_idx) < 1:
        raise ValueError("need at least one trial")
    for arr in (a_idx, b_idx):
        if arr.min() < 0 or arr.max() > 1:
            raise ValueError("setting indices must be 0 or 1")
    return _simulate_outcomes(dag, a_idx, b_idx, len(a_idx), seed, False)


def _simulate_outcomes(dag, a_idx, b_idx, n, seed, keep_hidden) -> Spreadsheet:
    pair_idx, ua, va, ub, vb = dag._draw_hidden(n, seed)
    x = np.empty(n, dtype=np.int8)
    y = np.empty(n, dtype=np.int8)
    for s in (0, 1):
        m = a_idx == s
        if m.any():
            x[m] = dag._evaluate("alice", s, pair_idx[m], ua[m], va[m])
        m = b_idx == s
        if m.any():
            y[m] = dag._evaluate("bob", s, pair_idx[m], ub[m], vb[m])
    return Spreadsheet(
        dag.alice_settings,
        dag.bob_settings,
        a_idx.astype(np.int8),
        b_idx.astype(np.int8),
        x,
        y,
        hidden=pair_idx if keep_hidden else None,
    )


@dataclass
class CorrelationEstimate:
    estimate: float
    stderr: Optional[float]
    count: int


def estimate_correlations(
    data: Union[Spreadsheet, Iterable[TrialRecord]],
) -> dict[Context, CorrelationEstimate]:
    """Per-context product means with standard errors.

    Contexts that never occurred are simply absent from the result; no
    value is invented for them.  The standard error is the sample
    standard deviation of the products over sqrt(count) (None when a
    single trial gives no spread estimate).
    """
    if not isinstance(data, Spreadsheet):
        records = list(data)
        if not records:
            return {}
        a_names = sorted({r.a for r in records})
        b_names = sorted({r.b for r in records})
        a_names = tuple(a_names + [""] * (2 - len(a_names)))[:2]
        b_names = tuple(b_names + [""] * (2 - len(b_names)))[:2]
        data = Spreadsheet(
            a_names,
            b_names,
            np.array([a_names.index(r.a) for r in records], dtype=np.int8),
            np.array([b_names.index(r.b) for r in records], dtype=np.int8),
            np.array([r.x for r in records], dtype=np.int8),
            np.array([r.y for r in records], dtype=np.int8),
        )
    out: dict[Context, CorrelationEstimate] = {}
    prod = (data.x.astype(np.float64)) * (data.y.astype(np.float64))
    for i, a in enumerate(data.alice_settings):
        for j, b in enumerate(data.bob_settings):
            if not a or not b:
                continue
            sel = (data.a_index == i) & (data.b_index == j)
            count = int(sel.sum())
            if count == 0:
                continue
            vals = prod[sel]
            est = float(vals.mean())
            stderr = float(vals.std(ddof=1) / np.sqrt(count)) if count > 1 else None
            out[(a, b)] = CorrelationEstimate(est, stderr, count)
    return out


class CouplingSamples:
    """Draws of all four settings' outcomes evaluated on a shared hidden bundle."""

    def __init__(self, x1, x2, y1, y2):
        self.x1, self.x2, self.y1, self.y2 = x1, x2, y1, y2

    def __len__(self) -> int:
        return len(self.x1)

    def combination(self) -> np.ndarray:
        """Per-sample value of X1 Y1 - X2 Y1 - X1 Y2 - X2 Y2 (always +/-2)."""
        x1 = self.x1.astype(np.int16)
        x2 = self.x2.astype(np.int16)
        y1 = self.y1.astype(np.int16)
        y2 = self.y2.astype(np.int16)
        return x1 * y1 - x2 * y1 - x1 * y2 - x2 * y2

    def counts(self) -> dict[tuple[int, int, int, int], int]:
        stacked = np.stack([self.x1, self.x2, self.y1, self.y2], axis=1)
        patterns, counts = np.unique(stacked, axis=0, return_counts=True)
        return {tuple(int(v) for v in row): int(c) for row, c in zip(patterns, counts)}

    def pair_mean(self, a_pos: int, b_pos: int) -> float:
        xa = (self.x1, self.x2)[a_pos].astype(np.float64)
        yb = (self.y1, self.y2)[b_pos].astype(np.float64)
        return float((xa * yb).mean())


def sample_coupling(dag: DagModel, n_trials: int, seed: int) -> CouplingSamples:
    """Evaluate every setting's outcome on each hidden draw.

    Uses the same hidden streams as :func:`simulate_spreadsheet` under
    the same seed; no settings stream is consumed because nothing is
    chosen - all four functions are applied to one bundle.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    pair_idx, ua, va, ub, vb = dag._draw_hidden(n_trials, seed)
    x1 = dag._evaluate("alice", 0, pair_idx, ua, va)
    x2 = dag._evaluate("alice", 1, pair_idx, ua, va)
    y1 = dag._evaluate("bob", 0, pair_idx, ub, vb)
    y2 = dag._evaluate("bob", 1, pair_idx, ub, vb)
    return CouplingSamples(x1, x2, y1, y2)


def _chi2_stat(table: np.ndarray) -> tuple[float, int]:
    """Pearson chi-squared with degenerate rows/columns dropped."""
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    r, c = table.shape
    dof = (r - 1) * (c - 1)
    if dof <= 0:
        return 0.0, 0
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    stat = float(((table - expected) ** 2 / expected).sum())
    return stat, dof


@dataclass
class IndependenceReport:
    """Association summary between the settings stream and outcome features.

    ``cross`` tests each side's outcome against the other side's setting
    (within own-setting strata); ``lagged`` tests the current context
    against the previous trial's outcome pair.  Both should look like
    noise for a properly stream-separated simulation.  ``hidden`` is the
    direct context-vs-hidden-trace test, present only when a trace was
    logged.
    """

    empty: bool
    statistic: float = 0.0
    dof: int = 0
    p_value: float = 1.0
    cross_statistic: float = 0.0
    cross_dof: int = 0
    cross_p: float = 1.0
    lagged_statistic: float = 0.0
    lagged_dof: int = 0
    lagged_p: float = 1.0
    hidden_statistic: Optional[float] = None
    hidden_dof: Optional[int] = None
    hidden_p: Optional[float] = None


def independence_diagnostic(
    data: Union[Spreadsheet, Iterable[TrialRecord]],
    hidden_trace: Optional[np.ndarray] = None,
) -> IndependenceReport:
    """Chi-squared screen for setting/hidden-variable dependence.

    A clean run (independent streams) produces a statistic consistent
    with its degrees of freedom; a run whose settings share randomness
    with the hidden variables shows a statistic growing linearly with
    the trial count.
    """
    if not isinstance(data, Spreadsheet):
        records = list(data)
        if not records:
            return IndependenceReport(empty=True)
        est_input = records
        a_names = tuple(sorted({r.a for r in records}))
        b_names = tuple(sorted({r.b for r in records}))
        data = Spreadsheet(
            a_names,
            b_names,
            np.array([a_names.index(r.a) for r in records], dtype=np.int8),
            np.array([b_names.index(r.b) for r in records], dtype=np.int8),
            np.array([r.x for r in records], dtype=np.int8),
            np.array([r.y for r in records], dtype=np.int8),
        )
    if len(data) == 0:
        return IndependenceReport(empty=True)
    if hidden_trace is None:
        hidden_trace = data.hidden

    xi = ((data.x + 1) // 2).astype(np.intp)  # -1/+1 -> 0/1
    yi = ((data.y + 1) // 2).astype(np.intp)
    cross_stat, cross_dof = 0.0, 0
    for s in (0, 1):
        m = data.a_index == s
        if m.any():
            table = np.zeros((2, 2))
            np.add.at(table, (xi[m], data.b_index[m].astype(np.intp)), 1)
            st, df = _chi2_stat(table)
            cross_stat += st
            cross_dof += df
        m = data.b_index == s
        if m.any():
            table = np.zeros((2, 2))
            np.add.at(table, (yi[m], data.a_index[m].astype(np.intp)), 1)
            st, df = _chi2_stat(table)
            cross_stat += st
            cross_dof += df

    ctx = (data.a_index.astype(np.intp) * 2 + data.b_index).astype(np.intp)
    lag_stat, lag_dof = 0.0, 0
    if len(data) >= 2:
        prev_outcome = (xi[:-1] * 2 + yi[:-1]).astype(np.intp)
        table = np.zeros((4, 4))
        np.add.at(table, (ctx[1:], prev_outcome), 1)
        lag_stat, lag_dof = _chi2_stat(table)

    stat = cross_stat + lag_stat
    dof = cross_dof + lag_dof
    report = IndependenceReport(
        empty=False,
        statistic=stat,
        dof=dof,
        p_value=float(_chi2_dist.sf(stat, dof)) if dof > 0 else 1.0,
        cross_statistic=cross_stat,
        cross_dof=cross_dof,
        cross_p=float(_chi2_dist.sf(cross_stat, cross_dof)) if cross_dof > 0 else 1.0,
        lagged_statistic=lag_stat,
        lagged_dof=lag_dof,
        lagged_p=float(_chi2_dist.sf(lag_stat, lag_dof)) if lag_dof > 0 else 1.0,
    )
    if hidden_trace is not None:
        trace = np.asarray(hidden_trace).astype(np.intp)
        values = np.unique(trace)
        remap = np.searchsorted(values, trace)
        table = np.zeros((4, len(values)))
        np.add.at(table, (ctx, remap), 1)
        h_stat, h_dof = _chi2_stat(table)
        report.hidden_statistic = h_stat
        report.hidden_dof = h_dof
        report.hidden_p = float(_chi2_dist.sf(h_stat, h_dof)) if h_dof > 0 else 1.0
    return report
