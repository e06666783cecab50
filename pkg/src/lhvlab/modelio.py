"""Reading and writing the structured text format for models and behaviors.

Files are JSON documents with a ``kind`` discriminator ("contextual",
"flat", "averaged", "behavior").  Probabilities and outcomes are written
as exact fraction strings ("1/6"); decimal strings ("0.25") are accepted
and converted exactly.  In canonical form every hidden-variable label is
a plain string, and parse(serialize(x)) == x.  Schemas live under
schemas/ in the repository root.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from .flatten import AveragedModel, FlatModel, FlatSetting
from .model import BehaviorTable, ContextualModel, OutcomeTable, Pmf, Setting

Document = Union[ContextualModel, FlatModel, AveragedModel, BehaviorTable]

KINDS = ("contextual", "flat", "averaged", "behavior")


class ModelParseError(ValueError):
    """A model file failed to parse; the message names file and token."""


def _label_str(label) -> str:
    if isinstance(label, str):
        return label
    if isinstance(label, tuple):
        return "(" + ",".join(_label_str(p) for p in label) + ")"
    return str(label)


def _frac_str(value: Fraction) -> str:
    return str(value)


def _parse_frac(token: Any, where: str, source: str) -> Fraction:
    if isinstance(token, str):
        try:
            return Fraction(token)
        except (ValueError, ZeroDivisionError):
            pass
    elif isinstance(token, int):
        return Fraction(token)
    raise ModelParseError(f"{source}: malformed fraction {token!r} at {where}")


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str, source: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ModelParseError(f"{source}: unknown key {sorted(unknown)[0]!r} in {where}")
    missing = required - set(obj)
    if missing:
        raise ModelParseError(f"{source}: missing key {sorted(missing)[0]!r} in {where}")


def _check_pmf_sum(pmf: Pmf, where: str, source: str) -> None:
    total = pmf.total()
    if any(m < 0 for _l, m in pmf.items()):
        raise ModelParseError(f"{source}: negative mass in {where}")
    if total != 1:
        raise ModelParseError(
            f"{source}: {where} sums to {total} (deficit {1 - total}), not 1"
        )


# ---------------------------------------------------------------- serialize

def serialize(obj: Document) -> str:
    """Canonical text form of a model or behavior (JSON, fraction strings)."""
    if isinstance(obj, ContextualModel):
        doc = _contextual_doc(obj)
    elif isinstance(obj, FlatModel):
        doc = _flat_doc(obj)
    elif isinstance(obj, AveragedModel):
        doc = _averaged_doc(obj)
    elif isinstance(obj, BehaviorTable):
        doc = _behavior_doc(obj)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return json.dumps(doc, indent=2) + "\n"


def _source_doc(source: Pmf) -> list:
    return [
        {"pair": [_label_str(pair[0]), _label_str(pair[1])], "mass": _frac_str(m)}
        for pair, m in source.items()
    ]


def _contextual_doc(model: ContextualModel) -> dict:
    def setting_doc(setting: Setting, source_labels) -> dict:
        instrument_labels = setting.instrument.labels()
        rows = [
            [_frac_str(setting.outcomes.value(sl, il)) for il in instrument_labels]
            for sl in source_labels
        ]
        return {
            "setting": setting.name,
            "instrument": [
                {"label": _label_str(lab), "mass": _frac_str(m)}
                for lab, m in setting.instrument.items()
            ],
            "ternary": setting.outcomes.ternary,
            "outcomes": rows,
        }

    first = model.source_first_labels()
    second = model.source_second_labels()
    return {
        "kind": "contextual",
        "source": _source_doc(model.source),
        "alice": [setting_doc(s, first) for s in model.alice],
        "bob": [setting_doc(s, second) for s in model.bob],
    }


def _flat_doc(model: FlatModel) -> dict:
    def setting_doc(s: FlatSetting) -> dict:
        return {
            "setting": s.name,
            "coords": list(s.coords),
            "ternary": s.outcomes.ternary,
            "entries": [
                {"key": [_label_str(k[0]), _label_str(k[1])], "value": _frac_str(v)}
                for k, v in s.outcomes.entries.items()
            ],
        }

    return {
        "kind": "flat",
        "atoms": [
            {"tuple": [_label_str(c) for c in lam], "mass": _frac_str(m)}
            for lam, m in model.lambda_pmf.items()
        ],
        "alice": [setting_doc(s) for s in model.alice],
        "bob": [setting_doc(s) for s in model.bob],
    }


def _averaged_doc(model: AveragedModel) -> dict:
    def side_doc(names, bars) -> list:
        return [
            {
                "setting": name,
                "bar": [
                    {"label": _label_str(lab), "value": _frac_str(v)}
                    for lab, v in bars[name].items()
                ],
            }
            for name in names
        ]

    return {
        "kind": "averaged",
        "source": _source_doc(model.source),
        "alice": side_doc(model.alice_settings, model.alice_bar),
        "bob": side_doc(model.bob_settings, model.bob_bar),
    }


def _behavior_doc(behavior: BehaviorTable) -> dict:
    contexts = []
    for (a, b) in behavior.contexts():
        cells = [
            {"x": x, "y": y, "p": _frac_str(p)}
            for (x, y), p in behavior.context_pmf((a, b)).items()
        ]
        contexts.append({"alice": a, "bob": b, "cells": cells})
    return {
        "kind": "behavior",
        "aliceSettings": list(behavior.alice_settings),
        "bobSettings": list(behavior.bob_settings),
        "outcomes": list(behavior.outcomes),
        "contexts": contexts,
    }


# ------------------------------------------------------------------- parse

def parse_text(text: str, source: str = "<string>") -> Document:
    """Parse model/behavior text; errors name the file, line, and token."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(
            f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ModelParseError(f"{source}: top level must be an object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ModelParseError(f"{source}: unknown kind {kind!r}; expected one of {KINDS}")
    if kind == "contextual":
        return _parse_contextual(doc, source)
    if kind == "flat":
        return _parse_flat(doc, source)
    if kind == "averaged":
        return _parse_averaged(doc, source)
    return _parse_behavior(doc, source)


def parse_path(path: Union[str, Path]) -> Document:
    path = Path(path)
    return parse_text(path.read_text(), source=str(path))


def _parse_source(doc: dict, source: str) -> Pmf:
    atoms = []
    for i, atom in enumerate(doc["source"]):
        _require_keys(atom, {"pair", "mass"}, {"pair", "mass"}, f"source atom {i}", source)
        pair = atom["pair"]
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ModelParseError(f"{source}: source atom {i} pair must have two labels")
        atoms.append(((str(pair[0]), str(pair[1])), _parse_frac(atom["mass"], f"source atom {i}", source)))
    pmf = Pmf(atoms)
    _check_pmf_sum(pmf, "source pmf", source)
    return pmf


def _parse_instrument(entries: list, where: str, source: str) -> Pmf:
    pmf = Pmf(
        [
            (str(e["label"]), _parse_frac(e["mass"], f"{where} atom {i}", source))
            for i, e in enumerate(entries)
        ]
    )
    _check_pmf_sum(pmf, where, source)
    return pmf


def _parse_contextual(doc: dict, source: str) -> ContextualModel:
    _require_keys(doc, {"kind", "source", "alice", "bob"}, {"source", "alice", "bob"}, "model", source)
    src = _parse_source(doc, source)
    first: list[str] = []
    second: list[str] = []
    for pair in src.labels():
        if pair[0] not in first:
            first.append(pair[0])
        if pair[1] not in second:
            second.append(pair[1])

    def parse_setting(sdoc: dict, side: str, labels: list[str]) -> Setting:
        where = f"{side} setting"
        _require_keys(
            sdoc,
            {"setting", "instrument", "ternary", "outcomes"},
            {"setting", "instrument", "outcomes"},
            where,
            source,
        )
        name = str(sdoc["setting"])
        where = f"{side} setting {name!r}"
        instrument = _parse_instrument(sdoc["instrument"], f"{where} instrument pmf", source)
        rows = sdoc["outcomes"]
        inst_labels = instrument.labels()
        if len(rows) != len(labels):
            raise ModelParseError(
                f"{source}: {where} outcome table has {len(rows)} rows, needs {len(labels)}"
            )
        entries = {}
        for sl, row in zip(labels, rows):
            if len(row) != len(inst_labels):
                raise ModelParseError(
                    f"{source}: {where} outcome row for {sl!r} has {len(row)} entries, "
                    f"needs {len(inst_labels)}"
                )
            for il, token in zip(inst_labels, row):
                entries[(sl, il)] = _parse_frac(token, f"{where} outcome ({sl!r}, {il!r})", source)
        return Setting(name, instrument, OutcomeTable(entries, ternary=bool(sdoc.get("ternary", False))))

    def parse_side(side: str, labels: list[str]):
        docs = doc[side]
        if len(docs) != 2:
            raise ModelParseError(f"{source}: {side} needs exactly 2 settings, has {len(docs)}")
        return tuple(parse_setting(d, side, labels) for d in docs)

    return ContextualModel(src, parse_side("alice", first), parse_side("bob", second))


def _parse_flat_setting(sdoc: dict, side: str, source: str) -> FlatSetting:
    _require_keys(
        sdoc,
        {"setting", "coords", "ternary", "entries"},
        {"setting", "coords", "entries"},
        f"{side} flat setting",
        source,
    )
    name = str(sdoc["setting"])
    coords = sdoc["coords"]
    if not (isinstance(coords, list) and len(coords) == 2):
        raise ModelParseError(f"{source}: flat setting {name!r} coords must be two indices")
    entries = {}
    for i, e in enumerate(sdoc["entries"]):
        _require_keys(e, {"key", "value"}, {"key", "value"}, f"{name!r} entry {i}", source)
        key = e["key"]
        if not (isinstance(key, list) and len(key) == 2):
            raise ModelParseError(f"{source}: flat setting {name!r} entry {i} key must have 2 parts")
        entries[(str(key[0]), str(key[1]))] = _parse_frac(e["value"], f"{name!r} entry {i}", source)
    return FlatSetting(
        name,
        (int(coords[0]), int(coords[1])),
        OutcomeTable(entries, ternary=bool(sdoc.get("ternary", False))),
    )


def _parse_flat(doc: dict, source: str) -> FlatModel:
    _require_keys(doc, {"kind", "atoms", "alice", "bob"}, {"atoms", "alice", "bob"}, "flat model", source)
    atoms = []
    for i, atom in enumerate(doc["atoms"]):
        _require_keys(atom, {"tuple", "mass"}, {"tuple", "mass"}, f"atom {i}", source)
        atoms.append(
            (tuple(str(c) for c in atom["tuple"]), _parse_frac(atom["mass"], f"atom {i}", source))
        )
    pmf = Pmf(atoms)
    _check_pmf_sum(pmf, "tuple pmf", source)
    alice = tuple(_parse_flat_setting(d, "alice", source) for d in doc["alice"])
    bob = tuple(_parse_flat_setting(d, "bob", source) for d in doc["bob"])
    if len(alice) != 2 or len(bob) != 2:
        raise ModelParseError(f"{source}: flat model needs 2 settings per side")
    return FlatModel(pmf, alice, bob)


def _parse_averaged(doc: dict, source: str) -> AveragedModel:
    _require_keys(doc, {"kind", "source", "alice", "bob"}, {"source", "alice", "bob"}, "averaged model", source)
    src = _parse_source(doc, source)

    def parse_side(side: str):
        names = []
        bars = {}
        for sdoc in doc[side]:
            _require_keys(sdoc, {"setting", "bar"}, {"setting", "bar"}, f"{side} setting", source)
            name = str(sdoc["setting"])
            names.append(name)
            bar = {}
            for i, e in enumerate(sdoc["bar"]):
                _require_keys(e, {"label", "value"}, {"label", "value"}, f"{name!r} bar {i}", source)
                bar[str(e["label"])] = _parse_frac(e["value"], f"{name!r} bar {i}", source)
            bars[name] = bar
        if len(names) != 2:
            raise ModelParseError(f"{source}: {side} needs exactly 2 settings")
        return tuple(names), bars

    alice_names, alice_bar = parse_side("alice")
    bob_names, bob_bar = parse_side("bob")
    return AveragedModel(src, alice_names, bob_names, alice_bar, bob_bar)


def _parse_behavior(doc: dict, source: str) -> BehaviorTable:
    _require_keys(
        doc,
        {"kind", "aliceSettings", "bobSettings", "outcomes", "contexts"},
        {"aliceSettings", "bobSettings", "outcomes", "contexts"},
        "behavior",
        source,
    )
    alice = tuple(str(s) for s in doc["aliceSettings"])
    bob = tuple(str(s) for s in doc["bobSettings"])
    if len(alice) != 2 or len(bob) != 2:
        raise ModelParseError(f"{source}: behavior needs 2 settings per side")
    outcomes = tuple(int(o) for o in doc["outcomes"])
    if outcomes not in ((-1, 1), (-1, 0, 1)):
        raise ModelParseError(f"{source}: outcomes must be [-1, 1] or [-1, 0, 1], got {outcomes}")
    probs: dict = {}
    for cdoc in doc["contexts"]:
        _require_keys(cdoc, {"alice", "bob", "cells"}, {"alice", "bob", "cells"}, "context", source)
        ctx = (str(cdoc["alice"]), str(cdoc["bob"]))
        if ctx[0] not in alice or ctx[1] not in bob:
            raise ModelParseError(f"{source}: context {ctx} names unknown settings")
        cells = {}
        for i, cell in enumerate(cdoc["cells"]):
            _require_keys(cell, {"x", "y", "p"}, {"x", "y", "p"}, f"context {ctx} cell {i}", source)
            x, y = int(cell["x"]), int(cell["y"])
            if x not in outcomes or y not in outcomes:
                raise ModelParseError(f"{source}: context {ctx} cell ({x}, {y}) outside alphabet")
            cells[(x, y)] = _parse_frac(cell["p"], f"context {ctx} cell {i}", source)
        total = sum(cells.values(), Fraction(0))
        if any(p < 0 for p in cells.values()):
            raise ModelParseError(f"{source}: context {ctx} has a negative probability")
        if total != 1:
            raise ModelParseError(
                f"{source}: context {ctx} pmf sums to {total} (deficit {1 - total}), not 1"
            )
        probs[ctx] = cells
    expected = {(a, b) for a in alice for b in bob}
    if set(probs) != expected:
        raise ModelParseError(f"{source}: behavior must list all four contexts exactly once")
    return BehaviorTable(alice, bob, outcomes, probs)
