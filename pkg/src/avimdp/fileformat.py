"""JSON instance format.

::

    {"n_states": 3, "recurrent_state": 3,
     "states": [{"actions": [{"cost": 1.0, "row": [[1, 0.5], [3, 0.5]]}]}, ...]}

State indices (``recurrent_state`` and row targets) are 1-based. Unknown
keys are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import MdpParseError, MdpValidationError
from .model import Action, MdpModel, validate_mdp

_TOP_KEYS = {"n_states", "recurrent_state", "states"}
_STATE_KEYS = {"actions"}
_ACTION_KEYS = {"cost", "row"}


def _expect_keys(obj, allowed, required, locus):
    if not isinstance(obj, dict):
        raise MdpParseError("expected an object", locus)
    unknown = set(obj) - allowed
    if unknown:
        raise MdpParseError(f"unknown field(s) {sorted(unknown)}", locus)
    missing = required - set(obj)
    if missing:
        raise MdpParseError(f"missing field(s) {sorted(missing)}", locus)


def _int(value, locus):
    if isinstance(value, bool) or not isinstance(value, int):
        raise MdpParseError(f"expected an integer, got {value!r}", locus)
    return value


def _real(value, locus):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MdpParseError(f"expected a number, got {value!r}", locus)
    return float(value)


def parse_mdp(document: str, validate: bool = True) -> MdpModel:
    """Parse an instance document; raise on malformed input or invalid model."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MdpParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc
    _expect_keys(doc, _TOP_KEYS, _TOP_KEYS, "<root>")
    n = _int(doc["n_states"], "n_states")
    if n < 1:
        raise MdpParseError("must be positive", "n_states")
    rec = _int(doc["recurrent_state"], "recurrent_state")
    if not 1 <= rec <= n:
        raise MdpParseError(f"must be in 1..{n}", "recurrent_state")
    states = doc["states"]
    if not isinstance(states, list):
        raise MdpParseError("expected a list", "states")
    if len(states) != n:
        raise MdpParseError(f"expected {n} states, got {len(states)}", "states")

    actions = []
    for i, st in enumerate(states):
        loc = f"states[{i}]"
        _expect_keys(st, _STATE_KEYS, _STATE_KEYS, loc)
        if not isinstance(st["actions"], list):
            raise MdpParseError("expected a list", f"{loc}.actions")
        acts = []
        for a, act in enumerate(st["actions"]):
            aloc = f"{loc}.actions[{a}]"
            _expect_keys(act, _ACTION_KEYS, _ACTION_KEYS, aloc)
            cost = _real(act["cost"], f"{aloc}.cost")
            row = act["row"]
            if not isinstance(row, list):
                raise MdpParseError("expected a list", f"{aloc}.row")
            entries = []
            for e, pair in enumerate(row):
                eloc = f"{aloc}.row[{e}]"
                if not isinstance(pair, list) or len(pair) != 2:
                    raise MdpParseError("expected [target, probability]", eloc)
                j = _int(pair[0], eloc)
                if not 1 <= j <= n:
                    raise MdpParseError(f"target {j} outside 1..{n}", eloc)
                entries.append((j - 1, _real(pair[1], eloc)))
            acts.append(Action(cost, tuple(entries)))
        actions.append(tuple(acts))

    model = MdpModel(n, tuple(actions), rec - 1)
    if validate:
        report = validate_mdp(model)
        if not report.ok:
            raise MdpValidationError(report)
    return model


def serialize_mdp(m: MdpModel, indent: int | None = None) -> str:
    for acts in m.actions:
        for act in acts:
            if not math.isfinite(act.cost):
                raise ValueError("cannot serialize a non-finite cost")
    doc = {
        "n_states": m.n_states,
        "recurrent_state": m.recurrent_state + 1,
        "states": [
            {
                "actions": [
                    {"cost": act.cost, "row": [[j + 1, p] for j, p in act.row]}
                    for act in acts
                ]
            }
            for acts in m.actions
        ],
    }
    return json.dumps(doc, indent=indent)


def load_mdp(path) -> MdpModel:
    return parse_mdp(Path(path).read_text())


def save_mdp(m: MdpModel, path) -> None:
    Path(path).write_text(serialize_mdp(m) + "\n")
