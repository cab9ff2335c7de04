"""JSON round-tripping of structures, mixtures and results.

Probabilities may be written as numbers or as rational strings such as
``"1/7"``; rationals are read back as :class:`fractions.Fraction`.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .core import CondIndepStructure, InformationStructure
from .errors import ValidationError
from .loss import MixedAdversary


def number_to_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return float(v)


def number_from_json(v, where="value"):
    if isinstance(v, bool):
        raise ValidationError("schema: expected a number", detail=where)
    if isinstance(v, (int, float)):
        return Fraction(v) if isinstance(v, int) else v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            pass
    raise ValidationError("schema: expected a number or rational string", detail=f"{where} = {v!r}")


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"schema: missing field {key!r}", detail=where)
    return obj[key]


def structure_to_json(s) -> dict:
    if isinstance(s, MixedAdversary):
        return {
            "atoms": [{"weight": number_to_json(w), "structure": structure_to_json(a)} for w, a in s.atoms]
        }
    if isinstance(s, CondIndepStructure):
        return {
            "prior": number_to_json(s.prior),
            "experts": [
                {"p_given_0": [number_to_json(p) for p in d0], "p_given_1": [number_to_json(p) for p in d1]}
                for d0, d1 in s.per_expert
            ],
        }
    if isinstance(s, InformationStructure):
        entries = [
            {"omega": omega, "signals": list(profile), "p": number_to_json(p)}
            for (omega, profile), p in sorted(s.weights.items())
        ]
        return {"signal_counts": list(s.signal_counts), "entries": entries}
    raise TypeError(f"cannot serialize {type(s).__name__}")


def structure_from_json(obj, where="$"):
    """Build a structure or mixture; the first violated constraint is raised."""
    if not isinstance(obj, dict):
        raise ValidationError("schema: expected an object", detail=where)
    if "atoms" in obj:
        atoms = []
        for i, atom in enumerate(obj["atoms"]):
            w = number_from_json(_require(atom, "weight", f"{where}.atoms[{i}]"), f"{where}.atoms[{i}].weight")
            atoms.append((w, structure_from_json(_require(atom, "structure", f"{where}.atoms[{i}]"),
                                                 f"{where}.atoms[{i}].structure")))
        return MixedAdversary(tuple(atoms))
    if "experts" in obj:
        prior = number_from_json(_require(obj, "prior", where), f"{where}.prior")
        experts = []
        for i, e in enumerate(obj["experts"]):
            d0 = [number_from_json(p, f"{where}.experts[{i}].p_given_0") for p in _require(e, "p_given_0", where)]
            d1 = [number_from_json(p, f"{where}.experts[{i}].p_given_1") for p in _require(e, "p_given_1", where)]
            experts.append((tuple(d0), tuple(d1)))
        return CondIndepStructure(prior, tuple(experts))
    if "entries" in obj:
        counts = _require(obj, "signal_counts", where)
        weights = {}
        for i, e in enumerate(obj["entries"]):
            at = f"{where}.entries[{i}]"
            omega = _require(e, "omega", at)
            signals = tuple(_require(e, "signals", at))
            key = (omega, signals)
            if key in weights:
                raise ValidationError("schema: duplicate entry", detail=at)
            weights[key] = number_from_json(_require(e, "p", at), f"{at}.p")
        return InformationStructure(tuple(counts), weights)
    raise ValidationError("schema: expected 'entries', 'experts' or 'atoms'", detail=where)


def load_structure(path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError("schema: invalid JSON", detail=str(exc)) from exc
    return structure_from_json(obj)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def _default(v):
    if isinstance(v, Fraction):
        return number_to_json(v)
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
