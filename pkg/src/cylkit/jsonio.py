"""Canonical JSON forms for frames and reports.

Serialization is canonical (sorted keys, sorted atom and pair lists) so that
digests and golden files are stable.  Atom identifiers serialize to their
printable string forms; loading a frame therefore yields string atoms, which
is fine because all structure lives in the indexed relations.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .core import AtomStructure, CompositionRule, FiniteBAO, Rel, Signature
from .errors import StructuralError

SCHEMA_VERSION = 1


def signature_to_dict(sig: Signature) -> dict:
    return {
        "dimension": sig.dimension,
        "cylindrifiers": sorted(sig.cylindrifiers),
        "diagonals": [list(p) for p in sorted(sig.diagonals)],
        "substitutions": [list(t) for t in sorted(sig.substitutions)],
        "directed_up": sorted(sig.directed_up),
        "directed_down": sorted(sig.directed_down),
        "converse": sig.has_converse,
        "composition": sig.has_composition,
        "identity": sig.has_identity,
    }


def signature_from_dict(d: dict) -> Signature:
    return Signature(
        dimension=d["dimension"],
        cylindrifiers=frozenset(d.get("cylindrifiers", ())),
        diagonals=frozenset(tuple(p) for p in d.get("diagonals", ())),
        substitutions=frozenset(tuple(t) for t in d.get("substitutions", ())),
        directed_up=frozenset(d.get("directed_up", ())),
        directed_down=frozenset(d.get("directed_down", ())),
        has_converse=d.get("converse", False),
        has_composition=d.get("composition", False),
        has_identity=d.get("identity", False),
    )


def frame_to_dict(frame: AtomStructure) -> dict:
    out: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": frame.name,
        "atoms": [str(a) for a in frame.atoms],
        "signature": signature_to_dict(frame.signature),
        "unary": {name: sorted([a, b] for a, b in rel.pairs())
                  for name, rel in frame.unary.items()},
        "constants": {name: sorted(s) for name, s in frame.constants.items()},
    }
    if frame.composition is not None:
        key = "forbidden" if frame.composition.stores_forbidden() else "consistent"
        out["consistency"] = {key: sorted(list(t) for t in frame.composition.stored_triples())}
    return out


def frame_from_dict(d: dict) -> AtomStructure:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise StructuralError(f"unsupported schema version {d.get('schema_version')!r}")
    atoms = tuple(d["atoms"])
    n = len(atoms)
    sig = signature_from_dict(d["signature"])
    unary = {name: Rel.from_pairs(n, (tuple(p) for p in pairs))
             for name, pairs in d.get("unary", {}).items()}
    constants = {name: frozenset(s) for name, s in d.get("constants", {}).items()}
    composition = None
    if "consistency" in d:
        cons = d["consistency"]
        if "forbidden" in cons:
            composition = CompositionRule.from_forbidden(n, (tuple(t) for t in cons["forbidden"]))
        elif "consistent" in cons:
            composition = CompositionRule.from_consistent(n, (tuple(t) for t in cons["consistent"]))
        else:
            raise StructuralError("consistency block needs a 'forbidden' or 'consistent' key")
    return AtomStructure(atoms=atoms, signature=sig, unary=unary,
                         constants=constants, composition=composition,
                         name=d.get("name", ""))


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def save_frame(frame: AtomStructure, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(frame_to_dict(frame)), encoding="utf-8")


def load_frame(path: str | Path) -> AtomStructure:
    return frame_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_algebra(path: str | Path) -> FiniteBAO:
    return FiniteBAO(load_frame(path))


def file_digest(path: str | Path) -> str:
    return digest(Path(path).read_bytes())
