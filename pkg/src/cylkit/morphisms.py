"""Homomorphism verification, isomorphism search, and amalgamation checks.

Every map between finite atomic algebras here is carried by its values on
atoms and extended additively; for finite algebras any Boolean homomorphism
preserves all meets, so the completeness flag comes for free once the map is
a homomorphism.  Isomorphism search runs on atom structures with iterated
invariant refinement before backtracking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import (
    AtomStructure,
    CompositionRule,
    Element,
    FiniteBAO,
    Rel,
    Signature,
    diag_name,
)
from .errors import CapExceededError, FrameMismatchError, StructuralError

DEFAULT_ISO_ATOM_CAP = 64
DEFAULT_SUPER_PAIR_CAP = 1 << 12


# ---------------------------------------------------------------------------
# Morphism witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MorphismWitness:
    """An atom-level map together with its verified properties."""

    source: FiniteBAO
    target: FiniteBAO
    images: tuple[int, ...]              # target bitmask per source atom
    properties: dict = field(default_factory=dict)
    failures: tuple[str, ...] = ()

    @property
    def is_hom(self) -> bool:
        return bool(self.properties.get("hom"))

    @property
    def injective(self) -> bool:
        return bool(self.properties.get("injective"))

    @property
    def surjective(self) -> bool:
        return bool(self.properties.get("surjective"))

    def apply(self, x: Element) -> Element:
        if x.algebra is not self.source:
            raise FrameMismatchError("element does not belong to the source algebra")
        bits = 0
        for a in x.atom_indices():
            bits |= self.images[a]
        return Element(self.target, bits)

    def verify(self) -> "MorphismWitness":
        """Re-run all checks on the stored map."""
        return check_homomorphism({a: Element(self.target, m) for a, m in enumerate(self.images)},
                                  self.source, self.target)

    def inverse(self) -> "MorphismWitness":
        if not (self.is_hom and self.injective and self.surjective):
            raise StructuralError("only verified isomorphisms can be inverted")
        inv = [0] * self.target.natoms
        for a, m in enumerate(self.images):
            inv[m.bit_length() - 1] = 1 << a
        return check_homomorphism({b: Element(self.source, m) for b, m in enumerate(inv)},
                                  self.target, self.source)

    def __repr__(self) -> str:
        props = ",".join(k for k, v in sorted(self.properties.items()) if v)
        return f"MorphismWitness({props or 'invalid'})"


def _element_map_to_atom_map(f: Mapping[Element, Element], source: FiniteBAO) -> dict[int, Element]:
    out = {}
    for a in range(source.natoms):
        key = source.atom(a)
        if key not in f:
            raise StructuralError(f"map is not total: atom {a} has no image")
        out[a] = f[key]
    return out


def check_homomorphism(f: Mapping[int, Element] | Mapping[Element, Element],
                       source: FiniteBAO, target: FiniteBAO,
                       require: Iterable[str] = ()) -> MorphismWitness:
    """Verify a map atom by atom against every operation of the source signature.

    ``f`` maps source atom indices (or source atoms as elements) to target
    elements.  The target must carry every operator the source declares.
    Meets of arbitrary families are preserved automatically in the finite
    setting, so ``complete`` is recorded as a consequence of ``hom``.
    """
    if f and not all(isinstance(k, int) for k in f):
        f = _element_map_to_atom_map(f, source)  # type: ignore[arg-type]
    images = []
    for a in range(source.natoms):
        if a not in f:
            raise StructuralError(f"map is not total: atom {a} has no image")
        x = f[a]  # type: ignore[index]
        if x.algebra is not target:
            raise FrameMismatchError("an image element does not belong to the target algebra")
        images.append(x.bits)

    failures: list[str] = []
    union, disjoint = 0, True
    for m in images:
        if union & m:
            disjoint = False
        union |= m
    if not disjoint:
        failures.append("atom images overlap")
    if union != target.one_mask:
        failures.append("atom images do not cover the target unit")

    def extend(bits: int) -> int:
        out = 0
        while bits:
            low = bits & -bits
            out |= images[low.bit_length() - 1]
            bits ^= low
        return out

    for name in source.frame.unary:
        if not target.has_op(name):
            failures.append(f"target lacks operator {name!r}")
            continue
        for a in range(source.natoms):
            lhs = extend(source.apply_mask(name, 1 << a))
            rhs = target.apply_mask(name, images[a])
            if lhs != rhs:
                failures.append(f"operator {name!r} not preserved at atom {a}")
                break
    for cname in source.frame.constants:
        try:
            tmask = target.constant(cname).bits
        except KeyError:
            failures.append(f"target lacks constant {cname!r}")
            continue
        if extend(source.constant(cname).bits) != tmask:
            failures.append(f"constant {cname!r} not preserved")
    if source.frame.composition is not None:
        if target.frame.composition is None:
            failures.append("target lacks composition")
        else:
            for a in range(source.natoms):
                for b in range(source.natoms):
                    lhs = extend(source.compose_masks(1 << a, 1 << b))
                    rhs = target.compose_masks(images[a], images[b])
                    if lhs != rhs:
                        failures.append(f"composition not preserved at atoms ({a}, {b})")
                        break
                else:
                    continue
                break

    hom = not failures
    injective = hom and all(m != 0 for m in images)
    surjective = hom and all(m.bit_count() == 1 for m in images) and union == target.one_mask
    props = {
        "hom": hom,
        "injective": injective,
        "surjective": surjective,
        "complete": hom,  # finite algebras: homs preserve arbitrary meets
    }
    witness = MorphismWitness(source=source, target=target, images=tuple(images),
                              properties=props, failures=tuple(failures))
    missing = [r for r in require if not props.get(r)]
    if missing:
        raise StructuralError(f"map lacks required properties {missing}: {failures}")
    return witness


# ---------------------------------------------------------------------------
# Isomorphism search
# ---------------------------------------------------------------------------


def _composition_signature(frame: AtomStructure, a: int, colors: list[int],
                           enabled: bool) -> tuple:
    if not enabled or frame.composition is None:
        return ()
    sigs = []
    rule = frame.composition
    for b in range(frame.natoms):
        for c in range(frame.natoms):
            if rule.consistent(a, b, c):
                sigs.append((colors[b], colors[c]))
    return tuple(sorted(sigs))


def _refine_colors(frame: AtomStructure, colors: list[int], use_composition: bool) -> list[int]:
    n = frame.natoms
    while True:
        keys = []
        for a in range(n):
            succ = []
            pred = []
            for name, rel in sorted(frame.unary.items()):
                succ.append((name, tuple(sorted(colors[b] for x, b in rel.pairs() if x == a))))
                pred.append((name, tuple(sorted(colors[x] for x, b in rel.pairs() if b == a))))
            keys.append((colors[a], tuple(succ), tuple(pred),
                         _composition_signature(frame, a, colors, use_composition)))
        palette = {k: i for i, k in enumerate(sorted(set(keys)))}
        new = [palette[k] for k in keys]
        if new == colors:
            return colors
        colors = new


def _initial_colors(frame: AtomStructure) -> list[int]:
    n = frame.natoms
    keys = []
    for a in range(n):
        membership = tuple(sorted(cname for cname, s in frame.constants.items() if a in s))
        keys.append(membership)
    palette = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [palette[k] for k in keys]


def find_isomorphism(a: FiniteBAO, b: FiniteBAO, *, max_atoms: int = DEFAULT_ISO_ATOM_CAP,
                     refine: bool = True) -> MorphismWitness | None:
    """Search for an atom-structure isomorphism; definitive within the cap.

    Invariant refinement (constant membership, then iterated neighbor color
    multisets) prunes the backtracking; ``refine=False`` gives the unpruned
    reference search used to cross-check the pruning.
    """
    if a.signature != b.signature:
        return None
    if a.natoms != b.natoms:
        return None
    if a.natoms > max_atoms or b.natoms > max_atoms:
        raise CapExceededError(
            f"isomorphism search capped at {max_atoms} atoms; got {a.natoms}")
    fa, fb = a.frame, b.frame
    if set(fa.unary) != set(fb.unary) or set(fa.constants) != set(fb.constants):
        return None
    n = a.natoms
    if n == 0:
        return check_homomorphism({}, a, b)

    use_comp = fa.composition is not None and n <= 40
    ca = _initial_colors(fa)
    cb = _initial_colors(fb)
    if refine:
        ca = _refine_colors(fa, ca, use_comp)
        cb = _refine_colors(fb, cb, use_comp)
    if sorted(ca) != sorted(cb):
        return None

    rel_a = {name: rel for name, rel in fa.unary.items()}
    rel_b = {name: rel for name, rel in fb.unary.items()}
    const_a = {name: s for name, s in fa.constants.items()}
    const_b = {name: s for name, s in fb.constants.items()}
    comp_a, comp_b = fa.composition, fb.composition

    candidates = [sorted(t for t in range(n) if cb[t] == ca[s]) for s in range(n)]
    order = sorted(range(n), key=lambda s: (len(candidates[s]), s))
    mapping = [-1] * n
    used = [False] * n

    def compatible(s: int, t: int) -> bool:
        for name in const_a:
            if (s in const_a[name]) != (t in const_b[name]):
                return False
        for name, ra in rel_a.items():
            rb = rel_b[name]
            for s2 in order:
                t2 = mapping[s2]
                if t2 < 0:
                    continue
                if ra.contains(s, s2) != rb.contains(t, t2):
                    return False
                if ra.contains(s2, s) != rb.contains(t2, t):
                    return False
            if ra.contains(s, s) != rb.contains(t, t):
                return False
        if comp_a is not None:
            assert comp_b is not None
            assigned = [(s2, mapping[s2]) for s2 in order if mapping[s2] >= 0] + [(s, t)]
            for (x, tx) in assigned:
                for (y, ty) in assigned:
                    if comp_a.consistent(s, x, y) != comp_b.consistent(t, tx, ty):
                        return False
                    if comp_a.consistent(x, s, y) != comp_b.consistent(tx, t, ty):
                        return False
                    if comp_a.consistent(x, y, s) != comp_b.consistent(tx, ty, t):
                        return False
        return True

    def backtrack(pos: int) -> bool:
        if pos == n:
            return True
        s = order[pos]
        for t in candidates[s]:
            if used[t]:
                continue
            if compatible(s, t):
                mapping[s] = t
                used[t] = True
                if backtrack(pos + 1):
                    return True
                mapping[s] = -1
                used[t] = False
        return False

    if not backtrack(0):
        return None
    witness = check_homomorphism({s: b.atom(mapping[s]) for s in range(n)}, a, b)
    if not (witness.is_hom and witness.injective and witness.surjective):
        raise StructuralError("search returned a map that failed re-verification")
    return witness


# ---------------------------------------------------------------------------
# Amalgamation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmalgamVerdict:
    amalgam: bool
    super_amalgam: bool
    witness: object = None

    def __bool__(self) -> bool:
        return self.amalgam


def amalgam_check(i1: MorphismWitness, i2: MorphismWitness,
                  m1: MorphismWitness, m2: MorphismWitness,
                  pair_cap: int = DEFAULT_SUPER_PAIR_CAP) -> AmalgamVerdict:
    """Does (m1, m2) amalgamate (i1, i2), and is the amalgam super?

    The amalgam condition is the commuting square with both outer maps
    injective.  The super condition interpolates every comparable cross pair
    of elements through the common subalgebra, checked exhaustively under
    the pair cap (explicit refusal beyond).
    """
    for w, label in ((i1, "i1"), (i2, "i2"), (m1, "m1"), (m2, "m2")):
        if not w.is_hom:
            raise StructuralError(f"{label} is not a verified homomorphism")
    if i1.source is not i2.source:
        raise StructuralError("i1 and i2 must share their source")
    if m1.source is not i1.target or m2.source is not i2.target:
        raise StructuralError("m1, m2 must start where i1, i2 land")
    if m1.target is not m2.target:
        raise StructuralError("m1 and m2 must share their target")
    a0 = i1.source
    commutes = all(m1.apply(i1.apply(a0.atom(a))) == m2.apply(i2.apply(a0.atom(a)))
                   for a in range(a0.natoms))
    amalgam = commutes and m1.injective and m2.injective
    if not amalgam:
        return AmalgamVerdict(False, False, "square does not commute or a map is not injective")

    a1, a2 = m1.source, m2.source
    total_pairs = len(a1) * len(a2)
    if total_pairs > pair_cap:
        raise CapExceededError(
            f"super check needs {total_pairs} element pairs, cap is {pair_cap}")

    def interpolates(x_bits: int, mj, ij, y_bits: int, mk, ik) -> object | None:
        """x in dom mj, y in dom mk; if mj(x) <= mk(y), find z with
        x <= ij(z) and ik(z) <= y."""
        x = Element(mj.source, x_bits)
        y = Element(mk.source, y_bits)
        if not mj.apply(x) <= mk.apply(y):
            return None
        for z_bits in range(1 << a0.natoms):
            z = Element(a0, z_bits)
            if x <= ij.apply(z) and ik.apply(z) <= y:
                return None
        return (x.atom_indices(), y.atom_indices())

    for x_bits in range(1 << a1.natoms):
        for y_bits in range(1 << a2.natoms):
            bad = interpolates(x_bits, m1, i1, y_bits, m2, i2)
            if bad:
                return AmalgamVerdict(True, False, bad)
            bad = interpolates(y_bits, m2, i2, x_bits, m1, i1)
            if bad:
                return AmalgamVerdict(True, False, bad)
    return AmalgamVerdict(True, True)


@dataclass(frozen=True)
class AmalgamSearchResult:
    found: bool
    target: FiniteBAO | None = None
    m1: MorphismWitness | None = None
    m2: MorphismWitness | None = None
    exhausted: bool = False
    bound: object = None


def _embedding_pairs(i1: MorphismWitness, i2: MorphismWitness,
                     d: FiniteBAO) -> Iterable[tuple[MorphismWitness, MorphismWitness]]:
    """Joint search for embeddings of both targets into d with a commuting square.

    An embedding of a finite algebra corresponds to a surjection from the
    atoms of d onto its atoms; atoms of d are assigned a pair of images, and
    the common-source condition pins the two coordinates together.
    """
    a0, a1, a2 = i1.source, i1.target, i2.target

    def part_map(w: MorphismWitness) -> list[int]:
        out = [-1] * w.target.natoms
        for a in range(a0.natoms):
            img = w.images[a]
            while img:
                low = img & -img
                out[low.bit_length() - 1] = a
                img ^= low
        return out

    part1, part2 = part_map(i1), part_map(i2)
    n_d = d.natoms

    pairs = [(x, y) for x in range(a1.natoms) for y in range(a2.natoms)
             if part1[x] == part2[y]]
    assignment: list[tuple[int, int] | None] = [None] * n_d

    def consistent(at: int, val: tuple[int, int]) -> bool:
        x, y = val
        for cname in d.frame.constants:
            in_d = at in d.frame.constants[cname]
            try:
                if in_d != (x in a1.frame.constants.get(cname, frozenset())):
                    return False
                if in_d != (y in a2.frame.constants.get(cname, frozenset())):
                    return False
            except KeyError:
                return False
        for name, rel in d.frame.unary.items():
            if not (a1.has_op(name) and a2.has_op(name)):
                return False
            r1, r2 = a1.frame.unary[name], a2.frame.unary[name]
            for other in range(n_d):
                val2 = assignment[other]
                if val2 is None and other != at:
                    continue
                x2, y2 = val if other == at else val2  # type: ignore[misc]
                if rel.contains(at, other) and not (r1.contains(x, x2) and r2.contains(y, y2)):
                    return False
                if rel.contains(other, at) and not (r1.contains(x2, x) and r2.contains(y2, y)):
                    return False
        return True

    def complete_ok() -> bool:
        # Surjectivity plus the witness direction of operator preservation.
        used1 = {v[0] for v in assignment}   # type: ignore[index]
        used2 = {v[1] for v in assignment}   # type: ignore[index]
        if used1 != set(range(a1.natoms)) or used2 != set(range(a2.natoms)):
            return False
        for name, rel in d.frame.unary.items():
            r1, r2 = a1.frame.unary[name], a2.frame.unary[name]
            for at in range(n_d):
                x, y = assignment[at]  # type: ignore[misc]
                succ1 = {assignment[o][0] for o in range(n_d) if rel.contains(at, o)}  # type: ignore[index]
                if succ1 != {x2 for x2 in range(a1.natoms) if r1.contains(x, x2)}:
                    return False
                succ2 = {assignment[o][1] for o in range(n_d) if rel.contains(at, o)}  # type: ignore[index]
                if succ2 != {y2 for y2 in range(a2.natoms) if r2.contains(y, y2)}:
                    return False
        return True

    def rec(at: int):
        if at == n_d:
            if complete_ok():
                img1: dict[int, list[int]] = {x: [] for x in range(a1.natoms)}
                img2: dict[int, list[int]] = {y: [] for y in range(a2.natoms)}
                for dd, val in enumerate(assignment):
                    img1[val[0]].append(dd)  # type: ignore[index]
                    img2[val[1]].append(dd)  # type: ignore[index]
                w1 = check_homomorphism({x: d.element(img1[x]) for x in img1}, a1, d)
                w2 = check_homomorphism({y: d.element(img2[y]) for y in img2}, a2, d)
                if w1.is_hom and w1.injective and w2.is_hom and w2.injective:
                    yield (w1, w2)
            return
        for val in pairs:
            if consistent(at, val):
                assignment[at] = val
                yield from rec(at + 1)
                assignment[at] = None

    yield from rec(0)


def amalgam_search(i1: MorphismWitness, i2: MorphismWitness,
                   pool: Sequence[FiniteBAO] | None = None,
                   size_bound: int | None = None) -> AmalgamSearchResult:
    """Bounded search for an amalgamating algebra.

    Candidates come from the given pool, or, with ``size_bound``, from the
    full enumeration of frames over the shared signature with at most that
    many atoms (practical only for one or two atoms).  Exhaustion verdicts
    are relative to the bound.
    """
    if pool is None and size_bound is None:
        raise StructuralError("give a candidate pool or a size bound")
    candidates: Iterable[FiniteBAO]
    if pool is not None:
        candidates = pool
    else:
        if size_bound > 2:
            raise CapExceededError("frame enumeration is capped at 2 atoms; pass a pool instead")
        candidates = _all_frames(i1.target.signature, size_bound)
    for d in candidates:
        if d.signature != i1.target.signature:
            continue
        for w1, w2 in _embedding_pairs(i1, i2, d):
            verdict = all(w1.apply(i1.apply(i1.source.atom(a)))
                          == w2.apply(i2.apply(i2.source.atom(a)))
                          for a in range(i1.source.natoms))
            if verdict:
                return AmalgamSearchResult(True, d, w1, w2)
    return AmalgamSearchResult(False, exhausted=True,
                               bound=size_bound if pool is None else f"pool({len(list(pool))})")


def _all_frames(sig: Signature, max_atoms: int) -> Iterable[FiniteBAO]:
    for n in range(1, max_atoms + 1):
        atom_pairs = [(x, y) for x in range(n) for y in range(n)]
        unary_names = sig.unary_names()
        rel_choices = list(itertools.product([False, True], repeat=len(atom_pairs)))
        const_names = sig.constant_names()
        subset_choices = list(itertools.product([False, True], repeat=n))
        for rels in itertools.product(rel_choices, repeat=len(unary_names)):
            unary = {}
            for name, bits in zip(unary_names, rels):
                unary[name] = Rel.from_pairs(n, (p for p, b in zip(atom_pairs, bits) if b))
            for consts in itertools.product(subset_choices, repeat=len(const_names)):
                constants = {}
                for cname, bits in zip(const_names, consts):
                    constants[cname] = frozenset(i for i, b in enumerate(bits) if b)
                try:
                    frame = AtomStructure(atoms=tuple(range(n)), signature=sig,
                                          unary=unary, constants=constants)
                except StructuralError:
                    continue
                yield FiniteBAO(frame)
