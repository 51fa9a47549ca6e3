"""Structural operators on finite algebras: dimension sets, neat reducts,
index reducts, relativization, relation-algebra reducts, and the hard-coded
frame correspondents for the cylindrifier/diagonal axioms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import (
    CONVERSE,
    IDENTITY_CONSTANT,
    AtomStructure,
    CompositionRule,
    Element,
    FiniteBAO,
    Rel,
    Signature,
    cyl_name,
    diag_name,
    parse_perm_name,
    perm_name,
)
from .errors import CapExceededError, StructuralError
from .terms import And, Cyl, SubstIJ, Term, Var, compile_term

# ---------------------------------------------------------------------------
# Dimension sets
# ---------------------------------------------------------------------------


def dimension_set(algebra: FiniteBAO, x: Element) -> set[int]:
    """Indices whose cylindrifier moves x."""
    if x.algebra is not algebra:
        raise StructuralError("element belongs to a different algebra")
    out = set()
    for i in sorted(algebra.signature.cylindrifiers):
        if algebra.cyl(i, x) != x:
            out.add(i)
    return out


# ---------------------------------------------------------------------------
# Neat reducts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NeatReductResult:
    """Quotient frame of the joint dropped-cylindrifier classes.

    ``atom_map[a]`` is the class index of parent atom ``a``; the class atoms
    of the result are tuples of parent atoms.
    """

    algebra: FiniteBAO
    parent: FiniteBAO
    kept: tuple[int, ...]
    atom_map: tuple[int, ...]
    class_masks: tuple[int, ...]

    def to_parent(self, x: Element) -> Element:
        m = 0
        for i, cm in enumerate(self.class_masks):
            if x.bits & (1 << i):
                m |= cm
        return Element(self.parent, m)

    def to_sub(self, x: Element) -> Element:
        m = 0
        for i, cm in enumerate(self.class_masks):
            if x.bits & cm:
                if x.bits & cm != cm:
                    raise StructuralError("element is not fixed by the dropped cylindrifiers")
                m |= 1 << i
        return Element(self.algebra, m)


def _saturated_split(mask: int, class_masks: Sequence[int], context: str) -> list[int]:
    out = []
    for i, cm in enumerate(class_masks):
        hit = mask & cm
        if hit:
            if hit != cm:
                raise StructuralError(f"{context} does not respect the class partition")
            out.append(i)
    return out


def neat_reduct(algebra: FiniteBAO, keep: Iterable[int]) -> NeatReductResult:
    """Restrict to elements fixed by every dropped cylindrifier.

    The dropped accessibility relations must be equivalences (true for every
    cylindrifier-style frame in this package); their joint classes become the
    atoms, and the kept operators are reindexed along the order isomorphism
    onto an initial segment.  Use :func:`neat_elements` when the dropped
    relations are not equivalences.
    """
    sig = algebra.signature
    kept = tuple(sorted(set(keep)))
    for i in kept:
        if i not in sig.cylindrifiers:
            raise StructuralError(f"index {i} is not a cylindrifier of the algebra")
    dropped = sorted(sig.cylindrifiers - set(kept))
    frame = algebra.frame
    for i in dropped:
        rel = frame.unary[cyl_name(i)]
        if not rel.is_equivalence():
            raise StructuralError(
                f"relation for c{i} is not an equivalence; "
                "the fixed elements are computable via neat_elements but do not form an atomic frame")
    # Joint classes via union-find across the dropped relations, processed in index order.
    n = algebra.natoms
    parent_id = list(range(n))

    def find(a: int) -> int:
        while parent_id[a] != a:
            parent_id[a] = parent_id[parent_id[a]]
            a = parent_id[a]
        return a

    for i in dropped:
        for block in frame.unary[cyl_name(i)].classes():
            root = find(block[0])
            for b in block[1:]:
                rb = find(b)
                if rb != root:
                    parent_id[max(root, rb)] = min(root, rb)
                    root = min(root, rb)
    groups: dict[int, list[int]] = {}
    for a in range(n):
        groups.setdefault(find(a), []).append(a)
    classes = sorted((tuple(sorted(g)) for g in groups.values()), key=lambda c: c[0])
    class_masks = []
    for cls in classes:
        m = 0
        for a in cls:
            m |= 1 << a
        class_masks.append(m)
    atom_map = [0] * n
    for ci, cls in enumerate(classes):
        for a in cls:
            atom_map[a] = ci
    pos = {i: p for p, i in enumerate(kept)}
    nb = len(classes)

    unary: dict[str, Rel] = {}
    for i in kept:
        pairs = set()
        for bi, bm in enumerate(class_masks):
            img = algebra.apply_mask(cyl_name(i), bm)
            for ai in _saturated_split(img, class_masks, f"c{i} image of a class"):
                pairs.add((ai, bi))
        unary[cyl_name(pos[i])] = Rel.from_pairs(nb, pairs)
    new_subs = set()
    for tau in sig.substitutions:
        moved = {k for k in range(len(tau)) if tau[k] != k}
        if not moved <= set(kept):
            continue
        new_tau = list(range(len(kept)))
        for k in moved:
            new_tau[pos[k]] = pos[tau[k]]
        new_tau = tuple(new_tau)
        pairs = set()
        for bi, bm in enumerate(class_masks):
            img = algebra.apply_mask(perm_name(tau), bm)
            for ai in _saturated_split(img, class_masks, f"s_{tau} image of a class"):
                pairs.add((ai, bi))
        unary[perm_name(new_tau)] = Rel.from_pairs(nb, pairs)
        new_subs.add(new_tau)

    constants: dict[str, frozenset[int]] = {}
    new_diags = set()
    for i, j in sorted(sig.diagonals):
        if i in pos and j in pos:
            mask = algebra.diag(i, j).bits
            idxs = _saturated_split(mask, class_masks, f"d{i}{j}")
            ni, nj = sorted((pos[i], pos[j]))
            constants[diag_name(ni, nj)] = frozenset(idxs)
            new_diags.add((ni, nj))

    new_sig = Signature(
        dimension=len(kept),
        cylindrifiers=frozenset(range(len(kept))),
        diagonals=frozenset(new_diags),
        substitutions=frozenset(new_subs),
    )
    atoms = tuple(tuple(frame.atoms[a] for a in cls) for cls in classes)
    sub_frame = AtomStructure(atoms=atoms, signature=new_sig, unary=unary,
                              constants=constants, name=f"Nr_{list(kept)}({frame.name})")
    sub = FiniteBAO(sub_frame)
    return NeatReductResult(algebra=sub, parent=algebra, kept=kept,
                            atom_map=tuple(atom_map), class_masks=tuple(class_masks))


def neat_elements(algebra: FiniteBAO, keep: Iterable[int], cap: int = 1 << 16) -> list[Element]:
    """Raw mode: the fixed elements themselves, by exhaustive filtering."""
    kept = set(keep)
    dropped = sorted(algebra.signature.cylindrifiers - kept)
    if len(algebra) > cap:
        raise CapExceededError(f"algebra has {len(algebra)} elements, cap is {cap}")
    out = []
    for x in algebra.elements(cap):
        if all(algebra.cyl(i, x) == x for i in dropped):
            out.append(x)
    return out


# ---------------------------------------------------------------------------
# Index reducts
# ---------------------------------------------------------------------------


def reduct_rho(algebra: FiniteBAO, rho: Sequence[int]) -> FiniteBAO:
    """Reindex the operators along an injection; atoms are unchanged.

    The operator at new index i is the parent operator at rho(i).  A declared
    substitution survives exactly when it permutes the range of rho and fixes
    everything else, in which case it is conjugated back.
    """
    if len(set(rho)) != len(rho):
        raise StructuralError("rho must be injective")
    frame = algebra.frame
    sig = algebra.signature
    beta = sig.dimension
    for v in rho:
        if not 0 <= v < beta:
            raise StructuralError(f"rho value {v} outside parent dimension {beta}")
    alpha = len(rho)
    rng = set(rho)
    inv = {v: i for i, v in enumerate(rho)}

    unary: dict[str, Rel] = {}
    cyls = set()
    for i, v in enumerate(rho):
        if v in sig.cylindrifiers:
            unary[cyl_name(i)] = frame.unary[cyl_name(v)]
            cyls.add(i)
    subs = set()
    for tau in sig.substitutions:
        moved = {k for k in range(len(tau)) if tau[k] != k}
        if moved <= rng and {tau[k] for k in moved} <= rng:
            new_tau = tuple(inv[tau[rho[i]]] for i in range(alpha))
            unary[perm_name(new_tau)] = frame.unary[perm_name(tau)]
            subs.add(new_tau)
    ups, downs = set(), set()
    for i, v in enumerate(rho):
        if v in sig.directed_up:
            unary[f"cu{i}"] = frame.unary[f"cu{v}"]
            ups.add(i)
        if v in sig.directed_down:
            unary[f"cd{i}"] = frame.unary[f"cd{v}"]
            downs.add(i)
    if sig.has_converse:
        unary[CONVERSE] = frame.unary[CONVERSE]

    constants: dict[str, frozenset[int]] = {}
    diags = set()
    for i in range(alpha):
        for j in range(i + 1, alpha):
            vi, vj = rho[i], rho[j]
            if tuple(sorted((vi, vj))) in sig.diagonals:
                constants[diag_name(i, j)] = frame.constant_set(diag_name(vi, vj))
                diags.add((i, j))
    if sig.has_identity:
        constants[IDENTITY_CONSTANT] = frame.constant_set(IDENTITY_CONSTANT)

    new_sig = Signature(
        dimension=alpha,
        cylindrifiers=frozenset(cyls),
        diagonals=frozenset(diags),
        substitutions=frozenset(subs),
        directed_up=frozenset(ups),
        directed_down=frozenset(downs),
        has_converse=sig.has_converse,
        has_composition=sig.has_composition,
        has_identity=sig.has_identity,
    )
    new_frame = AtomStructure(atoms=frame.atoms, signature=new_sig, unary=unary,
                              constants=constants, composition=frame.composition,
                              name=f"Rd_{list(rho)}({frame.name})")
    return FiniteBAO(new_frame)


def drop_substitutions(algebra: FiniteBAO, keep: Iterable[Sequence[int]]) -> FiniteBAO:
    """Forget all substitution operators outside `keep` (same dimension)."""
    kept = {tuple(t) for t in keep}
    sig = algebra.signature
    missing = kept - set(sig.substitutions)
    if missing:
        raise StructuralError(f"algebra does not have substitutions {sorted(missing)}")
    frame = algebra.frame
    unary = {name: rel for name, rel in frame.unary.items()
             if parse_perm_name(name) is None or parse_perm_name(name) in kept}
    new_sig = Signature(
        dimension=sig.dimension,
        cylindrifiers=sig.cylindrifiers,
        diagonals=sig.diagonals,
        substitutions=frozenset(kept),
        directed_up=sig.directed_up,
        directed_down=sig.directed_down,
        has_converse=sig.has_converse,
        has_composition=sig.has_composition,
        has_identity=sig.has_identity,
    )
    new_frame = AtomStructure(atoms=frame.atoms, signature=new_sig, unary=unary,
                              constants=frame.constants, composition=frame.composition,
                              name=f"RdSub({frame.name})")
    return FiniteBAO(new_frame)


def ca_reduct(algebra: FiniteBAO) -> FiniteBAO:
    """Forget every substitution, keeping cylindrifiers and diagonals."""
    return drop_substitutions(algebra, [])


# ---------------------------------------------------------------------------
# Relativization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RelativizeResult:
    algebra: FiniteBAO
    parent: FiniteBAO
    atom_indices: tuple[int, ...]  # parent atom index per sub atom
    degenerate: tuple[str, ...]    # constants that came out empty

    def to_parent(self, x: Element) -> Element:
        m = 0
        for i, a in enumerate(self.atom_indices):
            if x.bits & (1 << i):
                m |= 1 << a
        return Element(self.parent, m)


def relativize(algebra: FiniteBAO, x: Element) -> RelativizeResult:
    """The algebra of elements below x, with every operator cut down by x.

    x is the new unit.  Constants are intersected with x with no side
    conditions; empty diagonals are permitted and reported as degenerate.
    """
    if x.algebra is not algebra:
        raise StructuralError("element belongs to a different algebra")
    if x.is_zero():
        raise StructuralError("cannot relativize to the zero element")
    frame = algebra.frame
    keep = x.atom_indices()
    keep_set = set(keep)
    remap = {a: i for i, a in enumerate(keep)}
    nb = len(keep)
    unary = {}
    for name, rel in frame.unary.items():
        pairs = {(remap[a], remap[b]) for a, b in rel.pairs() if a in keep_set and b in keep_set}
        unary[name] = Rel.from_pairs(nb, pairs)
    degenerate = []
    constants = {}
    for cname, aset in frame.constants.items():
        cut = frozenset(remap[a] for a in aset if a in keep_set)
        constants[cname] = cut
        if not cut:
            degenerate.append(cname)
    composition = None
    if frame.composition is not None:
        triples = set()
        for a in keep:
            for b in keep:
                for c in keep:
                    if frame.composition.consistent(a, b, c):
                        triples.add((remap[a], remap[b], remap[c]))
        composition = CompositionRule.from_consistent(nb, triples)
    atoms = tuple(frame.atoms[a] for a in keep)
    new_frame = AtomStructure(atoms=atoms, signature=frame.signature, unary=unary,
                              constants=constants, composition=composition,
                              name=f"Rl({frame.name})")
    return RelativizeResult(algebra=FiniteBAO(new_frame), parent=algebra,
                            atom_indices=tuple(keep), degenerate=tuple(sorted(degenerate)))


# ---------------------------------------------------------------------------
# Relation-algebra reducts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RaReductResult:
    algebra: FiniteBAO
    parent: FiniteBAO
    coords: tuple[int, int]
    spare: int
    neat: NeatReductResult
    report: dict

    def to_parent(self, x: Element) -> Element:
        return self.neat.to_parent(x)

    def to_sub(self, x: Element) -> Element:
        return self.neat.to_sub(x)


def ra_composition_term(coords: tuple[int, int], spare: int) -> Term:
    lo, hi = coords
    return Cyl(spare, And(SubstIJ(hi, spare, Var(0)), SubstIJ(lo, spare, Var(1))))


def ra_converse_term(coords: tuple[int, int], spare: int) -> Term:
    lo, hi = coords
    return SubstIJ(spare, lo, SubstIJ(lo, hi, SubstIJ(hi, spare, Var(0))))


def ra_reduct(algebra: FiniteBAO, coords: tuple[int, int] | None = None,
              spare: int | None = None) -> RaReductResult:
    """Relation-algebra view of the two-dimensional elements of a CA.

    The universe consists of the elements fixed by every cylindrifier off
    ``coords`` (default: the top two indices); composition, converse, and the
    identity are computed by index-shuffling terms through the single
    ``spare`` dimension.  At dimension 3 associativity can fail; the report
    records its status instead of refusing.
    """
    n = algebra.dimension
    if n < 3:
        raise StructuralError("relation-algebra reduct needs dimension >= 3")
    sig = algebra.signature
    if sig.cylindrifiers != frozenset(range(n)):
        raise StructuralError("algebra must have cylindrifiers at every index")
    if coords is None:
        coords = (n - 2, n - 1)
    lo, hi = coords
    if lo == hi or not (0 <= lo < n and 0 <= hi < n):
        raise StructuralError(f"invalid coordinate pair {coords}")
    if spare is None:
        spare = min(i for i in range(n) if i not in coords)
    if spare in coords or not 0 <= spare < n:
        raise StructuralError(f"invalid spare index {spare}")

    nr = neat_reduct(algebra, coords)
    class_masks = nr.class_masks
    nb = len(class_masks)

    comp_fn = compile_term(ra_composition_term(coords, spare), algebra, {0: 0, 1: 1})
    conv_fn = compile_term(ra_converse_term(coords, spare), algebra, {0: 0})

    conv_image: dict[int, int] = {}
    for bi, bm in enumerate(class_masks):
        img = conv_fn([bm])
        hits = _saturated_split(img, class_masks, "converse of a class")
        if len(hits) != 1:
            raise StructuralError("converse of an atom is not an atom; not an RA-style reduct")
        conv_image[bi] = hits[0]

    triples = set()
    for bi, bm in enumerate(class_masks):
        for ci, cm in enumerate(class_masks):
            img = comp_fn([bm, cm])
            for ai in _saturated_split(img, class_masks, "composition of classes"):
                triples.add((ai, bi, ci))

    id_mask = algebra.diag(lo, hi).bits
    id_idxs = frozenset(_saturated_split(id_mask, class_masks, "identity constant"))

    atoms = tuple(tuple(algebra.frame.atoms[a] for a in Element(algebra, m).atom_indices())
                  for m in class_masks)
    frame = AtomStructure(
        atoms=atoms,
        signature=Signature.ra(),
        unary={CONVERSE: Rel.from_function(nb, conv_image)},
        constants={IDENTITY_CONSTANT: id_idxs},
        composition=CompositionRule.from_consistent(nb, triples),
        name=f"Ra({algebra.frame.name})",
    )
    ra = FiniteBAO(frame)
    report = ra_atom_report(ra)
    return RaReductResult(algebra=ra, parent=algebra, coords=(lo, hi), spare=spare,
                          neat=nr, report=report)


def ra_atom_report(algebra: FiniteBAO) -> dict:
    """Atom-level relation-algebra axiom suite for an RA-signature frame.

    Checks associativity over all atom triples through the consistency
    predicate, the identity laws, converse involution and distribution over
    composition, and the triangle (cycle) law.
    """
    if not algebra.signature.has_composition or not algebra.signature.has_converse:
        raise StructuralError("RA axiom suite needs composition and converse")
    n = algebra.natoms
    conv = [algebra.apply_mask(CONVERSE, 1 << a) for a in range(n)]
    conv_atom = [m.bit_length() - 1 for m in conv]
    id_mask = algebra.constant(IDENTITY_CONSTANT).bits
    checks: dict[str, bool | None] = {}
    witnesses: dict[str, object] = {}

    ok = all(m.bit_count() == 1 for m in conv)
    checks["converse_atom_to_atom"] = ok
    checks["converse_involution"] = ok and all(conv_atom[conv_atom[a]] == a for a in range(n))

    ok = True
    wit = None
    for b in range(n):
        left = algebra.compose_masks(1 << b, id_mask)
        right = algebra.compose_masks(id_mask, 1 << b)
        if left != 1 << b or right != 1 << b:
            ok, wit = False, b
            break
    checks["identity_laws"] = ok
    if wit is not None:
        witnesses["identity_laws"] = wit

    ok = True
    wit = None
    for b in range(n):
        for c in range(n):
            lhs = algebra.compose_masks(1 << b, 1 << c)
            target = 0
            for a in Element(algebra, lhs).atom_indices():
                target |= 1 << conv_atom[a]
            rhs = algebra.compose_masks(conv[c], conv[b])
            if target != rhs:
                ok, wit = False, (b, c)
                break
        if not ok:
            break
    checks["converse_distributes"] = ok
    if wit is not None:
        witnesses["converse_distributes"] = wit

    ok = True
    wit = None
    for b in range(n):
        for c in range(n):
            bc = algebra.compose_masks(1 << b, 1 << c)
            for d in range(n):
                left = algebra.compose_masks(bc, 1 << d)
                cd = algebra.compose_masks(1 << c, 1 << d)
                right = algebra.compose_masks(1 << b, cd)
                if left != right:
                    ok, wit = False, (b, c, d)
                    break
            if not ok:
                break
        if not ok:
            break
    checks["associativity"] = ok
    if wit is not None:
        witnesses["associativity"] = wit

    rule = algebra.frame.composition
    ok = True
    wit = None
    for a in range(n):
        for b in range(n):
            for c in range(n):
                base = rule.consistent(a, b, c)
                # a <= b;c  iff  b <= a;conv(c)  iff  c <= conv(b);a
                if base != rule.consistent(b, a, conv_atom[c]) or \
                   base != rule.consistent(c, conv_atom[b], a):
                    ok, wit = False, (a, b, c)
                    break
            if not ok:
                break
        if not ok:
            break
    checks["cycle_law"] = ok
    if wit is not None:
        witnesses["cycle_law"] = wit

    return {"checks": checks, "witnesses": witnesses,
            "all_ok": all(bool(v) for v in checks.values())}


# ---------------------------------------------------------------------------
# Frame correspondents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrespondentReport:
    entries: tuple[dict, ...]

    @property
    def all_ok(self) -> bool:
        return all(e["verdict"] for e in self.entries)

    def violations(self) -> list[dict]:
        return [e for e in self.entries if not e["verdict"]]

    def __repr__(self) -> str:
        good = sum(1 for e in self.entries if e["verdict"])
        return f"CorrespondentReport({good}/{len(self.entries)} ok)"


def ca_frame_correspondents(frame: AtomStructure, n: int | None = None) -> CorrespondentReport:
    """Atom-level conditions equivalent to the cylindrifier/diagonal axioms.

    The list is fixed: each accessibility relation is an equivalence, any two
    of them commute, d(i,i) covers all atoms, d(i,j) is recovered through any
    third index, and an equivalence class meets d(i,j) in at most one atom.
    The agreement of this list with exhaustive equational checking is itself
    a tested property.
    """
    sig = frame.signature
    if n is None:
        n = sig.dimension
    entries: list[dict] = []

    def add(check: str, verdict: bool, witness=None):
        entries.append({"check": check, "verdict": bool(verdict), "witness": witness})

    masks = {i: frame.unary[cyl_name(i)].witness_masks() for i in range(n)}

    for i in range(n):
        rel = frame.unary[cyl_name(i)]
        ok, w = rel.is_reflexive()
        add(f"T{i}_reflexive", ok, w)
        ok, w = rel.is_symmetric()
        add(f"T{i}_symmetric", ok, w)
        ok, w = rel.is_transitive()
        add(f"T{i}_transitive", ok, w)

    def rel_compose(outer: list[int], inner: list[int], b: int) -> int:
        acc, m = 0, inner[b]
        while m:
            low = m & -m
            acc |= outer[low.bit_length() - 1]
            m ^= low
        return acc

    for i in range(n):
        for j in range(i + 1, n):
            ok, wit = True, None
            for b in range(frame.natoms):
                if rel_compose(masks[i], masks[j], b) != rel_compose(masks[j], masks[i], b):
                    ok, wit = False, b
                    break
            add(f"C4_T{i}_T{j}_commute", ok, wit)

    def diag_mask(i: int, j: int) -> int:
        aset = frame.constant_set(diag_name(i, j)) if i != j else frame.constant_set(f"d{i}{i}")
        m = 0
        for a in aset:
            m |= 1 << a
        return m

    full = (1 << frame.natoms) - 1
    for i in range(n):
        add(f"C5_d{i}{i}_full", diag_mask(i, i) == full)

    for i in range(n):
        for j in range(i + 1, n):
            dij = diag_mask(i, j)
            for k in range(n):
                if k in (i, j):
                    continue
                meet = diag_mask(i, k) & diag_mask(k, j)
                reach = 0
                m = meet
                while m:
                    low = m & -m
                    reach |= masks[k][low.bit_length() - 1]
                    m ^= low
                add(f"C6_d{i}{j}_via_{k}", reach == dij,
                    None if reach == dij else {"expected": dij, "got": reach})

    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dij = diag_mask(i, j)
            rel = frame.unary[cyl_name(i)]
            ok, wit = True, None
            idxs = [a for a in range(frame.natoms) if dij & (1 << a)]
            for x in range(len(idxs)):
                for y in range(x + 1, len(idxs)):
                    if rel.contains(idxs[x], idxs[y]):
                        ok, wit = False, (idxs[x], idxs[y])
                        break
                if not ok:
                    break
            add(f"C7_T{i}_meets_d{min(i,j)}{max(i,j)}_once", ok, wit)

    return CorrespondentReport(tuple(entries))
