"""Full tuple algebras over finite bases, directed variants, and a bounded
brute-force search for square set-algebra representations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .core import (
    AtomStructure,
    Element,
    FiniteBAO,
    Rel,
    Signature,
    cyl_name,
    diag_name,
    perm_name,
)
from .errors import CapExceededError, StructuralError
from .morphisms import MorphismWitness, check_homomorphism

DEFAULT_TUPLE_CAP = 100_000


# ---------------------------------------------------------------------------
# Full set algebras
# ---------------------------------------------------------------------------


def full_set_algebra(n: int, base: Sequence[Hashable] | int,
                     substitutions: Iterable[Sequence[int]] = (),
                     tuple_cap: int = DEFAULT_TUPLE_CAP) -> FiniteBAO:
    """Powerset algebra of all n-tuples over a base.

    Cylindrification frees one coordinate, the diagonal fixes two equal
    coordinates, and a substitution along a permutation tau sends X to the
    tuples whose tau-composition lies in X.
    """
    points = list(range(base)) if isinstance(base, int) else list(base)
    if len(points) ** n > tuple_cap:
        raise CapExceededError(f"{len(points) ** n} tuples exceeds the cap {tuple_cap}")
    tuples = list(itertools.product(points, repeat=n))
    index = {t: i for i, t in enumerate(tuples)}
    nt = len(tuples)

    unary: dict[str, Rel] = {}
    for i in range(n):
        buckets: dict = {}
        for t, ti in index.items():
            key = t[:i] + t[i + 1:]
            buckets.setdefault(key, []).append(ti)
        unary[cyl_name(i)] = Rel.from_partition(nt, buckets.values())

    subs = set()
    for tau in substitutions:
        tau = tuple(tau)
        if sorted(tau) != list(range(n)):
            raise StructuralError(f"substitution {tau} is not a permutation of range({n})")
        inv = [0] * n
        for a, v in enumerate(tau):
            inv[v] = a
        image = {}
        for t, ti in index.items():
            # s_tau({t}) = the unique s with s o tau = t.
            s = tuple(t[inv[i]] for i in range(n))
            image[ti] = index[s]
        unary[perm_name(tau)] = Rel.from_function(nt, image)
        subs.add(tau)

    constants = {}
    for i in range(n):
        for j in range(i + 1, n):
            constants[diag_name(i, j)] = frozenset(ti for t, ti in index.items() if t[i] == t[j])

    sig = Signature.qea(n, subs) if subs else Signature.ca(n)
    frame = AtomStructure(atoms=tuple(tuples), signature=sig, unary=unary,
                          constants=constants, name=f"set({n},{len(points)})")
    return FiniteBAO(frame)


# ---------------------------------------------------------------------------
# Directed set algebras
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirectedBase:
    """A finite base together with an accessibility relation on it."""

    points: tuple[Hashable, ...]
    relation: frozenset[tuple[Hashable, Hashable]]

    @classmethod
    def total(cls, points: Sequence[Hashable]) -> "DirectedBase":
        pts = tuple(points)
        return cls(pts, frozenset((a, b) for a in pts for b in pts))


def classify_base(base: DirectedBase) -> dict[str, bool]:
    """First-order checks: common parents, exact pair parents, extensionality."""
    pts, rel = base.points, base.relation
    weak_p = all(any((x, z) in rel and (y, z) in rel for z in pts)
                 for x in pts for y in pts)
    p_structure = all(
        any(all(((w, z) in rel) == (w in (x, y)) for w in pts) for z in pts)
        for x in pts for y in pts)

    def children(x):
        return frozenset(z for z in pts if (z, x) in rel)

    extensional = all(x == y for x in pts for y in pts if children(x) == children(y))
    return {"weak_p": weak_p, "p_structure": p_structure, "extensional": extensional}


def directed_set_algebra(n: int, base: DirectedBase,
                         tuple_cap: int = DEFAULT_TUPLE_CAP) -> FiniteBAO:
    """Tuple algebra whose quantifiers move one coordinate along the base
    relation, upward or downward; requires a weak parent structure."""
    if not classify_base(base)["weak_p"]:
        raise StructuralError("base is not a weak parent structure")
    points = list(base.points)
    if len(points) ** n > tuple_cap:
        raise CapExceededError(f"{len(points) ** n} tuples exceeds the cap {tuple_cap}")
    tuples = list(itertools.product(points, repeat=n))
    index = {t: i for i, t in enumerate(tuples)}
    nt = len(tuples)
    rel = base.relation

    unary: dict[str, Rel] = {}
    for i in range(n):
        up_pairs, down_pairs = set(), set()
        buckets: dict = {}
        for t, ti in index.items():
            buckets.setdefault(t[:i] + t[i + 1:], []).append(t)
        for group in buckets.values():
            for s in group:
                for z in group:
                    if (z[i], s[i]) in rel:
                        up_pairs.add((index[s], index[z]))
                    if (s[i], z[i]) in rel:
                        down_pairs.add((index[s], index[z]))
        unary[f"cu{i}"] = Rel.from_pairs(nt, up_pairs)
        unary[f"cd{i}"] = Rel.from_pairs(nt, down_pairs)

    constants = {}
    for i in range(n):
        for j in range(i + 1, n):
            constants[diag_name(i, j)] = frozenset(ti for t, ti in index.items() if t[i] == t[j])

    frame = AtomStructure(atoms=tuple(tuples), signature=Signature.directed(n),
                          unary=unary, constants=constants,
                          name=f"directed({n},{len(points)})")
    return FiniteBAO(frame)


# ---------------------------------------------------------------------------
# Representation search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RepresentationResult:
    found: bool
    base_size: int | None = None
    atom_images: dict[int, tuple[int, ...]] | None = None
    witness: MorphismWitness | None = None
    target: FiniteBAO | None = None
    exhausted_at: int | None = None

    def __bool__(self) -> bool:
        return self.found


def representation_search(algebra: FiniteBAO, max_base: int, *, min_base: int = 1,
                          atom_cap: int = 10, dim_cap: int = 3, base_cap: int = 5,
                          ) -> RepresentationResult:
    """Bounded decision of square set-algebra representability.

    Searches labelings of the tuple space by atoms: a labeling is exactly an
    embedding into the full set algebra when the diagonal pattern matches,
    neighbouring tuples carry related labels, every required witness label
    appears in its row, and every atom is used.  The default caps match the
    intended toy scale and can be raised explicitly.  A "not found" up to the
    bound is definitive for that bound.
    """
    sig = algebra.signature
    n = sig.dimension
    if sig.substitutions:
        raise StructuralError("drop substitutions first (see ca_reduct); the search is cylindric-only")
    if sig.cylindrifiers != frozenset(range(n)):
        raise StructuralError("search needs cylindrifiers at every index")
    if algebra.natoms > atom_cap:
        raise CapExceededError(
            f"{algebra.natoms} atoms exceeds cap {atom_cap}; raise atom_cap explicitly")
    if n > dim_cap:
        raise CapExceededError(f"dimension {n} exceeds cap {dim_cap}; raise dim_cap explicitly")
    if max_base > base_cap:
        raise CapExceededError(f"base {max_base} exceeds cap {base_cap}; raise base_cap explicitly")

    na = algebra.natoms
    full_mask = (1 << na) - 1
    rel_masks = {}
    rev_masks = {}
    for i in range(n):
        wit = algebra.frame.unary[cyl_name(i)].witness_masks()
        rel_masks[i] = wit  # wit[b] = {a : (a, b) in T_i}
        rev = [0] * na
        for b in range(na):
            m = wit[b]
            while m:
                low = m & -m
                rev[low.bit_length() - 1] |= 1 << b
                m ^= low
        rev_masks[i] = rev  # rev[a] = {b : (a, b) in T_i}

    diag_bits = {}
    for i in range(n):
        for j in range(i + 1, n):
            diag_bits[(i, j)] = algebra.diag(i, j).bits

    for b in range(min_base, max_base + 1):
        labeling = _search_base(algebra, n, b, rel_masks, rev_masks, diag_bits, full_mask)
        if labeling is not None:
            target = full_set_algebra(n, b)
            images: dict[int, list[int]] = {a: [] for a in range(na)}
            for ti, a in enumerate(labeling):
                images[a].append(ti)
            witness = check_homomorphism({a: target.element(images[a]) for a in images},
                                         algebra, target)
            if not (witness.is_hom and witness.injective):
                raise StructuralError("search returned a labeling that failed re-verification")
            return RepresentationResult(True, base_size=b,
                                        atom_images={a: tuple(v) for a, v in images.items()},
                                        witness=witness, target=target)
    return RepresentationResult(False, exhausted_at=max_base)


def _search_base(algebra: FiniteBAO, n: int, b: int, rel_masks, rev_masks,
                 diag_bits, full_mask: int):
    na = algebra.natoms
    tuples = list(itertools.product(range(b), repeat=n))
    index = {t: i for i, t in enumerate(tuples)}
    nt = len(tuples)

    rows = [[[] for _ in range(n)] for _ in range(nt)]
    for ti, t in enumerate(tuples):
        for i in range(n):
            for v in range(b):
                u = t[:i] + (v,) + t[i + 1:]
                rows[ti][i].append(index[u])

    pattern_mask = []
    for t in tuples:
        m = full_mask
        for (i, j), dmask in diag_bits.items():
            if t[i] == t[j]:
                m &= dmask
            else:
                m &= full_mask & ~dmask
        pattern_mask.append(m)

    const_tuples = [index[tuple(v for _ in range(n))] for v in range(b)]

    labels = [-1] * nt

    def row_witnesses_ok(ti: int, cand: list[int]) -> bool:
        """Every atom required in a row of an assigned tuple must still fit."""
        a = labels[ti]
        for i in range(n):
            need = rev_masks[i][a]
            while need:
                low = need & -need
                w = low.bit_length() - 1
                need ^= low
                ok = False
                for u in rows[ti][i]:
                    if labels[u] == w or (labels[u] < 0 and cand[u] & (1 << w)):
                        ok = True
                        break
                if not ok:
                    return False
        return True

    def propagate(ti: int, cand: list[int]) -> bool:
        a = labels[ti]
        for i in range(n):
            allowed = rel_masks[i][a]
            rev_allowed = rev_masks[i][a]
            both = allowed & rev_allowed
            if not (both >> a) & 1:
                return False
            for u in rows[ti][i]:
                if u == ti:
                    continue
                if labels[u] >= 0:
                    if not (both >> labels[u]) & 1:
                        return False
                else:
                    cand[u] &= both
                    if cand[u] == 0:
                        return False
        neighborhood = {ti}
        for i in range(n):
            neighborhood.update(rows[ti][i])
        for u in neighborhood:
            if labels[u] >= 0 and not row_witnesses_ok(u, cand):
                return False
        return True

    def atom_usage_ok(cand: list[int]) -> bool:
        available = 0
        for ti in range(nt):
            available |= (1 << labels[ti]) if labels[ti] >= 0 else cand[ti]
        return available == full_mask

    def choose(cand: list[int]) -> int | None:
        best, best_count = None, 1 << 30
        for ti in range(nt):
            if labels[ti] < 0:
                c = cand[ti].bit_count()
                if c < best_count:
                    best, best_count = ti, c
        return best

    const_set = set(const_tuples[1:])

    def dfs(cand: list[int]) -> bool:
        ti = choose(cand)
        if ti is None:
            for u in range(nt):
                if not row_witnesses_ok(u, cand):
                    return False
            return atom_usage_ok(cand)
        options = cand[ti]
        while options:
            low = options & -options
            a = low.bit_length() - 1
            options ^= low
            # Base-value symmetry break on the constant tuples.
            if ti in const_set:
                first = labels[const_tuples[0]]
                if first >= 0 and a < first:
                    continue
            labels[ti] = a
            new_cand = list(cand)
            new_cand[ti] = low
            if propagate(ti, new_cand) and atom_usage_ok(new_cand) and dfs(new_cand):
                return True
            labels[ti] = -1
        return False

    init = [pattern_mask[ti] for ti in range(nt)]
    if any(m == 0 for m in init):
        return None
    if not atom_usage_ok(init):
        return None
    if dfs(init):
        return list(labels)
    return None
