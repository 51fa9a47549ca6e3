"""Finite Boolean algebras with completely additive operators.

Every algebra in this package is the complex algebra of a finite atom
structure: a list of atoms, one binary relation per unary operator, an
optional ternary consistency predicate for a binary composition, and a few
constant atom sets.  Elements are sets of atom indices stored as int
bitmasks, so all Boolean arithmetic is constant-time word arithmetic.

Operator direction convention, used consistently everywhere: a unary
operator with accessibility relation T sends X to ``{a : exists b in X with
(a, b) in T}``.  That is, ``(a, b) in T`` reads "b witnesses a".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import (
    CapExceededError,
    FrameMismatchError,
    SignatureMismatchError,
    StructuralError,
)

Atom = Hashable

MAX_NAMED_DIMENSION = 10  # keeps operator names like "c3" and "d01" unambiguous


# ---------------------------------------------------------------------------
# Operator naming
# ---------------------------------------------------------------------------

CONVERSE = "conv"
IDENTITY_CONSTANT = "id"
COMPOSITION = ";"


def cyl_name(i: int) -> str:
    return f"c{i}"


def dual_cyl_name(i: int) -> str:
    return f"q{i}"


def up_name(i: int) -> str:
    return f"cu{i}"


def down_name(i: int) -> str:
    return f"cd{i}"


def diag_name(i: int, j: int) -> str:
    i, j = min(i, j), max(i, j)
    return f"d{i}{j}"


def perm_name(tau: Sequence[int]) -> str:
    return "s" + ",".join(str(k) for k in tau)


def parse_perm_name(name: str) -> tuple[int, ...] | None:
    if not name.startswith("s") or "," not in name:
        return None
    try:
        return tuple(int(part) for part in name[1:].split(","))
    except ValueError:
        return None


def transposition(i: int, j: int, n: int) -> tuple[int, ...]:
    """One-line notation for the transposition [i, j] inside dimension n."""
    tau = list(range(n))
    tau[i], tau[j] = tau[j], tau[i]
    return tuple(tau)


def compose_perms(tau: Sequence[int], sigma: Sequence[int]) -> tuple[int, ...]:
    """(tau o sigma)(k) = tau(sigma(k))."""
    return tuple(tau[sigma[k]] for k in range(len(sigma)))


def perm_group(generators: Iterable[Sequence[int]], n: int) -> frozenset[tuple[int, ...]]:
    """Close a set of permutations of ``range(n)`` under composition."""
    idperm = tuple(range(n))
    gens = {tuple(g) for g in generators}
    for g in gens:
        if sorted(g) != list(range(n)):
            raise StructuralError(f"{g} is not a permutation of range({n})")
    group = {idperm} | gens
    frontier = list(group)
    while frontier:
        tau = frontier.pop()
        for sigma in list(group):
            for new in (compose_perms(tau, sigma), compose_perms(sigma, tau)):
                if new not in group:
                    group.add(new)
                    frontier.append(new)
    return frozenset(group)


# ---------------------------------------------------------------------------
# Relations and composition rules
# ---------------------------------------------------------------------------


class Rel:
    """A binary relation on atom indices, backed by pairs or by a partition.

    The partition backing exists so equivalence relations on large atom sets
    (neat-reduct quotients, hypernetwork frames) never materialize their
    quadratically many pairs.
    """

    __slots__ = ("n", "_pairs", "_blocks")

    def __init__(self, n: int, pairs: frozenset[tuple[int, int]] | None = None,
                 blocks: tuple[tuple[int, ...], ...] | None = None):
        if (pairs is None) == (blocks is None):
            raise ValueError("exactly one of pairs/blocks must be given")
        self.n = n
        self._pairs = pairs
        self._blocks = blocks

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Rel":
        return cls(n, pairs=frozenset((int(a), int(b)) for a, b in pairs))

    @classmethod
    def from_partition(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Rel":
        blks = tuple(tuple(sorted(set(b))) for b in blocks)
        seen: set[int] = set()
        for b in blks:
            if seen & set(b):
                raise StructuralError("partition blocks overlap")
            seen |= set(b)
        if seen != set(range(n)):
            raise StructuralError("partition does not cover the atom range")
        return cls(n, blocks=tuple(sorted(blks, key=lambda b: b[0])))

    @classmethod
    def from_function(cls, n: int, image: Mapping[int, int]) -> "Rel":
        """Functional relation: op({b}) = {image[b]}, i.e. pairs (image[b], b)."""
        return cls.from_pairs(n, ((image[b], b) for b in image))

    def pairs(self) -> Iterator[tuple[int, int]]:
        if self._pairs is not None:
            yield from self._pairs
        else:
            for block in self._blocks:  # type: ignore[union-attr]
                for a in block:
                    for b in block:
                        yield (a, b)

    def contains(self, a: int, b: int) -> bool:
        if self._pairs is not None:
            return (a, b) in self._pairs
        for block in self._blocks:  # type: ignore[union-attr]
            if a in block:
                return b in block
        return False

    def witness_masks(self) -> list[int]:
        """masks[b] = bitmask of {a : (a, b) in rel}; op(X) = OR of masks over X."""
        masks = [0] * self.n
        if self._pairs is not None:
            for a, b in self._pairs:
                masks[b] |= 1 << a
        else:
            for block in self._blocks:  # type: ignore[union-attr]
                m = 0
                for a in block:
                    m |= 1 << a
                for b in block:
                    masks[b] = m
        return masks

    def check_bounds(self) -> None:
        for a, b in self.pairs():
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise StructuralError(f"relation pair ({a}, {b}) outside atom range 0..{self.n - 1}")

    def is_reflexive(self) -> tuple[bool, int | None]:
        if self._blocks is not None:
            return True, None
        for a in range(self.n):
            if not self.contains(a, a):
                return False, a
        return True, None

    def is_symmetric(self) -> tuple[bool, tuple[int, int] | None]:
        if self._blocks is not None:
            return True, None
        for a, b in self.pairs():
            if not self.contains(b, a):
                return False, (a, b)
        return True, None

    def is_transitive(self) -> tuple[bool, tuple[int, int, int] | None]:
        if self._blocks is not None:
            return True, None
        succ: dict[int, set[int]] = {a: set() for a in range(self.n)}
        for a, b in self.pairs():
            succ[a].add(b)
        for a in range(self.n):
            for b in succ[a]:
                for c in succ[b]:
                    if c not in succ[a]:
                        return False, (a, b, c)
        return True, None

    def is_equivalence(self) -> bool:
        return self.is_reflexive()[0] and self.is_symmetric()[0] and self.is_transitive()[0]

    def is_partial_involution(self) -> bool:
        """Symmetric and functional in both directions (at most one partner)."""
        partner: dict[int, int] = {}
        for a, b in self.pairs():
            if partner.setdefault(a, b) != b:
                return False
        for a, b in partner.items():
            if partner.get(b) != a:
                return False
        return True

    def classes(self) -> list[tuple[int, ...]]:
        """Equivalence classes, sorted by least member.  Requires equivalence."""
        if self._blocks is not None:
            return list(self._blocks)
        if not self.is_equivalence():
            raise StructuralError("relation is not an equivalence; classes undefined")
        parent = list(range(self.n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.pairs():
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict[int, list[int]] = {}
        for a in range(self.n):
            groups.setdefault(find(a), []).append(a)
        return sorted((tuple(sorted(v)) for v in groups.values()), key=lambda b: b[0])


class CompositionRule:
    """Ternary consistency predicate: (a, b, c) consistent means a <= b;c.

    Stored as either a consistent-triple set or a forbidden-triple set,
    following how such algebras are usually presented.
    """

    __slots__ = ("n", "_consistent", "_forbidden")

    def __init__(self, n: int, consistent: frozenset | None = None,
                 forbidden: frozenset | None = None):
        if (consistent is None) == (forbidden is None):
            raise ValueError("exactly one of consistent/forbidden must be given")
        self.n = n
        self._consistent = consistent
        self._forbidden = forbidden

    @classmethod
    def from_consistent(cls, n: int, triples: Iterable[tuple[int, int, int]]) -> "CompositionRule":
        return cls(n, consistent=frozenset(tuple(t) for t in triples))

    @classmethod
    def from_forbidden(cls, n: int, triples: Iterable[tuple[int, int, int]]) -> "CompositionRule":
        return cls(n, forbidden=frozenset(tuple(t) for t in triples))

    def consistent(self, a: int, b: int, c: int) -> bool:
        if self._consistent is not None:
            return (a, b, c) in self._consistent
        return (a, b, c) not in self._forbidden  # type: ignore[operator]

    def stored_triples(self) -> frozenset:
        return self._consistent if self._consistent is not None else self._forbidden  # type: ignore[return-value]

    def stores_forbidden(self) -> bool:
        return self._forbidden is not None

    def check_bounds(self) -> None:
        for t in self.stored_triples():
            if len(t) != 3 or any(not (0 <= x < self.n) for x in t):
                raise StructuralError(f"composition triple {t} outside atom range 0..{self.n - 1}")

    def result_masks(self) -> list[list[int]]:
        """table[b][c] = bitmask {a : (a, b, c) consistent}."""
        n = self.n
        table = [[0] * n for _ in range(n)]
        for b in range(n):
            for c in range(n):
                m = 0
                for a in range(n):
                    if self.consistent(a, b, c):
                        m |= 1 << a
                table[b][c] = m
        return table


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """Declared operator slots: which indices carry which operations."""

    dimension: int
    cylindrifiers: frozenset[int] = frozenset()
    diagonals: frozenset[tuple[int, int]] = frozenset()
    substitutions: frozenset[tuple[int, ...]] = frozenset()
    directed_up: frozenset[int] = frozenset()
    directed_down: frozenset[int] = frozenset()
    has_converse: bool = False
    has_composition: bool = False
    has_identity: bool = False

    def __post_init__(self):
        if self.dimension < 0 or self.dimension > MAX_NAMED_DIMENSION:
            raise StructuralError(f"dimension must be in 0..{MAX_NAMED_DIMENSION}")
        for i in self.cylindrifiers | self.directed_up | self.directed_down:
            if not 0 <= i < self.dimension:
                raise StructuralError(f"operator index {i} outside dimension {self.dimension}")
        for i, j in self.diagonals:
            if not (0 <= i < self.dimension and 0 <= j < self.dimension and i < j):
                raise StructuralError(f"diagonal pair ({i}, {j}) invalid for dimension {self.dimension}")
        for tau in self.substitutions:
            if sorted(tau) != list(range(self.dimension)):
                raise StructuralError(f"substitution {tau} is not a permutation of range({self.dimension})")

    # -- canonical unary operator slots, in a fixed order -------------------

    def unary_names(self) -> list[str]:
        names = [cyl_name(i) for i in sorted(self.cylindrifiers)]
        names += [up_name(i) for i in sorted(self.directed_up)]
        names += [down_name(i) for i in sorted(self.directed_down)]
        names += [perm_name(t) for t in sorted(self.substitutions)]
        if self.has_converse:
            names.append(CONVERSE)
        return names

    def constant_names(self) -> list[str]:
        names = [diag_name(i, j) for i, j in sorted(self.diagonals)]
        if self.has_identity:
            names.append(IDENTITY_CONSTANT)
        return names

    # -- common signatures ---------------------------------------------------

    @staticmethod
    def ca(n: int) -> "Signature":
        return Signature(
            dimension=n,
            cylindrifiers=frozenset(range(n)),
            diagonals=frozenset((i, j) for i in range(n) for j in range(i + 1, n)),
        )

    @staticmethod
    def qea(n: int, perms: Iterable[Sequence[int]]) -> "Signature":
        return Signature(
            dimension=n,
            cylindrifiers=frozenset(range(n)),
            diagonals=frozenset((i, j) for i in range(n) for j in range(i + 1, n)),
            substitutions=frozenset(tuple(t) for t in perms),
        )

    @staticmethod
    def pea(n: int) -> "Signature":
        transpositions = {transposition(i, j, n) for i in range(n) for j in range(i + 1, n)}
        return Signature.qea(n, transpositions)

    @staticmethod
    def ra() -> "Signature":
        return Signature(dimension=0, has_converse=True, has_composition=True, has_identity=True)

    @staticmethod
    def directed(n: int) -> "Signature":
        return Signature(
            dimension=n,
            directed_up=frozenset(range(n)),
            directed_down=frozenset(range(n)),
            diagonals=frozenset((i, j) for i in range(n) for j in range(i + 1, n)),
        )


# ---------------------------------------------------------------------------
# Atom structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AtomStructure:
    """A finite frame: atoms plus the relational data inducing the operators.

    ``unary`` maps operator names to binary relations, ``constants`` maps
    constant names to atom-index sets.  For signatures with composition,
    ``composition`` holds the ternary consistency predicate.
    """

    atoms: tuple[Atom, ...]
    signature: Signature
    unary: Mapping[str, Rel] = field(default_factory=dict)
    constants: Mapping[str, frozenset[int]] = field(default_factory=dict)
    composition: CompositionRule | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "unary", dict(self.unary))
        object.__setattr__(self, "constants", {k: frozenset(v) for k, v in self.constants.items()})
        self.validate()

    @property
    def natoms(self) -> int:
        return len(self.atoms)

    def validate(self) -> None:
        n = self.natoms
        sig = self.signature
        for opname, rel in self.unary.items():
            if rel.n != n:
                raise StructuralError(f"relation for {opname!r} sized for {rel.n} atoms, frame has {n}")
            rel.check_bounds()
        for cname, aset in self.constants.items():
            for a in aset:
                if not 0 <= a < n:
                    raise StructuralError(f"constant {cname!r} contains invalid atom index {a}")
        missing = [name for name in sig.unary_names() if name not in self.unary]
        if missing:
            raise StructuralError(f"signature slots without relations: {missing}")
        # d(i,i) slots are implicitly the full atom set; only declared pairs need entries.
        missing_const = [name for name in (diag_name(i, j) for i, j in sig.diagonals)
                         if name not in self.constants]
        if missing_const:
            raise StructuralError(f"signature constants without values: {missing_const}")
        if sig.has_identity and IDENTITY_CONSTANT not in self.constants:
            raise StructuralError("signature declares an identity constant but none was given")
        if sig.has_composition:
            if self.composition is None:
                raise StructuralError("signature declares composition but no consistency predicate was given")
            if self.composition.n != n:
                raise StructuralError("composition predicate sized for a different atom count")
            self.composition.check_bounds()
        elif self.composition is not None:
            raise StructuralError("composition predicate given but signature does not declare one")
        if sig.has_converse:
            conv = self.unary[CONVERSE]
            if not conv.is_partial_involution():
                raise StructuralError("declared converse relation is not an involution on atoms")

    def atom_index(self, atom: Atom) -> int:
        return self.atoms.index(atom)

    def constant_set(self, name: str) -> frozenset[int]:
        """Constant lookup; d(i,i) defaults to the full atom set."""
        if name in self.constants:
            return self.constants[name]
        if name.startswith("d") and len(name) == 3 and name[1] == name[2]:
            return frozenset(range(self.natoms))
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


class Element:
    """A set of atom indices of one algebra, stored as a bitmask."""

    __slots__ = ("algebra", "bits")

    def __init__(self, algebra: "FiniteBAO", bits: int):
        self.algebra = algebra
        self.bits = bits

    def _check(self, other: "Element") -> None:
        if self.algebra is not other.algebra:
            raise FrameMismatchError("elements belong to different algebras")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Element) and other.algebra is self.algebra and other.bits == self.bits

    def __hash__(self) -> int:
        return hash((id(self.algebra), self.bits))

    def __or__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, self.bits | other.bits)

    def __and__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, self.bits & other.bits)

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, self.bits & ~other.bits)

    def __invert__(self) -> "Element":
        return Element(self.algebra, self.algebra.one_mask & ~self.bits)

    def __le__(self, other: "Element") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def is_zero(self) -> bool:
        return self.bits == 0

    def atom_indices(self) -> list[int]:
        out, bits, i = [], self.bits, 0
        while bits:
            if bits & 1:
                out.append(i)
            bits >>= 1
            i += 1
        return out

    def atom_count(self) -> int:
        return self.bits.bit_count()

    def atoms(self) -> list[Atom]:
        return [self.algebra.frame.atoms[i] for i in self.atom_indices()]

    def __repr__(self) -> str:
        return f"Element({self.atom_indices()})"


# ---------------------------------------------------------------------------
# The algebra: complex algebra of a frame
# ---------------------------------------------------------------------------


class FiniteBAO:
    """Complex algebra of an :class:`AtomStructure`.

    All unary operators are normal and completely additive by construction;
    the Boolean reduct is the full powerset of the atoms.  Operator tables
    are cached at construction time and never mutated afterwards.
    """

    COMP_TABLE_CAP = 512  # precompute the full atom-composition table below this

    def __init__(self, frame: AtomStructure):
        self.frame = frame
        self.natoms = frame.natoms
        self.one_mask = (1 << self.natoms) - 1
        self._unary_masks: dict[str, list[int]] = {
            name: rel.witness_masks() for name, rel in frame.unary.items()
        }
        self._const_masks: dict[str, int] = {}
        for cname, aset in frame.constants.items():
            m = 0
            for a in aset:
                m |= 1 << a
            self._const_masks[cname] = m
        self._comp_table: list[list[int]] | None = None
        if frame.composition is not None and self.natoms <= self.COMP_TABLE_CAP:
            self._comp_table = frame.composition.result_masks()

    # -- signature passthrough ----------------------------------------------

    @property
    def signature(self) -> Signature:
        return self.frame.signature

    @property
    def dimension(self) -> int:
        return self.frame.signature.dimension

    def __len__(self) -> int:
        return 1 << self.natoms

    # -- element construction -------------------------------------------------

    def zero(self) -> Element:
        return Element(self, 0)

    def one(self) -> Element:
        return Element(self, self.one_mask)

    def atom(self, i: int) -> Element:
        if not 0 <= i < self.natoms:
            raise StructuralError(f"atom index {i} out of range")
        return Element(self, 1 << i)

    def element(self, indices: Iterable[int]) -> Element:
        m = 0
        for i in indices:
            if not 0 <= i < self.natoms:
                raise StructuralError(f"atom index {i} out of range")
            m |= 1 << i
        return Element(self, m)

    def from_mask(self, mask: int) -> Element:
        return Element(self, mask & self.one_mask)

    def atom_elements(self) -> list[Element]:
        return [Element(self, 1 << i) for i in range(self.natoms)]

    def elements(self, cap: int = 1 << 20) -> Iterator[Element]:
        if len(self) > cap:
            raise CapExceededError(f"algebra has {len(self)} elements, cap is {cap}")
        for m in range(1 << self.natoms):
            yield Element(self, m)

    # -- operator application --------------------------------------------------

    def has_op(self, name: str) -> bool:
        return name in self._unary_masks

    def apply_mask(self, name: str, bits: int) -> int:
        masks = self._unary_masks[name]
        out = 0
        while bits:
            low = bits & -bits
            out |= masks[low.bit_length() - 1]
            bits ^= low
        return out

    def apply(self, name: str, x: Element) -> Element:
        if x.algebra is not self:
            raise FrameMismatchError("element belongs to a different algebra")
        return Element(self, self.apply_mask(name, x.bits))

    def cyl(self, i: int, x: Element) -> Element:
        return self.apply(cyl_name(i), x)

    def diag(self, i: int, j: int) -> Element:
        if i == j:
            name = diag_name(i, j)
            return Element(self, self._const_masks.get(name, self.one_mask))
        return Element(self, self._const_masks[diag_name(i, j)])

    def constant(self, name: str) -> Element:
        if name not in self._const_masks:
            if name.startswith("d") and len(name) == 3 and name[1] == name[2]:
                return self.one()
            raise KeyError(name)
        return Element(self, self._const_masks[name])

    def subst(self, tau: Sequence[int], x: Element) -> Element:
        return self.apply(perm_name(tau), x)

    def converse(self, x: Element) -> Element:
        return self.apply(CONVERSE, x)

    def compose_masks(self, xbits: int, ybits: int) -> int:
        rule = self.frame.composition
        if rule is None:
            raise StructuralError("algebra has no composition")
        out = 0
        if self._comp_table is not None:
            table = self._comp_table
            b_bits = xbits
            while b_bits:
                lb = b_bits & -b_bits
                row = table[lb.bit_length() - 1]
                c_bits = ybits
                while c_bits:
                    lc = c_bits & -c_bits
                    out |= row[lc.bit_length() - 1]
                    c_bits ^= lc
                b_bits ^= lb
            return out
        for b in Element(self, xbits).atom_indices():
            for c in Element(self, ybits).atom_indices():
                for a in range(self.natoms):
                    if rule.consistent(a, b, c):
                        out |= 1 << a
        return out

    def compose(self, x: Element, y: Element) -> Element:
        if x.algebra is not self or y.algebra is not self:
            raise FrameMismatchError("elements belong to a different algebra")
        return Element(self, self.compose_masks(x.bits, y.bits))

    def __repr__(self) -> str:
        label = self.frame.name or "frame"
        return f"FiniteBAO({label}, {self.natoms} atoms)"


def complex_algebra(frame: AtomStructure) -> FiniteBAO:
    """Build the complex algebra of a validated frame."""
    frame.validate()
    return FiniteBAO(frame)


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


def product(a: FiniteBAO, b: FiniteBAO) -> FiniteBAO:
    """Direct product: atoms are the disjoint union, operators act componentwise."""
    if a.signature != b.signature:
        raise SignatureMismatchError("product requires identical signatures")
    fa, fb = a.frame, b.frame
    off = fa.natoms
    atoms = tuple((0, atom) for atom in fa.atoms) + tuple((1, atom) for atom in fb.atoms)
    unary = {}
    for name in fa.unary:
        pairs = set(fa.unary[name].pairs())
        pairs |= {(x + off, y + off) for x, y in fb.unary[name].pairs()}
        unary[name] = Rel.from_pairs(len(atoms), pairs)
    constants = {}
    for cname in set(fa.constants) | set(fb.constants):
        left = fa.constants.get(cname, frozenset())
        right = fb.constants.get(cname, frozenset())
        constants[cname] = frozenset(left) | frozenset(x + off for x in right)
    composition = None
    if fa.composition is not None:
        triples = {t for t in _consistent_triples(fa.composition)}
        triples |= {(x + off, y + off, z + off) for x, y, z in _consistent_triples(fb.composition)}
        composition = CompositionRule.from_consistent(len(atoms), triples)
    frame = AtomStructure(atoms=atoms, signature=fa.signature, unary=unary,
                          constants=constants, composition=composition,
                          name=f"({fa.name} x {fb.name})")
    return FiniteBAO(frame)


def _consistent_triples(rule: CompositionRule | None) -> Iterator[tuple[int, int, int]]:
    if rule is None:
        return
    for a in range(rule.n):
        for b in range(rule.n):
            for c in range(rule.n):
                if rule.consistent(a, b, c):
                    yield (a, b, c)


def inject_left(prod: FiniteBAO, a: FiniteBAO, x: Element) -> Element:
    """Copy an element of the left factor into the product (right part zero)."""
    return Element(prod, x.bits)


def inject_right(prod: FiniteBAO, a: FiniteBAO, x: Element) -> Element:
    return Element(prod, x.bits << a.natoms)


# ---------------------------------------------------------------------------
# Generated subalgebras
# ---------------------------------------------------------------------------


class Subalgebra:
    """The subalgebra generated by a set of elements, as an atom partition.

    A Boolean subalgebra of a finite powerset algebra is exactly the family
    of unions of the blocks of a partition of the atoms, so the closed set is
    stored that way; it can be exponentially large and is never materialized
    unless explicitly iterated under a cap.
    """

    def __init__(self, parent: FiniteBAO, blocks: tuple[int, ...], generators: tuple[Element, ...]):
        self.parent = parent
        self.blocks = blocks
        self.generators = generators

    def __len__(self) -> int:
        return 1 << len(self.blocks)

    def __contains__(self, x: Element) -> bool:
        if x.algebra is not self.parent:
            raise FrameMismatchError("element belongs to a different algebra")
        bits = x.bits
        for b in self.blocks:
            if bits & b and bits & b != b:
                return False
        return True

    def atoms(self) -> list[Element]:
        return [Element(self.parent, b) for b in self.blocks]

    def elements(self, cap: int = 1 << 16) -> Iterator[Element]:
        if len(self) > cap:
            raise CapExceededError(f"subalgebra has {len(self)} elements, cap is {cap}")
        for combo in range(1 << len(self.blocks)):
            m, c, i = 0, combo, 0
            while c:
                if c & 1:
                    m |= self.blocks[i]
                c >>= 1
                i += 1
            yield Element(self.parent, m)

    def as_bao(self) -> tuple[FiniteBAO, "SubalgebraMaps"]:
        """Quotient view: one atom per block, operators induced from the parent."""
        parent, blocks = self.parent, self.blocks
        nb = len(blocks)
        sig = parent.signature
        unary = {}
        for name in parent.frame.unary:
            pairs = set()
            for bi, bmask in enumerate(blocks):
                img = parent.apply_mask(name, bmask)
                for ai, amask in enumerate(blocks):
                    if img & amask:
                        if img & amask != amask:
                            raise StructuralError(
                                f"operator {name!r} does not respect the subalgebra partition")
                        pairs.add((ai, bi))
            unary[name] = Rel.from_pairs(nb, pairs)
        constants = {}
        for cname in parent.frame.constants:
            cmask = parent.constant(cname).bits
            idxs = set()
            for ai, amask in enumerate(blocks):
                if cmask & amask:
                    if cmask & amask != amask:
                        raise StructuralError(
                            f"constant {cname!r} does not respect the subalgebra partition")
                    idxs.add(ai)
            constants[cname] = frozenset(idxs)
        composition = None
        if parent.frame.composition is not None:
            triples = set()
            for bi, bmask in enumerate(blocks):
                for ci, cmask in enumerate(blocks):
                    res = parent.compose_masks(bmask, cmask)
                    for ai, amask in enumerate(blocks):
                        if res & amask:
                            if res & amask != amask:
                                raise StructuralError(
                                    "composition does not respect the subalgebra partition")
                            triples.add((ai, bi, ci))
            composition = CompositionRule.from_consistent(nb, triples)
        atoms = tuple(tuple(Element(parent, b).atoms()) for b in blocks)
        frame = AtomStructure(atoms=atoms, signature=sig, unary=unary,
                              constants=constants, composition=composition,
                              name=f"Sg({parent.frame.name})")
        sub = FiniteBAO(frame)
        return sub, SubalgebraMaps(self, sub)


class SubalgebraMaps:
    """Element translation between a subalgebra-as-quotient and its parent."""

    def __init__(self, subalgebra: Subalgebra, bao: FiniteBAO):
        self.subalgebra = subalgebra
        self.bao = bao

    def to_sub(self, x: Element) -> Element:
        if x not in self.subalgebra:
            raise StructuralError("element is not in the subalgebra")
        m = 0
        for i, b in enumerate(self.subalgebra.blocks):
            if x.bits & b:
                m |= 1 << i
        return Element(self.bao, m)

    def to_parent(self, y: Element) -> Element:
        if y.algebra is not self.bao:
            raise FrameMismatchError("element does not belong to the subalgebra view")
        m = 0
        for i, b in enumerate(self.subalgebra.blocks):
            if y.bits & (1 << i):
                m |= b
        return Element(self.subalgebra.parent, m)


def _refine(blocks: list[int], mask: int) -> tuple[list[int], bool]:
    out, changed = [], False
    for b in blocks:
        inside, outside = b & mask, b & ~mask
        if inside and outside:
            out.append(inside)
            out.append(outside)
            changed = True
        else:
            out.append(b)
    return out, changed


def generated_subalgebra(algebra: FiniteBAO, generators: Iterable[Element],
                         *, _op_order: str = "forward") -> Subalgebra:
    """Least subuniverse containing the generators and all constants.

    Computed as a partition fixpoint: refine the atom partition by every
    generator, constant, and operator image of a block until stable.  Since
    every signature operator is completely additive, closing on blocks
    closes the whole span.
    """
    gens = tuple(generators)
    for g in gens:
        if g.algebra is not algebra:
            raise FrameMismatchError("generator belongs to a different algebra")
    blocks = [algebra.one_mask] if algebra.natoms else []
    seeds = [g.bits for g in gens]
    seeds += [algebra.constant(c).bits for c in algebra.frame.constants]
    for m in seeds:
        blocks, _ = _refine(blocks, m)
    op_names = list(algebra.frame.unary)
    if _op_order == "reversed":
        op_names.reverse()
    has_comp = algebra.frame.composition is not None
    changed = True
    while changed:
        changed = False
        for name in op_names:
            for b in list(blocks):
                img = algebra.apply_mask(name, b)
                blocks, did = _refine(blocks, img)
                if did:
                    changed = True
        if has_comp:
            for b in list(blocks):
                for c in list(blocks):
                    img = algebra.compose_masks(b, c)
                    blocks, did = _refine(blocks, img)
                    if did:
                        changed = True
    blocks.sort(key=lambda b: b & -b)
    return Subalgebra(algebra, tuple(blocks), gens)
