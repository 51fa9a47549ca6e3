"""Atom splitting over a substitution-equipped tuple algebra.

Start from the product block R inside the full tuple algebra over disjoint
coordinate domains, take the subalgebra it generates, and break each
substituted copy of R into several abstract atoms whose cylindrifications
coincide with those of the original.  When the split count exceeds the first
coordinate domain, the witness term evaluates to zero yet any embedding into
a square set algebra would force it nonzero: that counting mismatch is the
non-representability engine.  Blurring along a small generator set coarsens
the split atoms back into few blocks, and those blocks embed into a "real"
partition of R when they fit inside the coordinate domains.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import (
    AtomStructure,
    Element,
    FiniteBAO,
    Rel,
    Signature,
    Subalgebra,
    SubalgebraMaps,
    compose_perms,
    cyl_name,
    diag_name,
    generated_subalgebra,
    perm_group,
    perm_name,
    transposition,
)
from .errors import CapExceededError, StructuralError
from .morphisms import MorphismWitness, check_homomorphism
from .setalg import full_set_algebra
from .terms import Cyl, Diag, Not, SubstIJ, Term, Var, big_and, eval_term
from .dimension import drop_substitutions

DEFAULT_TUPLE_CAP = 100_000


@dataclass(frozen=True)
class SplitSpec:
    """Parameters: dimension, coordinate domain sizes, split count, and the
    transpositions generating the substitution group."""

    alpha: int
    sizes: tuple[int, ...]
    p: int
    transpositions: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.alpha < 3:
            raise StructuralError("dimension must be at least 3")
        if len(self.sizes) != self.alpha:
            raise StructuralError("need one domain size per coordinate")
        if any(s < 1 for s in self.sizes):
            raise StructuralError("domain sizes must be positive")
        if self.p < 1:
            raise StructuralError("split count must be positive")
        for i, j in self.transpositions:
            if not (0 <= i < self.alpha and 0 <= j < self.alpha and i != j):
                raise StructuralError(f"invalid transposition ({i}, {j})")

    @property
    def group(self) -> frozenset[tuple[int, ...]]:
        gens = [transposition(i, j, self.alpha) for i, j in self.transpositions]
        return perm_group(gens, self.alpha)


@dataclass(frozen=True, eq=False)
class BaseResult:
    """The generated base algebra around the product block R."""

    spec: SplitSpec
    full: FiniteBAO
    r_full: Element
    sub: Subalgebra
    algebra: FiniteBAO
    maps: SubalgebraMaps
    r: Element  # R inside the generated algebra


def build_base(spec: SplitSpec, tuple_cap: int = DEFAULT_TUPLE_CAP) -> BaseResult:
    """Full tuple algebra over the disjoint domains, plus the subalgebra
    generated by the product block; verifies that every substituted copy of
    the block is an atom there and that the copies are pairwise disjoint."""
    base_points = [(i, v) for i in range(spec.alpha) for v in range(spec.sizes[i])]
    total = 1
    for _ in range(spec.alpha):
        total *= len(base_points)
    if total > tuple_cap:
        raise CapExceededError(f"{total} tuples exceeds the cap {tuple_cap}")
    group = spec.group
    full = full_set_algebra(spec.alpha, base_points, substitutions=group, tuple_cap=tuple_cap)
    r_idx = [t for t, atom in enumerate(full.frame.atoms)
             if all(atom[i][0] == i for i in range(spec.alpha))]
    r_full = full.element(r_idx)
    sub = generated_subalgebra(full, [r_full])
    algebra, maps = sub.as_bao()
    r = maps.to_sub(r_full)

    seen: set[int] = set()
    for tau in sorted(group):
        image = algebra.apply(perm_name(tau), r)
        if image.atom_count() != 1:
            raise StructuralError(f"substituted block along {tau} is not an atom of the base algebra")
        if any(image.bits & s for s in seen):
            raise StructuralError("substituted blocks are not pairwise disjoint")
        seen.add(image.bits)
    return BaseResult(spec=spec, full=full, r_full=r_full, sub=sub,
                      algebra=algebra, maps=maps, r=r)


@dataclass(frozen=True, eq=False)
class SplitResult:
    spec: SplitSpec
    base: BaseResult
    algebra: FiniteBAO
    old_to_new: dict[int, int]          # base-algebra atom -> split atom (non-block atoms)
    block_atoms: dict[tuple[tuple[int, ...], int], int]  # (tau, j) -> split atom
    r_atom_of: dict[tuple[int, ...], int]  # tau -> base-algebra atom index of s_tau R

    def embed_base(self, x: Element) -> Element:
        """A base-algebra element, re-read inside the split algebra."""
        if x.algebra is not self.base.algebra:
            raise StructuralError("element does not belong to the base algebra")
        bits = 0
        for a in x.atom_indices():
            if a in self.old_to_new:
                bits |= 1 << self.old_to_new[a]
            else:
                tau = next(t for t, idx in self.r_atom_of.items() if idx == a)
                for j in range(self.spec.p):
                    bits |= 1 << self.block_atoms[(tau, j)]
        return Element(self.algebra, bits)

    @property
    def r_split(self) -> Element:
        return self.embed_base(self.base.r)

    def split_atom(self, tau: Sequence[int], j: int) -> Element:
        return self.algebra.atom(self.block_atoms[(tuple(tau), j)])


def split_block(base: BaseResult, p: int | None = None) -> SplitResult:
    """Replace each substituted copy of R by p abstract atoms.

    The new atoms inherit the cylindrifications of the copy they split; the
    substitutions permute them by acting on the group coordinate.  The result
    is an abstract atomic algebra, not a set algebra.
    """
    spec = base.spec if p is None else SplitSpec(base.spec.alpha, base.spec.sizes,
                                                 p, base.spec.transpositions)
    p = spec.p
    algebra = base.algebra
    group = sorted(spec.group)
    r_atom_of = {}
    for tau in group:
        img = algebra.apply(perm_name(tau), base.r)
        r_atom_of[tau] = img.atom_indices()[0]
    r_family = set(r_atom_of.values())
    if len(r_family) != len(group):
        raise StructuralError("substituted copies of R are not distinct atoms")

    old_atoms = [a for a in range(algebra.natoms) if a not in r_family]
    atoms: list = [("a", a) for a in old_atoms]
    old_to_new = {a: i for i, a in enumerate(old_atoms)}
    block_atoms = {}
    for tau in group:
        for j in range(p):
            block_atoms[(tau, j)] = len(atoms)
            atoms.append(("R", tau, j))
    nn = len(atoms)

    def translate(bits: int) -> int:
        out = 0
        for a in Element(algebra, bits).atom_indices():
            if a in old_to_new:
                out |= 1 << old_to_new[a]
            else:
                tau = next(t for t, idx in r_atom_of.items() if idx == a)
                for j in range(p):
                    out |= 1 << block_atoms[(tau, j)]
        return out

    unary: dict[str, Rel] = {}
    for i in range(spec.alpha):
        pairs = set()
        images: list[int] = [0] * nn
        for a in old_atoms:
            images[old_to_new[a]] = translate(algebra.apply_mask(cyl_name(i), 1 << a))
        for tau in group:
            img = translate(algebra.apply_mask(cyl_name(i), 1 << r_atom_of[tau]))
            for j in range(p):
                images[block_atoms[(tau, j)]] = img
        for b in range(nn):
            img = images[b]
            while img:
                low = img & -img
                pairs.add((low.bit_length() - 1, b))
                img ^= low
        unary[cyl_name(i)] = Rel.from_pairs(nn, pairs)

    for sigma in group:
        image_map = {}
        for a in old_atoms:
            target = algebra.apply_mask(perm_name(sigma), 1 << a).bit_length() - 1
            image_map[old_to_new[a]] = old_to_new[target]
        for tau in group:
            for j in range(p):
                image_map[block_atoms[(tau, j)]] = block_atoms[(compose_perms(sigma, tau), j)]
        unary[perm_name(sigma)] = Rel.from_function(nn, image_map)

    constants = {}
    for i in range(spec.alpha):
        for j in range(i + 1, spec.alpha):
            dmask = algebra.diag(i, j).bits
            if any((dmask >> r_atom_of[tau]) & 1 for tau in group):
                raise StructuralError("a diagonal contains a split copy of R; splitting is unsound")
            constants[diag_name(i, j)] = frozenset(
                old_to_new[a] for a in Element(algebra, dmask).atom_indices())

    frame = AtomStructure(atoms=tuple(atoms), signature=Signature.qea(spec.alpha, spec.group),
                          unary=unary, constants=constants,
                          name=f"split({algebra.frame.name},p={p})")
    return SplitResult(spec=spec, base=base, algebra=FiniteBAO(frame),
                       old_to_new=old_to_new, block_atoms=block_atoms,
                       r_atom_of=r_atom_of)


# ---------------------------------------------------------------------------
# The witness term
# ---------------------------------------------------------------------------


def witness_term(m: int, dimension: int) -> Term:
    """Meet of the first-coordinate transfers of the cylinder of x with the
    off-diagonal constraints; zero exactly when the first domain has at most
    m points.

    The transfer with index pair (0, i) abbreviates c_0(d_0i . y): it reads
    the coordinate-0 content into coordinate i.
    """
    if m + 1 > dimension:
        raise StructuralError(f"witness term for m={m} needs dimension >= {m + 1}")
    x = Var(0)
    cyls: Term = x
    for i in range(m, 0, -1):
        cyls = Cyl(i, cyls)
    parts: list[Term] = [SubstIJ(0, i, cyls) for i in range(m + 1)]
    parts += [Not(Diag(i, j)) for i in range(m + 1) for j in range(i + 1, m + 1)]
    return big_and(parts)


def witness_value(split_result: SplitResult, m: int | None = None) -> Element:
    """Evaluate the witness term at R inside the split algebra."""
    spec = split_result.spec
    m = spec.alpha - 1 if m is None else m
    term = witness_term(m, spec.alpha)
    return eval_term(term, split_result.algebra, {0: split_result.r_split})


# ---------------------------------------------------------------------------
# Blurring and the small subalgebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlurResult:
    split: SplitResult
    generators: tuple[Element, ...]
    blocks: tuple[tuple[int, ...], ...]   # partition of range(p)
    subalgebra: FiniteBAO
    maps: SubalgebraMaps

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def y_element(self, block_index: int, tau: Sequence[int] | None = None) -> Element:
        """Join of the split atoms of one block, inside the small subalgebra."""
        spec = self.split.spec
        tau = tuple(tau) if tau is not None else tuple(range(spec.alpha))
        bits = 0
        for j in self.blocks[block_index]:
            bits |= 1 << self.split.block_atoms[(tau, j)]
        return self.maps.to_sub(Element(self.split.algebra, bits))


def blur(split_result: SplitResult, generators: Iterable[Element]) -> BlurResult:
    """Identify split atoms that no generator separates under any substitution.

    The blocks of the identification bound the size of the generated
    subalgebra; the block count never exceeds 2^(generators x group size).
    """
    gens = tuple(generators)
    for g in gens:
        if g.algebra is not split_result.algebra:
            raise StructuralError("generator does not belong to the split algebra")
    spec = split_result.spec
    group = sorted(spec.group)

    def profile(j: int) -> tuple:
        return tuple((g.bits >> split_result.block_atoms[(tau, j)]) & 1
                     for g in gens for tau in group)

    classes: dict[tuple, list[int]] = {}
    for j in range(spec.p):
        classes.setdefault(profile(j), []).append(j)
    blocks = tuple(sorted((tuple(sorted(v)) for v in classes.values()), key=lambda b: b[0]))
    bound = 2 ** (len(gens) * len(group))
    if len(blocks) > bound:
        raise StructuralError("blur produced more blocks than the generator bound allows")

    part_masks = []
    for a in range(split_result.algebra.natoms):
        atom = split_result.algebra.frame.atoms[a]
        if atom[0] == "a":
            part_masks.append(1 << a)
    for tau in group:
        for block in blocks:
            m = 0
            for j in block:
                m |= 1 << split_result.block_atoms[(tau, j)]
            part_masks.append(m)
    part_masks.sort(key=lambda b: b & -b)
    sub = Subalgebra(split_result.algebra, tuple(part_masks), gens)
    bao, maps = sub.as_bao()
    return BlurResult(split=split_result, generators=gens, blocks=blocks,
                      subalgebra=bao, maps=maps)


# ---------------------------------------------------------------------------
# Real partitions and the representing embedding
# ---------------------------------------------------------------------------


def real_partition(base: BaseResult, q: int) -> list[Element]:
    """Split R into q genuine cells, each with full cylindrifications.

    Each coordinate domain is scored onto the integers mod q with the least
    point scored zero; a cell collects the tuples with a fixed total score.
    Requires every domain to have at least q points.
    """
    spec = base.spec
    if q < 1 or q > min(spec.sizes):
        raise StructuralError("cell count must be between 1 and the least domain size")
    full = base.full

    def score(point: tuple[int, int]) -> int:
        _, v = point
        return v % q

    cells: list[list[int]] = [[] for _ in range(q)]
    for t in base.r_full.atom_indices():
        atom = full.frame.atoms[t]
        total = sum(score(atom[i]) for i in range(spec.alpha)) % q
        cells[total].append(t)
    out = [full.element(c) for c in cells]
    union = full.zero()
    for j, cell in enumerate(out):
        if cell.is_zero():
            raise StructuralError(f"real cell {j} is empty")
        union = union | cell
    if union != base.r_full:
        raise StructuralError("cells do not partition R")
    for i in range(spec.alpha):
        target = full.cyl(i, base.r_full)
        for cell in out:
            if full.cyl(i, cell) != target:
                raise StructuralError("a real cell does not have full cylindrification")
    return out


@dataclass(frozen=True, eq=False)
class RepEmbeddingResult:
    blur: BlurResult
    cells: tuple[Element, ...]
    merged: tuple[Element, ...]  # one set-algebra element per blur block
    target: FiniteBAO
    witness: MorphismWitness
    image_subalgebra: Subalgebra


def rep_embedding(blur_result: BlurResult, q: int | None = None) -> RepEmbeddingResult:
    """Embed the blurred subalgebra into the algebra generated by real cells.

    Block j goes to the j-th real cell, with the last block absorbing the
    remaining cells; everything else is the identity on the base part.  The
    embedding is verified atomwise for the full signature.
    """
    split_result = blur_result.split
    base = split_result.base
    spec = split_result.spec
    p = blur_result.block_count
    if p > min(spec.sizes):
        raise StructuralError(
            f"{p} blocks cannot embed: the least domain has {min(spec.sizes)} points")
    if q is None:
        q = min(spec.sizes)
    cells = real_partition(base, q)
    merged = list(cells[: p - 1])
    rest = cells[p - 1]
    for c in cells[p:]:
        rest = rest | c
    merged.append(rest)

    full = base.full
    group = sorted(spec.group)
    atom_map: dict[int, Element] = {}
    for ai in range(blur_result.subalgebra.natoms):
        bits = blur_result.maps.to_parent(blur_result.subalgebra.atom(ai)).bits
        first_atom = split_result.algebra.frame.atoms[(bits & -bits).bit_length() - 1]
        if first_atom[0] == "a":
            old_idx = first_atom[1]
            atom_map[ai] = base.maps.to_parent(base.algebra.atom(old_idx))
        else:
            _, tau, j = first_atom
            block_idx = next(bi for bi, blk in enumerate(blur_result.blocks) if j in blk)
            atom_map[ai] = full.apply(perm_name(tau), merged[block_idx])

    witness = check_homomorphism(atom_map, blur_result.subalgebra, full)
    image_sub = generated_subalgebra(full, merged)
    for ai, img in atom_map.items():
        if img not in image_sub:
            raise StructuralError("an image atom escaped the generated real subalgebra")
    return RepEmbeddingResult(blur=blur_result, cells=tuple(cells), merged=tuple(merged),
                              target=full, witness=witness, image_subalgebra=image_sub)


# ---------------------------------------------------------------------------
# Embeddings between split algebras
# ---------------------------------------------------------------------------


def split_embedding(split1: SplitResult, split2: SplitResult,
                    chi: Mapping[int, Iterable[int]]) -> MorphismWitness:
    """Embed a coarser split into the substitution reduct of a finer one.

    chi assigns each source split index a nonempty set of target indices;
    the sets must be disjoint and cover the target range.  A source split
    atom goes to the join of its chi-image atoms; the base part is the
    identity.
    """
    if split1.base is not split2.base:
        raise StructuralError("splits must share the same base algebra")
    g1, g2 = split1.spec.group, split2.spec.group
    if not g1 <= g2:
        raise StructuralError("the source substitution group must be contained in the target one")
    p1, p2 = split1.spec.p, split2.spec.p
    image_sets = {j: sorted(set(chi[j])) for j in range(p1)}
    seen: set[int] = set()
    for j, s in image_sets.items():
        if not s:
            raise StructuralError(f"chi({j}) is empty")
        if set(s) & seen:
            raise StructuralError("chi images overlap")
        seen |= set(s)
    if seen != set(range(p2)):
        raise StructuralError("chi images do not cover the target split range")

    target = drop_substitutions(split2.algebra, g1)
    atom_map: dict[int, Element] = {}
    for a in range(split1.algebra.natoms):
        atom = split1.algebra.frame.atoms[a]
        if atom[0] == "a":
            atom_map[a] = target.atom(split2.old_to_new[
                next(old for old, idx in split1.old_to_new.items() if idx == a)])
        else:
            _, tau, j = atom
            bits = 0
            for i in image_sets[j]:
                bits |= 1 << split2.block_atoms[(tau, i)]
            atom_map[a] = Element(target, bits)
    return check_homomorphism(atom_map, split1.algebra, target)
