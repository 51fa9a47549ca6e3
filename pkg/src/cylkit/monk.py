"""Colored-partition atom structures and their complex algebras.

Atoms are pairs (R, f): an equivalence relation R on the dimension set,
and a coloring f of the unordered pairs of distinct R-classes such that no
triangle of pairwise inequivalent indices is monochromatic.  The index range
of R is the structure's dimension m; colors run over range(n).  This
resolution of the two parameter roles is used consistently: it is the one
under which the neat-reduct identities between different dimensions hold,
and it is checked by the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import (
    AtomStructure,
    Element,
    FiniteBAO,
    Rel,
    Signature,
    cyl_name,
    diag_name,
    perm_name,
    transposition,
)
from .dimension import NeatReductResult  # noqa: F401  (re-exported for callers)
from .errors import StructuralError

DEFAULT_DIM_CAP = 4
DEFAULT_COLOR_CAP = 5

Partition = tuple[tuple[int, ...], ...]


@dataclass(frozen=True, order=True)
class MonkAtom:
    """A partition of range(m) plus a coloring of its unordered class pairs.

    ``colors`` maps (bi, bj) with bi < bj (block positions in the sorted
    partition) to a color < n.
    """

    partition: Partition
    colors: tuple[tuple[tuple[int, int], int], ...]

    def color_map(self) -> dict[tuple[int, int], int]:
        return dict(self.colors)

    def block_of(self, k: int) -> int:
        for bi, block in enumerate(self.partition):
            if k in block:
                return bi
        raise KeyError(k)

    def related(self, a: int, b: int) -> bool:
        return self.block_of(a) == self.block_of(b)

    def color(self, a: int, b: int) -> int:
        ba, bb = self.block_of(a), self.block_of(b)
        if ba == bb:
            raise StructuralError(f"indices {a}, {b} are equivalent; no color")
        return self.color_map()[(min(ba, bb), max(ba, bb))]

    def __str__(self) -> str:
        parts = "|".join("".join(map(str, b)) for b in self.partition)
        cols = ",".join(f"{i}{j}:{c}" for (i, j), c in self.colors)
        return f"({parts};{cols})" if cols else f"({parts})"


def _partitions(m: int) -> list[Partition]:
    """All set partitions of range(m), blocks sorted by least element."""
    if m == 0:
        return [()]
    out: list[Partition] = []

    def rec(k: int, blocks: list[list[int]]):
        if k == m:
            out.append(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(k)
            rec(k + 1, blocks)
            b.pop()
        blocks.append([k])
        rec(k + 1, blocks)
        blocks.pop()

    rec(0, [])
    return [tuple(sorted((tuple(sorted(b)) for b in p), key=lambda b: b[0])) for p in out]


def _triangle_free(nblocks: int, colors: dict[tuple[int, int], int]) -> bool:
    for x, y, z in itertools.combinations(range(nblocks), 3):
        if colors[(x, y)] == colors[(x, z)] == colors[(y, z)]:
            return False
    return True


def enumerate_monk_atoms(m: int, n: int) -> list[MonkAtom]:
    """Deterministic enumeration, ordered by partition then coloring."""
    atoms: list[MonkAtom] = []
    for part in sorted(_partitions(m)):
        nb = len(part)
        pairs = list(itertools.combinations(range(nb), 2))
        for assignment in itertools.product(range(n), repeat=len(pairs)):
            colors = dict(zip(pairs, assignment))
            if _triangle_free(nb, colors):
                atoms.append(MonkAtom(part, tuple(sorted(colors.items()))))
    return atoms


def monk_structure(m: int, n: int, *, dim_cap: int = DEFAULT_DIM_CAP,
                   color_cap: int = DEFAULT_COLOR_CAP) -> AtomStructure:
    """The m-dimensional colored-partition frame with n colors.

    Two atoms are i-related when they agree off index i: same partition
    restricted off i, same colors on class pairs avoiding i.  The diagonal
    constant d(i, j) collects the atoms whose partition merges i and j.
    Colors must number at least m - 1 so the frame is nonempty-friendly.
    """
    if m < 3:
        raise StructuralError("dimension must be at least 3")
    if n < m - 1:
        raise StructuralError("need at least m - 1 colors")
    if m > dim_cap or n > color_cap:
        raise StructuralError(
            f"parameters ({m}, {n}) exceed caps ({dim_cap}, {color_cap}); raise the caps explicitly")
    atoms = enumerate_monk_atoms(m, n)
    index = {a: i for i, a in enumerate(atoms)}

    def off_key(atom: MonkAtom, kappa: int):
        rest = [k for k in range(m) if k != kappa]
        part_key = tuple(tuple(x for x in block if x != kappa) for block in atom.partition)
        part_key = tuple(sorted((b for b in part_key if b), key=lambda b: b[0]))
        color_key = []
        for a, b in itertools.combinations(rest, 2):
            if not atom.related(a, b):
                color_key.append(((a, b), atom.color(a, b)))
        return (part_key, tuple(sorted(color_key)))

    unary = {}
    for kappa in range(m):
        buckets: dict = {}
        for atom in atoms:
            buckets.setdefault(off_key(atom, kappa), []).append(index[atom])
        unary[cyl_name(kappa)] = Rel.from_partition(len(atoms), buckets.values())

    constants = {}
    for i in range(m):
        for j in range(i + 1, m):
            constants[diag_name(i, j)] = frozenset(
                index[a] for a in atoms if a.related(i, j))

    frame = AtomStructure(atoms=tuple(atoms), signature=Signature.ca(m),
                          unary=unary, constants=constants,
                          name=f"monk({m},{n})")
    return frame


def monk_algebra(m: int, n: int, **caps) -> FiniteBAO:
    return FiniteBAO(monk_structure(m, n, **caps))


def monk_relativizer(m: int, n: int, k: int, *, dim_cap: int = DEFAULT_DIM_CAP,
                     color_cap: int = 2 * DEFAULT_COLOR_CAP) -> tuple[FiniteBAO, Element]:
    """The distinguished element of the (n, n+k) algebra that relativizes
    down to the (m, m+k) one.

    Its atoms are those whose partition merges nothing at or above m and
    whose colors on pairs with a high index are pinned to that index plus k.
    Returns the big algebra together with the element.
    """
    if not 3 <= m <= n:
        raise StructuralError("need 3 <= m <= n")
    if k < 1:
        raise StructuralError("need k >= 1")
    big = monk_algebra(n, n + k, dim_cap=max(dim_cap, n), color_cap=max(color_cap, n + k))
    sel = []
    for idx, atom in enumerate(big.frame.atoms):
        ok = True
        for u in range(n):
            for v in range(u + 1, n):
                if v >= m and atom.related(u, v):
                    ok = False
        if not ok:
            continue
        for mu in range(m, n):
            for v in range(mu):
                if atom.color(mu, v) != mu + k:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            sel.append(idx)
    return big, big.element(sel)


def johnson_extension(m: int, n: int, **caps) -> AtomStructure:
    """Expand the frame with the transposition actions on atoms.

    The substitution along [i, j] relabels indices i and j inside the atom:
    the partition is conjugated and the coloring follows.  Each action is an
    involution on atoms.
    """
    base = monk_structure(m, n, **caps)
    atoms: tuple[MonkAtom, ...] = base.atoms  # type: ignore[assignment]
    index = {a: i for i, a in enumerate(atoms)}

    def relabel(atom: MonkAtom, i: int, j: int) -> MonkAtom:
        swap = {i: j, j: i}
        part = tuple(sorted(
            (tuple(sorted(swap.get(x, x) for x in block)) for block in atom.partition),
            key=lambda b: b[0]))
        # Position map between old and new blocks, tracked by relabeled content.
        relabeled = [tuple(sorted(swap.get(x, x) for x in block)) for block in atom.partition]
        new_pos = {block: bi for bi, block in enumerate(part)}
        old_to_new = [new_pos[b] for b in relabeled]
        colors = {}
        for (bi, bj), c in atom.colors:
            ni, nj = old_to_new[bi], old_to_new[bj]
            colors[(min(ni, nj), max(ni, nj))] = c
        return MonkAtom(part, tuple(sorted(colors.items())))

    unary = dict(base.unary)
    subs = set()
    for i in range(m):
        for j in range(i + 1, m):
            tau = transposition(i, j, m)
            image = {}
            for idx, atom in enumerate(atoms):
                target = relabel(atom, i, j)
                image[idx] = index[target]
            unary[perm_name(tau)] = Rel.from_function(len(atoms), image)
            subs.add(tau)

    sig = Signature.qea(m, subs)
    return AtomStructure(atoms=atoms, signature=sig, unary=unary,
                         constants=base.constants, name=f"monk-qea({m},{n})")
