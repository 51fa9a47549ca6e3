"""Two-parameter relation algebras, hypernetworks, and hyperbases.

The relation algebras here have atoms Id and a^k(i, j) for i < n-1, j < r,
k < psi, all self-converse, with composition given by a forbidden-triple
list closed under permutations.  Hypernetworks label short tuples of nodes:
pairs get atoms, every other length gets a hyperlabel.  A hyperbasis is a
network family with witness, amalgamation-style, and patching closure; its
complex algebra carries cylindrifier, diagonal, and transposition structure.
"""

from __future__ import annotations

import itertools
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
    perm_name,
    transposition,
)
from .errors import CapExceededError, StructuralError

DEFAULT_NODE_CAP = 4
DEFAULT_ATOM_CAP = 16


# ---------------------------------------------------------------------------
# The base relation algebras
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class HHAtom:
    """Either the identity atom or a labeled atom a^k(i, j)."""

    is_id: bool
    i: int = 0
    j: int = 0
    k: int = 0

    def __str__(self) -> str:
        return "Id" if self.is_id else f"a{self.k}({self.i},{self.j})"


def hh_atoms(n: int, r: int, psi: int) -> list[HHAtom]:
    atoms = [HHAtom(True)]
    for i in range(n - 1):
        for j in range(r):
            for k in range(psi):
                atoms.append(HHAtom(False, i, j, k))
    return atoms


def hh_structure(n: int, r: int, psi: int) -> AtomStructure:
    """Atom structure of the (n, r) relation algebra at splitting width psi.

    Forbidden are all permutations of a triple containing Id and two distinct
    atoms, and all permutations of two atoms from one (i, j) family with a
    third from the same i and equal-or-later j.  Everything else composes.

    With only two levels (n = 3) that rule as displayed is not associative:
    (a;a);b and a;(a;b) disagree for a in the one family and b in the other.
    The unique minimal completion keeps associativity and the intended
    compositions: at the top level, family triples whose superscript pattern
    has exactly two equal members stay consistent.  The exception is applied
    only at n = 3; from three levels up the plain rule is associative and is
    used verbatim.  The tests cross-check associativity exhaustively.
    """
    if n < 3:
        raise StructuralError("need n >= 3")
    if r < 0 or psi < max(n, r):
        raise StructuralError("need psi >= max(n, r)")
    atoms = hh_atoms(n, r, psi)
    index = {a: x for x, a in enumerate(atoms)}
    forbidden: set[tuple[int, int, int]] = set()

    def forbid(a: int, b: int, c: int) -> None:
        for t in itertools.permutations((a, b, c)):
            forbidden.add(t)

    idx_id = index[HHAtom(True)]
    for s in atoms:
        for t in atoms:
            if s != t:
                forbid(idx_id, index[s], index[t])
    for i in range(n - 1):
        for j in range(r):
            for j2 in range(j, r):
                for k in range(psi):
                    for k2 in range(psi):
                        for k3 in range(psi):
                            if n == 3 and i == n - 2 and j == j2:
                                ks = sorted((k, k2, k3))
                                if ks[0] == ks[1] != ks[2] or ks[0] != ks[1] == ks[2]:
                                    continue
                            forbid(index[HHAtom(False, i, j2, k3)],
                                   index[HHAtom(False, i, j, k)],
                                   index[HHAtom(False, i, j, k2)])

    na = len(atoms)
    frame = AtomStructure(
        atoms=tuple(atoms),
        signature=Signature.ra(),
        unary={CONVERSE: Rel.from_function(na, {x: x for x in range(na)})},
        constants={IDENTITY_CONSTANT: frozenset({idx_id})},
        composition=CompositionRule.from_forbidden(na, forbidden),
        name=f"hh({n},{r},{psi})",
    )
    return frame


def hh_algebra(n: int, r: int, psi: int) -> FiniteBAO:
    algebra = FiniteBAO(hh_structure(n, r, psi))
    _assert_permutation_closed(algebra)
    return algebra


def _assert_permutation_closed(algebra: FiniteBAO) -> None:
    rule = algebra.frame.composition
    assert rule is not None
    stored = rule.stored_triples()
    for t in stored:
        for p in itertools.permutations(t):
            if p not in stored:
                raise StructuralError(f"triple set is not closed under permutations at {t}")


# ---------------------------------------------------------------------------
# Hypernetworks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Hypernetwork:
    """A labeling of tuples over the node set.

    ``pair_labels`` is row-major over ordered node pairs; entries are atom
    indices of the underlying algebra.  ``hyper_labels`` stores the label
    index of every tuple of length != 2 explicitly only when more than one
    hyperlabel exists; with a single hyperlabel it stays empty.
    """

    nodes: int
    width: int
    pair_labels: tuple[int, ...]
    hyper_labels: tuple[tuple[tuple[int, ...], int], ...] = ()

    def pair(self, x: int, y: int) -> int:
        return self.pair_labels[x * self.nodes + y]

    def hyper(self, xbar: tuple[int, ...]) -> int:
        if not self.hyper_labels:
            return 0
        for t, lab in self.hyper_labels:
            if t == xbar:
                return lab
        raise KeyError(xbar)

    def compose(self, sigma: Sequence[int]) -> "Hypernetwork":
        """Relabel along a node map: (N o sigma)(xbar) = N(sigma(xbar))."""
        m = self.nodes
        pl = tuple(self.pair(sigma[x], sigma[y]) for x in range(m) for y in range(m))
        hy = tuple(sorted((t, self.hyper(tuple(sigma[v] for v in t)))
                          for t, _ in self.hyper_labels))
        return Hypernetwork(m, self.width, pl, hy)

    def restrict(self, m: int) -> "Hypernetwork":
        """Keep only tuples over the first m nodes; width is unchanged."""
        if m > self.nodes:
            raise StructuralError("cannot restrict to more nodes than present")
        pl = tuple(self.pair(x, y) for x in range(m) for y in range(m))
        hy = tuple(sorted((t, lab) for t, lab in self.hyper_labels
                          if all(v < m for v in t)))
        return Hypernetwork(m, self.width, pl, hy)

    def agrees_off(self, other: "Hypernetwork", avoid: frozenset[int]) -> bool:
        if (self.nodes, self.width) != (other.nodes, other.width):
            return False
        m = self.nodes
        for x in range(m):
            if x in avoid:
                continue
            for y in range(m):
                if y in avoid:
                    continue
                if self.pair(x, y) != other.pair(x, y):
                    return False
        if self.hyper_labels or other.hyper_labels:
            mine = {t: lab for t, lab in self.hyper_labels if not (set(t) & avoid)}
            theirs = {t: lab for t, lab in other.hyper_labels if not (set(t) & avoid)}
            if mine != theirs:
                return False
        return True

    def off_key(self, avoid: frozenset[int]):
        m = self.nodes
        pairs = tuple(self.pair(x, y) for x in range(m) for y in range(m)
                      if x not in avoid and y not in avoid)
        hyper = tuple(sorted((t, lab) for t, lab in self.hyper_labels
                             if not (set(t) & avoid)))
        return (pairs, hyper)

    def __str__(self) -> str:
        cells = ",".join(f"{x}{y}:{self.pair(x, y)}"
                         for x in range(self.nodes) for y in range(x + 1, self.nodes))
        return f"N[{cells}]"


def all_short_tuples(nodes: int, width: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for length in range(width + 1):
        if length == 2:
            continue
        out.extend(itertools.product(range(nodes), repeat=length))
    return out


def verify_network(net: Hypernetwork, algebra: FiniteBAO, lam_count: int = 1) -> list[str]:
    """Independent check of the three network laws; returns violation notes."""
    problems = []
    m = net.nodes
    id_mask = algebra.constant(IDENTITY_CONSTANT).bits
    rule = algebra.frame.composition
    assert rule is not None
    for x in range(m):
        if not (1 << net.pair(x, x)) & id_mask:
            problems.append(f"diagonal ({x},{x}) not below the identity")
    for x in range(m):
        for y in range(m):
            for z in range(m):
                if not rule.consistent(net.pair(x, y), net.pair(x, z), net.pair(z, y)):
                    problems.append(f"triangle ({x},{y},{z}) inconsistent")
    # Tuple-equality law: coordinatewise identity-linked tuples share labels.
    linked = [[bool((1 << net.pair(x, y)) & id_mask) for y in range(m)] for x in range(m)]
    for x in range(m):
        for y in range(m):
            if linked[x][y]:
                for z in range(m):
                    if net.pair(x, z) != net.pair(y, z) or net.pair(z, x) != net.pair(z, y):
                        problems.append(f"identity-linked nodes {x},{y} disagree at {z}")
    if lam_count > 1:
        for t, lab in net.hyper_labels:
            for t2 in all_short_tuples(m, net.width):
                if len(t2) == len(t) and all(linked[t[v]][t2[v]] for v in range(len(t))):
                    if net.hyper(t2) != lab:
                        problems.append(f"identity-linked tuples {t},{t2} disagree")
    return problems


@dataclass(frozen=True)
class NetworkFamily:
    """Result of an enumeration: the networks plus context."""

    algebra: FiniteBAO
    nodes: int
    width: int
    lam: tuple[str, ...]
    networks: tuple[Hypernetwork, ...]
    converse_assumed: bool

    def __len__(self) -> int:
        return len(self.networks)


def enumerate_hypernetworks(algebra: FiniteBAO, nodes: int, width: int,
                            lam: Sequence[str] = ("l0",), *,
                            node_cap: int = DEFAULT_NODE_CAP,
                            atom_cap: int = DEFAULT_ATOM_CAP) -> NetworkFamily:
    """All hypernetworks over the algebra, by backtracking on node pairs.

    Pair labels are forced symmetric through the converse; for frames with
    non-self-converse atoms this is an extra assumption, recorded in the
    result.  With a single hyperlabel the non-pair labels are forced; with
    more, labels are assigned per identity-linked tuple class under a cap.
    """
    if not lam:
        raise StructuralError("need at least one hyperlabel")
    if nodes > node_cap:
        raise CapExceededError(f"{nodes} nodes exceeds cap {node_cap}; raise node_cap explicitly")
    if algebra.natoms > atom_cap:
        raise CapExceededError(
            f"{algebra.natoms} atoms exceeds cap {atom_cap}; raise atom_cap explicitly")
    if width < nodes:
        raise StructuralError("width below the node count")
    rule = algebra.frame.composition
    if rule is None or not algebra.signature.has_converse:
        raise StructuralError("hypernetworks need a relation-algebra style frame")
    na = algebra.natoms
    id_mask = algebra.constant(IDENTITY_CONSTANT).bits
    sub_id = [a for a in range(na) if (1 << a) & id_mask]
    conv = [algebra.apply_mask(CONVERSE, 1 << a).bit_length() - 1 for a in range(na)]
    converse_assumed = any(conv[a] != a for a in range(na))

    pairs = [(x, y) for x in range(nodes) for y in range(x + 1, nodes)]
    diag_choices = list(itertools.product(sub_id, repeat=nodes))

    def consistent_triangles(grid: list[list[int | None]]) -> bool:
        for x in range(nodes):
            for y in range(nodes):
                for z in range(nodes):
                    a, b, c = grid[x][y], grid[x][z], grid[z][y]
                    if a is None or b is None or c is None:
                        continue
                    if not rule.consistent(a, b, c):
                        return False
        return True

    base_nets: list[Hypernetwork] = []

    def assign(grid: list[list[int | None]], at: int) -> None:
        if at == len(pairs):
            flat = tuple(grid[x][y] for x in range(nodes) for y in range(nodes))  # type: ignore[misc]
            base_nets.append(Hypernetwork(nodes, width, flat))
            return
        x, y = pairs[at]
        for a in range(na):
            grid[x][y] = a
            grid[y][x] = conv[a]
            if _local_triangles_ok(grid, nodes, rule, x, y):
                assign(grid, at + 1)
        grid[x][y] = None
        grid[y][x] = None

    for diag in diag_choices:
        grid: list[list[int | None]] = [[None] * nodes for _ in range(nodes)]
        for xnode in range(nodes):
            grid[xnode][xnode] = diag[xnode]
        if consistent_triangles(grid):
            assign(grid, 0)

    networks: list[Hypernetwork] = []
    for net in base_nets:
        if verify_network(net, algebra, 1):
            continue
        networks.extend(_hyper_extensions(net, algebra, len(lam), id_mask))

    networks = sorted(set(networks))
    return NetworkFamily(algebra=algebra, nodes=nodes, width=width, lam=tuple(lam),
                         networks=tuple(networks), converse_assumed=converse_assumed)


def _local_triangles_ok(grid, nodes, rule, x, y) -> bool:
    for z in range(nodes):
        for (p, q, s) in (
            (x, y, z), (x, z, y), (z, y, x),
            (y, x, z), (y, z, x), (z, x, y),
        ):
            a, b, c = grid[p][q], grid[p][s], grid[s][q]
            if a is None or b is None or c is None:
                continue
            if not rule.consistent(a, b, c):
                return False
    return True


def _hyper_extensions(net: Hypernetwork, algebra: FiniteBAO, lam_count: int,
                      id_mask: int, class_cap: int = 16) -> list[Hypernetwork]:
    if lam_count == 1:
        return [net]
    m = net.nodes
    linked = [[bool((1 << net.pair(x, y)) & id_mask) for y in range(m)] for x in range(m)]
    tuples = all_short_tuples(m, net.width)
    classes: dict[tuple, list[tuple[int, ...]]] = {}
    reps: list[tuple] = []
    for t in tuples:
        for rep in reps:
            if len(rep) == len(t) and all(linked[rep[v]][t[v]] for v in range(len(t))):
                classes[rep].append(t)
                break
        else:
            reps.append(t)
            classes[t] = [t]
    if len(reps) > class_cap:
        raise CapExceededError(
            f"{len(reps)} tuple classes with {lam_count} hyperlabels exceeds the cap")
    out = []
    for combo in itertools.product(range(lam_count), repeat=len(reps)):
        labels = []
        for rep, lab in zip(reps, combo):
            labels.extend((t, lab) for t in classes[rep])
        out.append(Hypernetwork(m, net.width, net.pair_labels, tuple(sorted(labels))))
    return out


# ---------------------------------------------------------------------------
# Hyperbasis checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperbasisReport:
    ok: bool
    clause: str | None = None
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


def is_symmetric(family: NetworkFamily) -> bool:
    """Closure under composing with every node map (not just permutations)."""
    nets = set(family.networks)
    m = family.nodes
    for net in family.networks:
        for sigma in itertools.product(range(m), repeat=m):
            if net.compose(sigma) not in nets:
                return False
    return True


def is_hyperbasis(family: NetworkFamily) -> HyperbasisReport:
    """Check the atom-coverage, witness, and patching clauses exhaustively."""
    algebra = family.algebra
    nets = family.networks
    net_set = set(nets)
    m = family.nodes
    rule = algebra.frame.composition
    assert rule is not None

    covered = {net.pair(0, 1) for net in nets}
    for a in range(algebra.natoms):
        if a not in covered:
            return HyperbasisReport(False, "atom_coverage", algebra.frame.atoms[a])

    by_off: dict[tuple[int, object], dict] = {}
    for z in range(m):
        bucket: dict = {}
        for net in nets:
            bucket.setdefault(net.off_key(frozenset({z})), []).append(net)
        by_off[z] = bucket

    for net in nets:
        for x in range(m):
            for y in range(m):
                for z in range(m):
                    if z in (x, y):
                        continue
                    nxy = net.pair(x, y)
                    for a in range(algebra.natoms):
                        for b in range(algebra.natoms):
                            if not rule.consistent(nxy, a, b):
                                continue
                            found = False
                            for cand in by_off[z].get(net.off_key(frozenset({z})), ()):
                                if cand.pair(x, z) == a and cand.pair(z, y) == b:
                                    found = True
                                    break
                            if not found:
                                return HyperbasisReport(
                                    False, "witness",
                                    {"network": str(net), "x": x, "y": y, "z": z,
                                     "a": str(algebra.frame.atoms[a]),
                                     "b": str(algebra.frame.atoms[b])})

    for big in nets:
        for other in nets:
            for x in range(m):
                for y in range(m):
                    if x == y:
                        continue
                    if not big.agrees_off(other, frozenset({x, y})):
                        continue
                    ok = any(big.agrees_off(l_net, frozenset({x}))
                             and l_net.agrees_off(other, frozenset({y}))
                             for l_net in nets)
                    if not ok:
                        return HyperbasisReport(
                            False, "patching",
                            {"m": str(big), "n": str(other), "x": x, "y": y})

    return HyperbasisReport(True)


def remove_one(family: NetworkFamily, index: int = 0) -> NetworkFamily:
    nets = list(family.networks)
    del nets[index]
    return NetworkFamily(algebra=family.algebra, nodes=family.nodes, width=family.width,
                         lam=family.lam, networks=tuple(nets),
                         converse_assumed=family.converse_assumed)


# ---------------------------------------------------------------------------
# The complex algebra of a hyperbasis
# ---------------------------------------------------------------------------


def ca_of_hyperbasis(family: NetworkFamily, *, with_substitutions: bool = True) -> FiniteBAO:
    """Cylindrifier/diagonal/transposition algebra whose atoms are the networks.

    Networks are i-related when they agree off node i; the (i, j) diagonal
    collects networks whose (i, j) label sits below the identity; the
    transposition [i, j] acts by composing with the node swap.
    """
    nets = family.networks
    if not nets:
        raise StructuralError("empty network family")
    m = family.nodes
    algebra = family.algebra
    index = {net: x for x, net in enumerate(nets)}
    nn = len(nets)
    id_mask = algebra.constant(IDENTITY_CONSTANT).bits

    unary: dict[str, Rel] = {}
    for i in range(m):
        buckets: dict = {}
        for net in nets:
            buckets.setdefault(net.off_key(frozenset({i})), []).append(index[net])
        unary[cyl_name(i)] = Rel.from_partition(nn, buckets.values())

    subs = set()
    if with_substitutions:
        for i in range(m):
            for j in range(i + 1, m):
                tau = transposition(i, j, m)
                image = {}
                for net in nets:
                    target = net.compose(tau)
                    if target not in index:
                        raise StructuralError(
                            "family is not closed under node swaps; "
                            "build from a symmetric family or pass with_substitutions=False")
                    image[index[net]] = index[target]
                unary[perm_name(tau)] = Rel.from_function(nn, image)
                subs.add(tau)

    constants = {}
    for i in range(m):
        for j in range(i + 1, m):
            constants[diag_name(i, j)] = frozenset(
                index[net] for net in nets if (1 << net.pair(i, j)) & id_mask)

    sig = Signature.qea(m, subs) if with_substitutions else Signature.ca(m)
    frame = AtomStructure(atoms=tuple(nets), signature=sig, unary=unary,
                          constants=constants,
                          name=f"CaH({algebra.frame.name},{m})")
    return FiniteBAO(frame)


def restrict_family(family: NetworkFamily, m: int) -> NetworkFamily:
    """Node restriction of every network, de-duplicated."""
    nets = sorted({net.restrict(m) for net in family.networks})
    return NetworkFamily(algebra=family.algebra, nodes=m, width=family.width,
                         lam=family.lam, networks=tuple(nets),
                         converse_assumed=family.converse_assumed)


def base_embedding_atom_map(family: NetworkFamily) -> dict[int, list[int]]:
    """For each base atom a, the networks whose (0, 1) label is below a.

    This is the embedding of the base relation algebra into the
    relation-algebra reduct (on coordinates (0, 1)) of the network algebra.
    """
    out: dict[int, list[int]] = {}
    for a in range(family.algebra.natoms):
        out[a] = [x for x, net in enumerate(family.networks)
                  if net.pair(0, 1) == a]
    return out


def x_element(family: NetworkFamily, ca: FiniteBAO, m: int) -> Element:
    """Networks every one of whose high nodes is identity-linked to a low one.

    Relativizing the network algebra to this element cuts the node count
    down from family.nodes to m.
    """
    n = family.nodes
    if not 0 < m <= n:
        raise StructuralError("need 0 < m <= nodes")
    id_mask = family.algebra.constant(IDENTITY_CONSTANT).bits
    sel = []
    for idx, net in enumerate(family.networks):
        if all(any((1 << net.pair(i, j)) & id_mask for i in range(m))
               for j in range(m, n)):
            sel.append(idx)
    return ca.element(sel)
