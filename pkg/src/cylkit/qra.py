"""Quasi-projective relation algebras: the projection axioms, the terms that
carve cylindric structure out of a relation algebra, and successor/predecessor.

A genuinely representable, non-degenerate algebra with quasi-projections
needs a base whose square injects into it, so no nontrivial finite instance
exists.  Everything here is therefore exercised on degenerate instances (the
two-element algebra with total identity), and every structural claim is kept
conditional on the projection axioms actually holding.  Two displayed
readings of the axioms and of the coordinate-filter terms are offered behind
the ``verbatim`` flag; the default is the standard reading, and degenerate
instances cannot tell the two apart.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

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
)
from .errors import CapExceededError, StructuralError
from .terms import (
    And,
    Compose,
    Conv,
    Equation,
    Exhaustive,
    IdConst,
    One,
    Term,
    Var,
    VarietyReport,
    big_and,
    ca_axioms,
    check_variety,
    eval_term,
)

P_VAR = 100
Q_VAR = 101
P = Var(P_VAR)
Q = Var(Q_VAR)
ID = IdConst()
ONE = One()


def trivial_qra() -> FiniteBAO:
    """The two-element relation algebra with total identity."""
    frame = AtomStructure(
        atoms=("1'",),
        signature=Signature.ra(),
        unary={CONVERSE: Rel.from_function(1, {0: 0})},
        constants={IDENTITY_CONSTANT: frozenset({0})},
        composition=CompositionRule.from_consistent(1, {(0, 0, 0)}),
        name="trivial-qra",
    )
    return FiniteBAO(frame)


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuasiprojectionReport:
    ok: bool
    failing: str | None = None
    verbatim: bool = False

    def __bool__(self) -> bool:
        return self.ok


def is_functional(algebra: FiniteBAO, x: Element) -> bool:
    return algebra.compose(x, algebra.converse(x)) <= algebra.constant(IDENTITY_CONSTANT)


def check_quasiprojections(algebra: FiniteBAO, p: Element, q: Element,
                           verbatim: bool = False) -> QuasiprojectionReport:
    """The two projections must be single-valued with jointly total pairing.

    Standard reading: conv(p);p <= 1', conv(q);q <= 1', conv(p);q = 1.  The
    verbatim reading replaces the second axiom by q;q <= 1, which every
    element satisfies; it is kept only for comparison.
    """
    ident = algebra.constant(IDENTITY_CONSTANT)
    one = algebra.one()
    if not algebra.compose(algebra.converse(p), p) <= ident:
        return QuasiprojectionReport(False, "conv(p);p <= 1'", verbatim)
    if verbatim:
        if not algebra.compose(q, q) <= one:
            return QuasiprojectionReport(False, "q;q <= 1", verbatim)
    else:
        if not algebra.compose(algebra.converse(q), q) <= ident:
            return QuasiprojectionReport(False, "conv(q);q <= 1'", verbatim)
    if algebra.compose(algebra.converse(p), q) != one:
        return QuasiprojectionReport(False, "conv(p);q = 1", verbatim)
    return QuasiprojectionReport(True, None, verbatim)


def quasiprojection_search(algebra: FiniteBAO, element_cap: int = 1 << 16) -> tuple[Element, Element] | None:
    """Exhaustive search for a projection pair over all element pairs."""
    if len(algebra) ** 2 > element_cap ** 2 or len(algebra) > element_cap:
        raise CapExceededError("element space too large for exhaustive projection search")
    elems = list(algebra.elements(element_cap))
    ident = algebra.constant(IDENTITY_CONSTANT)
    functional = [x for x in elems
                  if algebra.compose(algebra.converse(x), x) <= ident]
    one = algebra.one()
    for p in functional:
        for q in functional:
            if algebra.compose(algebra.converse(p), q) == one:
                return (p, q)
    return None


@dataclass(frozen=True)
class QraContext:
    algebra: FiniteBAO
    p: Element
    q: Element
    verbatim: bool = False

    def __post_init__(self):
        report = check_quasiprojections(self.algebra, self.p, self.q, self.verbatim)
        if not report.ok:
            raise StructuralError(f"quasi-projection axiom failed: {report.failing}")


# ---------------------------------------------------------------------------
# The term scheme
# ---------------------------------------------------------------------------


def power(t: Term, k: int) -> Term:
    out: Term = ID
    for _ in range(k):
        out = Compose(out, t)
    return out


def dom_term(t: Term) -> Term:
    return And(ID, Compose(t, Conv(t)))


def ran_term(t: Term) -> Term:
    return And(ID, Compose(Conv(t), t))


@dataclass(frozen=True)
class QraTerms:
    """The coordinate terms at width n, over free projection variables.

    All terms use Var(100) and Var(101) for the two projections.  With
    ``verbatim`` set, the coordinate filter drops the converse on its second
    factor and the diagonal drops its converse, matching the displayed
    forms; the default adds them, which is the reading under which the
    filter tests agreement of a coordinate.
    """

    n: int
    verbatim: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise StructuralError("the term scheme needs width at least 2")

    @property
    def epsilon(self) -> Term:
        return dom_term(power(Q, self.n - 1))

    def pi(self, i: int) -> Term:
        if not 0 <= i < self.n:
            raise StructuralError(f"coordinate {i} outside width {self.n}")
        if i == self.n - 1:
            return power(Q, self.n - 1)
        return Compose(self.epsilon, Compose(power(Q, i), P))

    def xi(self, i: int) -> Term:
        pi = self.pi(i)
        if self.verbatim:
            return Compose(pi, pi)
        return Compose(pi, Conv(pi))

    def t_without(self, i: int) -> Term:
        return big_and([self.xi(j) for j in range(self.n) if j != i])

    @property
    def t_all(self) -> Term:
        return big_and([self.xi(j) for j in range(self.n)])

    def c(self, i: int, arg: Term) -> Term:
        return Compose(arg, self.t_without(i))

    def d(self, i: int, j: int) -> Term:
        meet = And(self.pi(i), self.pi(j))
        if self.verbatim:
            return Compose(ONE, meet)
        return Compose(ONE, Conv(meet))

    @property
    def one_n(self) -> Term:
        return Compose(ONE, self.epsilon)

    def membership(self, arg: Term) -> Term:
        """x belongs to the width-n universe when x = 1;x;t."""
        return Compose(ONE, Compose(arg, self.t_all))

    def suc(self, arg: Term) -> Term:
        return Compose(ONE, Compose(Conv(P), Compose(arg, Conv(Q))))

    def pred(self, arg: Term) -> Term:
        return Compose(Conv(P), Compose(ran_term(arg), Q))

    def all_terms(self) -> dict[str, Term]:
        out = {
            "epsilon": self.epsilon,
            "t": self.t_all,
            "one_n": self.one_n,
            "dom_q": dom_term(Q),
            "ran_q": ran_term(Q),
            "suc": self.suc(Var(0)),
            "pred": self.pred(Var(0)),
        }
        for i in range(self.n):
            out[f"pi_{i}"] = self.pi(i)
            out[f"xi_{i}"] = self.xi(i)
            out[f"t_without_{i}"] = self.t_without(i)
            out[f"c_{i}"] = self.c(i, Var(0))
        for i in range(self.n):
            for j in range(i + 1, self.n):
                out[f"d_{i}{j}"] = self.d(i, j)
        return out


# ---------------------------------------------------------------------------
# The carved-out cylindric structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WidthAlgebraResult:
    context: QraContext
    n: int
    carrier: tuple[int, ...]          # element bitmasks in the ambient algebra
    closure: dict[str, bool]
    algebra: FiniteBAO | None
    ca_report: VarietyReport | None
    to_ambient: dict[int, int] | None  # sub atom index -> ambient bitmask

    @property
    def closed(self) -> bool:
        return all(self.closure.values())


def build_width_algebra(ctx: QraContext, n: int, element_cap: int = 1 << 12) -> WidthAlgebraResult:
    """Collect the width-n elements and rebuild them as a cylindric-style algebra.

    Membership is x = 1;x;t.  The closure report covers joins, meets,
    relative complements, the derived cylindrifiers, and the derived
    diagonals; when everything closes and the family is atomic, the derived
    structure is returned as an algebra and checked against the cylindric
    axioms exhaustively.
    """
    algebra = ctx.algebra
    if len(algebra) > element_cap:
        raise CapExceededError(f"ambient algebra has {len(algebra)} elements, cap {element_cap}")
    terms = QraTerms(n, ctx.verbatim)
    assign = {P_VAR: ctx.p, Q_VAR: ctx.q}

    t_mask = eval_term(terms.t_all, algebra, assign).bits
    one_mask = algebra.one_mask

    def width_member(mask: int) -> bool:
        inner = algebra.compose_masks(mask, t_mask)
        return algebra.compose_masks(one_mask, inner) == mask

    carrier = [m for m in range(1 << algebra.natoms) if width_member(m)]
    carrier_set = set(carrier)
    one_n = eval_term(terms.one_n, algebra, assign).bits

    t_i_masks = {}
    for i in range(n):
        t_i_masks[i] = eval_term(terms.t_without(i), algebra, assign).bits
    d_masks = {}
    for i in range(n):
        for j in range(i + 1, n):
            d_masks[(i, j)] = eval_term(terms.d(i, j), algebra, assign).bits

    def c_of(i: int, mask: int) -> int:
        return algebra.compose_masks(mask, t_i_masks[i])

    closure = {
        "zero": 0 in carrier_set,
        "unit": one_n in carrier_set,
        "joins": all((x | y) in carrier_set for x in carrier for y in carrier),
        "meets": all((x & y) in carrier_set for x in carrier for y in carrier),
        "relative_complements": all((one_n & ~x) in carrier_set for x in carrier),
        "cylindrifiers": all(c_of(i, x) in carrier_set for i in range(n) for x in carrier),
        "diagonals": all(m in carrier_set for m in d_masks.values()),
    }
    if not all(closure.values()):
        return WidthAlgebraResult(ctx, n, tuple(carrier), closure, None, None, None)

    # Atoms of the carrier: minimal nonzero members.
    nonzero = [m for m in carrier if m]
    atoms = [m for m in nonzero if not any(x and x != m and (x & ~m) == 0 for x in nonzero)]
    atoms.sort()
    index = {m: i for i, m in enumerate(atoms)}
    covered = 0
    for m in atoms:
        covered |= m
    if covered != one_n or any((m & ~one_n) for m in carrier):
        return WidthAlgebraResult(ctx, n, tuple(carrier),
                                  {**closure, "atomic": False}, None, None, None)

    def decompose(mask: int) -> list[int]:
        out = []
        for m in atoms:
            if m & mask:
                if m & mask != m:
                    raise StructuralError("width-n family is not atomistic")
                out.append(index[m])
        return out

    nb = len(atoms)
    unary = {}
    for i in range(n):
        pairs = set()
        for bm in atoms:
            img = c_of(i, bm)
            for ai in decompose(img):
                pairs.add((ai, index[bm]))
        unary[cyl_name(i)] = Rel.from_pairs(nb, pairs)
    constants = {}
    for (i, j), dm in d_masks.items():
        constants[diag_name(i, j)] = frozenset(decompose(dm))

    frame = AtomStructure(atoms=tuple(f"b{i}" for i in range(nb)),
                          signature=Signature.ca(n), unary=unary, constants=constants,
                          name=f"width{n}({algebra.frame.name})")
    sub = FiniteBAO(frame)
    report = check_variety(sub, ca_axioms(n), Exhaustive(cap=1 << 22))
    return WidthAlgebraResult(ctx, n, tuple(carrier), closure, sub, report,
                              {i: m for i, m in enumerate(atoms)})


def suc_pred_roundtrip(ctx: QraContext, n: int = 3) -> list[tuple[int, bool]]:
    """For every element fixed by the first derived cylindrifier, check that
    successor and predecessor invert each other.  Returns (mask, ok) pairs."""
    algebra = ctx.algebra
    terms = QraTerms(n, ctx.verbatim)
    assign = {P_VAR: ctx.p, Q_VAR: ctx.q}
    t0 = eval_term(terms.t_without(0), algebra, assign).bits
    results = []
    for m in range(1 << algebra.natoms):
        if algebra.compose_masks(m, t0) != m:
            continue
        x = Element(algebra, m)
        sp = eval_term(terms.suc(Var(0)), algebra, {**assign, 0: eval_term(terms.pred(Var(0)), algebra, {**assign, 0: x})})
        ps = eval_term(terms.pred(Var(0)), algebra, {**assign, 0: eval_term(terms.suc(Var(0)), algebra, {**assign, 0: x})})
        results.append((m, sp == x and ps == x))
    return results
