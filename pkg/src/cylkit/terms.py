"""Term language, equation checking, and schema instantiation.

Terms are abstract syntax trees over the operator vocabulary of the
algebras in :mod:`cylkit.core`.  Index slots hold ints once concrete;
schema templates use string index variables that get instantiated by
injections.  A small prefix text syntax is provided, e.g.::

    (= (c 0 (c 0 x)) (c 0 x))

The indexed substitution ``(s i j t)`` abbreviates ``c_i(d_ij . t)`` for
``i != j`` and is the identity for ``i == j``.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

from .core import (
    CONVERSE,
    Element,
    FiniteBAO,
    cyl_name,
    diag_name,
    dual_cyl_name,
    perm_name,
    transposition,
)
from .errors import CapExceededError, CylkitError, ParseError

Index = Union[int, str]


class EvalError(CylkitError):
    """A term mentions an index, operator, or variable the context lacks."""


# ---------------------------------------------------------------------------
# Term nodes
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()

    def variables(self) -> set[int]:
        out: set[int] = set()
        _collect_vars(self, out)
        return out

    def index_vars(self) -> set[str]:
        out: set[str] = set()
        _collect_index_vars(self, out)
        return out

    def depth(self) -> int:
        return _depth(self)

    def op_multiset(self) -> tuple[str, ...]:
        out: list[str] = []
        _collect_ops(self, out)
        return tuple(sorted(out))

    def __repr__(self) -> str:
        return to_text(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, Term) and to_text(self) == to_text(other)

    def __hash__(self) -> int:
        return hash(to_text(self))


@dataclass(frozen=True, eq=False)
class Var(Term):
    k: int


@dataclass(frozen=True, eq=False)
class Zero(Term):
    pass


@dataclass(frozen=True, eq=False)
class One(Term):
    pass


@dataclass(frozen=True, eq=False)
class IdConst(Term):
    pass


@dataclass(frozen=True, eq=False)
class Diag(Term):
    i: Index
    j: Index


@dataclass(frozen=True, eq=False)
class Not(Term):
    arg: Term


@dataclass(frozen=True, eq=False)
class And(Term):
    left: Term
    right: Term


@dataclass(frozen=True, eq=False)
class Or(Term):
    left: Term
    right: Term


@dataclass(frozen=True, eq=False)
class Cyl(Term):
    i: Index
    arg: Term


@dataclass(frozen=True, eq=False)
class DualCyl(Term):
    i: Index
    arg: Term


@dataclass(frozen=True, eq=False)
class CylSet(Term):
    indices: tuple[Index, ...]
    arg: Term


@dataclass(frozen=True, eq=False)
class SubstIJ(Term):
    """s_i^j: c_i(d_ij . x) for i != j, identity for i == j."""

    i: Index
    j: Index
    arg: Term


@dataclass(frozen=True, eq=False)
class Transp(Term):
    """Substitution along the transposition [i, j]."""

    i: Index
    j: Index
    arg: Term


@dataclass(frozen=True, eq=False)
class SubstPerm(Term):
    perm: tuple[int, ...]
    arg: Term


@dataclass(frozen=True, eq=False)
class Conv(Term):
    arg: Term


@dataclass(frozen=True, eq=False)
class Compose(Term):
    left: Term
    right: Term


ZERO = Zero()
ONE = One()
ID = IdConst()


def big_and(terms: Sequence[Term]) -> Term:
    if not terms:
        return ONE
    out = terms[0]
    for t in terms[1:]:
        out = And(out, t)
    return out


def big_or(terms: Sequence[Term]) -> Term:
    if not terms:
        return ZERO
    out = terms[0]
    for t in terms[1:]:
        out = Or(out, t)
    return out


def _children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (Not, Cyl, DualCyl, CylSet, SubstIJ, Transp, SubstPerm, Conv)):
        return (t.arg,)
    if isinstance(t, (And, Or, Compose)):
        return (t.left, t.right)
    return ()


def _collect_vars(t: Term, out: set[int]) -> None:
    if isinstance(t, Var):
        out.add(t.k)
    for c in _children(t):
        _collect_vars(c, out)


def _collect_index_vars(t: Term, out: set[str]) -> None:
    for idx in _indices(t):
        if isinstance(idx, str):
            out.add(idx)
    for c in _children(t):
        _collect_index_vars(c, out)


def _indices(t: Term) -> tuple[Index, ...]:
    if isinstance(t, (Cyl, DualCyl)):
        return (t.i,)
    if isinstance(t, (Diag, SubstIJ, Transp)):
        return (t.i, t.j)
    if isinstance(t, CylSet):
        return t.indices
    return ()


def _depth(t: Term) -> int:
    kids = _children(t)
    return 1 + max((_depth(c) for c in kids), default=0)


def _collect_ops(t: Term, out: list[str]) -> None:
    name = type(t).__name__
    if not isinstance(t, (Var, Zero, One, IdConst, Diag)):
        out.append(name)
    for c in _children(t):
        _collect_ops(c, out)


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------

_VAR_ALIASES = {"x": 0, "y": 1, "z": 2, "w": 3}
_VAR_NAMES = {v: k for k, v in _VAR_ALIASES.items()}
_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def to_text(t: Term) -> str:
    if isinstance(t, Var):
        return _VAR_NAMES.get(t.k, f"v{t.k}")
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, One):
        return "1"
    if isinstance(t, IdConst):
        return "id"
    if isinstance(t, Diag):
        return f"(d {t.i} {t.j})"
    if isinstance(t, Not):
        return f"(not {to_text(t.arg)})"
    if isinstance(t, And):
        return f"(and {to_text(t.left)} {to_text(t.right)})"
    if isinstance(t, Or):
        return f"(or {to_text(t.left)} {to_text(t.right)})"
    if isinstance(t, Cyl):
        return f"(c {t.i} {to_text(t.arg)})"
    if isinstance(t, DualCyl):
        return f"(q {t.i} {to_text(t.arg)})"
    if isinstance(t, CylSet):
        idx = " ".join(str(i) for i in t.indices)
        return f"(cg {idx} {to_text(t.arg)})"
    if isinstance(t, SubstIJ):
        return f"(s {t.i} {t.j} {to_text(t.arg)})"
    if isinstance(t, Transp):
        return f"(p {t.i} {t.j} {to_text(t.arg)})"
    if isinstance(t, SubstPerm):
        idx = " ".join(str(i) for i in t.perm)
        return f"(perm {idx} {to_text(t.arg)})"
    if isinstance(t, Conv):
        return f"(conv {to_text(t.arg)})"
    if isinstance(t, Compose):
        return f"(comp {to_text(t.left)} {to_text(t.right)})"
    raise TypeError(f"unknown term node {t!r}")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError("unreadable input", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


def _parse_index(tok: str, pos: int) -> Index:
    if re.fullmatch(r"\d+", tok):
        return int(tok)
    if re.fullmatch(r"[A-Za-z_]\w*", tok) and tok not in _VAR_ALIASES and not re.fullmatch(r"v\d+", tok):
        return tok
    raise ParseError(f"expected an index, got {tok!r}", pos)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.at = 0
        self.text = text

    def peek(self) -> tuple[str, int]:
        if self.at >= len(self.tokens):
            raise ParseError("unexpected end of input", len(self.text))
        return self.tokens[self.at]

    def next(self) -> tuple[str, int]:
        tok = self.peek()
        self.at += 1
        return tok

    def expect(self, literal: str) -> None:
        tok, pos = self.next()
        if tok != literal:
            raise ParseError(f"expected {literal!r}, got {tok!r}", pos)

    def parse_term(self) -> Term:
        tok, pos = self.next()
        if tok == "0":
            return ZERO
        if tok == "1":
            return ONE
        if tok in ("id", "1'"):
            return ID
        if tok in _VAR_ALIASES:
            return Var(_VAR_ALIASES[tok])
        if re.fullmatch(r"v\d+", tok):
            return Var(int(tok[1:]))
        if tok != "(":
            raise ParseError(f"expected a term, got {tok!r}", pos)
        head, hpos = self.next()
        term = self._parse_form(head, hpos)
        self.expect(")")
        return term

    def _indices_then_term(self, count: int) -> tuple[list[Index], Term]:
        idx = []
        for _ in range(count):
            tok, pos = self.next()
            idx.append(_parse_index(tok, pos))
        return idx, self.parse_term()

    def _parse_form(self, head: str, pos: int) -> Term:
        if head == "not":
            return Not(self.parse_term())
        if head in ("and", "or"):
            args = [self.parse_term(), self.parse_term()]
            while self.peek()[0] != ")":
                args.append(self.parse_term())
            return big_and(args) if head == "and" else big_or(args)
        if head == "c":
            (i,), arg = self._indices_then_term(1)
            return Cyl(i, arg)
        if head == "q":
            (i,), arg = self._indices_then_term(1)
            return DualCyl(i, arg)
        if head == "d":
            tok1, p1 = self.next()
            tok2, p2 = self.next()
            return Diag(_parse_index(tok1, p1), _parse_index(tok2, p2))
        if head == "s":
            (i, j), arg = self._indices_then_term(2)
            return SubstIJ(i, j, arg)
        if head == "p":
            (i, j), arg = self._indices_then_term(2)
            return Transp(i, j, arg)
        if head == "cg":
            idx: list[Index] = []
            while True:
                tok, tpos = self.peek()
                if tok == "(" or tok in _VAR_ALIASES or re.fullmatch(r"v\d+", tok) or tok in ("0", "1", "id", "1'"):
                    break
                self.next()
                idx.append(_parse_index(tok, tpos))
            if not idx:
                raise ParseError("cg needs at least one index", pos)
            return CylSet(tuple(idx), self.parse_term())
        if head == "perm":
            idx = []
            while True:
                tok, tpos = self.peek()
                if not re.fullmatch(r"\d+", tok):
                    break
                self.next()
                idx.append(int(tok))
            return SubstPerm(tuple(idx), self.parse_term())
        if head == "conv":
            return Conv(self.parse_term())
        if head in ("comp", ";"):
            return Compose(self.parse_term(), self.parse_term())
        if head == "=":
            raise ParseError("equations cannot be nested inside terms", pos)
        raise ParseError(f"unknown operator {head!r}", pos)

    def parse_equation(self) -> "Equation":
        self.expect("(")
        tok, pos = self.next()
        if tok != "=":
            raise ParseError(f"expected '=', got {tok!r}", pos)
        lhs = self.parse_term()
        rhs = self.parse_term()
        self.expect(")")
        return Equation(lhs, rhs)

    def done(self) -> None:
        if self.at != len(self.tokens):
            tok, pos = self.tokens[self.at]
            raise ParseError(f"trailing input {tok!r}", pos)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.parse_term()
    p.done()
    return t


def parse_equation(text: str) -> "Equation":
    p = _Parser(text)
    e = p.parse_equation()
    p.done()
    return e


# ---------------------------------------------------------------------------
# Equations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    label: str = ""

    def variables(self) -> set[int]:
        return self.lhs.variables() | self.rhs.variables()

    def index_vars(self) -> set[str]:
        return self.lhs.index_vars() | self.rhs.index_vars()

    def __repr__(self) -> str:
        return f"(= {to_text(self.lhs)} {to_text(self.rhs)})"


def canonical_key(obj: Term | Equation) -> str:
    """Serialization that normalizes commutative structure.

    Conjunction/disjunction arguments are flattened and sorted, diagonal and
    transposition indices are sorted, identity substitutions are elided, and
    the two sides of an equation are ordered.  Dedup and list comparisons in
    schema instantiation go through this key.
    """
    if isinstance(obj, Equation):
        sides = sorted([canonical_key(obj.lhs), canonical_key(obj.rhs)])
        return f"(= {sides[0]} {sides[1]})"
    t = obj
    if isinstance(t, (Var, Zero, One, IdConst)):
        return to_text(t)
    if isinstance(t, Diag):
        i, j = sorted([t.i, t.j], key=str)
        return f"(d {i} {j})"
    if isinstance(t, (And, Or)):
        op = "and" if isinstance(t, And) else "or"
        args: list[Term] = []
        stack = [t]
        while stack:
            node = stack.pop()
            if isinstance(node, type(t)):
                stack.extend([node.left, node.right])
            else:
                args.append(node)
        keys = sorted(canonical_key(a) for a in args)
        return f"({op} {' '.join(keys)})"
    if isinstance(t, Not):
        return f"(not {canonical_key(t.arg)})"
    if isinstance(t, Cyl):
        return f"(c {t.i} {canonical_key(t.arg)})"
    if isinstance(t, DualCyl):
        return f"(q {t.i} {canonical_key(t.arg)})"
    if isinstance(t, CylSet):
        idx = sorted(t.indices, key=str)
        if len(idx) == 1:
            return f"(c {idx[0]} {canonical_key(t.arg)})"
        return f"(cg {' '.join(map(str, idx))} {canonical_key(t.arg)})"
    if isinstance(t, SubstIJ):
        if t.i == t.j:
            return canonical_key(t.arg)
        return f"(s {t.i} {t.j} {canonical_key(t.arg)})"
    if isinstance(t, Transp):
        i, j = sorted([t.i, t.j], key=str)
        if i == j:
            return canonical_key(t.arg)
        return f"(p {i} {j} {canonical_key(t.arg)})"
    if isinstance(t, SubstPerm):
        if t.perm == tuple(range(len(t.perm))):
            return canonical_key(t.arg)
        return f"(perm {' '.join(map(str, t.perm))} {canonical_key(t.arg)})"
    if isinstance(t, Conv):
        return f"(conv {canonical_key(t.arg)})"
    if isinstance(t, Compose):
        return f"(comp {canonical_key(t.left)} {canonical_key(t.right)})"
    raise TypeError(f"unknown term node {t!r}")


# ---------------------------------------------------------------------------
# Index renaming
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexInjection:
    """A finite injection on indices, used to rename operator subscripts."""

    mapping: tuple[tuple[int, int], ...]

    def __post_init__(self):
        d = dict(self.mapping)
        if len(d) != len(self.mapping):
            raise CylkitError("duplicate keys in index injection")
        if len(set(d.values())) != len(d):
            raise CylkitError("index map is not injective")

    @classmethod
    def of(cls, mapping: Mapping[int, int]) -> "IndexInjection":
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def identity(cls, n: int) -> "IndexInjection":
        return cls(tuple((i, i) for i in range(n)))

    def __call__(self, i: int) -> int:
        for k, v in self.mapping:
            if k == i:
                return v
        raise EvalError(f"index {i} outside the domain of the injection")

    def domain(self) -> set[int]:
        return {k for k, _ in self.mapping}

    def compose(self, inner: "IndexInjection") -> "IndexInjection":
        """self o inner."""
        return IndexInjection(tuple((k, self(v)) for k, v in inner.mapping))


def _rename_index(idx: Index, eta: IndexInjection) -> int:
    if isinstance(idx, str):
        raise EvalError("cannot rename symbolic template indices; instantiate first")
    return eta(idx)


def eta_plus(eta: IndexInjection, obj: Term | Equation) -> Term | Equation:
    """Homomorphic index renaming; variables are left untouched."""
    if isinstance(obj, Equation):
        return Equation(eta_plus(eta, obj.lhs), eta_plus(eta, obj.rhs), obj.label)
    t = obj
    if isinstance(t, (Var, Zero, One, IdConst)):
        return t
    if isinstance(t, Diag):
        return Diag(_rename_index(t.i, eta), _rename_index(t.j, eta))
    if isinstance(t, Not):
        return Not(eta_plus(eta, t.arg))
    if isinstance(t, And):
        return And(eta_plus(eta, t.left), eta_plus(eta, t.right))
    if isinstance(t, Or):
        return Or(eta_plus(eta, t.left), eta_plus(eta, t.right))
    if isinstance(t, Cyl):
        return Cyl(_rename_index(t.i, eta), eta_plus(eta, t.arg))
    if isinstance(t, DualCyl):
        return DualCyl(_rename_index(t.i, eta), eta_plus(eta, t.arg))
    if isinstance(t, CylSet):
        return CylSet(tuple(sorted(_rename_index(i, eta) for i in t.indices)), eta_plus(eta, t.arg))
    if isinstance(t, SubstIJ):
        return SubstIJ(_rename_index(t.i, eta), _rename_index(t.j, eta), eta_plus(eta, t.arg))
    if isinstance(t, Transp):
        return Transp(_rename_index(t.i, eta), _rename_index(t.j, eta), eta_plus(eta, t.arg))
    if isinstance(t, SubstPerm):
        # Conjugate the permutation along the injection; fixed outside its range.
        dom = sorted(eta.domain())
        if len(t.perm) < len(dom) or any(k >= len(t.perm) for k in dom):
            raise EvalError("permutation does not cover the injection's domain")
        size = max((eta(k) for k in dom), default=-1) + 1
        size = max(size, len(t.perm))
        new = list(range(size))
        for k in dom:
            if t.perm[k] not in eta.domain():
                raise EvalError("permutation moves an index outside the injection's domain")
            new[eta(k)] = eta(t.perm[k])
        return SubstPerm(tuple(new), eta_plus(eta, t.arg))
    if isinstance(t, Conv):
        return Conv(eta_plus(eta, t.arg))
    if isinstance(t, Compose):
        return Compose(eta_plus(eta, t.left), eta_plus(eta, t.right))
    raise TypeError(f"unknown term node {t!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _need_int(idx: Index) -> int:
    if isinstance(idx, str):
        raise EvalError(f"symbolic index {idx!r} cannot be evaluated; instantiate first")
    return idx


def compile_term(t: Term, algebra: FiniteBAO, var_slots: Mapping[int, int]) -> Callable[[Sequence[int]], int]:
    """Compile a term into a mask-level closure; env is indexed by var_slots."""
    one = algebra.one_mask
    apply_mask = algebra.apply_mask

    def comp(node: Term) -> Callable[[Sequence[int]], int]:
        if isinstance(node, Var):
            if node.k not in var_slots:
                raise EvalError(f"variable v{node.k} is not assigned")
            pos = var_slots[node.k]
            return lambda env: env[pos]
        if isinstance(node, Zero):
            return lambda env: 0
        if isinstance(node, One):
            return lambda env: one
        if isinstance(node, IdConst):
            m = algebra.constant("id").bits
            return lambda env: m
        if isinstance(node, Diag):
            m = algebra.diag(_need_int(node.i), _need_int(node.j)).bits
            return lambda env: m
        if isinstance(node, Not):
            f = comp(node.arg)
            return lambda env: one & ~f(env)
        if isinstance(node, And):
            fl, fr = comp(node.left), comp(node.right)
            return lambda env: fl(env) & fr(env)
        if isinstance(node, Or):
            fl, fr = comp(node.left), comp(node.right)
            return lambda env: fl(env) | fr(env)
        if isinstance(node, Cyl):
            name = cyl_name(_need_int(node.i))
            if not algebra.has_op(name):
                raise EvalError(f"algebra has no operator {name!r}")
            f = comp(node.arg)
            return lambda env: apply_mask(name, f(env))
        if isinstance(node, DualCyl):
            i = _need_int(node.i)
            qname = dual_cyl_name(i)
            f = comp(node.arg)
            if algebra.has_op(qname):
                return lambda env: apply_mask(qname, f(env))
            cname = cyl_name(i)
            if not algebra.has_op(cname):
                raise EvalError(f"algebra has neither {qname!r} nor {cname!r}")
            return lambda env: one & ~apply_mask(cname, one & ~f(env))
        if isinstance(node, CylSet):
            idx = sorted(_need_int(i) for i in node.indices)
            names = [cyl_name(i) for i in idx]
            for name in names:
                if not algebra.has_op(name):
                    raise EvalError(f"algebra has no operator {name!r}")
            f = comp(node.arg)

            def run(env, names=tuple(names)):
                m = f(env)
                for name in names:
                    m = apply_mask(name, m)
                return m

            return run
        if isinstance(node, SubstIJ):
            i, j = _need_int(node.i), _need_int(node.j)
            f = comp(node.arg)
            if i == j:
                return f
            name = cyl_name(i)
            if not algebra.has_op(name):
                raise EvalError(f"algebra has no operator {name!r}")
            dmask = algebra.diag(i, j).bits
            return lambda env: apply_mask(name, dmask & f(env))
        if isinstance(node, Transp):
            i, j = _need_int(node.i), _need_int(node.j)
            f = comp(node.arg)
            if i == j:
                return f
            name = perm_name(transposition(i, j, algebra.dimension))
            if not algebra.has_op(name):
                raise EvalError(f"algebra has no operator {name!r}")
            return lambda env: apply_mask(name, f(env))
        if isinstance(node, SubstPerm):
            f = comp(node.arg)
            if node.perm == tuple(range(len(node.perm))):
                return f
            name = perm_name(node.perm)
            if not algebra.has_op(name):
                raise EvalError(f"algebra has no operator {name!r}")
            return lambda env: apply_mask(name, f(env))
        if isinstance(node, Conv):
            if not algebra.has_op(CONVERSE):
                raise EvalError("algebra has no converse")
            f = comp(node.arg)
            return lambda env: apply_mask(CONVERSE, f(env))
        if isinstance(node, Compose):
            fl, fr = comp(node.left), comp(node.right)
            cm = algebra.compose_masks
            return lambda env: cm(fl(env), fr(env))
        raise TypeError(f"unknown term node {node!r}")

    return comp(t)


def eval_term(t: Term, algebra: FiniteBAO, assignment: Mapping[int, Element] | None = None) -> Element:
    """Interpret a term in an algebra under a variable assignment."""
    assignment = assignment or {}
    order = sorted(t.variables())
    slots = {k: pos for pos, k in enumerate(order)}
    env = []
    for k in order:
        if k not in assignment:
            raise EvalError(f"variable v{k} is not assigned")
        x = assignment[k]
        if x.algebra is not algebra:
            raise EvalError(f"assignment for v{k} belongs to a different algebra")
        env.append(x.bits)
    fn = compile_term(t, algebra, slots)
    return Element(algebra, fn(env))


# ---------------------------------------------------------------------------
# Equation checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exhaustive:
    cap: int = 1 << 20


@dataclass(frozen=True)
class Sampled:
    seed: int
    trials: int = 1000


Mode = Union[Exhaustive, Sampled]


@dataclass(frozen=True)
class Verdict:
    holds: bool
    mode: str
    statistical: bool
    checked: int
    counterexample: dict[int, tuple[int, ...]] | None = None
    seed: int | None = None

    def __bool__(self) -> bool:
        return self.holds


def _shrink_counterexample(fl, fr, env: list[int]) -> list[int]:
    """Greedy: clear atoms one at a time while the two sides still differ."""
    changed = True
    while changed:
        changed = False
        for pos in range(len(env)):
            bits = env[pos]
            b = bits
            while b:
                low = b & -b
                b ^= low
                trial = env[pos] & ~low
                saved = env[pos]
                env[pos] = trial
                if fl(env) != fr(env):
                    changed = True
                else:
                    env[pos] = saved
    return env


def check_equation(algebra: FiniteBAO, eq: Equation, mode: Mode) -> Verdict:
    """Decide an equation exhaustively or probe it with seeded sampling.

    Exhaustive verdicts are definitive; a sampled "holds" is statistical and
    flagged as such.  Counterexamples are always definitive and come shrunk.
    """
    variables = sorted(eq.variables())
    slots = {k: pos for pos, k in enumerate(variables)}
    fl = compile_term(eq.lhs, algebra, slots)
    fr = compile_term(eq.rhs, algebra, slots)
    size = 1 << algebra.natoms

    def fail(env: list[int], checked: int, modename: str, seed: int | None) -> Verdict:
        env = _shrink_counterexample(fl, fr, env)
        cex = {k: tuple(Element(algebra, env[slots[k]]).atom_indices()) for k in variables}
        return Verdict(holds=False, mode=modename, statistical=False, checked=checked,
                       counterexample=cex, seed=seed)

    if isinstance(mode, Exhaustive):
        total = size ** len(variables)
        if total > mode.cap:
            raise CapExceededError(
                f"exhaustive check needs {total} assignments, cap is {mode.cap}")
        checked = 0
        for env in itertools.product(range(size), repeat=len(variables)):
            env = list(env)
            checked += 1
            if fl(env) != fr(env):
                return fail(env, checked, "exhaustive", None)
        return Verdict(holds=True, mode="exhaustive", statistical=False, checked=checked)

    rng = random.Random(mode.seed)
    natoms = algebra.natoms
    for trial in range(mode.trials):
        env = [rng.getrandbits(natoms) if natoms else 0 for _ in variables]
        if fl(env) != fr(env):
            return fail(env, trial + 1, "sampled", mode.seed)
    return Verdict(holds=True, mode="sampled", statistical=True, checked=mode.trials,
                   seed=mode.seed)


@dataclass(frozen=True)
class VarietyReport:
    entries: tuple[tuple[Equation, Verdict], ...]

    @property
    def all_hold(self) -> bool:
        return all(v.holds for _, v in self.entries)

    def failures(self) -> list[tuple[Equation, Verdict]]:
        return [(e, v) for e, v in self.entries if not v.holds]

    def __repr__(self) -> str:
        good = sum(1 for _, v in self.entries if v.holds)
        return f"VarietyReport({good}/{len(self.entries)} hold)"


def check_variety(algebra: FiniteBAO, equations: Sequence[Equation], mode: Mode) -> VarietyReport:
    return VarietyReport(tuple((eq, check_equation(algebra, eq, mode)) for eq in equations))


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpSymbol:
    name: str
    index_arity: int  # number of index subscripts
    rank: int         # number of algebra arguments


@dataclass(frozen=True)
class SchemaTemplate:
    """A finite family of equation templates with free index variables.

    ``base_dim`` is the least dimension the templates make sense in; all
    index variables of a template are instantiated along injections into the
    target dimension, so distinct variables always get distinct indices.
    """

    base_dim: int
    ops: tuple[OpSymbol, ...]
    templates: tuple[Equation, ...]
    name: str = ""

    def __post_init__(self):
        cyls = [f for f in self.ops if f.name == "c"]
        if len(cyls) != 1 or cyls[0].index_arity != 1 or cyls[0].rank != 1:
            raise CylkitError("schema must declare exactly one cylindrifier symbol of arity (1, 1)")
        for f in self.ops:
            if f.index_arity > self.base_dim:
                raise CylkitError(f"operator {f.name!r} has more indices than the base dimension")
        for e in self.templates:
            if len(e.index_vars()) > self.base_dim:
                raise CylkitError(f"template {e.label or e!r} uses more index variables than base_dim")


def instantiate_template(eq: Equation, mapping: Mapping[str, int]) -> Equation:
    def inst_idx(idx: Index) -> int:
        if isinstance(idx, str):
            if idx not in mapping:
                raise EvalError(f"no value for index variable {idx!r}")
            return mapping[idx]
        return idx

    def inst(t: Term) -> Term:
        if isinstance(t, (Var, Zero, One, IdConst)):
            return t
        if isinstance(t, Diag):
            return Diag(inst_idx(t.i), inst_idx(t.j))
        if isinstance(t, Not):
            return Not(inst(t.arg))
        if isinstance(t, And):
            return And(inst(t.left), inst(t.right))
        if isinstance(t, Or):
            return Or(inst(t.left), inst(t.right))
        if isinstance(t, Cyl):
            return Cyl(inst_idx(t.i), inst(t.arg))
        if isinstance(t, DualCyl):
            return DualCyl(inst_idx(t.i), inst(t.arg))
        if isinstance(t, CylSet):
            return CylSet(tuple(sorted(inst_idx(i) for i in t.indices)), inst(t.arg))
        if isinstance(t, SubstIJ):
            return SubstIJ(inst_idx(t.i), inst_idx(t.j), inst(t.arg))
        if isinstance(t, Transp):
            return Transp(inst_idx(t.i), inst_idx(t.j), inst(t.arg))
        if isinstance(t, SubstPerm):
            return t
        if isinstance(t, Conv):
            return Conv(inst(t.arg))
        if isinstance(t, Compose):
            return Compose(inst(t.left), inst(t.right))
        raise TypeError(f"unknown term node {t!r}")

    suffix = ",".join(f"{k}={mapping[k]}" for k in sorted(mapping))
    label = f"{eq.label}[{suffix}]" if eq.label else ""
    return Equation(inst(eq.lhs), inst(eq.rhs), label)


def instantiate_schema(schema: SchemaTemplate, n: int) -> list[Equation]:
    """All injective instantiations of the templates at dimension n, deduplicated."""
    if n < schema.base_dim:
        raise CylkitError(f"dimension {n} is below the schema base dimension {schema.base_dim}")
    out: list[Equation] = []
    seen: set[str] = set()
    for eq in schema.templates:
        support = sorted(eq.index_vars())
        for image in itertools.permutations(range(n), len(support)):
            inst = instantiate_template(eq, dict(zip(support, image)))
            key = canonical_key(inst)
            if key not in seen:
                seen.add(key)
                out.append(inst)
    out.sort(key=canonical_key)
    return out


# ---------------------------------------------------------------------------
# Stock schemas
# ---------------------------------------------------------------------------

_X, _Y = Var(0), Var(1)


def ca_schema() -> SchemaTemplate:
    """Cylindrifier/diagonal axiom templates over a Boolean reduct."""
    i, j, k = "i", "j", "k"
    templates = (
        Equation(Cyl(i, ZERO), ZERO, "C1"),
        Equation(And(_X, Cyl(i, _X)), _X, "C2"),
        Equation(Cyl(i, And(_X, Cyl(i, _Y))), And(Cyl(i, _X), Cyl(i, _Y)), "C3"),
        Equation(Cyl(i, Cyl(j, _X)), Cyl(j, Cyl(i, _X)), "C4"),
        Equation(Diag(i, i), ONE, "C5"),
        Equation(Diag(i, j), Cyl(k, And(Diag(i, k), Diag(k, j))), "C6"),
        Equation(And(Cyl(i, And(Diag(i, j), _X)), Cyl(i, And(Diag(i, j), Not(_X)))), ZERO, "C7"),
    )
    ops = (
        OpSymbol("c", 1, 1),
        OpSymbol("d", 2, 0),
        OpSymbol("and", 0, 2),
        OpSymbol("or", 0, 2),
        OpSymbol("not", 0, 1),
        OpSymbol("zero", 0, 0),
        OpSymbol("one", 0, 0),
    )
    return SchemaTemplate(base_dim=3, ops=ops, templates=templates, name="ca")


def transposition_schema() -> SchemaTemplate:
    """Templates for the transposition substitutions on top of the CA core.

    p_ij = p_ji is baked into the canonical form, so it is not listed as a
    separate template.
    """
    i, j, k = "i", "j", "k"
    templates = (
        Equation(Transp(i, j, Transp(i, j, _X)), _X, "P1"),
        Equation(Transp(i, j, Or(_X, _Y)), Or(Transp(i, j, _X), Transp(i, j, _Y)), "P2"),
        Equation(Transp(i, j, Not(_X)), Not(Transp(i, j, _X)), "P3"),
        Equation(Transp(i, j, Cyl(i, _X)), Cyl(j, Transp(i, j, _X)), "P5"),
        Equation(Transp(i, j, Cyl(k, _X)), Cyl(k, Transp(i, j, _X)), "P6"),
        Equation(Transp(i, j, Diag(i, j)), Diag(i, j), "P7"),
        Equation(Transp(i, j, Diag(i, k)), Diag(j, k), "P8"),
    )
    ops = (
        OpSymbol("c", 1, 1),
        OpSymbol("d", 2, 0),
        OpSymbol("p", 2, 1),
        OpSymbol("and", 0, 2),
        OpSymbol("or", 0, 2),
        OpSymbol("not", 0, 1),
    )
    return SchemaTemplate(base_dim=3, ops=ops, templates=templates, name="transpositions")


def pea_schema() -> SchemaTemplate:
    ca = ca_schema()
    pe = transposition_schema()
    return SchemaTemplate(base_dim=3, ops=pe.ops, templates=ca.templates + pe.templates, name="pea")


def ca_axioms(n: int) -> list[Equation]:
    return instantiate_schema(ca_schema(), n)


def pea_axioms(n: int) -> list[Equation]:
    return instantiate_schema(pea_schema(), n)
