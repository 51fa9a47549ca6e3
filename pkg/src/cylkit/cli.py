"""Command-line front end.

Exit codes: 0 all checks passed, 1 definitive failure or counterexample,
2 bounded search exhausted (inconclusive), 3 usage or validation error.
Reports are canonical JSON on stdout; timings are included only on request
so that reports stay byte-identical for fixed inputs and seed.  The
CYLKIT_SEED environment variable overrides the default seed; a --seed flag
overrides both.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import time

from . import jsonio
from .core import FiniteBAO, perm_group, transposition
from .dimension import ca_frame_correspondents, neat_reduct, ra_reduct, reduct_rho, relativize
from .errors import CapExceededError, CylkitError, ParseError
from .hh import (
    ca_of_hyperbasis,
    enumerate_hypernetworks,
    hh_algebra,
    is_hyperbasis,
    is_symmetric,
)
from .monk import monk_structure
from .morphisms import amalgam_check, amalgam_search, check_homomorphism, find_isomorphism
from .qra import QraContext, QraTerms, check_quasiprojections, trivial_qra
from .setalg import DirectedBase, directed_set_algebra, full_set_algebra, representation_search
from .splitting import SplitSpec, build_base, split_block
from .terms import (
    Exhaustive,
    Sampled,
    ca_axioms,
    check_equation,
    check_variety,
    parse_equation,
    pea_axioms,
    to_text,
)

DEFAULT_SEED = 2026

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_EXHAUSTED = 2
EXIT_USAGE = 3


def _parse_int_list(text: str) -> list[int]:
    if not text:
        return []
    return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _parse_swaps(text: str) -> list[tuple[int, int]]:
    """Bracketed transposition list, e.g. "[0,1],[1,2]"."""
    out = []
    for m in re.finditer(r"\[(\d+)\s*,\s*(\d+)\]", text or ""):
        out.append((int(m.group(1)), int(m.group(2))))
    return out


class Runner:
    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.argv = argv
        self.inputs: dict[str, str] = {}
        self.started = time.monotonic()
        self.seed = (args.seed if args.seed is not None
                     else int(os.environ.get("CYLKIT_SEED", DEFAULT_SEED)))

    def load_algebra(self, path: str) -> FiniteBAO:
        self.inputs[path] = jsonio.file_digest(path)
        return jsonio.load_algebra(path)

    def emit(self, verdicts: dict, witnesses: dict | None = None, exit_code: int = EXIT_OK) -> int:
        report = {
            "command": self.argv,
            "inputs": dict(sorted(self.inputs.items())),
            "seed": self.seed,
            "parallel": bool(getattr(self.args, "jobs", 1) > 1),
            "verdicts": verdicts,
            "witnesses": witnesses or {},
        }
        if self.args.timings:
            report["timing_s"] = round(time.monotonic() - self.started, 3)
        sys.stdout.write(jsonio.canonical_dumps(report))
        return exit_code

    def write_frame(self, frame, verdicts: dict) -> int:
        if self.args.out:
            jsonio.save_frame(frame, self.args.out)
            verdicts["written"] = self.args.out
        else:
            sys.stdout.write(jsonio.canonical_dumps(jsonio.frame_to_dict(frame)))
        return self.emit(verdicts) if self.args.out else EXIT_OK


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_construct(r: Runner) -> int:
    a = r.args
    if a.kind == "monk":
        frame = monk_structure(a.m, a.n)
        return r.write_frame(frame, {"atoms": frame.natoms})
    if a.kind == "hh":
        algebra = hh_algebra(a.n, a.r, a.psi)
        return r.write_frame(algebra.frame, {"atoms": algebra.natoms})
    if a.kind == "set":
        swaps = _parse_swaps(a.subs or "")
        group = perm_group([transposition(i, j, a.dim) for i, j in swaps], a.dim) if swaps else ()
        algebra = full_set_algebra(a.dim, a.base, substitutions=group)
        return r.write_frame(algebra.frame, {"atoms": algebra.natoms})
    if a.kind == "directed":
        points = tuple(range(a.base))
        if a.relation == "full":
            base = DirectedBase.total(points)
        else:
            pairs = frozenset((int(x), int(y)) for x, y in
                              (p.split(",") for p in a.relation.split(";") if p))
            base = DirectedBase(points, pairs)
        algebra = directed_set_algebra(a.dim, base)
        return r.write_frame(algebra.frame, {"atoms": algebra.natoms})
    raise CylkitError(f"unknown construct kind {a.kind!r}")


def cmd_split(r: Runner) -> int:
    a = r.args
    sizes = tuple(_parse_int_list(a.sizes))
    spec = SplitSpec(alpha=a.alpha, sizes=sizes, p=a.atoms,
                     transpositions=tuple(_parse_swaps(a.subs or "")))
    result = split_block(build_base(spec), spec.p)
    return r.write_frame(result.algebra.frame, {"atoms": result.algebra.natoms})


def cmd_check(r: Runner) -> int:
    a = r.args
    if a.what == "axioms":
        algebra = r.load_algebra(a.input)
        axioms = ca_axioms(a.dim) if a.variety == "ca" else pea_axioms(a.dim)
        if a.mode == "exhaustive":
            mode = Exhaustive(cap=a.cap)
        else:
            mode = Sampled(seed=r.seed, trials=a.trials)
        report = check_variety(algebra, axioms, mode)
        verdicts = {"all_hold": report.all_hold,
                    "checked": len(report.entries),
                    "mode": a.mode}
        witnesses = {e.label or to_text(e.lhs): v.counterexample
                     for e, v in report.failures()}
        return r.emit(verdicts, witnesses, EXIT_OK if report.all_hold else EXIT_FAIL)
    if a.what == "correspondents":
        algebra = r.load_algebra(a.input)
        report = ca_frame_correspondents(algebra.frame, a.dim)
        verdicts = {"all_ok": report.all_ok, "checked": len(report.entries)}
        witnesses = {e["check"]: e["witness"] for e in report.violations()}
        return r.emit(verdicts, witnesses, EXIT_OK if report.all_ok else EXIT_FAIL)
    if a.what == "hyperbasis":
        algebra = hh_algebra(a.n, a.r, a.psi)
        family = enumerate_hypernetworks(algebra, a.nodes, a.width)
        basis = is_hyperbasis(family)
        sym = is_symmetric(family)
        verdicts = {"networks": len(family), "hyperbasis": basis.ok, "symmetric": sym}
        witnesses = {} if basis.ok else {"clause": basis.clause, "witness": basis.witness}
        return r.emit(verdicts, witnesses, EXIT_OK if basis.ok and sym else EXIT_FAIL)
    if a.what == "quasiprojections":
        algebra = r.load_algebra(a.input) if a.input else trivial_qra()
        p = algebra.element(_parse_int_list(a.p))
        q = algebra.element(_parse_int_list(a.q))
        report = check_quasiprojections(algebra, p, q, verbatim=a.verbatim)
        verdicts = {"ok": report.ok, "verbatim": report.verbatim}
        witnesses = {} if report.ok else {"failing": report.failing}
        return r.emit(verdicts, witnesses, EXIT_OK if report.ok else EXIT_FAIL)
    raise CylkitError(f"unknown check {a.what!r}")


def cmd_neat_reduct(r: Runner) -> int:
    algebra = r.load_algebra(r.args.input)
    result = neat_reduct(algebra, _parse_int_list(r.args.keep))
    return r.write_frame(result.algebra.frame, {"atoms": result.algebra.natoms})


def cmd_reduct(r: Runner) -> int:
    algebra = r.load_algebra(r.args.input)
    out = reduct_rho(algebra, _parse_int_list(r.args.rho))
    return r.write_frame(out.frame, {"atoms": out.natoms})


def cmd_relativize(r: Runner) -> int:
    algebra = r.load_algebra(r.args.input)
    x = algebra.element(_parse_int_list(r.args.element))
    result = relativize(algebra, x)
    return r.write_frame(result.algebra.frame,
                         {"atoms": result.algebra.natoms,
                          "degenerate": list(result.degenerate)})


def cmd_ra_reduct(r: Runner) -> int:
    algebra = r.load_algebra(r.args.input)
    coords = tuple(_parse_int_list(r.args.coords)) if r.args.coords else None
    result = ra_reduct(algebra, coords=coords, spare=r.args.spare)
    verdicts = {"atoms": result.algebra.natoms,
                "associative": result.report["checks"]["associativity"]}
    return r.write_frame(result.algebra.frame, verdicts)


def cmd_schema(r: Runner) -> int:
    a = r.args
    if a.what == "instantiate":
        axioms = ca_axioms(a.dim) if a.variety == "ca" else pea_axioms(a.dim)
        listing = [{"label": e.label, "equation": repr(e)} for e in axioms]
        return r.emit({"count": len(axioms), "equations": listing})
    if a.what == "check":
        algebra = r.load_algebra(a.input)
        eq = parse_equation(a.equation)
        mode = Exhaustive(cap=a.cap) if a.mode == "exhaustive" else Sampled(r.seed, a.trials)
        v = check_equation(algebra, eq, mode)
        verdicts = {"holds": v.holds, "mode": v.mode, "statistical": v.statistical,
                    "checked": v.checked}
        witnesses = {"counterexample": v.counterexample} if v.counterexample else {}
        return r.emit(verdicts, witnesses, EXIT_OK if v.holds else EXIT_FAIL)
    raise CylkitError(f"unknown schema action {a.what!r}")


def cmd_represent(r: Runner) -> int:
    algebra = r.load_algebra(r.args.input)
    result = representation_search(algebra, r.args.max_base, min_base=r.args.min_base,
                                   atom_cap=r.args.atom_cap, dim_cap=r.args.dim_cap,
                                   base_cap=r.args.base_cap)
    if result.found:
        witnesses = {"base": result.base_size,
                     "atom_images": {str(k): list(v) for k, v in result.atom_images.items()}}
        return r.emit({"found": True, "base": result.base_size}, witnesses, EXIT_OK)
    return r.emit({"found": False, "exhausted_at": result.exhausted_at}, {}, EXIT_EXHAUSTED)


def cmd_iso(r: Runner) -> int:
    a = r.load_algebra(r.args.a)
    b = r.load_algebra(r.args.b)
    witness = find_isomorphism(a, b, max_atoms=r.args.atom_cap)
    if witness is None:
        return r.emit({"isomorphic": False}, {}, EXIT_FAIL)
    mapping = {str(i): witness.images[i].bit_length() - 1 for i in range(a.natoms)}
    return r.emit({"isomorphic": True}, {"atom_map": mapping}, EXIT_OK)


def cmd_amalgam(r: Runner) -> int:
    args = r.args
    a0 = r.load_algebra(args.a0)
    a1 = r.load_algebra(args.a1)
    a2 = r.load_algebra(args.a2)
    import json as _json
    from pathlib import Path

    def load_map(path, source, target):
        r.inputs[path] = jsonio.file_digest(path)
        data = _json.loads(Path(path).read_text(encoding="utf-8"))
        return check_homomorphism(
            {int(k): target.element(v) for k, v in data["map"].items()}, source, target,
            require=("hom", "injective"))

    i1 = load_map(args.i1, a0, a1)
    i2 = load_map(args.i2, a0, a2)
    pool = [r.load_algebra(p) for p in args.pool] if args.pool else None
    result = amalgam_search(i1, i2, pool=pool, size_bound=args.size_bound)
    if not result.found:
        return r.emit({"found": False, "bound": str(result.bound)}, {}, EXIT_EXHAUSTED)
    verdict = amalgam_check(i1, i2, result.m1, result.m2)
    verdicts = {"found": True, "amalgam": verdict.amalgam, "super": verdict.super_amalgam}
    return r.emit(verdicts, {}, EXIT_OK)


def cmd_qra(r: Runner) -> int:
    a = r.args
    if a.what == "terms":
        terms = QraTerms(a.n, verbatim=a.verbatim)
        listing = {name: to_text(t) for name, t in terms.all_terms().items()}
        return r.emit({"n": a.n, "verbatim": a.verbatim}, {"terms": listing})
    if a.what == "check":
        algebra = r.load_algebra(a.input) if a.input else trivial_qra()
        p = algebra.element(_parse_int_list(a.p))
        q = algebra.element(_parse_int_list(a.q))
        report = check_quasiprojections(algebra, p, q, verbatim=a.verbatim)
        verdicts = {"ok": report.ok}
        witnesses = {} if report.ok else {"failing": report.failing}
        return r.emit(verdicts, witnesses, EXIT_OK if report.ok else EXIT_FAIL)
    raise CylkitError(f"unknown qra action {a.what!r}")


def cmd_hh(r: Runner) -> int:
    a = r.args
    algebra = hh_algebra(a.n, a.r, a.psi)
    if a.what == "enumerate":
        family = enumerate_hypernetworks(algebra, a.nodes, a.width)
        return r.emit({"networks": len(family)},
                      {"sample": [str(net) for net in family.networks[:5]]})
    if a.what == "check-hyperbasis":
        family = enumerate_hypernetworks(algebra, a.nodes, a.width)
        basis = is_hyperbasis(family)
        sym = is_symmetric(family)
        verdicts = {"networks": len(family), "hyperbasis": basis.ok, "symmetric": sym}
        witnesses = {} if basis.ok else {"clause": basis.clause}
        return r.emit(verdicts, witnesses, EXIT_OK if basis.ok and sym else EXIT_FAIL)
    if a.what == "ca":
        family = enumerate_hypernetworks(algebra, a.nodes, a.width)
        ca = ca_of_hyperbasis(family)
        return r.write_frame(ca.frame, {"atoms": ca.natoms})
    raise CylkitError(f"unknown hh action {a.what!r}")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cylkit",
                                     description="finite algebras-of-relations workbench")
    parser.add_argument("--seed", type=int, default=None, help="seed for sampled checks")
    parser.add_argument("--timings", action="store_true", help="include wall time in reports")
    parser.add_argument("--jobs", type=int, default=1, help="parallelism hint for search kernels")
    sub = parser.add_subparsers(dest="verb", required=True)

    c = sub.add_parser("construct", help="build a frame and emit its JSON")
    csub = c.add_subparsers(dest="kind", required=True)
    monk = csub.add_parser("monk")
    monk.add_argument("--m", type=int, required=True)
    monk.add_argument("--n", type=int, required=True)
    monk.add_argument("--out")
    hh = csub.add_parser("hh")
    hh.add_argument("--n", type=int, required=True)
    hh.add_argument("--r", type=int, required=True)
    hh.add_argument("--psi", type=int, required=True)
    hh.add_argument("--out")
    st = csub.add_parser("set")
    st.add_argument("--dim", type=int, required=True)
    st.add_argument("--base", type=int, required=True)
    st.add_argument("--subs", default="")
    st.add_argument("--out")
    dr = csub.add_parser("directed")
    dr.add_argument("--dim", type=int, required=True)
    dr.add_argument("--base", type=int, required=True)
    dr.add_argument("--relation", default="full")
    dr.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    sp = sub.add_parser("split", help="build a split algebra")
    sp.add_argument("--alpha", type=int, required=True)
    sp.add_argument("--sizes", required=True)
    sp.add_argument("--atoms", type=int, required=True, help="split count p")
    sp.add_argument("--subs", default="")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_split)

    ch = sub.add_parser("check", help="run a named check")
    chsub = ch.add_subparsers(dest="what", required=True)
    ax = chsub.add_parser("axioms")
    ax.add_argument("--input", required=True)
    ax.add_argument("--variety", choices=["ca", "pea"], default="ca")
    ax.add_argument("--dim", type=int, required=True)
    ax.add_argument("--mode", choices=["exhaustive", "sampled"], default="sampled")
    ax.add_argument("--trials", type=int, default=1000)
    ax.add_argument("--cap", type=int, default=1 << 20)
    co = chsub.add_parser("correspondents")
    co.add_argument("--input", required=True)
    co.add_argument("--dim", type=int, default=None)
    hb = chsub.add_parser("hyperbasis")
    hb.add_argument("--n", type=int, required=True)
    hb.add_argument("--r", type=int, required=True)
    hb.add_argument("--psi", type=int, required=True)
    hb.add_argument("--nodes", type=int, required=True)
    hb.add_argument("--width", type=int, required=True)
    qp = chsub.add_parser("quasiprojections")
    qp.add_argument("--input", default=None)
    qp.add_argument("--p", required=True)
    qp.add_argument("--q", required=True)
    qp.add_argument("--verbatim", action="store_true")
    ch.set_defaults(func=cmd_check)

    nr = sub.add_parser("neat-reduct")
    nr.add_argument("--input", required=True)
    nr.add_argument("--keep", required=True)
    nr.add_argument("--out")
    nr.set_defaults(func=cmd_neat_reduct)

    rd = sub.add_parser("reduct")
    rd.add_argument("--input", required=True)
    rd.add_argument("--rho", required=True)
    rd.add_argument("--out")
    rd.set_defaults(func=cmd_reduct)

    rl = sub.add_parser("relativize")
    rl.add_argument("--input", required=True)
    rl.add_argument("--element", required=True)
    rl.add_argument("--out")
    rl.set_defaults(func=cmd_relativize)

    ra = sub.add_parser("ra-reduct")
    ra.add_argument("--input", required=True)
    ra.add_argument("--coords", default=None)
    ra.add_argument("--spare", type=int, default=None)
    ra.add_argument("--out")
    ra.set_defaults(func=cmd_ra_reduct)

    sc = sub.add_parser("schema")
    scsub = sc.add_subparsers(dest="what", required=True)
    si = scsub.add_parser("instantiate")
    si.add_argument("--variety", choices=["ca", "pea"], default="ca")
    si.add_argument("--dim", type=int, required=True)
    sck = scsub.add_parser("check")
    sck.add_argument("--input", required=True)
    sck.add_argument("--equation", required=True)
    sck.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    sck.add_argument("--trials", type=int, default=1000)
    sck.add_argument("--cap", type=int, default=1 << 20)
    sc.set_defaults(func=cmd_schema)

    rp = sub.add_parser("represent")
    rp.add_argument("--input", required=True)
    rp.add_argument("--max-base", type=int, required=True, dest="max_base")
    rp.add_argument("--min-base", type=int, default=1, dest="min_base")
    rp.add_argument("--atom-cap", type=int, default=10, dest="atom_cap")
    rp.add_argument("--dim-cap", type=int, default=3, dest="dim_cap")
    rp.add_argument("--base-cap", type=int, default=5, dest="base_cap")
    rp.set_defaults(func=cmd_represent)

    iso = sub.add_parser("iso")
    iso.add_argument("a")
    iso.add_argument("b")
    iso.add_argument("--atom-cap", type=int, default=64, dest="atom_cap")
    iso.set_defaults(func=cmd_iso)

    am = sub.add_parser("amalgam")
    am.add_argument("--a0", required=True)
    am.add_argument("--a1", required=True)
    am.add_argument("--a2", required=True)
    am.add_argument("--i1", required=True, help="JSON atom map a0 -> a1")
    am.add_argument("--i2", required=True, help="JSON atom map a0 -> a2")
    am.add_argument("--pool", nargs="*", default=None)
    am.add_argument("--size-bound", type=int, default=None, dest="size_bound")
    am.set_defaults(func=cmd_amalgam)

    qr = sub.add_parser("qra")
    qrsub = qr.add_subparsers(dest="what", required=True)
    qt = qrsub.add_parser("terms")
    qt.add_argument("--n", type=int, required=True)
    qt.add_argument("--verbatim", action="store_true")
    qc = qrsub.add_parser("check")
    qc.add_argument("--input", default=None)
    qc.add_argument("--p", required=True)
    qc.add_argument("--q", required=True)
    qc.add_argument("--verbatim", action="store_true")
    qr.set_defaults(func=cmd_qra)

    hhv = sub.add_parser("hh")
    hhsub = hhv.add_subparsers(dest="what", required=True)
    for name in ("enumerate", "check-hyperbasis", "ca"):
        p = hhsub.add_parser(name)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--r", type=int, required=True)
        p.add_argument("--psi", type=int, required=True)
        p.add_argument("--nodes", type=int, required=True)
        p.add_argument("--width", type=int, required=True)
        if name == "ca":
            p.add_argument("--out")
    hhv.set_defaults(func=cmd_hh)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    runner = Runner(args, argv)
    try:
        return args.func(runner)
    except CapExceededError as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return EXIT_USAGE
    except (CylkitError, ParseError, FileNotFoundError, KeyError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
