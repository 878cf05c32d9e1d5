"""Command-line front end.

Exit codes: 0 success / property true, 1 property false, 2 usage or input
error.  Every report embeds the tool version, the seed, and the caps in
effect, and all outputs are deterministic for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import CrookedError, InputError
from .folang import LIBRARY, Interpretation, eval_formula, parse, print_formula
from .lattice import load_lattice
from .metric_graph import dump_graph, load_graph
from .render import render_svg
from .sigma import SigmaGenerator, dump_sentences, fragment, parse_sentence_dump
from .surgery import base_interpretation, witness_fragment
from .tower import (
    build_tower, load_tower, save_tower, verify_tower, weak_confluence_witness,
)
from .wallman import is_hausdorff_like, is_T1, space_dump, wallman_space


def _header(args, extra: dict | None = None) -> str:
    fields = {
        "tool": f"crooked {__version__}",
        "seed": getattr(args, "seed", 0),
        "cap": getattr(args, "cap", 4096),
    }
    if getattr(args, "budget", None) is not None:
        fields["budget"] = args.budget
    fields.update(extra or {})
    return "\n".join(f"{k}: {v}" for k, v in fields.items())


def _write(path: str | None, text: str) -> None:
    if path:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _element_repr(element) -> str:
    return "{" + ",".join(str(p) for p in sorted(element.points)) + "}"


def cmd_lattice_check(args) -> int:
    lattice, names = load_lattice(args.file)
    if args.sentence in LIBRARY:
        formula = LIBRARY[args.sentence]
    else:
        formula = parse(args.sentence, constants=set(names))
    interp = Interpretation({name: lattice.element(idx) for name, idx in names.items()})
    result = eval_formula(formula, lattice, interp)
    print(_header(args))
    print(f"sentence: {print_formula(formula)}")
    print(f"verdict: {'true' if result.value else 'false'}")
    if result.assignment:
        role = "witness" if result.value else "counterexample"
        for var in sorted(result.assignment):
            print(f"{role} {var}: {_element_repr(result.assignment[var])}")
    return 0 if result.value else 1


def cmd_wallman(args) -> int:
    lattice, _ = load_lattice(args.file)
    space, hom = wallman_space(lattice)
    print(_header(args))
    sys.stdout.write(space_dump(space))
    injective = len(set(hom)) == lattice.size
    disj = eval_formula(LIBRARY["DISJ"], lattice).value
    norm = eval_formula(LIBRARY["NORM"], lattice).value
    print(f"points: {len(space.points)}")
    print(f"T1: {is_T1(space)}")
    print(f"hausdorff-like: {is_hausdorff_like(space)}")
    print(f"disjunctive: {disj}")
    print(f"normal: {norm}")
    label = "isomorphic" if injective else "homomorphic (not disjunctive)"
    print(f"representation: {label}")
    return 0


def _generator(args) -> SigmaGenerator:
    base, _ = load_lattice(args.base)
    return SigmaGenerator(
        base,
        budget=args.budget,
        axiom_cap=args.axiom_cap,
        continuum_constants=args.continuum_constants,
        hat_size=args.hat_size,
    )


def cmd_sigma_gen(args) -> int:
    gen = _generator(args)
    records = gen.generate_through(args.stages)
    header = "\n".join(
        f"# {line}" for line in _header(args, {"stages": args.stages}).splitlines()
    )
    _write(args.out, header + "\n" + dump_sentences(records))
    return 0


def cmd_sigma_fragment(args) -> int:
    gen = _generator(args)
    records = gen.generate_through(args.stages)
    frag = fragment(records, args.size)
    header = "\n".join(
        f"# {line}"
        for line in _header(args, {"stages": args.stages, "size": args.size}).splitlines()
    )
    _write(args.out, header + "\n" + dump_sentences(frag))
    return 0


def cmd_sigma_witness(args) -> int:
    base, name_to_index = load_lattice(args.base)
    graph, sets = load_graph(args.graph)
    gen_sets = {}
    for name in name_to_index:
        if name not in sets:
            raise InputError(
                f"graph file must interpret base generator {name!r} as a closed set"
            )
        gen_sets[name] = sets[name]
    interp0 = base_interpretation(base, gen_sets, graph)
    for name, s in sets.items():
        if name.startswith("k(-2,"):
            interp0[name] = s
    with open(args.fragment, "r", encoding="utf-8") as fh:
        records = parse_sentence_dump(fh.read())
    result = witness_fragment(records, graph, interp0, cap=args.cap)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "model.json"), "w", encoding="utf-8") as fh:
        fh.write(dump_graph(result.graph, result.interpretation))
    with open(os.path.join(args.out, "trace.json"), "w", encoding="utf-8") as fh:
        json.dump(result.trace, fh, indent=2, sort_keys=True)
        fh.write("\n")
    lines = [_header(args, {"fragment": os.path.basename(args.fragment)})]
    for sentence, ok in result.report:
        lines.append(f"{'pass' if ok else 'FAIL'}: {sentence}")
    lines.append(f"all-true: {result.ok}")
    report = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report)
    sys.stdout.write(report)
    return 0 if result.ok else 1


def cmd_tower_build(args) -> int:
    graph, sets = load_graph(args.graph)
    catalog_names = [n for n in (args.catalog or "").split(",") if n]
    catalog = {}
    for name in catalog_names:
        if name == "whole":
            catalog["whole"] = graph.whole_set()
        elif name in sets:
            catalog[name] = sets[name]
        else:
            raise InputError(f"catalog member {name!r} is not a named closed set")
    tower = build_tower(
        graph, sets, catalog, args.depth, cap=args.cap, cell_cap=args.cell_cap
    )
    save_tower(tower, args.out)
    report = verify_tower(tower, cap=args.cap)
    lines = [_header(args, {"depth": args.depth})]
    for label, ok in report:
        lines.append(f"{'pass' if ok else 'FAIL'}: {label}")
    all_ok = all(ok for _, ok in report)
    lines.append(f"all-true: {all_ok}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0 if all_ok else 1


def cmd_tower_verify(args) -> int:
    tower = load_tower(args.directory)
    report = verify_tower(tower, cap=args.cap)
    print(_header(args, {"depth": tower.depth}))
    for label, ok in report:
        print(f"{'pass' if ok else 'FAIL'}: {label}")
    all_ok = all(ok for _, ok in report)
    print(f"all-true: {all_ok}")
    return 0 if all_ok else 1


def cmd_tower_thread(args) -> int:
    tower = load_tower(args.directory)
    if args.set == "whole":
        start = tower.graph(0).whole_set()
    elif args.set in tower.catalog:
        start = tower.catalog[args.set][0]
    elif args.set in tower.base(0):
        start = tower.base(0)[args.set]
    else:
        raise InputError(f"no catalog or base set named {args.set!r}")
    thread = weak_confluence_witness(tower, start)
    payload = {
        "set": args.set,
        "stages": [s.to_dict() for s in thread.sets],
    }
    _write(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_render(args) -> int:
    if not args.tower and not args.graph:
        raise InputError("render needs --graph or --tower")
    if args.tower:
        tower = load_tower(args.tower)
        stage = args.stage if args.stage is not None else tower.depth
        graph = tower.graph(stage)
        sets = tower.base(stage)
    else:
        graph, sets = load_graph(args.graph)
    _write(args.out, render_svg(graph, sets))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="recorded in every report")
    p.add_argument("--cap", type=int, default=4096, help="sublattice element cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crooked",
        description="Finite-lattice model checking, Wallman spaces, and "
                    "crooked surgeries on exact-rational metric graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice-check", help="evaluate a sentence on a lattice file")
    p.add_argument("file")
    p.add_argument("sentence", help="library name (DISJ, NORM, CONN1, DIM, HI, ...) or a formula")
    _add_common(p)
    p.set_defaults(func=cmd_lattice_check)

    p = sub.add_parser("wallman", help="Wallman space dump and correspondence report")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=cmd_wallman)

    for name, func, extra in (
        ("sigma-gen", cmd_sigma_gen, ()),
        ("sigma-fragment", cmd_sigma_fragment, ("size",)),
    ):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} from a base lattice")
        p.add_argument("--base", required=True, help="base lattice file")
        p.add_argument("--stages", type=int, default=5)
        p.add_argument("--budget", type=int, default=16)
        p.add_argument("--axiom-cap", type=int, default=64)
        p.add_argument("--continuum-constants", type=int, default=0)
        p.add_argument("--hat-size", type=int, default=None)
        if "size" in extra:
            p.add_argument("--size", type=int, required=True)
        p.add_argument("--out", default=None)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("sigma-witness", help="build a geometric model of a fragment")
    p.add_argument("--base", required=True)
    p.add_argument("--fragment", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sigma_witness)

    p = sub.add_parser("tower-build", help="build and verify an inverse-sequence tower")
    p.add_argument("--graph", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--catalog", default="", help="comma-separated closed-set names (or 'whole')")
    p.add_argument("--cell-cap", type=int, default=64)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tower_build)

    p = sub.add_parser("tower-verify", help="re-verify a tower directory")
    p.add_argument("directory")
    _add_common(p)
    p.set_defaults(func=cmd_tower_verify)

    p = sub.add_parser("tower-thread", help="emit a weak-confluence thread")
    p.add_argument("directory")
    p.add_argument("--set", required=True)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_tower_thread)

    p = sub.add_parser("render", help="render a graph or tower stage as SVG")
    p.add_argument("--graph", default=None)
    p.add_argument("--tower", default=None)
    p.add_argument("--stage", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CrookedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
