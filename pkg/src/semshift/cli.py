"""``semshift`` command line: compile, translate, derive, check, bench.

Exit codes: 0 success, 1 usage/parse/compile/I/O error, 2 transfer failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .bench import DEFAULT_VOCAB, run_bench
from .compiler import CompiledRuleSet, compile_rules
from .errors import SemshiftError, TransferError
from .rules import load_rule_file
from .runtime import FallbackPolicy, derive_all, transfer
from .sorts import load_hierarchy_file
from .vit import load_vit_file, serialize_vit, validate_sorts, validate_vit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRANSFER = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _add_rule_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rules", nargs="+", required=True, metavar="FILE", help="rule files")
    p.add_argument("--direction", required=True, choices=("fwd", "bwd"))
    p.add_argument("--sorts", metavar="FILE", help="sort hierarchy file")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fallback", choices=[x.value for x in FallbackPolicy], default="copy")
    p.add_argument("--trace", action="store_true", help="append the derivation trace as comments")
    p.add_argument("--stats", action="store_true", help="print timing and rule counts on stderr")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="semshift", description="Transfer of flat semantic representations by rewrite rules.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="parse and compile rule files")
    _add_rule_options(p)
    p.add_argument("--dump-trie", action="store_true", help="print the compiled index")

    p = sub.add_parser("translate", help="transfer Vit files")
    _add_rule_options(p)
    _add_run_options(p)
    p.add_argument("inputs", nargs="+", metavar="INPUT", help="Vit files or directories of *.vit files")
    p.add_argument("-o", "--output", metavar="PATH", help="output file, or directory in batch mode")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads in batch mode")

    p = sub.add_parser("derive", help="list all distinct transfer results")
    _add_rule_options(p)
    _add_run_options(p)
    p.add_argument("input", metavar="INPUT")
    p.add_argument("--limit", type=int, default=1000, metavar="N", help="derivations explored")

    p = sub.add_parser("check", help="validate rule files and optional Vit inputs")
    _add_rule_options(p)
    p.add_argument("inputs", nargs="*", metavar="INPUT")

    p = sub.add_parser("bench", help="time compile and transfer on synthetic data")
    p.add_argument("--num-rules", "-n", type=int, default=1700, metavar="N")
    p.add_argument("--num-inputs", "-m", type=int, default=200, metavar="M")
    p.add_argument("--vocab", type=int, default=DEFAULT_VOCAB, metavar="V")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    return ap


def _load_program(args) -> CompiledRuleSet:
    hierarchy = load_hierarchy_file(args.sorts) if args.sorts else None
    modules = [load_rule_file(f) for f in args.rules]
    prog = compile_rules(modules, args.direction, hierarchy)
    for d in prog.diagnostics:
        if d.level != "info":
            print(d, file=sys.stderr)
    return prog


def _expand_inputs(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.vit")))
        else:
            files.append(p)
    return files


@dataclass
class _Outcome:
    path: Path
    text: str = ""
    stats: str = ""
    error: str = ""
    code: int = EXIT_OK


def _translate_one(path: Path, prog: CompiledRuleSet, args) -> _Outcome:
    try:
        v = load_vit_file(path)
    except (OSError, UnicodeDecodeError) as exc:
        return _Outcome(path, error=f"{path}: {exc}", code=EXIT_USAGE)
    except SemshiftError as exc:
        return _Outcome(path, error=str(exc), code=EXIT_USAGE)
    try:
        res = transfer(v, prog, policy=args.fallback)
    except TransferError as exc:
        return _Outcome(path, error=f"{path}: {exc}", code=EXIT_TRANSFER)
    except SemshiftError as exc:
        return _Outcome(path, error=f"{path}: {exc}", code=EXIT_USAGE)
    text = serialize_vit(res.output)
    if args.trace:
        text += "".join(f"# {s}\n" for s in res.trace)
    return _Outcome(path, text, str(res.stats))


def cmd_compile(args) -> int:
    prog = _load_program(args)
    n_classes = len(prog.classes)
    classes = "class" if n_classes == 1 else "classes"
    print(f"{len(prog.rules)} rules, {n_classes} {classes}, {len(prog.index_keys)} index keys ({args.direction})")
    if args.dump_trie:
        sys.stdout.write(prog.dump_trie())
    return EXIT_OK


def cmd_translate(args) -> int:
    prog = _load_program(args)
    files = _expand_inputs(args.inputs)
    if not files:
        _err("no input files")
        return EXIT_USAGE
    batch = len(files) > 1 or any(Path(p).is_dir() for p in args.inputs)
    if args.jobs > 1 and batch:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(lambda f: _translate_one(f, prog, args), files))
    else:
        outcomes = [_translate_one(f, prog, args) for f in files]

    outdir = Path(args.output) if (batch and args.output) else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    for o in outcomes:
        if o.error:
            _err(o.error)
            continue
        if args.stats:
            print(f"{o.path}: {o.stats}", file=sys.stderr)
        if outdir is not None:
            (outdir / o.path.name).write_text(o.text, encoding="utf-8")
        elif args.output:
            Path(args.output).write_text(o.text, encoding="utf-8")
        else:
            if batch:
                sys.stdout.write(f"# {o.path}\n")
            sys.stdout.write(o.text)
    if batch:
        failed = sum(1 for o in outcomes if o.code == EXIT_TRANSFER)
        bad = sum(1 for o in outcomes if o.code == EXIT_USAGE)
        ok = len(outcomes) - failed - bad
        print(f"{len(outcomes)} files: {ok} translated, {failed} transfer failures, {bad} unreadable", file=sys.stderr)
    codes = {o.code for o in outcomes}
    if EXIT_USAGE in codes:
        return EXIT_USAGE
    return EXIT_TRANSFER if EXIT_TRANSFER in codes else EXIT_OK


def cmd_derive(args) -> int:
    prog = _load_program(args)
    v = load_vit_file(args.input)
    ds = derive_all(v, prog, limit=args.limit, policy=args.fallback)
    if not ds.results:
        _err(f"{args.input}: no complete derivation under fallback policy {args.fallback!r}")
        return EXIT_TRANSFER
    n = len(ds.results)
    for k, r in enumerate(ds.results, 1):
        sys.stdout.write(f"# result {k} of {n}\n")
        sys.stdout.write(serialize_vit(r.output))
        if args.trace:
            sys.stdout.write("".join(f"# {s}\n" for s in r.trace))
    if ds.truncated:
        sys.stdout.write(f"# truncated after {args.limit} derivations\n")
    if args.stats:
        print(f"{n} distinct results, {ds.results[0].stats}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    prog = _load_program(args)
    code = EXIT_OK
    for f in _expand_inputs(args.inputs):
        try:
            v = load_vit_file(f)
            validate_vit(v, transfer_input=True)
            if prog.hierarchy is not None:
                validate_sorts(v, prog.hierarchy)
        except (OSError, SemshiftError) as exc:
            _err(str(exc) if isinstance(exc, SemshiftError) else f"{f}: {exc}")
            code = EXIT_USAGE
            continue
        print(f"{f}: ok")
    print(f"{len(prog.rules)} rules ok")
    return code


def cmd_bench(args) -> int:
    if args.num_rules < 0 or args.num_inputs < 1 or args.vocab < 4 or args.repeats < 1:
        _err("bench sizes must be positive (vocab at least 4)")
        return EXIT_USAGE
    report = run_bench(args.num_rules, args.num_inputs, args.vocab, args.seed, args.repeats)
    print("\n".join(report.lines()))
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "translate": cmd_translate,
    "derive": cmd_derive,
    "check": cmd_check,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        _err("--jobs must be at least 1")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except TransferError as exc:
        _err(str(exc))
        return EXIT_TRANSFER
    except SemshiftError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (OSError, UnicodeDecodeError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
