"""`dcbpv` command line: check, eval, translate, meta, repl.

Exit codes: 0 success, 1 type error, 2 parse error, 3 unexpected
metatheory failure, 4 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .kernel import Checker, Context, TypingError
from .machine import (
    Branches, FuelExhausted, MachineError, Stuck, Terminal, TraceRecord, inject,
    parse_strategy, run,
)
from .parser import Parser, ParseError, _parse_header, parse_program, pretty
from .syntax import EffectSignature, Flags

OK, TYPE_ERROR, PARSE_ERROR, META_FAIL, USAGE = 0, 1, 2, 3, 4
CORPUS = Path(__file__).parent / "corpus"


class UsageError(Exception):
    pass


class _Args(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _flag_args(p):
    g = p.add_argument_group("kernel flags")
    g.add_argument("--plus", action="store_true", help="dependent Kleisli extensions")
    g.add_argument("--proj-products", action="store_true", help="dependent projection products")
    g.add_argument("--eta-thunk", action="store_true", help="eta for thunks as definitional")
    g.add_argument("--eta-fun", action="store_true", help="eta for lambda forms as definitional")
    g.add_argument("--effect-eqs", action="store_true",
                   help="algebraicity and mu-unrolling as definitional")


def _fuel_default() -> int:
    env = os.environ.get("DCBPV_FUEL")
    if env is None:
        return 100_000
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"DCBPV_FUEL must be a positive integer, got {env!r}") from None
    if n <= 0:
        raise UsageError("DCBPV_FUEL must be positive")
    return n


def _positive(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer") from None
    if n <= 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def _strategy(text):
    try:
        return parse_strategy(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Args(prog="dcbpv", description="Dependently typed call-by-push-value toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Args)

    c = sub.add_parser("check", help="type-check every declaration")
    c.add_argument("file")
    c.add_argument("--json", action="store_true", help="machine-readable diagnostics")
    _flag_args(c)

    e = sub.add_parser("eval", help="run main on the CK machine")
    e.add_argument("file")
    e.add_argument("--fuel", type=_positive, default=None)
    e.add_argument("--strategy", type=_strategy, default="first", help="first | seed:N | all")
    e.add_argument("--trace", action="store_true")
    e.add_argument("--trace-format", choices=("text", "jsonl"), default="text")
    e.add_argument("--no-check", action="store_true", help="evaluate without type-checking")
    _flag_args(e)

    t = sub.add_parser("translate", help="elaborate a .dtt surface program")
    t.add_argument("file")
    d = t.add_mutually_exclusive_group(required=True)
    d.add_argument("--cbv", action="store_true")
    d.add_argument("--cbn", action="store_true")
    _flag_args(t)

    m = sub.add_parser("meta", help="check metatheorems over a corpus")
    m.add_argument("paths", nargs="*")
    m.add_argument("--fuel", type=_positive, default=10_000)
    m.add_argument("--fuzz", type=int, default=0, help="generated programs to add")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--isos", action="store_true", help="also check the type isomorphisms")
    m.add_argument("--json", action="store_true")
    _flag_args(m)

    r = sub.add_parser("repl", help="evaluate one computation per input line")
    r.add_argument("--fuel", type=_positive, default=None)
    r.add_argument("--strategy", type=_strategy, default="first")
    _flag_args(r)
    return p


def _flags(args) -> Flags:
    return Flags(plus=args.plus, proj_products=args.proj_products, eta_thunk=args.eta_thunk,
                 eta_fun=args.eta_fun, effect_eqs=args.effect_eqs)


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = CORPUS / p.name
    if bundled.exists():
        return bundled
    raise FileNotFoundError(path)


def _read(path: str) -> str:
    return _resolve(path).read_text(encoding="utf-8")


def _err(msg: str):
    print(msg, file=sys.stderr)


def main(argv: Optional[list] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing command: check, eval, translate, meta or repl")
        handler = {"check": cmd_check, "eval": cmd_eval, "translate": cmd_translate,
                   "meta": cmd_meta, "repl": cmd_repl}[args.command]
        return handler(args)
    except UsageError as e:
        _err(f"usage error: {e}")
        return USAGE
    except FileNotFoundError as e:
        _err(f"usage error: no such file: {e}")
        return USAGE
    except ParseError as e:
        _err(f"parse error: {e}")
        return PARSE_ERROR


# ----------------------------------------------------------------- commands

def _load(args):
    prog = parse_program(_read(args.file))
    flags = prog.signature.features.merge(_flags(args))
    sig = prog.signature.with_flags(flags)
    return prog, sig, flags


def _check_decl(ch: Checker, d):
    ctx = Context()
    match d.kind:
        case "vtype":
            ch.wf_vtype(ctx, d.body)
            return None
        case "ctype":
            ch.wf_ctype(ctx, d.body)
            return None
        case "value":
            if d.ty is not None:
                ch.wf_vtype(ctx, d.ty)
                ch.check_value(ctx, d.body, d.ty)
                return d.ty
            return ch.synth_value(ctx, d.body)
        case _:
            if d.ty is not None:
                ch.wf_ctype(ctx, d.ty)
                ch.check_comp(ctx, d.body, d.ty)
                return d.ty
            return ch.synth_comp(ctx, d.body)


def cmd_check(args) -> int:
    prog, sig, flags = _load(args)
    ch = Checker(sig, flags)
    failed = 0
    results = []
    for d in prog.decls:
        try:
            ty = _check_decl(ch, d)
            line = f"{d.name}: ok" + ("" if ty is None else f" : {pretty(ty)}")
            results.append({"name": d.name, "ok": True, "type": None if ty is None else pretty(ty)})
            if not args.json:
                print(line)
        except TypingError as e:
            failed += 1
            results.append({"name": d.name, "ok": False, "line": d.line, **e.to_json()})
            if not args.json:
                print(f"{d.name}: type error")
                _err(f"{args.file}:{d.line}: {d.name}: {e}")
        except RecursionError:
            failed += 1
            results.append({"name": d.name, "ok": False, "line": d.line, "rule": "depth",
                            "message": "term too deep"})
            if not args.json:
                print(f"{d.name}: type error")
    if args.json:
        print(json.dumps(results, indent=2))
    return TYPE_ERROR if failed else OK


def _outcome_lines(o, prefix="") -> list:
    if isinstance(o, Branches):
        out = []
        for i, b in enumerate(o.outcomes, 1):
            out.extend(_outcome_lines(b, f"branch {i}: "))
        if o.truncated:
            out.append("branches truncated at the branch cap")
        return out
    c = o.config
    tail = f"{pretty(c.comp)} | out: {''.join(c.out) or 'ε'} | state: {c.state}"
    match o:
        case Terminal():
            return [f"{prefix}terminal: {tail}"]
        case FuelExhausted():
            return [f"{prefix}fuel exhausted: {tail}"]
        case Stuck(reason=r):
            return [f"{prefix}stuck ({r}): {tail}"]
    raise TypeError(o)


def cmd_eval(args) -> int:
    prog, sig, flags = _load(args)
    if prog.main is None:
        raise UsageError("program has no main")
    if not args.no_check:
        ch = Checker(sig, flags)
        try:
            if prog.main_ty is not None:
                ch.check_comp(Context(), prog.main, prog.main_ty)
            else:
                ch.synth_comp(Context(), prog.main)
        except TypingError as e:
            _err(f"{args.file}: main: {e}")
            return TYPE_ERROR
    fuel = args.fuel or _fuel_default()
    records = []

    def emit(r: TraceRecord):
        records.append(r)
        if args.trace_format == "jsonl":
            print(json.dumps(r.to_json(), ensure_ascii=False))
        else:
            print(r.to_text())

    try:
        o = run(sig, prog.main, fuel, args.strategy,
                trace=emit if args.trace and args.strategy != "all" else None)
    except MachineError as e:
        _err(str(e))
        return USAGE
    for line in _outcome_lines(o):
        print(line)
    if args.trace and not isinstance(o, Branches):
        print(f"steps: {o.steps} (fuel {fuel})")
    return OK


def cmd_translate(args) -> int:
    from .translate import (
        TranslationError, parse_surface_program, render_core_program, translate_program,
    )
    prog = parse_surface_program(_read(args.file))
    flags = prog.signature.features.merge(_flags(args))
    try:
        main, ty = translate_program(prog, "cbv" if args.cbv else "cbn", flags.plus)
    except TranslationError as e:
        _err(f"{args.file}: {e}")
        return TYPE_ERROR
    sys.stdout.write(render_core_program(prog.signature.with_flags(flags), main, ty))
    return OK


def cmd_meta(args) -> int:
    from .metatheory import CorpusReport, run_corpus
    paths = args.paths or [str(CORPUS)]
    rep = CorpusReport()
    flags = _flags(args)
    for i, path in enumerate(paths):
        p = Path(path)
        if not p.exists():
            p = _resolve(path)
        last = i == len(paths) - 1
        rep = rep.merge(run_corpus(p, flags, args.fuel, args.fuzz if last else 0, args.seed,
                                   args.isos and last))
    print(rep.to_json() if args.json else rep.table())
    return META_FAIL if rep.unexpected_failures else OK


def cmd_repl(args) -> int:
    """Line-oriented: `#` headers and `def` lines persist; other lines are evaluated."""
    headers: list = []
    sig = EffectSignature(features=_flags(args))
    env: dict = {}
    fuel = args.fuel or _fuel_default()
    status = OK
    for n, raw in enumerate(sys.stdin, 1):
        line = raw.strip()
        if not line or line.startswith("--"):
            continue
        try:
            if line.startswith("#"):
                headers.append((n, line))
                base = _parse_header(headers)
                sig = base.with_flags(base.features.merge(_flags(args)))
                continue
            if line.startswith("def "):
                prog = parse_program("\n".join(d for d in env.values()) + "\n" + line)
                name = prog.decls[-1].name
                env[name] = line
                print(f"{name} defined")
                continue
            prog = parse_program("\n".join(env.values()) + "\nmain = " + line)
            ch = Checker(sig)
            ch.synth_comp(Context(), prog.main)
            o = run(sig, prog.main, fuel, args.strategy)
            for out in _outcome_lines(o):
                print(out)
        except ParseError as e:
            _err(f"line {n}: parse error: {e}")
            status = max(status, PARSE_ERROR)
        except TypingError as e:
            _err(f"line {n}: type error: {e}")
            status = max(status, TYPE_ERROR)
    return status


if __name__ == "__main__":
    sys.exit(main())
