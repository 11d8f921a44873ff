"""Concrete syntax: lexer, recursive-descent parser and pretty-printer.

Terms are ASCII; keyword forms take atomic arguments, binder forms (`let`,
`pm`, `lam x.`, `mu`, `to`) extend as far to the right as possible.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    App, AppHom, AppV, Branch, Choose, DepProd, Diverge, EffectSignature, Error,
    F, FinProd, FinSum, Flags, Force, FunPi, Hom, Id, IdMotive, Inj, Lam, LamI,
    LamNil, LamV, Let, LetNil, Motive, Mu, Nil, Node, Pair, Pi, PmId, PmPair,
    PmSum, PmUnit, Print, ProjI, Read, Refl, RetTensor, Return, Sigma, SigmaF,
    Thunk, To, ToTensor, U, Unit, UnitV, Var, Wild, Write, free_idents,
    is_comp, is_ctype, is_value, is_vtype, subst,
)

KEYWORDS = {
    "return", "to", "thunk", "force", "pm", "as", "in", "let", "be", "lam",
    "vlam", "proj", "app", "vapp", "happ", "diverge", "mu", "print", "choose",
    "error", "write", "read", "refl", "rtensor", "nil", "def", "main",
}
TYPE_KEYWORDS = {"U", "F", "Sum", "Prod", "Sigma", "SigmaF", "Pi", "Id", "Hom",
                 "DepProd"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|[()<>{}\[\],.:|=*])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg, self.line, self.col = msg, line, col


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    pos, line, lstart = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and (s in KEYWORDS or s in TYPE_KEYWORDS):
                kind = "kw"
            toks.append(Tok(kind, s, line, pos - lstart + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            lstart = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


@dataclass
class Decl:
    name: str
    kind: str              # vtype | ctype | value | comp
    ty: Optional[Node]
    body: Node
    line: int = 0


@dataclass
class Program:
    signature: EffectSignature = field(default_factory=EffectSignature)
    decls: list = field(default_factory=list)
    main: Optional[Node] = None
    main_ty: Optional[Node] = None
    expect_fail: frozenset = frozenset()

    def decl(self, name):
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)


class Parser:
    def __init__(self, text: str, env: Optional[dict] = None, open_terms=True):
        self.toks = tokenize(text)
        self.i = 0
        self.env = env if env is not None else {}
        self.open_terms = open_terms
        self.bound: list[str] = []

    # -------------------------------------------------------- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, kind=None) -> bool:
        t = self.tok
        return t.text == text and t.kind != "string" and (kind is None or t.kind == kind)

    def fail(self, msg, tok=None):
        t = tok or self.tok
        raise ParseError(msg, t.line, t.col)

    def expect(self, text):
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        self.i += 1

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "int":
            self.fail(f"expected index, found {t.text or 'end of input'!r}")
        self.i += 1
        return int(t.text)

    def scoped(self, names, fn):
        self.bound.extend(names)
        try:
            return fn()
        finally:
            del self.bound[len(self.bound) - len(names):]

    def value(self, t, tok):
        if not is_value(t):
            self.fail("expected a value", tok)
        return t

    def comp(self, t, tok):
        if not is_comp(t):
            self.fail("expected a computation", tok)
        return t

    # ------------------------------------------------------------- types
    def type_(self) -> Node:
        t = self.tok
        if t.kind == "int":
            if t.text != "1":
                self.fail("only 1 is a type literal")
            self.i += 1
            return Unit()
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.expect(")")
            return ty
        if t.kind == "ident":
            d = self.env.get(t.text)
            if t.text in self.bound or d is None or d.kind not in ("vtype", "ctype"):
                self.fail(f"unknown type {t.text!r}")
            self.i += 1
            return d.body
        if t.kind != "kw" or t.text not in TYPE_KEYWORDS:
            self.fail(f"expected a type, found {t.text or 'end of input'!r}")
        self.i += 1
        match t.text:
            case "U":
                return U(self.ctype(t))
            case "F":
                return F(self.vtype(t))
            case "Sum":
                return FinSum(tuple(self.vtype(self.tok) for _ in self.comma_list()))
            case "Prod":
                return FinProd(tuple(self.ctype(self.tok) for _ in self.comma_list()))
            case "Sigma" | "SigmaF" | "Pi":
                self.expect("(")
                x = self.ident()
                self.expect(":")
                dom = self.vtype(self.tok)
                self.expect(")")
                self.expect("->" if t.text == "Pi" else "*")
                ct = self.tok
                cod = self.scoped([x], self.type_)
                if t.text == "Sigma":
                    if not is_vtype(cod):
                        self.fail("Sigma expects a value type", ct)
                    return Sigma(x, dom, cod)
                if t.text == "SigmaF":
                    if not is_ctype(cod):
                        self.fail("SigmaF expects a computation type", ct)
                    return SigmaF(x, dom, cod)
                return Pi(x, dom, cod) if is_vtype(cod) else FunPi(x, dom, cod)
            case "Id":
                self.expect("(")
                a = self.vtype(self.tok)
                self.expect(",")
                lt = self.tok
                lhs = self.value(self.term(), lt)
                self.expect(",")
                rt = self.tok
                rhs = self.value(self.term(), rt)
                self.expect(")")
                return Id(a, lhs, rhs)
            case "Hom":
                self.expect("(")
                b = self.ctype(self.tok)
                self.expect(",")
                c = self.ctype(self.tok)
                self.expect(")")
                return Hom(b, c)
            case "DepProd":
                self.expect("(")
                names, items = [], []
                if not self.at(")"):
                    while True:
                        z = self.ident()
                        self.expect(":")
                        items.append(self.scoped(list(names), lambda: self.ctype(self.tok)))
                        names.append(z)
                        if not self.at(","):
                            break
                        self.i += 1
                self.expect(")")
                return DepProd(tuple(names), tuple(items))

    def comma_list(self):
        """Yield once per element of a parenthesised comma-separated list."""
        self.expect("(")
        if self.at(")"):
            self.i += 1
            return
        while True:
            yield
            if self.at(","):
                self.i += 1
                continue
            self.expect(")")
            return

    def vtype(self, tok):
        ty = self.type_()
        if not is_vtype(ty):
            self.fail("expected a value type", tok)
        return ty

    def ctype(self, tok):
        ty = self.type_()
        if not is_ctype(ty):
            self.fail("expected a computation type", tok)
        return ty

    # ------------------------------------------------------------- terms
    def term(self) -> Node:
        start = self.tok
        t = self.simple()
        while self.at("to"):
            self.comp(t, start)
            self.i += 1
            if self.at("rtensor"):
                self.i += 1
                x = self.ident()
                self.expect("in")
                bt = self.tok
                body = self.scoped([x], lambda: self.comp(self.term(), bt))
                return ToTensor(t, x, body)
            x = self.ident()
            ty = None
            if self.at(":"):
                self.i += 1
                ty = self.vtype(self.tok)
            motive = self.motive() if self.at("[") else None
            self.expect("in")
            bt = self.tok
            body = self.scoped([x], lambda: self.comp(self.term(), bt))
            return To(t, x, body, ty, motive)
        return t

    def motive(self) -> Motive:
        self.expect("[")
        z = self.ident()
        self.expect(".")
        ty = self.scoped([z], self.type_)
        self.expect("]")
        return Motive(z, ty)

    def id_motive(self) -> IdMotive:
        self.expect("[")
        x, y, p = self.ident(), self.ident(), self.ident()
        self.expect(".")
        ty = self.scoped([x, y, p], self.type_)
        self.expect("]")
        return IdMotive(x, y, p, ty)

    def atom_value(self):
        t = self.tok
        return self.value(self.atom(), t)

    def atom_comp(self):
        t = self.tok
        return self.comp(self.atom(), t)

    def simple(self) -> Node:
        t = self.tok
        kw = t.text if t.kind == "kw" else None
        match kw:
            case "let":
                self.i += 1
                if self.at("nil"):
                    self.i += 1
                    self.expect("be")
                    bt = self.tok
                    bound = self.comp(self.term(), bt)
                    self.expect("in")
                    bt = self.tok
                    return LetNil(bound, self.comp(self.term(), bt))
                x = self.ident()
                self.expect("be")
                bt = self.tok
                bound = self.value(self.term(), bt)
                self.expect("in")
                return Let(x, bound, self.scoped([x], self.term))
            case "pm":
                return self.pm()
            case "lam" if self.peek().text != "{":
                self.i += 1
                if self.at("nil"):
                    self.i += 1
                    ty = self.annotation()
                    self.expect(".")
                    bt = self.tok
                    return LamNil(self.comp(self.term(), bt), ty)
                x = self.ident()
                ty = self.annotation()
                self.expect(".")
                bt = self.tok
                return Lam(x, self.scoped([x], lambda: self.comp(self.term(), bt)), ty)
            case "vlam" | "mu":
                self.i += 1
                x = self.ident()
                ty = self.annotation()
                self.expect(".")
                bt = self.tok
                if kw == "vlam":
                    return LamV(x, self.scoped([x], lambda: self.value(self.term(), bt)), ty)
                return Mu(x, self.scoped([x], lambda: self.comp(self.term(), bt)), ty)
            case "return":
                self.i += 1
                return Return(self.atom_value())
            case "force":
                self.i += 1
                return Force(self.atom_value())
            case "thunk":
                self.i += 1
                return Thunk(self.atom_comp())
            case "refl":
                self.i += 1
                return Refl(self.atom_value())
            case "proj":
                self.i += 1
                i = self.integer()
                return ProjI(i, self.atom_comp())
            case "app":
                self.i += 1
                v = self.atom_value()
                return App(v, self.atom_comp())
            case "vapp":
                self.i += 1
                v = self.atom_value()
                return AppV(v, self.atom_value())
            case "happ":
                self.i += 1
                k = self.atom_comp()
                return AppHom(k, self.atom_value())
            case "rtensor":
                self.i += 1
                v = self.atom_value()
                return RetTensor(v, self.atom_comp())
            case "print":
                self.i += 1
                toks = []
                while self.tok.kind == "string":
                    toks.append(json.loads(self.tok.text))
                    self.i += 1
                return Print(tuple(toks), self.atom_comp())
            case "write":
                self.i += 1
                s = self.ident()
                return Write(s, self.atom_comp())
        return self.atom()

    def annotation(self):
        if self.at(":"):
            self.i += 1
            return self.type_()
        return None

    def pm(self) -> Node:
        self.expect("pm")
        scrut = self.atom_value()
        self.expect("as")
        if self.at("("):
            self.i += 1
            self.expect(")")
            motive = self.motive() if self.at("[") else None
            self.expect("in")
            return PmUnit(scrut, self.term(), motive)
        if self.at("refl"):
            self.i += 1
            x = self.ident()
            motive = self.id_motive() if self.at("[") else None
            self.expect("in")
            return PmId(scrut, x, self.scoped([x], self.term), motive)
        if self.at("<"):
            self.i += 1
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect(">")
            motive = self.motive() if self.at("[") else None
            self.expect("in")
            return PmPair(scrut, x, y, self.scoped([x, y], self.term), motive)
        self.expect("{")
        branches = []
        if not self.at("}"):
            while True:
                self.expect("<")
                it = self.tok
                i = self.integer()
                if i != len(branches) + 1:
                    self.fail(f"branch index {i} out of order", it)
                self.expect(",")
                x = self.ident()
                self.expect(">")
                self.expect("->")
                branches.append(Branch(x, self.scoped([x], self.term)))
                if not self.at("|"):
                    break
                self.i += 1
        self.expect("}")
        motive = self.motive() if self.at("[") else None
        if not branches and motive is None:
            self.fail("an empty case analysis needs a motive")
        kinds = {is_value(b.body) for b in branches}
        if len(kinds) > 1:
            self.fail("branches mix values and computations")
        return PmSum(scrut, tuple(branches), motive)

    def braced(self, item):
        self.expect("{")
        out = []
        if not self.at("}"):
            while True:
                out.append(item())
                if not self.at("|"):
                    break
                self.i += 1
        self.expect("}")
        return out

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            if t.text in self.bound:
                return Var(t.text)
            d = self.env.get(t.text)
            if d is not None:
                if d.kind not in ("value", "comp"):
                    self.fail(f"{t.text!r} names a type", t)
                return d.body
            if not self.open_terms:
                self.fail(f"unknown identifier {t.text!r}", t)
            return Var(t.text)
        if t.kind == "kw":
            match t.text:
                case "nil":
                    self.i += 1
                    return Nil()
                case "diverge":
                    self.i += 1
                    return Diverge()
                case "error":
                    self.i += 1
                    return Error(self.ident())
                case "choose":
                    self.i += 1
                    return Choose(tuple(self.braced(lambda: self.comp(self.term(), self.tok))))
                case "lam" if self.peek().text == "{":
                    self.i += 1
                    return LamI(tuple(self.braced(lambda: self.comp(self.term(), self.tok))))
                case "read":
                    self.i += 1

                    def branch():
                        s = self.ident()
                        self.expect("->")
                        bt = self.tok
                        return s, self.comp(self.term(), bt)
                    brs = self.braced(branch)
                    return Read(tuple(s for s, _ in brs), tuple(b for _, b in brs))
        if self.at("("):
            self.i += 1
            if self.at(")"):
                self.i += 1
                return UnitV()
            inner = self.term()
            self.expect(")")
            return inner
        if self.at("<"):
            self.i += 1
            if self.tok.kind == "int" and self.peek().text == ",":
                i = self.integer()
                self.expect(",")
                v = self.value(self.term(), self.tok)
                ann = self.annotation()
                self.expect(">")
                return Inj(i, v, ann)
            ft = self.tok
            a = self.value(self.term(), ft)
            self.expect(",")
            st = self.tok
            b = self.value(self.term(), st)
            ann = self.annotation()
            self.expect(">")
            return Pair(a, b, ann)
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def done(self):
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r}")


def parse_term(text: str) -> Node:
    """Parse a single (possibly open) value or computation."""
    p = Parser(text)
    t = p.term()
    p.done()
    return t


def parse_type(text: str) -> Node:
    p = Parser(text)
    t = p.type_()
    p.done()
    return t


def parse(text: str) -> Node:
    """Parse a term or a type, whichever the text is."""
    try:
        return parse_type(text)
    except ParseError:
        return parse_term(text)


_HEADER = re.compile(r"^\s*#(\w+)\s*(.*)$")
_EXPECT = re.compile(r"--\s*EXPECT-FAIL:\s*([\w,\- ]+)")


def _parse_header(lines):
    states, init, errors, flags = ("s0",), None, frozenset(), Flags()
    for lineno, line in lines:
        m = _HEADER.match(line)
        key, rest = m.group(1), m.group(2).strip()
        if key == "states":
            hm = re.match(r"^\{([^}]*)\}\s*(?:init\s+(\w+))?\s*$", rest)
            if not hm:
                raise ParseError("malformed #states header", lineno, 1)
            states = tuple(s.strip() for s in hm.group(1).split(",") if s.strip())
            init = hm.group(2) or (states[0] if states else None)
        elif key == "errors":
            hm = re.match(r"^\{([^}]*)\}\s*$", rest)
            if not hm:
                raise ParseError("malformed #errors header", lineno, 1)
            errors = frozenset(s.strip() for s in hm.group(1).split(",") if s.strip())
        elif key == "flags":
            try:
                flags = Flags.parse(rest.split(","))
            except ValueError as e:
                raise ParseError(str(e), lineno, 1) from None
        else:
            raise ParseError(f"unknown header #{key}", lineno, 1)
    try:
        return EffectSignature(states=states, init=init or states[0], errors=errors,
                               features=flags)
    except (ValueError, IndexError) as e:
        raise ParseError(f"bad signature: {e}", lines[0][0] if lines else 1, 1) from None


def parse_program(text: str) -> Program:
    headers, body_lines, expect = [], [], set()
    for n, line in enumerate(text.splitlines(), 1):
        m = _EXPECT.search(line)
        if m:
            expect |= {s.strip() for s in m.group(1).split(",") if s.strip()}
        if _HEADER.match(line):
            headers.append((n, line))
            body_lines.append("")
        else:
            body_lines.append(line)
    sig = _parse_header(headers)
    prog = Program(signature=sig, expect_fail=frozenset(expect))
    env: dict = {}
    p = Parser("\n".join(body_lines), env, open_terms=False)
    while p.tok.kind != "eof":
        start = p.tok
        if p.at("main"):
            p.i += 1
            name = "main"
        else:
            p.expect("def")
            name = p.ident()
        if name in env or (name == "main" and prog.main is not None):
            p.fail(f"duplicate declaration {name!r}", start)
        ty = None
        if p.at(":"):
            p.i += 1
            ty = p.type_()
        p.expect("=")
        save = p.i
        body = None
        if ty is None and (p.tok.kind == "int" or p.tok.text in TYPE_KEYWORDS
                           or p.tok.text == "("
                           or (p.tok.kind == "ident" and env.get(p.tok.text)
                               and env[p.tok.text].kind in ("vtype", "ctype"))):
            try:
                body = p.type_()
                if p.tok.kind != "eof" and not p.at("def") and not p.at("main"):
                    raise ParseError("not a type")
            except ParseError:
                p.i = save
                body = None
        if body is None:
            bt = p.tok
            body = p.term()
            if p.tok.kind != "eof" and not p.at("def") and not p.at("main"):
                p.fail(f"unexpected {p.tok.text!r}")
            kind = "value" if is_value(body) else "comp"
            if kind == "comp" and not is_comp(body):
                p.fail("ill-formed declaration body", bt)
        else:
            kind = "vtype" if is_vtype(body) else "ctype"
        d = Decl(name, kind, ty, body, start.line)
        if name == "main":
            if kind != "comp":
                p.fail("main must be a computation", start)
            prog.main, prog.main_ty = body, ty
        else:
            env[name] = d
        prog.decls.append(d)
    return prog


# ------------------------------------------------------------ pretty-printer

ATOM, APP, OPEN = 2, 1, 0


def _q(tok: str) -> str:
    return json.dumps(tok)


def pretty(t, level: int = OPEN) -> str:
    """Render a term or type; the output reparses to an alpha-equal tree."""
    if is_vtype(t) or is_ctype(t) or isinstance(t, Wild):
        return pretty_type(t)
    s, own = _pp(t)
    return f"({s})" if own < level else s


def pretty_type(t) -> str:
    match t:
        case Unit():
            return "1"
        case U(body=b):
            return f"U {pretty_type(b)}"
        case F(ty=a):
            return f"F {pretty_type(a)}"
        case FinSum(items=xs):
            return "Sum(" + ", ".join(pretty_type(x) for x in xs) + ")"
        case FinProd(items=xs):
            return "Prod(" + ", ".join(pretty_type(x) for x in xs) + ")"
        case Sigma(x=x, dom=a, cod=b):
            return f"Sigma ({x} : {pretty_type(a)}) * {pretty_type(b)}"
        case SigmaF(x=x, dom=a, cod=b):
            return f"SigmaF ({x} : {pretty_type(a)}) * {pretty_type(b)}"
        case Pi(x=x, dom=a, cod=b) | FunPi(x=x, dom=a, cod=b):
            return f"Pi ({x} : {pretty_type(a)}) -> {pretty_type(b)}"
        case Id(ty=a, lhs=v, rhs=w):
            return f"Id({pretty_type(a)}, {pretty(v)}, {pretty(w)})"
        case Hom(src=b, dst=c):
            return f"Hom({pretty_type(b)}, {pretty_type(c)})"
        case DepProd(names=zs, items=bs):
            return "DepProd(" + ", ".join(f"{z} : {pretty_type(b)}" for z, b in zip(zs, bs)) + ")"
        case Wild():
            return "?"
    raise TypeError(f"not a type: {t!r}")


def _ann(ty) -> str:
    return "" if ty is None else f" : {pretty_type(ty)}"


def _motive(m) -> str:
    if m is None:
        return ""
    if isinstance(m, IdMotive):
        return f" [{m.x} {m.y} {m.p}. {pretty_type(m.ty)}]"
    return f" [{m.z}. {pretty_type(m.ty)}]"


def _pp(t) -> tuple[str, int]:
    a = lambda v: pretty(v, ATOM)
    o = lambda v: pretty(v, OPEN)
    match t:
        case Var(name=n):
            return n, ATOM
        case Nil():
            return "nil", ATOM
        case UnitV():
            return "()", ATOM
        case Diverge():
            return "diverge", ATOM
        case Error(label=e):
            return f"error {e}", ATOM
        case Inj(index=i, arg=v, ann=ann):
            return f"<{i}, {o(v)}{_ann(ann)}>", ATOM
        case Pair(fst=v, snd=w, ann=ann):
            return f"<{o(v)}, {o(w)}{_ann(ann)}>", ATOM
        case Choose(items=ms):
            return "choose {" + " | ".join(o(m) for m in ms) + "}", ATOM
        case LamI(items=ms):
            return "lam {" + " | ".join(o(m) for m in ms) + "}", ATOM
        case Read(states=ss, bodies=ms):
            return "read {" + " | ".join(f"{s} -> {o(m)}" for s, m in zip(ss, ms)) + "}", ATOM
        case Return(arg=v):
            return f"return {a(v)}", APP
        case Force(arg=v):
            return f"force {a(v)}", APP
        case Thunk(body=m):
            return f"thunk {a(m)}", APP
        case Refl(arg=v):
            return f"refl {a(v)}", APP
        case ProjI(index=i, body=m):
            return f"proj {i} {a(m)}", APP
        case App(arg=v, fun=m):
            return f"app {a(v)} {a(m)}", APP
        case AppV(arg=v, fun=w):
            return f"vapp {a(v)} {a(w)}", APP
        case AppHom(body=m, arg=v):
            return f"happ {a(m)} {a(v)}", APP
        case RetTensor(arg=v, body=m):
            return f"rtensor {a(v)} {a(m)}", APP
        case Print(tokens=ts, body=m):
            return "print " + "".join(_q(x) + " " for x in ts) + a(m), APP
        case Write(state=s, body=m):
            return f"write {s} {a(m)}", APP
        case Let(x=x, bound=v, body=b):
            return f"let {x} be {o(v)} in {o(b)}", OPEN
        case LetNil(bound=k, body=b):
            return f"let nil be {o(k)} in {o(b)}", OPEN
        case To(bound=m, x=x, body=n, ty=ty, motive=mo):
            return f"{pretty(m, APP)} to {x}{_ann(ty)}{_motive(mo)} in {o(n)}", OPEN
        case ToTensor(bound=m, x=x, body=n):
            return f"{pretty(m, APP)} to rtensor {x} in {o(n)}", OPEN
        case Lam(x=x, body=m, ty=ty):
            return f"lam {x}{_ann(ty)}. {o(m)}", OPEN
        case LamV(x=x, body=m, ty=ty):
            return f"vlam {x}{_ann(ty)}. {o(m)}", OPEN
        case LamNil(body=m, ty=ty):
            return f"lam nil{_ann(ty)}. {o(m)}", OPEN
        case Mu(z=z, body=m, ty=ty):
            return f"mu {z}{_ann(ty)}. {o(m)}", OPEN
        case PmUnit(scrut=v, body=b, motive=mo):
            return f"pm {a(v)} as (){_motive(mo)} in {o(b)}", OPEN
        case PmPair(scrut=v, x=x, y=y, body=b, motive=mo):
            return f"pm {a(v)} as <{x}, {y}>{_motive(mo)} in {o(b)}", OPEN
        case PmId(scrut=v, x=x, body=b, motive=mo):
            return f"pm {a(v)} as refl {x}{_motive(mo)} in {o(b)}", OPEN
        case PmSum(scrut=v, branches=brs, motive=mo):
            inner = " | ".join(f"<{i}, {b.x}> -> {o(b.body)}" for i, b in enumerate(brs, 1))
            return f"pm {a(v)} as {{{inner}}}{_motive(mo)}", OPEN
    raise TypeError(f"cannot print {t!r}")
