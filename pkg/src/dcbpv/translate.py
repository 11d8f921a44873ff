"""Surface dependently typed lambda calculus and its CBV/CBN elaborations.

The surface language has its own small AST and a `.dtt` reader sharing the
core lexer.  There is no surface type checker: a surface program is
well-typed when its image checks in the kernel.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .kernel import Checker, Context, TypingError
from .machine import Terminal, run
from .parser import (
    _EXPECT, _HEADER, KEYWORDS, ParseError, Tok, _parse_header, pretty, tokenize,
)
from .syntax import (
    App, AppHom, AppV, Branch, Choose, Diverge, EffectSignature, Error, F, FinProd,
    FinSum, Force, FunPi, Hom, Id, Inj, Lam, LamI, LamNil, LamV, Let, Motive, Mu,
    Nil, Pair, Pi, PmId, PmPair, PmSum, PmUnit, Print, ProjI, Read, Refl, RetTensor,
    Return, Sigma, SigmaF, Thunk, To, ToTensor, U, Unit, UnitV, Var, Write,
    canonical, free_idents, fresh, strip_annotations, subst, tr,
)


class TranslationError(Exception):
    pass


# ------------------------------------------------------------- surface AST

@dataclass(frozen=True)
class SVar:
    name: str


@dataclass(frozen=True)
class SLet:
    x: str
    bound: object
    body: object


@dataclass(frozen=True)
class SLam:
    x: str
    body: object
    ty: object = None


@dataclass(frozen=True)
class SApp:
    fun: object
    arg: object


@dataclass(frozen=True)
class SLamI:
    items: tuple


@dataclass(frozen=True)
class SProj:
    index: int
    body: object


@dataclass(frozen=True)
class SInj:
    index: int
    arg: object
    ann: object = None


@dataclass(frozen=True)
class SPmSum:
    scrut: object
    branches: tuple     # of (x, body)


@dataclass(frozen=True)
class SUnit:
    pass


@dataclass(frozen=True)
class SPmUnit:
    scrut: object
    body: object


@dataclass(frozen=True)
class SPair:
    fst: object
    snd: object


@dataclass(frozen=True)
class SPmPair:
    scrut: object
    x: str
    y: str
    body: object


@dataclass(frozen=True)
class SRefl:
    arg: object


@dataclass(frozen=True)
class SPmId:
    scrut: object
    x: str
    body: object


@dataclass(frozen=True)
class SDiverge:
    pass


@dataclass(frozen=True)
class SError:
    label: str


@dataclass(frozen=True)
class SPrint:
    tokens: tuple
    body: object


@dataclass(frozen=True)
class SWrite:
    state: str
    body: object


@dataclass(frozen=True)
class SChoose:
    items: tuple


@dataclass(frozen=True)
class SRead:
    states: tuple
    bodies: tuple


@dataclass(frozen=True)
class SMu:
    x: str
    body: object
    ty: object = None


# surface types
@dataclass(frozen=True)
class TSum:
    items: tuple


@dataclass(frozen=True)
class TUnit:
    pass


@dataclass(frozen=True)
class TSigma:
    x: str
    dom: object
    cod: object


@dataclass(frozen=True)
class TId:
    ty: object
    lhs: object
    rhs: object


@dataclass(frozen=True)
class TProd:
    items: tuple


@dataclass(frozen=True)
class TPi:
    x: str
    dom: object
    cod: object


def surface_free(t) -> set:
    match t:
        case SVar(name=n):
            return {n}
        case SLet(x=x, bound=a, body=b):
            return surface_free(a) | (surface_free(b) - {x})
        case SLam(x=x, body=b) | SMu(x=x, body=b):
            return surface_free(b) - {x}
        case SPmSum(scrut=s, branches=brs):
            out = surface_free(s)
            for x, b in brs:
                out |= surface_free(b) - {x}
            return out
        case SPmPair(scrut=s, x=x, y=y, body=b):
            return surface_free(s) | (surface_free(b) - {x, y})
        case SPmId(scrut=s, x=x, body=b):
            return surface_free(s) | (surface_free(b) - {x})
        case TSigma(x=x, dom=a, cod=b) | TPi(x=x, dom=a, cod=b):
            return surface_free(a) | (surface_free(b) - {x})
    out = set()
    for v in t.__dict__.values():
        if isinstance(v, tuple):
            for c in v:
                if _is_surface(c):
                    out |= surface_free(c)
        elif _is_surface(v):
            out |= surface_free(v)
    return out


def _is_surface(v) -> bool:
    return type(v).__module__ == __name__ and type(v).__name__[0] in "ST"


def _avoid(*terms) -> set:
    out = set()
    for t in terms:
        out |= free_idents(t)
    return out


# ---------------------------------------------------------------- CBN

def translate_cbn(t):
    """Call-by-name image: a computation; variables are thunks."""
    n = translate_cbn
    match t:
        case SVar(name=x):
            return Force(Var(x))
        case SLet(x=x, bound=m, body=b):
            return Let(x, Thunk(n(m)), n(b))
        case SInj(index=i, arg=m, ann=ann):
            a = translate_cbn_type(ann).ty if ann is not None else None
            return Return(Inj(i, Thunk(n(m)), a))
        case SPmSum(scrut=s, branches=brs):
            bodies = [(x, n(b)) for x, b in brs]
            z = fresh("z", _avoid(*(b for _, b in bodies)))
            return To(n(s), z, PmSum(Var(z), tuple(Branch(x, b) for x, b in bodies)))
        case SLamI(items=ms):
            return LamI(tuple(n(m) for m in ms))
        case SProj(index=i, body=m):
            return ProjI(i, n(m))
        case SLam(x=x, body=m, ty=ty):
            return Lam(x, n(m), None if ty is None else U(translate_cbn_type(ty)))
        case SApp(fun=f, arg=a):
            return App(Thunk(n(a)), n(f))
        case SUnit():
            return Return(UnitV())
        case SPmUnit(scrut=s, body=b):
            nb = n(b)
            z = fresh("z", free_idents(nb))
            return To(n(s), z, PmUnit(Var(z), nb))
        case SPair(fst=a, snd=b):
            return Return(Pair(Thunk(n(a)), Thunk(n(b))))
        case SPmPair(scrut=s, x=x, y=y, body=b):
            nb = n(b)
            z = fresh("z", free_idents(nb))
            return To(n(s), z, PmPair(Var(z), x, y, nb))
        case SRefl(arg=m):
            return Return(Refl(Thunk(n(m))))
        case SPmId(scrut=s, x=x, body=b):
            nb = n(b)
            z = fresh("z", free_idents(nb))
            return To(n(s), z, PmId(Var(z), x, nb))
        case SMu(x=x, body=m, ty=ty):
            return Mu(x, n(m), None if ty is None else translate_cbn_type(ty))
    return _effect(t, n)


def translate_cbn_type(t):
    n = translate_cbn_type
    match t:
        case TSum(items=xs):
            return F(FinSum(tuple(U(n(x)) for x in xs)))
        case TUnit():
            return F(Unit())
        case TProd(items=xs):
            return FinProd(tuple(n(x) for x in xs))
        case TPi(x=x, dom=a, cod=b):
            return FunPi(x, U(n(a)), n(b))
        case TSigma(x=x, dom=a, cod=b):
            return F(Sigma(x, U(n(a)), U(n(b))))
        case TId(ty=a, lhs=m, rhs=k):
            return F(Id(U(n(a)), Thunk(translate_cbn(m)), Thunk(translate_cbn(k))))
    raise TranslationError(f"not a surface type: {t!r}")


def _effect(t, f):
    match t:
        case SDiverge():
            return Diverge()
        case SError(label=e):
            return Error(e)
        case SPrint(tokens=ts, body=m):
            return Print(ts, f(m))
        case SWrite(state=s, body=m):
            return Write(s, f(m))
        case SChoose(items=ms):
            return Choose(tuple(f(m) for m in ms))
        case SRead(states=ss, bodies=ms):
            return Read(ss, tuple(f(m) for m in ms))
    raise TranslationError(f"not a surface term: {t!r}")


# ---------------------------------------------------------------- CBV

class _CBV:
    """CBV elaboration; ``env`` tracks known binder types to build motives."""

    def __init__(self, plus: bool, sig: Optional[EffectSignature]):
        self.plus = plus
        self.sig = sig or EffectSignature()

    def ret_type(self, m, env):
        try:
            b = Checker(self.sig).synth_comp(Context(tuple(env)), m)
        except (TypingError, RecursionError):
            return None
        return b.ty if isinstance(b, F) else None

    def term(self, t, env=()):
        v = lambda s, e=env: self.term(s, e)
        match t:
            case SVar(name=x):
                return Return(Var(x))
            case SLet(x=x, bound=m, body=b):
                mv = v(m)
                a = self.ret_type(mv, env)
                env2 = env + ((x, a),) if a is not None else env
                return To(mv, x, self.term(b, env2))
            case SInj(index=i, arg=m, ann=ann):
                a = self.type(ann) if ann is not None else None
                x = fresh("x", set())
                return To(v(m), x, Return(Inj(i, Var(x), a)))
            case SPmSum(scrut=s, branches=brs):
                sv = v(s)
                st = self.ret_type(sv, env)
                bodies = []
                for i, (x, b) in enumerate(brs):
                    ai = st.items[i] if isinstance(st, FinSum) and i < len(st.items) else None
                    bodies.append((x, self.term(b, env + ((x, ai),) if ai is not None else env)))
                z = fresh("z", _avoid(*(b for _, b in bodies)))
                return To(sv, z, PmSum(Var(z), tuple(Branch(x, b) for x, b in bodies)))
            case SLamI(items=ms):
                return Return(Thunk(LamI(tuple(v(m) for m in ms))))
            case SProj(index=i, body=m):
                z = fresh("z", set())
                return To(v(m), z, ProjI(i, Force(Var(z))))
            case SLam(x=x, body=m, ty=ty):
                a = None if ty is None else self.type(ty)
                env2 = env + ((x, a),) if a is not None else env
                return Return(Thunk(Lam(x, self.term(m, env2), a)))
            case SApp(fun=f, arg=a):
                fv, av = v(f), v(a)
                x = fresh("x", free_idents(fv))
                z = fresh("z", {x})
                return To(av, x, To(fv, z, App(Var(x), Force(Var(z)))))
            case SUnit():
                return Return(UnitV())
            case SPmUnit(scrut=s, body=b):
                bv = v(b)
                z = fresh("z", free_idents(bv))
                return To(v(s), z, PmUnit(Var(z), bv))
            case SPair(fst=a, snd=b):
                av, bv = v(a), v(b)
                x = fresh("x", free_idents(bv))
                y = fresh("y", {x})
                return To(av, x, To(bv, y, Return(Pair(Var(x), Var(y)))))
            case SPmPair(scrut=s, x=x, y=y, body=b):
                bv = v(b)
                z = fresh("z", free_idents(bv))
                return To(v(s), z, PmPair(Var(z), x, y, bv))
            case SRefl(arg=m):
                mv = v(m)
                z = fresh("z", set())
                motive = None
                if self.plus:
                    a = self.ret_type(mv, env)
                    if a is not None:
                        w = fresh("w", free_idents(a))
                        motive = Motive(w, F(Id(U(F(a)), Var(w), Var(w))))
                return To(mv, z, Return(Refl(tr(Var(z)))), None, motive)
            case SPmId(scrut=s, x=x, body=b):
                bv = v(b)
                avoid = free_idents(bv) | {x}
                z = fresh("z", avoid)
                y = fresh("y", avoid | {z})
                return To(v(s), z, PmId(Var(z), y, To(Force(Var(y)), x, bv)))
            case SMu(x=x, body=m, ty=ty):
                mv = v(m)
                z = fresh("z", free_idents(mv) | {x})
                b = None if ty is None else F(self.type(ty))
                return Mu(z, To(Force(Var(z)), x, mv), b)
        return _effect(t, v)

    def type(self, t, scope=()):
        match t:
            case TSum(items=xs):
                return FinSum(tuple(self.type(x, scope) for x in xs))
            case TUnit():
                return Unit()
            case TProd(items=xs):
                return U(FinProd(tuple(F(self.type(x, scope)) for x in xs)))
            case TPi(x=x, dom=a, cod=b):
                return U(FunPi(x, self.type(a, scope), F(self.type(b, scope + (x,)))))
            case TSigma(x=x, dom=a, cod=b):
                return Sigma(x, self.type(a, scope), self.type(b, scope + (x,)))
            case TId(ty=a, lhs=m, rhs=k):
                if not self.plus:
                    raise TranslationError("requires plus: identity types in CBV need dependent sequencing")
                av = self.type(a, scope)
                return Id(U(F(av)), lift(Thunk(self.term(m)), scope),
                          lift(Thunk(self.term(k)), scope))
        raise TranslationError(f"not a surface type: {t!r}")


def lift(v, scope):
    """V* over the surface variables in scope, with each z_i already at tr x_i.

    With nothing in scope this is V itself (thunk (force V) contracted).
    """
    if not scope:
        return v
    body = Force(v)
    for x in reversed(scope):
        body = To(Force(tr(Var(x))), x, body)
    return Thunk(body)


def translate_cbv(t, plus: bool = False, sig: Optional[EffectSignature] = None):
    """Call-by-value image: a computation of type F(A^v)."""
    return _CBV(plus, sig).term(t)


def translate_cbv_type(t, plus: bool = False, scope=()):
    return _CBV(plus, None).type(t, tuple(scope))


# ----------------------------------------------------------- surface reader

@dataclass
class SurfaceProgram:
    signature: EffectSignature = field(default_factory=EffectSignature)
    main: object = None
    main_ty: object = None
    expect_fail: frozenset = frozenset()


_STOP = {"in", "as", "|", "}", ")", ">", ",", ":", "def", "main", "->", "]"}


class SurfaceParser:
    def __init__(self, text, env=None):
        self.toks = tokenize(text)
        self.i = 0
        self.env = env if env is not None else {}

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def at(self, s):
        return self.tok.text == s and self.tok.kind != "string"

    def fail(self, msg):
        raise ParseError(msg, self.tok.line, self.tok.col)

    def expect(self, s):
        if not self.at(s):
            self.fail(f"expected {s!r}, found {self.tok.text or 'end of input'!r}")
        self.i += 1

    def ident(self):
        if self.tok.kind != "ident":
            self.fail(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        self.i += 1
        return self.toks[self.i - 1].text

    def integer(self):
        if self.tok.kind != "int":
            self.fail("expected index")
        self.i += 1
        return int(self.toks[self.i - 1].text)

    def ann(self):
        if self.at(":"):
            self.i += 1
            return self.type_()
        return None

    # types
    def type_(self):
        t = self.tok
        if t.kind == "int" and t.text == "1":
            self.i += 1
            return TUnit()
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.expect(")")
            return ty
        if t.kind == "ident" and t.text in self.env and self.env[t.text][0] == "type":
            self.i += 1
            return self.env[t.text][1]
        if self.at("Sum") or self.at("Prod"):
            self.i += 1
            self.expect("(")
            xs = []
            if not self.at(")"):
                xs.append(self.type_())
                while self.at(","):
                    self.i += 1
                    xs.append(self.type_())
            self.expect(")")
            return (TSum if t.text == "Sum" else TProd)(tuple(xs))
        if self.at("Sigma") or self.at("Pi"):
            self.i += 1
            self.expect("(")
            x = self.ident()
            self.expect(":")
            a = self.type_()
            self.expect(")")
            self.expect("*" if t.text == "Sigma" else "->")
            b = self.type_()
            return (TSigma if t.text == "Sigma" else TPi)(x, a, b)
        if self.at("Id"):
            self.i += 1
            self.expect("(")
            a = self.type_()
            self.expect(",")
            m = self.term()
            self.expect(",")
            k = self.term()
            self.expect(")")
            return TId(a, m, k)
        self.fail(f"expected a type, found {t.text or 'end of input'!r}")

    # terms
    def term(self):
        t = self.tok
        if self.at("let"):
            self.i += 1
            x = self.ident()
            self.expect("be")
            m = self.term()
            self.expect("in")
            return SLet(x, m, self.term())
        if self.at("lam") and self.toks[self.i + 1].text != "{":
            self.i += 1
            x = self.ident()
            ty = self.ann()
            self.expect(".")
            return SLam(x, self.term(), ty)
        if self.at("mu"):
            self.i += 1
            x = self.ident()
            ty = self.ann()
            self.expect(".")
            return SMu(x, self.term(), ty)
        if self.at("pm"):
            return self.pm()
        return self.app()

    def pm(self):
        self.expect("pm")
        s = self.app()
        self.expect("as")
        if self.at("{"):
            self.i += 1
            brs = []
            while True:
                self.expect("<")
                i = self.integer()
                if i != len(brs) + 1:
                    self.fail("sum branches must be listed in order 1, 2, ...")
                self.expect(",")
                x = self.ident()
                self.expect(">")
                self.expect("->")
                brs.append((x, self.term()))
                if self.at("|"):
                    self.i += 1
                    continue
                break
            self.expect("}")
            return SPmSum(s, tuple(brs))
        if self.at("("):
            self.i += 1
            self.expect(")")
            self.expect("in")
            return SPmUnit(s, self.term())
        if self.at("<"):
            self.i += 1
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect(">")
            self.expect("in")
            return SPmPair(s, x, y, self.term())
        if self.at("refl"):
            self.i += 1
            x = self.ident()
            self.expect("in")
            return SPmId(s, x, self.term())
        self.fail("expected a pattern")

    def app(self):
        f = self.prefix()
        while not self._stop():
            f = SApp(f, self.prefix())
        return f

    def _stop(self):
        t = self.tok
        return t.kind == "eof" or (t.kind != "string" and t.text in _STOP)

    def prefix(self):
        t = self.tok
        match t.text if t.kind == "kw" else None:
            case "proj":
                self.i += 1
                i = self.integer()
                return SProj(i, self.prefix())
            case "refl":
                self.i += 1
                return SRefl(self.prefix())
            case "print":
                self.i += 1
                toks = []
                while self.tok.kind == "string":
                    toks.append(json.loads(self.tok.text))
                    self.i += 1
                return SPrint(tuple(toks), self.prefix())
            case "write":
                self.i += 1
                s = self.ident()
                return SWrite(s, self.prefix())
            case "error":
                self.i += 1
                return SError(self.ident())
            case "diverge":
                self.i += 1
                return SDiverge()
            case "choose":
                self.i += 1
                return SChoose(tuple(self.braced(self.term)))
            case "read":
                self.i += 1
                pairs = self.braced(self._read_branch)
                return SRead(tuple(s for s, _ in pairs), tuple(m for _, m in pairs))
            case "lam" | "let" | "mu" | "pm":
                if t.text == "lam" and self.toks[self.i + 1].text == "{":
                    self.i += 1
                    return SLamI(tuple(self.braced(self.term)))
                return self.term()
        return self.atom()

    def _read_branch(self):
        s = self.ident()
        self.expect("->")
        return s, self.term()

    def braced(self, item):
        self.expect("{")
        out = []
        if not self.at("}"):
            out.append(item())
            while self.at("|"):
                self.i += 1
                out.append(item())
        self.expect("}")
        return out

    def atom(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            if t.text in self.env and self.env[t.text][0] == "term":
                return self.env[t.text][1]
            return SVar(t.text)
        if self.at("("):
            self.i += 1
            if self.at(")"):
                self.i += 1
                return SUnit()
            m = self.term()
            self.expect(")")
            return m
        if self.at("<"):
            self.i += 1
            if self.tok.kind == "int" and self.toks[self.i + 1].text == ",":
                i = self.integer()
                self.expect(",")
                m = self.term()
                ann = self.ann()
                self.expect(">")
                return SInj(i, m, ann)
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(">")
            return SPair(a, b)
        self.fail(f"unexpected {t.text or 'end of input'!r}")


def parse_surface(text: str):
    p = SurfaceParser(text)
    t = p.term()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r}")
    return t


def parse_surface_type(text: str):
    p = SurfaceParser(text)
    t = p.type_()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r}")
    return t


def parse_surface_program(text: str) -> SurfaceProgram:
    headers, body, expect = [], [], set()
    for n, line in enumerate(text.splitlines(), 1):
        m = _EXPECT.search(line)
        if m:
            expect |= {s.strip() for s in m.group(1).split(",") if s.strip()}
        if _HEADER.match(line):
            headers.append((n, line))
            body.append("")
        else:
            body.append(line)
    prog = SurfaceProgram(_parse_header(headers), expect_fail=frozenset(expect))
    env: dict = {}
    p = SurfaceParser("\n".join(body), env)
    while p.tok.kind != "eof":
        if p.at("main"):
            p.i += 1
            name = "main"
        else:
            p.expect("def")
            name = p.ident()
        if name in env or (name == "main" and prog.main is not None):
            p.fail(f"duplicate declaration {name!r}")
        ty = p.ann()
        p.expect("=")
        save = p.i
        if ty is None and (p.at("Sum") or p.at("Prod") or p.at("Sigma") or p.at("Pi")
                           or p.at("Id") or (p.tok.kind == "int" and p.tok.text == "1")):
            try:
                env[name] = ("type", p.type_())
                continue
            except ParseError:
                p.i = save
        m = p.term()
        if name == "main":
            prog.main, prog.main_ty = m, ty
        else:
            env[name] = ("term", m)
    if prog.main is None:
        raise ParseError("program has no main", p.tok.line, p.tok.col)
    return prog


def translate_program(prog: SurfaceProgram, mode: str, plus: bool = False):
    """(core main, core type or None) for a surface program."""
    if mode == "cbn":
        ty = None if prog.main_ty is None else translate_cbn_type(prog.main_ty)
        return translate_cbn(prog.main), ty
    if mode == "cbv":
        ty = None if prog.main_ty is None else F(translate_cbv_type(prog.main_ty, plus))
        return translate_cbv(prog.main, plus, prog.signature), ty
    raise ValueError(mode)


def render_core_program(sig: EffectSignature, main, ty) -> str:
    lines = []
    if tuple(sig.states) != ("s0",) or sig.init != "s0":
        lines.append("#states {" + ", ".join(sig.states) + "} init " + sig.init)
    if sig.errors:
        lines.append("#errors {" + ", ".join(sorted(sig.errors)) + "}")
    names = sig.features.names()
    if names:
        lines.append("#flags " + ", ".join(names))
    head = "main" if ty is None else f"main : {pretty(ty)}"
    lines.append(f"{head} = {pretty(main)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------- ground observation

def ground_index(outcome) -> Optional[int]:
    """Injection index of a terminal `return <i, _>`, for comparing CBV and CBN."""
    if isinstance(outcome, Terminal) and isinstance(outcome.config.comp, Return):
        v = outcome.config.comp.arg
        if isinstance(v, Inj):
            return v.index
    return None


def evaluate_both(t, sig=None, fuel=100_000):
    sig = sig or EffectSignature()
    return (ground_index(run(sig, translate_cbv(t), fuel)),
            ground_index(run(sig, translate_cbn(t), fuel)))


# ------------------------------------------------------------ isomorphisms

@dataclass
class IsoCase:
    """One round trip: running ``roundtrip`` must match running ``identity``."""
    label: str
    roundtrip: object
    identity: object


@dataclass
class IsoWitness:
    name: str
    lhs: object
    rhs: object
    to: object
    frm: object
    cases: list


_SAMPLE_TYPES = (Unit(), FinSum((Unit(), Unit())), FinSum((Unit(), Unit(), Unit())))


def _canon(a):
    """A closed canonical inhabitant of a sum-of-units or unit type."""
    return UnitV() if isinstance(a, Unit) else Inj(len(a.items), UnitV(), a)


def _elems(a):
    if isinstance(a, Unit):
        return [UnitV()]
    return [Inj(i, UnitV(), a) for i in range(1, len(a.items) + 1)]


def _tag(a, x, tokens):
    """A computation printing a token chosen by the value of x, then returning x."""
    if isinstance(a, Unit):
        return Print((tokens[0],), Return(x))
    brs = tuple(Branch("v", Print((tokens[i % len(tokens)],), Return(x)))
                for i in range(len(a.items)))
    return PmSum(x, brs)


def iso_witnesses() -> list:
    """Both directions of each listed isomorphism, with ground round trips."""
    out = []
    for a in _SAMPLE_TYPES:
        out.extend(_isos_at(a))
    merged: dict = {}
    for w in out:
        if w.name in merged:
            merged[w.name].cases.extend(w.cases)
        else:
            merged[w.name] = w
    return list(merged.values())


def _isos_at(a):
    b = F(a)
    c1 = _canon(a)
    ws = []

    # U Pi(x:A).B  ~  Pi(x:A). U B
    lhs, rhs = U(FunPi("x", a, b)), Pi("x", a, U(b))
    to = LamV("f", LamV("x", Thunk(App(Var("x"), Force(Var("f")))), a), lhs)
    frm = LamV("g", Thunk(Lam("x", Force(AppV(Var("x"), Var("g"))), a)), rhs)
    f = Thunk(Lam("x", _tag(a, Var("x"), ("f", "g")), a))
    g = LamV("x", Thunk(_tag(a, Var("x"), ("h", "k"))), a)
    cases = []
    for e in _elems(a):
        cases.append(IsoCase(f"from.to f at {pretty(e)}",
                             App(e, Force(AppV(AppV(f, to), frm))), App(e, Force(f))))
        cases.append(IsoCase(f"to.from g at {pretty(e)}",
                             Force(AppV(e, AppV(AppV(g, frm), to))), Force(AppV(e, g))))
    ws.append(IsoWitness("U-Pi", lhs, rhs, to, frm, cases))

    # F A -o B  ~  U(A -> B)
    lhs, rhs = Hom(F(a), b), U(FunPi("x", a, b))
    to = LamV("h", Thunk(Lam("x", AppHom(Return(Var("x")), Var("h")), a)), lhs)
    frm = LamV("g", LamNil(To(Nil(), "x", App(Var("x"), Force(Var("g")))), F(a)), rhs)
    h = LamNil(To(Nil(), "y", _tag(a, Var("y"), ("h", "i"))), F(a))
    g = Thunk(Lam("x", _tag(a, Var("x"), ("g", "j")), a))
    cases = []
    for e in _elems(a):
        inp = Print(("m",), Return(e))
        cases.append(IsoCase(f"from.to h at {pretty(inp)}",
                             AppHom(inp, AppV(AppV(h, to), frm)), AppHom(inp, h)))
        cases.append(IsoCase(f"to.from g at {pretty(e)}",
                             App(e, Force(AppV(AppV(g, frm), to))), App(e, Force(g))))
    ws.append(IsoWitness("Hom-U", lhs, rhs, to, frm, cases))

    # F Sigma(x:A).A'  ~  SigmaF(x:A). F A'
    a2 = a
    lhs, rhs = F(Sigma("x", a, a2)), SigmaF("x", a, F(a2))
    to = LamNil(To(Nil(), "p", PmPair(Var("p"), "x", "y", RetTensor(Var("x"), Return(Var("y"))))), lhs)
    frm = LamNil(ToTensor(Nil(), "x", To(Nil(), "y", Return(Pair(Var("x"), Var("y"))))), rhs)
    observe = LamNil(ToTensor(Nil(), "x", To(Nil(), "y", Return(Pair(Var("x"), Var("y"))))), rhs)
    cases = []
    for e in _elems(a):
        p = Print(("p",), Return(Pair(e, c1)))
        cases.append(IsoCase(f"from.to at {pretty(p)}",
                             AppHom(AppHom(p, to), frm), p))
        t = RetTensor(e, Print(("t",), Return(c1)))
        cases.append(IsoCase(f"to.from at {pretty(t)}",
                             AppHom(AppHom(AppHom(t, frm), to), observe), AppHom(t, observe)))
    ws.append(IsoWitness("F-Sigma", lhs, rhs, to, frm, cases))

    # SigmaF(x:1).B  ~  B
    lhs, rhs = SigmaF("x", Unit(), b), b
    to = LamNil(ToTensor(Nil(), "x", Nil()), lhs)
    frm = LamNil(RetTensor(UnitV(), Nil()), rhs)
    observe = LamNil(ToTensor(Nil(), "x", Nil()), lhs)
    cases = []
    for e in _elems(a):
        t = RetTensor(UnitV(), Print(("t",), Return(e)))
        cases.append(IsoCase(f"from.to at {pretty(t)}",
                             AppHom(AppHom(AppHom(t, to), frm), observe), AppHom(t, observe)))
        m = Print(("m",), Return(e))
        cases.append(IsoCase(f"to.from at {pretty(m)}", AppHom(AppHom(m, frm), to), m))
    ws.append(IsoWitness("SigmaF-unit", lhs, rhs, to, frm, cases))

    # SigmaF(x:A). F 1  ~  F A
    lhs, rhs = SigmaF("x", a, F(Unit())), F(a)
    to = LamNil(ToTensor(Nil(), "x", To(Nil(), "u", Return(Var("x")))), lhs)
    frm = LamNil(To(Nil(), "x", RetTensor(Var("x"), Return(UnitV()))), rhs)
    observe = LamNil(ToTensor(Nil(), "x", To(Nil(), "u", Return(Pair(Var("x"), Var("u"))))), lhs)
    cases = []
    for e in _elems(a):
        t = RetTensor(e, Print(("t",), Return(UnitV())))
        cases.append(IsoCase(f"from.to at {pretty(t)}",
                             AppHom(AppHom(AppHom(t, to), frm), observe), AppHom(t, observe)))
        m = Print(("m",), Return(e))
        cases.append(IsoCase(f"to.from at {pretty(m)}", AppHom(AppHom(m, frm), to), m))
    ws.append(IsoWitness("SigmaF-F1", lhs, rhs, to, frm, cases))
    return ws


def observe(outcome):
    if isinstance(outcome, Terminal):
        c = outcome.config
        return ("terminal", canonical(strip_annotations(c.comp)), c.out, c.state)
    return (type(outcome).__name__,)


def check_iso_case(case: IsoCase, sig=None, fuel=10_000) -> bool:
    sig = sig or EffectSignature()
    return observe(run(sig, case.roundtrip, fuel)) == observe(run(sig, case.identity, fuel))
