"""Goal-directed generator of closed, well-typed dCBPV- programs.

Every choice follows a typing rule for the goal type, so the output is
well-typed by construction (the checker still re-verifies it).  Binders
carry annotations so closed machine configurations can synthesize.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .syntax import (
    App, AppHom, Branch, Choose, Diverge, EffectSignature, Error, F, FinProd,
    FinSum, Force, FunPi, Id, Inj, Lam, LamI, LamNil, Let, LetNil, Mu, Nil, Pair,
    PmPair, PmSum, PmUnit, Print, ProjI, Read, Refl, RetTensor, Return, Sigma,
    Thunk, To, ToTensor, U, Unit, UnitV, Var, Write, size,
)

SIGNATURE = EffectSignature(states=("s0", "s1"), init="s0", errors=frozenset({"e"}))
TOKENS = ("a", "b")


@dataclass
class Generated:
    seed: int
    main: object
    ty: object


class Gen:
    def __init__(self, seed: int, depth: int = 7, effects: bool = True,
                 loops: bool = True, choice: bool = True):
        self.rng = random.Random(seed)
        self.depth = depth
        self.effects = effects
        self.loops = loops
        self.choice = choice
        self.n = 0

    def name(self, base="x"):
        self.n += 1
        return f"{base}{self.n}"

    def p(self, prob) -> bool:
        return self.rng.random() < prob

    # ------------------------------------------------------------ types
    def vtype(self, d):
        r = self.rng.random()
        if d <= 0 or r < 0.45:
            return self.rng.choice((Unit(), FinSum((Unit(), Unit())),
                                    FinSum((Unit(), Unit(), Unit()))))
        if r < 0.65:
            return Sigma(self.name("s"), self.vtype(d - 1), self.vtype(d - 1))
        if r < 0.85:
            return U(self.ctype(d - 1))
        a = self.vtype(0)
        v = self.canonical(a)
        return Id(a, v, v)

    def ctype(self, d):
        r = self.rng.random()
        if d <= 0 or r < 0.6:
            return F(self.vtype(d - 1))
        if r < 0.8:
            return FinProd(tuple(self.ctype(d - 1) for _ in range(self.rng.randint(1, 2))))
        return FunPi(self.name("a"), self.vtype(d - 1), self.ctype(d - 1))

    def canonical(self, a):
        match a:
            case Unit():
                return UnitV()
            case FinSum(items=xs):
                return Inj(self.rng.randint(1, len(xs)), UnitV(), a)
            case Sigma(dom=x, cod=y):
                return Pair(self.canonical(x), self.canonical(y), a)
            case U(body=b):
                return Thunk(self.comp((), b, 1))
            case Id(lhs=v):
                return Refl(v)
        raise TypeError(a)

    # ----------------------------------------------------------- values
    def value(self, ctx, a, d):
        vars_ = [x for x, t in ctx if t == a]
        if vars_ and self.p(0.4):
            return Var(self.rng.choice(vars_))
        if d > 0 and self.p(0.12):
            b = self.vtype(0)
            x = self.name()
            return Let(x, self.value(ctx, b, d - 1), self.value(ctx + ((x, b),), a, d - 1))
        if d > 0 and self.p(0.1):
            s = FinSum((Unit(), Unit()))
            brs = []
            for _ in s.items:
                x = self.name()
                brs.append(Branch(x, self.value(ctx + ((x, Unit()),), a, d - 1)))
            return PmSum(self.value(ctx, s, d - 1), tuple(brs))
        match a:
            case Unit():
                return UnitV()
            case FinSum(items=xs):
                i = self.rng.randint(1, len(xs))
                return Inj(i, self.value(ctx, xs[i - 1], d - 1), a)
            case Sigma(dom=x, cod=y):
                return Pair(self.value(ctx, x, d - 1), self.value(ctx, y, d - 1), a)
            case U(body=b):
                return Thunk(self.comp(ctx, b, d - 1))
            case Id(lhs=v):
                return Refl(v)
        raise TypeError(a)

    # ------------------------------------------------------ computations
    def comp(self, ctx, b, d):
        if d <= 0:
            return self.intro(ctx, b, 0)
        options = [("intro", 4), ("to", 3), ("let", 1), ("pm", 2), ("force", 1),
                   ("app", 1), ("proj", 1), ("stack", 1), ("tensor", 1)]
        if self.effects:
            options += [("print", 2), ("write", 1), ("read", 1), ("error", 0.5)]
            if self.choice:
                options += [("choose", 1)]
        if self.loops:
            options += [("mu", 0.7), ("diverge", 0.2)]
        kinds, weights = zip(*options)
        kind = self.rng.choices(kinds, weights)[0]
        d1 = d - 1
        match kind:
            case "intro":
                return self.intro(ctx, b, d1)
            case "to":
                a = self.vtype(1)
                x = self.name()
                return To(self.comp(ctx, F(a), d1), x, self.comp(ctx + ((x, a),), b, d1), a)
            case "let":
                a = self.vtype(1)
                x = self.name()
                return Let(x, self.value(ctx, a, d1), self.comp(ctx + ((x, a),), b, d1))
            case "pm":
                return self.pm(ctx, b, d1)
            case "force":
                vars_ = [x for x, t in ctx if t == U(b)]
                if vars_:
                    return Force(Var(self.rng.choice(vars_)))
                return Force(Thunk(self.comp(ctx, b, d1)))
            case "app":
                a = self.vtype(0)
                x = self.name()
                return App(self.value(ctx, a, d1), Lam(x, self.comp(ctx + ((x, a),), b, d1), a))
            case "proj":
                others = [self.ctype(0) for _ in range(self.rng.randint(0, 2))]
                i = self.rng.randint(0, len(others))
                tys = others[:i] + [b] + others[i:]
                return ProjI(i + 1, LamI(tuple(self.comp(ctx, t, d1 - 1) for t in tys)))
            case "stack":
                a = self.vtype(0)
                x = self.name()
                body = To(Nil(), x, self.comp(ctx + ((x, a),), b, d1), a)
                k = self.comp(ctx, F(a), d1)
                if self.p(0.5):
                    return LetNil(k, body)
                return AppHom(k, LamNil(body, F(a)))
            case "tensor":
                a1, a2 = self.vtype(0), self.vtype(0)
                x, y = self.name(), self.name()
                inner = To(Nil(), y, self.comp(ctx + ((x, a1), (y, a2)), b, d1), a2)
                return ToTensor(RetTensor(self.value(ctx, a1, d1), self.comp(ctx, F(a2), d1)),
                                x, inner)
            case "print":
                return Print((self.rng.choice(TOKENS),), self.comp(ctx, b, d1))
            case "write":
                return Write(self.rng.choice(SIGNATURE.states), self.comp(ctx, b, d1))
            case "read":
                return Read(SIGNATURE.states, tuple(self.comp(ctx, b, d1) for _ in SIGNATURE.states))
            case "choose":
                return Choose(tuple(self.comp(ctx, b, d1) for _ in range(self.rng.randint(2, 3))))
            case "error":
                return Error("e")
            case "diverge":
                return Diverge()
            case "mu":
                z = self.name("z")
                r = self.rng.random()
                if r < 0.5:
                    body = self.comp(ctx, b, d1)
                elif r < 0.75 or not self.choice:
                    body = Force(Var(z))
                else:
                    body = Choose((Force(Var(z)), self.comp(ctx, b, d1)))
                return Mu(z, body, b)
        raise AssertionError(kind)

    def pm(self, ctx, b, d):
        r = self.rng.random()
        if r < 0.5:
            s = self.rng.choice((FinSum((Unit(), Unit())), FinSum((Unit(), Unit(), Unit()))))
            brs = []
            for item in s.items:
                x = self.name()
                brs.append(Branch(x, self.comp(ctx + ((x, item),), b, d)))
            return PmSum(self.value(ctx, s, d), tuple(brs))
        if r < 0.7:
            return PmUnit(self.value(ctx, Unit(), d), self.comp(ctx, b, d))
        a1, a2 = self.vtype(0), self.vtype(0)
        s = Sigma(self.name("s"), a1, a2)
        x, y = self.name(), self.name()
        return PmPair(self.value(ctx, s, d), x, y, self.comp(ctx + ((x, a1), (y, a2)), b, d))

    def intro(self, ctx, b, d):
        match b:
            case F(ty=a):
                return Return(self.value(ctx, a, d))
            case FinProd(items=bs):
                return LamI(tuple(self.comp(ctx, t, d - 1) for t in bs))
            case FunPi(x=x, dom=a, cod=c):
                y = self.name()
                return Lam(y, self.comp(ctx + ((y, a),), c, d - 1), a)
        raise TypeError(b)


def generate(seed: int, depth: int = 7, effects: bool = True, loops: bool = True,
             choice: bool = True, max_size: int = 400) -> Generated:
    """One closed program; retries with derived seeds if it grows too large."""
    for k in range(50):
        g = Gen(seed * 7919 + k, depth, effects, loops, choice)
        ty = g.ctype(1) if g.p(0.2) else F(g.vtype(2))
        m = g.comp((), ty, depth)
        if size(m) <= max_size:
            return Generated(seed, m, ty)
    return Generated(seed, m, ty)


def corpus(n: int, seed: int = 0, **kw) -> list:
    return [generate(seed + i, **kw) for i in range(n)]


# ------------------------------------------------------------------ surface

class SurfaceGen:
    """Effect-free, well-typed surface terms; binders are annotated so images synthesize."""

    def __init__(self, seed: int, depth: int = 5):
        from . import translate as tr
        self.t = tr
        self.rng = random.Random(seed)
        self.depth = depth
        self.n = 0

    def name(self):
        self.n += 1
        return f"v{self.n}"

    def ground(self):
        t = self.t
        return t.TSum((t.TUnit(),) * self.rng.randint(2, 3))

    def type_(self, d):
        t = self.t
        r = self.rng.random()
        if d <= 0 or r < 0.45:
            return self.rng.choice((t.TUnit(), self.ground()))
        if r < 0.65:
            return t.TSigma("w", self.type_(d - 1), self.type_(d - 1))
        if r < 0.85:
            return t.TPi("w", self.type_(d - 1), self.type_(d - 1))
        return t.TProd(tuple(self.type_(d - 1) for _ in range(self.rng.randint(1, 2))))

    def term(self, ctx, ty, d):
        t = self.t
        vars_ = [x for x, a in ctx if a == ty]
        if vars_ and self.rng.random() < 0.35:
            return t.SVar(self.rng.choice(vars_))
        if d > 0:
            r = self.rng.random()
            if r < 0.12:
                a, x = self.type_(1), self.name()
                return t.SLet(x, self.term(ctx, a, d - 1), self.term(ctx + ((x, a),), ty, d - 1))
            if r < 0.27:
                a = self.type_(1)
                return t.SApp(self.term(ctx, t.TPi("w", a, ty), d - 1), self.term(ctx, a, d - 1))
            if r < 0.4:
                s = self.ground()
                brs = []
                for _ in s.items:
                    x = self.name()
                    brs.append((x, self.term(ctx + ((x, t.TUnit()),), ty, d - 1)))
                return t.SPmSum(self.term(ctx, s, d - 1), tuple(brs))
            if r < 0.46:
                return t.SPmUnit(self.term(ctx, t.TUnit(), d - 1), self.term(ctx, ty, d - 1))
            if r < 0.56:
                a1, a2 = self.type_(0), self.type_(0)
                x, y = self.name(), self.name()
                return t.SPmPair(self.term(ctx, t.TSigma("w", a1, a2), d - 1), x, y,
                                 self.term(ctx + ((x, a1), (y, a2)), ty, d - 1))
            if r < 0.62:
                others = [self.type_(0) for _ in range(self.rng.randint(0, 1))]
                i = self.rng.randint(0, len(others))
                tys = others[:i] + [ty] + others[i:]
                return t.SProj(i + 1, self.term(ctx, t.TProd(tuple(tys)), d - 1))
        return self.intro(ctx, ty, d - 1)

    def intro(self, ctx, ty, d):
        t = self.t
        match ty:
            case t.TUnit():
                return t.SUnit()
            case t.TSum(items=xs):
                i = self.rng.randint(1, len(xs))
                return t.SInj(i, self.term(ctx, xs[i - 1], d), ty)
            case t.TSigma(dom=a, cod=b):
                return t.SPair(self.term(ctx, a, d), self.term(ctx, b, d))
            case t.TPi(dom=a, cod=b):
                x = self.name()
                return t.SLam(x, self.term(ctx + ((x, a),), b, d), a)
            case t.TProd(items=xs):
                return t.SLamI(tuple(self.term(ctx, a, d) for a in xs))
        raise TypeError(ty)


def generate_surface(seed: int, depth: int = 5):
    """(term, type) for a closed effect-free surface program of finite-sum type."""
    g = SurfaceGen(seed, depth)
    ty = g.ground()
    return g.term((), ty, depth), ty
