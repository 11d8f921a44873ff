"""Type-checking kernel: well-formedness, bidirectional typing, conversion.

Every judgement is Gamma; Delta |- K : B where Delta (the stoup) is either
``None`` or a single computation type for the identifier ``nil``.
Introductions are checked, variables and eliminations synthesize, and the
two meet at ``conv``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

from .syntax import (
    App, AppHom, AppV, Branch, Choose, DepProd, Diverge, EffectSignature, Error,
    F, FinProd, FinSum, Flags, Force, FunPi, Hom, Id, IdMotive, Inj, Lam, LamI,
    LamNil, LamV, Let, LetNil, Motive, Mu, Nil, Node, Pair, Pi, PmId, PmPair,
    PmSum, PmUnit, Print, ProjI, Read, Refl, RetTensor, Return, Sigma, SigmaF,
    Thunk, To, ToTensor, U, Unit, UnitV, Var, Wild, Write, canonical,
    free_idents, fresh, has_nil, is_ctype, is_value, is_vtype, iter_children,
    rename, strip_annotations, subst, subst_map, subst_stoup, tr,
)


class TypingError(Exception):
    def __init__(self, rule: str, message: str, expected=None, found=None, term=None):
        self.rule = rule
        self.message = message
        self.expected = expected
        self.found = found
        self.term = term
        super().__init__(self.render())

    @property
    def location(self) -> str:
        if self.term is None:
            return ""
        from .parser import pretty
        s = pretty(self.term)
        return s if len(s) < 120 else s[:117] + "..."

    def render(self) -> str:
        from .parser import pretty
        out = f"[{self.rule}] {self.message}"
        if self.expected is not None:
            out += f"; expected {pretty(self.expected)}"
        if self.found is not None:
            out += f"; found {pretty(self.found)}"
        return out

    def to_json(self) -> dict:
        from .parser import pretty
        return {
            "rule": self.rule, "message": self.message, "location": self.location,
            "expected": None if self.expected is None else pretty(self.expected),
            "found": None if self.found is None else pretty(self.found),
        }


class CannotSynth(TypingError):
    pass


@dataclass(frozen=True)
class Context:
    gamma: tuple = ()
    stoup: Optional[Node] = None

    def names(self) -> set:
        return {n for n, _ in self.gamma}

    def lookup(self, x):
        for n, a in reversed(self.gamma):
            if n == x:
                return a
        return None

    def extend(self, x, a) -> "Context":
        return Context(self.gamma + ((x, a),), self.stoup)

    def with_stoup(self, b) -> "Context":
        return Context(self.gamma, b)


EMPTY = Context()

# ------------------------------------------------------------ normalization


def normalize_value(sig, v, budget: Optional[list] = None):
    """Beta-normal form of a value; computations under thunks are untouched."""
    budget = budget if budget is not None else [100_000]
    return _nv(v, budget)


def _tick(budget):
    budget[0] -= 1
    if budget[0] < 0:
        raise TypingError("normalize", "value normalization did not terminate")


def _nv(v, budget):
    match v:
        case Var() | UnitV() | Thunk() | LamNil():
            return v
        case Inj(index=i, arg=a, ann=ann):
            return Inj(i, _nv(a, budget), ann)
        case Pair(fst=a, snd=b, ann=ann):
            return Pair(_nv(a, budget), _nv(b, budget), ann)
        case Refl(arg=a):
            return Refl(_nv(a, budget))
        case LamV(x=x, body=b, ty=ty):
            return LamV(x, _nv(b, budget), ty)
        case AppV(arg=a, fun=f):
            f = _nv(f, budget)
            a = _nv(a, budget)
            if isinstance(f, LamV):
                _tick(budget)
                return _nv(subst(f.body, f.x, a), budget)
            return AppV(a, f)
        case Let(x=x, bound=a, body=b):
            _tick(budget)
            return _nv(subst(b, x, _nv(a, budget)), budget)
        case PmSum() | PmUnit() | PmPair() | PmId():
            s = _nv(v.scrut, budget)
            red = _pm_beta(v, s)
            if red is not None:
                _tick(budget)
                return _nv(red, budget)
            return _pm_congr(v, s, lambda b: _nv(b, budget))
    raise TypingError("normalize", f"not a value: {type(v).__name__}", term=v)


def _pm_beta(t, s):
    """Contract a pattern match on a canonical scrutinee (any sort), else None."""
    match t, s:
        case PmSum(branches=brs), Inj(index=i, arg=a) if 1 <= i <= len(brs):
            return subst(brs[i - 1].body, brs[i - 1].x, a)
        case PmUnit(body=b), UnitV():
            return b
        case PmPair(x=x, y=y, body=b), Pair(fst=a, snd=c):
            if x == y:
                return subst(b, y, c)
            return subst_map(b, {x: a, y: c})
        case PmId(x=x, body=b), Refl(arg=a):
            return subst(b, x, a)
    return None


def _pm_congr(t, s, f):
    match t:
        case PmSum(branches=brs):
            return replace(t, scrut=s, branches=tuple(Branch(b.x, f(b.body)) for b in brs))
        case _:
            return replace(t, scrut=s, body=f(t.body))


# ------------------------------------------------------------------ checker

_VALUE_POS = {"arg", "scrut", "lhs", "rhs", "fst", "snd", "bound"}


class Checker:
    def __init__(self, sig: Optional[EffectSignature] = None, flags: Optional[Flags] = None):
        self.sig = sig or EffectSignature()
        self.flags = flags or self.sig.features

    # ------------------------------------------------------- conversion
    def deep(self, t, budget):
        """Normal form for conversion: value-beta everywhere, plus flagged equations."""
        if not isinstance(t, Node):
            return t
        upd = {}
        for f in fields(t):
            v = getattr(t, f.name)
            if isinstance(v, Node):
                nv = self.deep(v, budget)
            elif isinstance(v, tuple) and v and isinstance(v[0], Node):
                nv = tuple(self.deep(c, budget) for c in v)
            else:
                continue
            if nv is not v:
                upd[f.name] = nv
        if upd:
            t = replace(t, **upd)
        return self._contract(t, budget)

    def _contract(self, t, budget):
        fl = self.flags
        match t:
            case Let(x=x, bound=a, body=b):
                _tick(budget)
                return self.deep(subst(b, x, a), budget)
            case PmSum() | PmUnit() | PmPair() | PmId():
                red = _pm_beta(t, t.scrut)
                if red is not None:
                    _tick(budget)
                    return self.deep(red, budget)
            case AppV(arg=a, fun=LamV(x=x, body=b)):
                _tick(budget)
                return self.deep(subst(b, x, a), budget)
            case Thunk(body=Force(arg=v)) if fl.eta_thunk:
                return v
            case Lam(x=x, body=App(arg=Var(name=y), fun=k)) if fl.eta_fun and x == y and x not in free_idents(k):
                return k
            case LamV(x=x, body=AppV(arg=Var(name=y), fun=w)) if fl.eta_fun and x == y and x not in free_idents(w):
                return w
            case LamI(items=ks) if fl.eta_fun and ks and all(
                    isinstance(k, ProjI) and k.index == i and k.body == ks[0].body
                    for i, k in enumerate(ks, 1)):
                return ks[0].body
            case LamNil(body=AppHom(body=Nil(), arg=v)) if fl.eta_fun and not has_nil(v):
                return v
        if fl.effect_eqs:
            out = _float_op(t)
            if out is not None:
                _tick(budget)
                return self.deep(out, budget)
        return t

    def conv(self, a, b) -> bool:
        if a == b:
            return True
        budget = [self.flags.fuel * 100]
        try:
            na = canonical(strip_annotations(self.deep(a, budget)))
            nb = canonical(strip_annotations(self.deep(b, budget)))
        except RecursionError:
            return False
        return self._eq(na, nb, [self.flags.fuel])

    def _eq(self, a, b, fuel) -> bool:
        if a == b:
            return True
        if isinstance(a, Wild) or isinstance(b, Wild):
            return True
        if type(a) is not type(b):
            if self.flags.effect_eqs and (isinstance(a, Mu) or isinstance(b, Mu)) and fuel[0] > 0:
                fuel[0] -= 1
                a, b = self._unroll(a), self._unroll(b)
                return self._eq(a, b, fuel)
            return False
        for f in fields(a):
            x, y = getattr(a, f.name), getattr(b, f.name)
            if isinstance(x, Node):
                if not self._eq(x, y, fuel):
                    return self._mu_retry(a, b, fuel)
            elif isinstance(x, tuple) and x and isinstance(x[0], Node):
                if len(x) != len(y) or not all(self._eq(p, q, fuel) for p, q in zip(x, y)):
                    return self._mu_retry(a, b, fuel)
            elif x != y:
                return self._mu_retry(a, b, fuel)
        return True

    def _mu_retry(self, a, b, fuel):
        if self.flags.effect_eqs and isinstance(a, Mu) and fuel[0] > 0:
            fuel[0] -= 1
            return self._eq(self._unroll(a), self._unroll(b), fuel)
        return False

    def _unroll(self, t):
        if isinstance(t, Mu):
            budget = [self.flags.fuel * 100]
            return canonical(strip_annotations(self.deep(subst(t.body, t.z, Thunk(t)), budget)))
        return t

    def expect_conv(self, found, expected, term, rule="conv"):
        if not self.conv(found, expected):
            raise TypingError(rule, "type mismatch", expected=expected, found=found, term=term)

    # ----------------------------------------------------- well-formedness
    def wf_context(self, ctx: Context):
        seen = []
        g = Context()
        for n, a in ctx.gamma:
            if n in seen:
                raise TypingError("C-Ext", f"duplicate identifier {n}")
            self.wf_vtype(g, a)
            g = g.extend(n, a)
            seen.append(n)
        if ctx.stoup is not None:
            self.wf_ctype(g, ctx.stoup)

    def bind(self, ctx: Context, x: str, a, *terms):
        """Extend with x:a, renaming x in ``terms`` if it would shadow."""
        names = ctx.names()
        if x not in names:
            return ctx.extend(x, a), x, terms
        avoid = set(names)
        for t in terms:
            if t is not None:
                avoid |= free_idents(t)
        y = fresh(x, avoid)
        return ctx.extend(y, a), y, tuple(None if t is None else rename(t, x, y) for t in terms)

    def wf_vtype(self, ctx: Context, a):
        match a:
            case U(body=b):
                self.wf_ctype(ctx, b)
            case FinSum(items=xs):
                for x in xs:
                    self.wf_vtype(ctx, x)
            case Unit():
                pass
            case Sigma(x=x, dom=d, cod=c) | Pi(x=x, dom=d, cod=c):
                self.wf_vtype(ctx, d)
                c2, _, (c,) = self.bind(ctx, x, d, c)
                self.wf_vtype(c2, c)
            case Id(ty=t, lhs=v, rhs=w):
                self.wf_vtype(ctx, t)
                self.check_value(ctx, v, t)
                self.check_value(ctx, w, t)
            case Hom(src=b, dst=c):
                self.wf_ctype(ctx, b)
                self.wf_ctype(ctx, c)
            case _:
                raise TypingError("vtype", "expected a value type", term=a)

    def wf_ctype(self, ctx: Context, b):
        match b:
            case F(ty=a):
                self.wf_vtype(ctx, a)
            case FinProd(items=xs):
                for x in xs:
                    self.wf_ctype(ctx, x)
            case FunPi(x=x, dom=d, cod=c) | SigmaF(x=x, dom=d, cod=c):
                self.wf_vtype(ctx, d)
                c2, _, (c,) = self.bind(ctx, x, d, c)
                self.wf_ctype(c2, c)
            case DepProd(names=zs, items=bs):
                if not self.flags.proj_products:
                    raise TypingError("DepProd", "feature disabled: proj-products", term=b)
                g = ctx
                for z, bi in zip(zs, bs):
                    self.wf_ctype(g, bi)
                    g = g.extend(z, U(bi))
            case _:
                raise TypingError("ctype", "expected a computation type", term=b)

    # ----------------------------------------------------------- values
    def synth_value(self, ctx: Context, v):
        match v:
            case Var(name=n):
                a = ctx.lookup(n)
                if a is None:
                    raise TypingError("var", f"unbound identifier {n}", term=v)
                return a
            case Let(x=x, bound=w, body=b):
                a = self.synth_value(ctx, w)
                c2, y, (b,) = self.bind(ctx, x, a, b)
                return subst(self.synth_value(c2, b), y, w)
            case Thunk(body=m):
                return U(self.synth_comp(ctx.with_stoup(None), m))
            case Inj(ann=ann) | Pair(ann=ann) if ann is not None:
                self.wf_vtype(ctx, ann)
                self.check_value(ctx, v, ann)
                return ann
            case Inj():
                raise CannotSynth("synth", "injection needs a type annotation", term=v)
            case UnitV():
                return Unit()
            case Pair(fst=a, snd=b):
                ta = self.synth_value(ctx, a)
                tb = self.synth_value(ctx, b)
                return Sigma(fresh("x", free_idents(tb)), ta, tb)
            case Refl(arg=a):
                return Id(self.synth_value(ctx, a), a, a)
            case LamV(x=x, body=b, ty=ty):
                if ty is None:
                    raise CannotSynth("synth", "lambda needs a domain annotation", term=v)
                self.wf_vtype(ctx, ty)
                c2, y, (b,) = self.bind(ctx, x, ty, b)
                return Pi(y, ty, self.synth_value(c2, b))
            case AppV(arg=a, fun=f):
                tf = self.synth_value(ctx, f)
                if not isinstance(tf, Pi):
                    raise TypingError("Pi-E", "applying a non-function", found=tf, term=v)
                self.check_value(ctx, a, tf.dom)
                return subst(tf.cod, tf.x, a)
            case LamNil(body=k, ty=ty):
                if ty is None:
                    raise CannotSynth("synth", "lam nil needs a stoup annotation", term=v)
                self.wf_ctype(ctx, ty)
                return Hom(ty, self.synth_comp(ctx.with_stoup(ty), k))
            case PmSum() | PmUnit() | PmPair() | PmId():
                return self._pm(ctx, v, None)
        raise TypingError("value", "expected a value", term=v)

    def check_value(self, ctx: Context, v, a):
        match v, a:
            case Thunk(body=m), U(body=b):
                self.check_comp(ctx.with_stoup(None), m, b)
                return
            case Inj(index=i, arg=w, ann=ann), FinSum(items=xs):
                if ann is not None:
                    self.expect_conv(ann, a, v, "Sum-I")
                if not 1 <= i <= len(xs):
                    raise TypingError("Sum-I", f"index {i} out of range", expected=a, term=v)
                self.check_value(ctx, w, xs[i - 1])
                return
            case Pair(fst=p, snd=q, ann=ann), Sigma(x=x, dom=d, cod=c):
                if ann is not None:
                    self.expect_conv(ann, a, v, "Sigma-I")
                self.check_value(ctx, p, d)
                self.check_value(ctx, q, subst(c, x, p))
                return
            case LamV(x=x, body=b, ty=ty), Pi(x=y, dom=d, cod=c):
                if ty is not None:
                    self.expect_conv(ty, d, v, "Pi-I")
                c2, z, (b, c) = self.bind(ctx, x, d, b, rename(c, y, x))
                self.check_value(c2, b, c)
                return
            case LamNil(body=k, ty=ty), Hom(src=b, dst=c):
                if ty is not None:
                    self.expect_conv(ty, b, v, "Hom-I")
                self.check_comp(ctx.with_stoup(b), k, c)
                return
            case Refl(arg=w), Id(ty=t, lhs=l, rhs=r):
                self.check_value(ctx, w, t)
                for side in (l, r):
                    if not self.conv(w, side):
                        raise TypingError("Id-I", "refl at values that are not equal",
                                          expected=a, found=Id(t, w, w), term=v)
                return
            case Let(x=x, bound=w, body=b), _:
                self._check_let(ctx, v, a, value=True)
                return
            case (PmSum() | PmUnit() | PmPair() | PmId()), _:
                self._pm(ctx, v, a)
                return
        if isinstance(v, (Thunk, Inj, Pair, LamV, LamNil)):
            raise TypingError("value", "introduction does not match type", expected=a, term=v)
        found = self.synth_value(ctx, v)
        self.expect_conv(found, a, v)

    def _check_let(self, ctx, t, target, value):
        a = self.synth_value(ctx, t.bound)
        c2, y, (b,) = self.bind(ctx, t.x, a, t.body)
        try:
            found = self.synth_value(c2, b) if value else self.synth_comp(c2, b)
        except CannotSynth:
            inst = subst(t.body, t.x, t.bound)
            if value:
                self.check_value(ctx, inst, target)
            else:
                self.check_comp(ctx, inst, target)
            return
        self.expect_conv(subst(found, y, t.bound), target, t, "let")

    # ------------------------------------------------------------ pattern match
    def _scrut_type(self, ctx, t):
        return self.synth_value(ctx.with_stoup(None), t.scrut)

    def _pm(self, ctx: Context, t, target):
        """Type a pattern match of either sort; returns its (instantiated) type."""
        value = is_value(t)
        s = self._scrut_type(ctx, t)
        mot = t.motive
        if mot is not None:
            if isinstance(t, PmId):
                if not isinstance(mot, IdMotive):
                    raise TypingError("Id-E", "identity match needs a three-binder motive", term=t)
            elif not isinstance(mot, Motive):
                raise TypingError("pm", "malformed motive", term=t)
            self._wf_motive(ctx, s, mot, value, t)

        def body_type(inst_map):
            """Motive instantiated at the pattern, or the target if non-dependent."""
            if mot is None:
                return target
            if isinstance(mot, IdMotive):
                return subst_map(mot.ty, inst_map)
            return subst(mot.ty, mot.z, inst_map)

        def check_body(c2, body, want):
            if want is None:
                found = self.synth_value(c2, body) if value else self.synth_comp(c2, body)
                return found
            if value:
                self.check_value(c2, body, want)
            else:
                self.check_comp(c2, body, want)
            return want

        def nondep(found, binders, rule):
            for b in binders:
                if b in free_idents(found):
                    raise TypingError(rule, f"result type depends on pattern variable {b}",
                                      found=found, term=t)
            return found

        avoid_extra = [target] if target is not None else []
        result_types = []
        match t:
            case PmSum(branches=brs):
                if not isinstance(s, FinSum) or len(s.items) != len(brs):
                    raise TypingError("Sum-E", "scrutinee is not a sum of matching arity",
                                      found=s, term=t)
                for i, (br, ai) in enumerate(zip(brs, s.items), 1):
                    extra = [mot] if mot is not None else avoid_extra
                    c2, x, (body, *_) = self.bind(ctx, br.x, ai, br.body, *extra)
                    want = body_type(Inj(i, Var(x), s)) if mot is not None else target
                    found = check_body(c2, body, want)
                    if mot is None:
                        result_types.append(nondep(found, [x], "Sum-E"))
                if mot is not None:
                    res = body_type(t.scrut)
                elif target is not None:
                    res = target
                elif result_types:
                    res = self._join(result_types, t)
                else:
                    raise CannotSynth("synth", "empty match needs a motive", term=t)
            case PmUnit(body=body):
                if not isinstance(s, Unit):
                    raise TypingError("1-E", "scrutinee is not of unit type", found=s, term=t)
                want = body_type(UnitV()) if mot is not None else target
                found = check_body(ctx, body, want)
                res = body_type(t.scrut) if mot is not None else found
            case PmPair(x=x, y=y, body=body):
                if not isinstance(s, Sigma):
                    raise TypingError("Sigma-E", "scrutinee is not a pair", found=s, term=t)
                extra = [mot] if mot is not None else avoid_extra
                c2, x2, (body, *_) = self.bind(ctx, x, s.dom, body, *extra)
                c3, y2, (body, *_) = self.bind(c2, y, subst(s.cod, s.x, Var(x2)), body, *extra)
                want = body_type(Pair(Var(x2), Var(y2), s)) if mot is not None else target
                found = check_body(c3, body, want)
                res = body_type(t.scrut) if mot is not None else nondep(found, [x2, y2], "Sigma-E")
            case PmId(x=x, body=body):
                if not isinstance(s, Id):
                    raise TypingError("Id-E", "scrutinee is not an identity proof", found=s, term=t)
                extra = [mot] if mot is not None else avoid_extra
                c2, x2, (body, *_) = self.bind(ctx, x, s.ty, body, *extra)
                if mot is not None:
                    want = body_type({mot.x: Var(x2), mot.y: Var(x2), mot.p: Refl(Var(x2))})
                else:
                    want = target
                found = check_body(c2, body, want)
                if mot is not None:
                    res = body_type({mot.x: s.lhs, mot.y: s.rhs, mot.p: t.scrut})
                else:
                    res = nondep(found, [x2], "Id-E")
        if target is not None and mot is not None:
            self.expect_conv(res, target, t, "pm")
        return res

    def _join(self, types, t):
        base = next((x for x in types if not isinstance(x, Wild)), types[0])
        for x in types:
            self.expect_conv(x, base, t, "pm")
        return base

    def _wf_motive(self, ctx, s, mot, value, t):
        want_v = value
        if isinstance(mot, IdMotive):
            if not isinstance(s, Id):
                raise TypingError("Id-E", "scrutinee is not an identity proof", found=s, term=t)
            g = ctx.with_stoup(None)
            g = g.extend(mot.x, s.ty).extend(mot.y, s.ty).extend(
                mot.p, Id(s.ty, Var(mot.x), Var(mot.y)))
            ty = mot.ty
        else:
            g = ctx.with_stoup(None).extend(mot.z, s)
            ty = mot.ty
        if want_v:
            self.wf_vtype(g, ty)
        else:
            self.wf_ctype(g, ty)

    # ------------------------------------------------------- computations
    def _no_stoup(self, ctx, t, rule):
        if ctx.stoup is not None:
            raise TypingError(rule, "this form requires an empty stoup", term=t)

    def synth_comp(self, ctx: Context, k):
        match k:
            case Nil():
                if ctx.stoup is None:
                    raise TypingError("nil", "stoup misuse: nil with an empty stoup", term=k)
                return ctx.stoup
            case LetNil(bound=m, body=l):
                b = self.synth_comp(ctx, m)
                return self.synth_comp(ctx.with_stoup(b), l)
            case Let(x=x, bound=w, body=b):
                a = self.synth_value(ctx.with_stoup(None), w)
                c2, y, (b,) = self.bind(ctx, x, a, b)
                return subst(self.synth_comp(c2, b), y, w)
            case Return(arg=v):
                self._no_stoup(ctx, k, "F-I")
                return F(self.synth_value(ctx, v))
            case To():
                return self._to(ctx, k, None)
            case Force(arg=v):
                self._no_stoup(ctx, k, "U-E")
                tv = self.synth_value(ctx, v)
                if not isinstance(tv, U):
                    raise TypingError("U-E", "forcing a non-thunk", found=tv, term=k)
                return tv.body
            case LamI(items=ms):
                return FinProd(tuple(self.synth_comp(ctx, m) for m in ms))
            case ProjI(index=i, body=m):
                tm = self.synth_comp(ctx, m)
                return self._proj_type(ctx, k, i, m, tm)
            case Lam(x=x, body=m, ty=ty):
                if ty is None:
                    raise CannotSynth("synth", "lambda needs a domain annotation", term=k)
                self.wf_vtype(ctx, ty)
                c2, y, (m,) = self.bind(ctx, x, ty, m)
                return FunPi(y, ty, self.synth_comp(c2, m))
            case App(arg=v, fun=m):
                tm = self.synth_comp(ctx, m)
                if isinstance(tm, Wild):
                    return tm
                if not isinstance(tm, FunPi):
                    raise TypingError("Pi-E", "applying a non-function", found=tm, term=k)
                self.check_value(ctx.with_stoup(None), v, tm.dom)
                return subst(tm.cod, tm.x, v)
            case RetTensor(arg=v, body=m):
                a = self.synth_value(ctx.with_stoup(None), v)
                b = self.synth_comp(ctx, m)
                return SigmaF(fresh("x", free_idents(b)), a, b)
            case ToTensor(bound=l, x=x, body=m):
                tl = self.synth_comp(ctx, l)
                if isinstance(tl, Wild):
                    return tl
                if not isinstance(tl, SigmaF):
                    raise TypingError("SigmaF-E", "sequencing a non-tensor", found=tl, term=k)
                c2, y, (m,) = self.bind(ctx.with_stoup(None), x, tl.dom, m)
                c = self.synth_comp(c2.with_stoup(subst(tl.cod, tl.x, Var(y))), m)
                if y in free_idents(c):
                    raise TypingError("SigmaF-E", "result type depends on the bound value",
                                      found=c, term=k)
                return c
            case AppHom(body=m, arg=v):
                tv = self.synth_value(ctx.with_stoup(None), v)
                if not isinstance(tv, Hom):
                    raise TypingError("Hom-E", "applying a non-homomorphism", found=tv, term=k)
                self.check_comp(ctx, m, tv.src)
                return tv.dst
            case Diverge():
                self._no_stoup(ctx, k, "diverge")
                return Wild()
            case Error(label=e):
                self._no_stoup(ctx, k, "error")
                self._check_error(k, e)
                return Wild()
            case Mu(z=z, body=m, ty=ty):
                self._no_stoup(ctx, k, "mu")
                if ty is None:
                    raise CannotSynth("synth", "mu needs a type annotation", term=k)
                self.wf_ctype(ctx, ty)
                c2, y, (m,) = self.bind(ctx, z, U(ty), m)
                self.check_comp(c2, m, ty)
                return ty
            case Print(tokens=ts, body=m):
                self._no_stoup(ctx, k, "print")
                self._check_tokens(k, ts)
                return self.synth_comp(ctx, m)
            case Write(state=s, body=m):
                self._no_stoup(ctx, k, "write")
                self._check_state(k, s)
                return self.synth_comp(ctx, m)
            case Choose(items=ms):
                self._no_stoup(ctx, k, "choose")
                return self._join_comps(ctx, k, ms)
            case Read(states=ss, bodies=ms):
                self._no_stoup(ctx, k, "read")
                self._check_read(k, ss)
                return self._join_comps(ctx, k, ms)
            case PmSum() | PmUnit() | PmPair() | PmId():
                return self._pm(ctx, k, None)
        raise TypingError("comp", "expected a computation", term=k)

    def _join_comps(self, ctx, k, ms):
        base = None
        pending = []
        for m in ms:
            try:
                t = self.synth_comp(ctx, m)
            except CannotSynth:
                pending.append(m)
                continue
            if isinstance(t, Wild):
                continue
            if base is None:
                base = t
            else:
                self.expect_conv(t, base, k, "join")
        if base is None:
            if pending:
                raise CannotSynth("synth", "cannot infer the type of a branch", term=k)
            return Wild()
        for m in pending:
            self.check_comp(ctx, m, base)
        return base

    def _check_error(self, k, e):
        if e not in self.sig.errors:
            raise TypingError("error", f"unknown error label {e}", term=k)

    def _check_state(self, k, s):
        if s not in self.sig.states:
            raise TypingError("write", f"unknown state {s}", term=k)

    def _check_read(self, k, ss):
        if tuple(ss) != tuple(self.sig.states):
            raise TypingError("read", "read needs exactly one branch per state, in order",
                              term=k)

    def _check_tokens(self, k, ts):
        alpha = self.sig.monoid_alphabet
        if alpha is not None:
            for x in ts:
                if x not in alpha:
                    raise TypingError("print", f"token {x!r} outside the output alphabet", term=k)

    def _proj_type(self, ctx, k, i, m, tm):
        match tm:
            case Wild():
                return tm
            case FinProd(items=xs):
                if not 1 <= i <= len(xs):
                    raise TypingError("Pi-E", f"projection {i} out of range", found=tm, term=k)
                return xs[i - 1]
            case DepProd(names=zs, items=xs):
                self._no_stoup(ctx, k, "DepProd-E")
                if not 1 <= i <= len(xs):
                    raise TypingError("DepProd-E", f"projection {i} out of range", found=tm, term=k)
                return subst_map(xs[i - 1], {zs[j]: Thunk(ProjI(j + 1, m)) for j in range(i - 1)})
        raise TypingError("Pi-E", "projecting from a non-product", found=tm, term=k)

    def _to(self, ctx: Context, k: To, target):
        mot = k.motive
        dependent = mot is not None and mot.z in free_idents(mot.ty)
        if dependent and not self.flags.plus:
            raise TypingError("F-E", "dependent motive requires plus", term=k)
        if dependent:
            self._no_stoup(ctx, k, "F-E+")
        if k.ty is not None:
            self.wf_vtype(ctx.with_stoup(None), k.ty)
            self.check_comp(ctx, k.bound, F(k.ty))
            a = k.ty
        else:
            tb = self.synth_comp(ctx, k.bound)
            if isinstance(tb, Wild):
                raise CannotSynth("F-E", "cannot infer the bound type; annotate the binder",
                                  term=k)
            if not isinstance(tb, F):
                raise TypingError("F-E", "sequencing a non-F computation", found=tb, term=k)
            a = tb.ty
        g = ctx.with_stoup(None)
        if dependent:
            self.wf_ctype(*self._bind_motive(g, mot, a))
            c2, x, (body,) = self.bind(g, k.x, a, k.body)
            z = mot.z
            self.check_comp(c2, body, subst(mot.ty, z, tr(Var(x))))
            res = subst(mot.ty, z, Thunk(k.bound))
            if target is not None:
                self.expect_conv(res, target, k, "F-E+")
            return res
        extra = [x for x in (target, mot.ty if mot else None) if x is not None]
        c2, x, (body, *_) = self.bind(g, k.x, a, k.body, *extra)
        if mot is not None:
            self.wf_ctype(g, mot.ty)
            if target is not None:
                self.expect_conv(mot.ty, target, k, "F-E")
            target = mot.ty
        if target is not None:
            if x in free_idents(target):
                c2, x2, (body,) = self.bind(c2, x, a, body)
            self.check_comp(c2, body, target)
            return target
        b = self.synth_comp(c2, body)
        if x in free_idents(b):
            raise TypingError("F-E", "dependency escape: result type mentions the bound value",
                              found=b, term=k)
        return b

    def _bind_motive(self, g, mot, a):
        z2 = fresh(mot.z, g.names() | free_idents(mot.ty))
        return g.extend(z2, U(F(a))), rename(mot.ty, mot.z, z2)

    def check_comp(self, ctx: Context, k, b):
        match k, b:
            case Lam(x=x, body=m, ty=ty), FunPi(x=y, dom=d, cod=c):
                if ty is not None:
                    self.expect_conv(ty, d, k, "Pi-I")
                c2, z, (m, c) = self.bind(ctx, x, d, m, rename(c, y, x))
                self.check_comp(c2, m, c)
                return
            case LamI(items=ms), FinProd(items=bs):
                if len(ms) != len(bs):
                    raise TypingError("Pi-I", "wrong number of components", expected=b, term=k)
                for m, bi in zip(ms, bs):
                    self.check_comp(ctx, m, bi)
                return
            case LamI(items=ms), DepProd(names=zs, items=bs):
                self._no_stoup(ctx, k, "DepProd-I")
                if len(ms) != len(bs):
                    raise TypingError("DepProd-I", "wrong number of components", expected=b, term=k)
                for i, (m, bi) in enumerate(zip(ms, bs)):
                    want = subst_map(bi, {zs[j]: Thunk(ms[j]) for j in range(i)})
                    self.check_comp(ctx, m, want)
                return
            case RetTensor(arg=v, body=m), SigmaF(x=x, dom=d, cod=c):
                self.check_value(ctx.with_stoup(None), v, d)
                self.check_comp(ctx, m, subst(c, x, v))
                return
            case Return(arg=v), F(ty=a):
                self._no_stoup(ctx, k, "F-I")
                self.check_value(ctx, v, a)
                return
            case To(), _:
                self._to(ctx, k, b)
                return
            case Let(), _:
                self._check_let(ctx, k, b, value=False)
                return
            case (PmSum() | PmUnit() | PmPair() | PmId()), _:
                self._pm(ctx, k, b)
                return
            case (Diverge() | Error()), _:
                self._no_stoup(ctx, k, type(k).__name__.lower())
                if isinstance(k, Error):
                    self._check_error(k, k.label)
                return
            case Mu(z=z, body=m, ty=ty), _:
                self._no_stoup(ctx, k, "mu")
                if ty is not None:
                    self.expect_conv(ty, b, k, "mu")
                c2, y, (m,) = self.bind(ctx, z, U(b), m)
                self.check_comp(c2, m, b)
                return
            case Print(tokens=ts, body=m), _:
                self._no_stoup(ctx, k, "print")
                self._check_tokens(k, ts)
                self.check_comp(ctx, m, b)
                return
            case Write(state=s, body=m), _:
                self._no_stoup(ctx, k, "write")
                self._check_state(k, s)
                self.check_comp(ctx, m, b)
                return
            case Choose(items=ms), _:
                self._no_stoup(ctx, k, "choose")
                for m in ms:
                    self.check_comp(ctx, m, b)
                return
            case Read(states=ss, bodies=ms), _:
                self._no_stoup(ctx, k, "read")
                self._check_read(k, ss)
                for m in ms:
                    self.check_comp(ctx, m, b)
                return
            case App(arg=v, fun=m), _:
                try:
                    tm = self.synth_comp(ctx, m)
                except CannotSynth:
                    a = self.synth_value(ctx.with_stoup(None), v)
                    self.check_comp(ctx, m, FunPi(fresh("x", free_idents(b)), a, b))
                    return
                if isinstance(tm, Wild):
                    return
                if not isinstance(tm, FunPi):
                    raise TypingError("Pi-E", "applying a non-function", found=tm, term=k)
                self.check_value(ctx.with_stoup(None), v, tm.dom)
                self.expect_conv(subst(tm.cod, tm.x, v), b, k, "Pi-E")
                return
            case LetNil(bound=m, body=l), _:
                tm = self.synth_comp(ctx, m)
                self.check_comp(ctx.with_stoup(tm), l, b)
                return
            case ToTensor(bound=l, x=x, body=m), _:
                tl = self.synth_comp(ctx, l)
                if isinstance(tl, Wild):
                    return
                if not isinstance(tl, SigmaF):
                    raise TypingError("SigmaF-E", "sequencing a non-tensor", found=tl, term=k)
                c2, y, (m, _) = self.bind(ctx.with_stoup(None), x, tl.dom, m, b)
                self.check_comp(c2.with_stoup(subst(tl.cod, tl.x, Var(y))), m, b)
                return
            case AppHom(body=m, arg=v), _:
                tv = self.synth_value(ctx.with_stoup(None), v)
                if not isinstance(tv, Hom):
                    raise TypingError("Hom-E", "applying a non-homomorphism", found=tv, term=k)
                self.check_comp(ctx, m, tv.src)
                self.expect_conv(tv.dst, b, k, "Hom-E")
                return
        if isinstance(k, (Lam, LamI, RetTensor, Return)):
            raise TypingError("comp", "introduction does not match type", expected=b, term=k)
        found = self.synth_comp(ctx, k)
        self.expect_conv(found, b, k)


def _float_op(t):
    """One directed algebraicity step K[op M/nil] -> op K[M/nil], or None."""
    def inner(k):
        match k:
            case To(bound=m) | ToTensor(bound=m) | LetNil(bound=m):
                return m, lambda n: replace(k, bound=n)
            case ProjI(body=m) | AppHom(body=m):
                return m, lambda n: replace(k, body=n)
            case App(fun=m):
                return m, lambda n: replace(k, fun=n)
        return None
    hole = inner(t)
    if hole is None:
        return None
    m, plug = hole
    match m:
        case Diverge() | Error():
            return m
        case Print(tokens=ts, body=b):
            return Print(ts, plug(b))
        case Write(state=s, body=b):
            return Write(s, plug(b))
        case Choose(items=ms):
            return Choose(tuple(plug(b) for b in ms))
        case Read(states=ss, bodies=ms):
            return Read(ss, tuple(plug(b) for b in ms))
    return None


# --------------------------------------------------------------- public API

def _checker(sig, flags=None):
    return Checker(sig, flags)


def _ctx(ctx):
    if ctx is None:
        return EMPTY
    if isinstance(ctx, Context):
        return ctx
    return Context(tuple(ctx))


def wf_context(sig, ctx, flags=None):
    _checker(sig, flags).wf_context(_ctx(ctx))


def wf_vtype(sig, ctx, a, flags=None):
    _checker(sig, flags).wf_vtype(_ctx(ctx), a)


def wf_ctype(sig, ctx, b, flags=None):
    _checker(sig, flags).wf_ctype(_ctx(ctx), b)


def check_value(sig, ctx, v, a, flags=None):
    _checker(sig, flags).check_value(_ctx(ctx), v, a)


def synth_value(sig, ctx, v, flags=None):
    return _checker(sig, flags).synth_value(_ctx(ctx), v)


def check_comp(sig, ctx, k, b, flags=None):
    _checker(sig, flags).check_comp(_ctx(ctx), k, b)


def synth_comp(sig, ctx, k, flags=None):
    return _checker(sig, flags).synth_comp(_ctx(ctx), k)


def types_equal(sig, ctx, a, b, flags=None) -> bool:
    if is_vtype(a) != is_vtype(b) or is_ctype(a) != is_ctype(b):
        return False
    return _checker(sig, flags).conv(a, b)


ctypes_equal = types_equal
