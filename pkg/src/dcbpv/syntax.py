"""Abstract syntax of dependently typed call-by-push-value.

Types, values and computations are immutable dataclasses. Binding structure
is declared per class in ``BINDS`` (child field -> binder fields scoping over
it), which drives the generic substitution, free-identifier and
alpha-equivalence code below.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, fields, replace
from functools import cache
from typing import ClassVar, Optional


NIL = "nil"


class Node:
    BINDS: ClassVar[dict] = {}
    # child fields in which the stoup identifier is rebound
    NIL_BINDS: ClassVar[frozenset] = frozenset()


# ---------------------------------------------------------------- value types

@dataclass(frozen=True)
class U(Node):
    body: "CompType"


@dataclass(frozen=True)
class FinSum(Node):
    items: tuple = ()


@dataclass(frozen=True)
class Unit(Node):
    pass


@dataclass(frozen=True)
class Sigma(Node):
    x: str
    dom: "ValueType"
    cod: "ValueType"
    BINDS = {"cod": ("x",)}


@dataclass(frozen=True)
class Id(Node):
    ty: "ValueType"
    lhs: "Value"
    rhs: "Value"


@dataclass(frozen=True)
class Pi(Node):
    x: str
    dom: "ValueType"
    cod: "ValueType"
    BINDS = {"cod": ("x",)}


@dataclass(frozen=True)
class Hom(Node):
    src: "CompType"
    dst: "CompType"


# ---------------------------------------------------------- computation types

@dataclass(frozen=True)
class F(Node):
    ty: "ValueType"


@dataclass(frozen=True)
class FinProd(Node):
    items: tuple = ()


@dataclass(frozen=True)
class FunPi(Node):
    x: str
    dom: "ValueType"
    cod: "CompType"
    BINDS = {"cod": ("x",)}


@dataclass(frozen=True)
class SigmaF(Node):
    x: str
    dom: "ValueType"
    cod: "CompType"
    BINDS = {"cod": ("x",)}


@dataclass(frozen=True)
class DepProd(Node):
    """Dependent projection product; ``items[j]`` may mention ``names[:j]``."""
    names: tuple
    items: tuple


@dataclass(frozen=True)
class Wild(Node):
    """Internal: the synthesized type of computations that inhabit every type."""


VTYPES = (U, FinSum, Unit, Sigma, Id, Pi, Hom)
CTYPES = (F, FinProd, FunPi, SigmaF, DepProd, Wild)

# ------------------------------------------------------------------- motives


@dataclass(frozen=True)
class Motive(Node):
    z: str
    ty: Node
    BINDS = {"ty": ("z",)}


@dataclass(frozen=True)
class IdMotive(Node):
    x: str
    y: str
    p: str
    ty: Node
    BINDS = {"ty": ("x", "y", "p")}


@dataclass(frozen=True)
class Branch(Node):
    x: str
    body: Node
    BINDS = {"body": ("x",)}


# -------------------------------------------------------------------- values

@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Thunk(Node):
    body: "Comp"


@dataclass(frozen=True)
class Inj(Node):
    index: int
    arg: "Value"
    ann: Optional[Node] = None


@dataclass(frozen=True)
class UnitV(Node):
    pass


@dataclass(frozen=True)
class Pair(Node):
    fst: "Value"
    snd: "Value"
    ann: Optional[Node] = None


@dataclass(frozen=True)
class Refl(Node):
    arg: "Value"


@dataclass(frozen=True)
class LamV(Node):
    x: str
    body: "Value"
    ty: Optional[Node] = None
    BINDS = {"body": ("x",)}


@dataclass(frozen=True)
class AppV(Node):
    """``arg`fun`` at value level."""
    arg: "Value"
    fun: "Value"


@dataclass(frozen=True)
class LamNil(Node):
    body: "Comp"
    ty: Optional[Node] = None
    NIL_BINDS = frozenset({"body"})


# ------------------------------------------- shared value/computation forms

@dataclass(frozen=True)
class Let(Node):
    x: str
    bound: "Value"
    body: Node
    BINDS = {"body": ("x",)}


@dataclass(frozen=True)
class PmSum(Node):
    scrut: "Value"
    branches: tuple
    motive: Optional[Motive] = None


@dataclass(frozen=True)
class PmUnit(Node):
    scrut: "Value"
    body: Node
    motive: Optional[Motive] = None


@dataclass(frozen=True)
class PmPair(Node):
    scrut: "Value"
    x: str
    y: str
    body: Node
    motive: Optional[Motive] = None
    BINDS = {"body": ("x", "y")}


@dataclass(frozen=True)
class PmId(Node):
    scrut: "Value"
    x: str
    body: Node
    motive: Optional[IdMotive] = None
    BINDS = {"body": ("x",)}


# -------------------------------------------------------------- computations

@dataclass(frozen=True)
class Nil(Node):
    pass


@dataclass(frozen=True)
class LetNil(Node):
    bound: "Comp"
    body: "Comp"
    NIL_BINDS = frozenset({"body"})


@dataclass(frozen=True)
class Return(Node):
    arg: "Value"


@dataclass(frozen=True)
class To(Node):
    bound: "Comp"
    x: str
    body: "Comp"
    ty: Optional[Node] = None
    motive: Optional[Motive] = None
    BINDS = {"body": ("x",)}


@dataclass(frozen=True)
class Force(Node):
    arg: "Value"


@dataclass(frozen=True)
class LamI(Node):
    items: tuple = ()


@dataclass(frozen=True)
class ProjI(Node):
    index: int
    body: "Comp"


@dataclass(frozen=True)
class Lam(Node):
    x: str
    body: "Comp"
    ty: Optional[Node] = None
    BINDS = {"body": ("x",)}


@dataclass(frozen=True)
class App(Node):
    """``arg`fun``: push ``arg`` and run the function computation."""
    arg: "Value"
    fun: "Comp"


@dataclass(frozen=True)
class RetTensor(Node):
    arg: "Value"
    body: "Comp"


@dataclass(frozen=True)
class ToTensor(Node):
    bound: "Comp"
    x: str
    body: "Comp"
    BINDS = {"body": ("x",)}
    NIL_BINDS = frozenset({"body"})


@dataclass(frozen=True)
class AppHom(Node):
    body: "Comp"
    arg: "Value"


@dataclass(frozen=True)
class Diverge(Node):
    pass


@dataclass(frozen=True)
class Mu(Node):
    z: str
    body: "Comp"
    ty: Optional[Node] = None
    BINDS = {"body": ("z",)}


@dataclass(frozen=True)
class Print(Node):
    tokens: tuple
    body: "Comp"


@dataclass(frozen=True)
class Choose(Node):
    items: tuple = ()


@dataclass(frozen=True)
class Error(Node):
    label: str


@dataclass(frozen=True)
class Write(Node):
    state: str
    body: "Comp"


@dataclass(frozen=True)
class Read(Node):
    states: tuple
    bodies: tuple


ValueType = Node
CompType = Node
Value = Node
Comp = Node

VALUE_ONLY = (Var, Thunk, Inj, UnitV, Pair, Refl, LamV, AppV, LamNil)
COMP_ONLY = (Nil, LetNil, Return, To, Force, LamI, ProjI, Lam, App, RetTensor,
             ToTensor, AppHom, Diverge, Mu, Print, Choose, Error, Write, Read)


def is_vtype(t) -> bool:
    return isinstance(t, VTYPES)


def is_ctype(t) -> bool:
    return isinstance(t, CTYPES)


def is_value(t) -> bool:
    match t:
        case Let(body=b) | PmUnit(body=b) | PmPair(body=b) | PmId(body=b):
            return is_value(b)
        case PmSum(branches=brs, motive=m):
            if m is not None:
                return is_vtype(m.ty)
            return bool(brs) and is_value(brs[0].body)
    return isinstance(t, VALUE_ONLY)


def is_comp(t) -> bool:
    match t:
        case Let() | PmSum() | PmUnit() | PmPair() | PmId():
            return not is_value(t)
    return isinstance(t, COMP_ONLY)


# -------------------------------------------------------------- flags / sigs

@dataclass(frozen=True)
class Flags:
    plus: bool = False
    proj_products: bool = False
    eta_thunk: bool = False
    eta_fun: bool = False
    effect_eqs: bool = False
    fuel: int = 1000

    NAMES: ClassVar[dict] = {
        "plus": "plus", "proj-products": "proj_products",
        "eta-thunk": "eta_thunk", "eta-fun": "eta_fun",
        "effect-eqs": "effect_eqs",
    }

    @classmethod
    def parse(cls, names) -> "Flags":
        kw = {}
        for n in names:
            n = n.strip()
            if not n:
                continue
            if n not in cls.NAMES:
                raise ValueError(f"unknown flag {n!r}")
            kw[cls.NAMES[n]] = True
        return cls(**kw)

    def merge(self, other: "Flags") -> "Flags":
        return Flags(**{a: getattr(self, a) or getattr(other, a)
                        for a in self.NAMES.values()}, fuel=self.fuel)

    def names(self) -> list[str]:
        return [k for k, a in self.NAMES.items() if getattr(self, a)]


@dataclass(frozen=True)
class EffectSignature:
    states: tuple = ("s0",)
    init: str = "s0"
    errors: frozenset = frozenset()
    monoid_alphabet: Optional[frozenset] = None   # None: any token
    features: Flags = field(default_factory=Flags)

    def __post_init__(self):
        if not self.states:
            raise ValueError("state set must be nonempty")
        if self.init not in self.states:
            raise ValueError(f"initial state {self.init!r} not in {self.states}")

    @property
    def flags(self) -> Flags:
        return self.features

    def with_flags(self, flags: Flags) -> "EffectSignature":
        return replace(self, features=flags)


# The output monoid: token sequences under concatenation.
EPSILON: tuple = ()


def mult(m: tuple, n: tuple) -> tuple:
    return m + n


# ------------------------------------------------------- generic traversal

@cache
def _child_fields(cls) -> tuple:
    out = []
    for f in fields(cls):
        if f.name in ("x", "y", "p", "z", "name", "label", "state", "index",
                      "tokens", "names", "states"):
            continue
        out.append(f.name)
    return tuple(out)


def _telescope(t: DepProd, j: int) -> tuple:
    return t.names[:j]


def _binders(t: Node, fname: str, j: Optional[int] = None) -> tuple:
    if isinstance(t, DepProd):
        return t.names[:j] if j is not None else ()
    return tuple(getattr(t, b) for b in t.BINDS.get(fname, ()))


def iter_children(t: Node):
    """Yield (field, index or None, child, binder names) for each subterm."""
    for fname in _child_fields(type(t)):
        v = getattr(t, fname)
        if isinstance(v, Node):
            yield fname, None, v, _binders(t, fname)
        elif isinstance(v, tuple):
            for j, c in enumerate(v):
                if isinstance(c, Node):
                    yield fname, j, c, _binders(t, fname, j)


def free_idents(t) -> frozenset:
    """Free value identifiers of ``t`` (the stoup is tracked by ``has_nil``)."""
    if isinstance(t, Var):
        return frozenset((t.name,))
    acc = set()
    for _, _, c, bs in iter_children(t):
        s = free_idents(c)
        if bs:
            s = s - set(bs)
        acc |= s
    return frozenset(acc)


def has_nil(t) -> bool:
    return nil_count(t) > 0


def nil_count(t) -> int:
    if isinstance(t, Nil):
        return 1
    n = 0
    for fname, _, c, _ in iter_children(t):
        if fname in t.NIL_BINDS:
            continue
        n += nil_count(c)
    return n


_counter = itertools.count(1)
_SUFFIX = re.compile(r"_\d+$")


def fresh(base: str, avoid) -> str:
    base = _SUFFIX.sub("", base) or "v"
    if base not in avoid:
        return base
    while True:
        cand = f"{base}_{next(_counter)}"
        if cand not in avoid:
            return cand


def _rebuild(t: Node, updates: dict) -> Node:
    return replace(t, **updates) if updates else t


def _rename_binder(t: Node, bf: str, new: str) -> Node:
    """Rename the binder stored in field ``bf`` of ``t`` to ``new``."""
    old = getattr(t, bf)
    upd = {bf: new}
    for fname, bs in t.BINDS.items():
        if bf in bs:
            later = bs[bs.index(bf) + 1:]
            if any(getattr(t, o) == old for o in later):
                continue
            upd[fname] = rename(getattr(t, fname), old, new)
    return replace(t, **upd)


def subst_map(t, mapping: dict, _fvs: Optional[frozenset] = None):
    """Simultaneous capture-avoiding substitution of values for identifiers."""
    if not mapping:
        return t
    if _fvs is None:
        _fvs = frozenset().union(*(free_idents(v) for v in mapping.values()))
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, DepProd):
        return _subst_telescope(t, mapping, _fvs)
    upd = {}
    binder_fields = {b for bs in t.BINDS.values() for b in bs}
    if binder_fields:
        # rename binders that would capture free identifiers of the substituends
        for bf in binder_fields:
            b = getattr(t, bf)
            if b in _fvs:
                avoid = set(_fvs) | free_idents(t) | set(mapping)
                avoid |= {getattr(t, o) for o in binder_fields}
                t = _rename_binder(t, bf, fresh(b, avoid))
    for fname in _child_fields(type(t)):
        v = getattr(t, fname)
        bs = set(_binders(t, fname))
        m = {k: w for k, w in mapping.items() if k not in bs} if bs else mapping
        if isinstance(v, Node):
            nv = subst_map(v, m, _fvs) if m else v
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            nv = tuple(subst_map(c, m, _fvs) for c in v) if m else v
        else:
            continue
        if nv is not v:
            upd[fname] = nv
    return _rebuild(t, upd)


def _subst_telescope(t: DepProd, mapping, fvs):
    names = list(t.names)
    items = list(t.items)
    for j in range(len(names)):
        if names[j] in fvs:
            avoid = set(fvs) | free_idents(t) | set(names) | set(mapping)
            new = fresh(names[j], avoid)
            for k in range(j + 1, len(items)):
                items[k] = subst(items[k], names[j], Var(new))
            names[j] = new
    out = []
    for j, it in enumerate(items):
        m = {k: w for k, w in mapping.items() if k not in names[:j]}
        out.append(subst_map(it, m, fvs))
    return DepProd(tuple(names), tuple(out))


def subst(t, x: str, v):
    """Capture-avoiding substitution ``t[v/x]``."""
    return subst_map(t, {x: v})


def rename(t, x: str, y: str):
    return t if x == y else subst(t, x, Var(y))


def subst_stoup(t, k):
    """Replace the free stoup reference ``nil`` of ``t`` by the computation ``k``."""
    return _subst_stoup(t, k, free_idents(k))


def _subst_stoup(t, k, kfv):
    if isinstance(t, Nil):
        return k
    if not isinstance(t, Node):
        return t
    binder_fields = {b for bs in t.BINDS.values() for b in bs}
    for bf in binder_fields:
        b = getattr(t, bf)
        if b in kfv:
            avoid = set(kfv) | free_idents(t) | {getattr(t, o) for o in binder_fields}
            t = _rename_binder(t, bf, fresh(b, avoid))
    upd = {}
    for fname in _child_fields(type(t)):
        if fname in t.NIL_BINDS:
            continue
        v = getattr(t, fname)
        if isinstance(v, Node):
            nv = _subst_stoup(v, k, kfv)
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            nv = tuple(_subst_stoup(c, k, kfv) for c in v)
        else:
            continue
        if nv is not v:
            upd[fname] = nv
    return _rebuild(t, upd)


# -------------------------------------------------------------- alpha-eq

def canonical(t, env: Optional[dict] = None, depth: int = 0):
    """Rename every bound identifier to a depth-indexed canonical name."""
    env = env or {}
    if isinstance(t, Var):
        return Var(env.get(t.name, t.name))
    if isinstance(t, DepProd):
        names = tuple(f"#{depth + j}" for j in range(len(t.names)))
        items = []
        for j, it in enumerate(t.items):
            e = dict(env)
            for k in range(j):
                e[t.names[k]] = names[k]
            items.append(canonical(it, e, depth + j))
        return DepProd(names, tuple(items))
    upd = {}
    renames = {}
    for fname, bs in t.BINDS.items():
        e = dict(env)
        for i, bf in enumerate(bs):
            cn = f"#{depth + i}"
            e[getattr(t, bf)] = cn
            renames[bf] = cn
        upd[fname] = canonical(getattr(t, fname), e, depth + len(bs))
    for fname in _child_fields(type(t)):
        if fname in upd:
            continue
        v = getattr(t, fname)
        if isinstance(v, Node):
            upd[fname] = canonical(v, env, depth)
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            upd[fname] = tuple(canonical(c, env, depth) for c in v)
    upd.update(renames)
    return replace(t, **upd) if upd else t


def alpha_eq(t1, t2) -> bool:
    return canonical(t1) == canonical(t2)


def strip_annotations(t):
    """Drop optional type annotations (conversion ignores them)."""
    if not isinstance(t, Node):
        return t
    upd = {}
    if isinstance(t, (Inj, Pair)) and t.ann is not None:
        upd["ann"] = None
    if isinstance(t, (LamV, Lam, LamNil, Mu, To)) and t.ty is not None:
        upd["ty"] = None
    for fname in _child_fields(type(t)):
        if fname in upd:
            continue
        v = getattr(t, fname)
        if isinstance(v, Node):
            nv = strip_annotations(v)
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            nv = tuple(strip_annotations(c) for c in v)
        else:
            continue
        if nv is not v:
            upd[fname] = nv
    return replace(t, **upd) if upd else t


def size(t) -> int:
    return 1 + sum(size(c) for _, _, c, _ in iter_children(t))


def tr(v):
    """``thunk (return v)``."""
    return Thunk(Return(v))
