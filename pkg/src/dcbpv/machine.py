"""CK machine with output monoid and a global store.

A configuration is (comp, stack, out, state).  ``step`` returns the whole
transition relation as labelled successors; strategies only decide which
successor ``run`` follows.  Value normalization happens as explicit
pre-steps (labels ending in ``-nf``) so traces show it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .kernel import CannotSynth, Checker, Context, TypingError, normalize_value
from .syntax import (
    App, AppHom, Choose, Diverge, EffectSignature, Error, F, Flags, Force, Lam, LamI,
    LamNil, Let, LetNil, Mu, Nil, Node, Pair, PmId, PmPair, PmSum, PmUnit, Print,
    ProjI, Read, Refl, RetTensor, Return, Thunk, To, ToTensor, UnitV, Inj, Write,
    free_idents, has_nil, mult, subst, subst_map, subst_stoup,
)

# ------------------------------------------------------------------- frames


@dataclass(frozen=True)
class ToFrame:
    """``[.] to x. body``; ``origin`` is the computation that was sequenced."""
    x: str
    body: Node
    ty: Optional[Node] = None
    motive: Optional[Node] = None
    origin: Optional[Node] = None


@dataclass(frozen=True)
class IdxFrame:
    index: int
    origin: Optional[Node] = None


@dataclass(frozen=True)
class ArgFrame:
    arg: Node


@dataclass(frozen=True)
class TensorFrame:
    x: str
    body: Node


@dataclass(frozen=True)
class LetNilFrame:
    body: Node


@dataclass(frozen=True)
class Config:
    comp: Node
    stack: tuple = ()
    out: tuple = ()
    state: str = "s0"


@dataclass(frozen=True)
class Transition:
    label: str
    config: Config


# ----------------------------------------------------------------- outcomes


@dataclass(frozen=True)
class Terminal:
    config: Config
    steps: int = 0


@dataclass(frozen=True)
class FuelExhausted:
    config: Config
    steps: int = 0


@dataclass(frozen=True)
class Stuck:
    config: Config
    reason: str
    steps: int = 0


@dataclass(frozen=True)
class Branches:
    outcomes: tuple
    truncated: bool = False


class MachineError(Exception):
    pass


def inject(m, sig: Optional[EffectSignature] = None) -> Config:
    if free_idents(m) or has_nil(m):
        raise MachineError("open term: initial configurations must be closed")
    sig = sig or EffectSignature()
    return Config(m, (), (), sig.init)


# --------------------------------------------------------------- transitions

def _nf(sig, v):
    return normalize_value(sig, v)


def _dependent(motive) -> bool:
    return motive is not None and motive.z in free_idents(motive.ty)


def step(sig: EffectSignature, c: Config, strategy=None) -> list:
    """All transitions out of ``c`` (or the one a strategy picks)."""
    succ = _successors(sig, c)
    if strategy is None or strategy == "all" or len(succ) <= 1:
        return succ
    return [succ[_strategy(strategy).pick(len(succ))]]


def _successors(sig, c: Config) -> list:
    m, k, out, s = c.comp, c.stack, c.out, c.state

    def go(label, comp, stack=k, o=out, st=s):
        return [Transition(label, Config(comp, stack, o, st))]

    top = k[0] if k else None
    rest = k[1:]
    match m:
        case Let(x=x, bound=v, body=b):
            nv = _nf(sig, v)
            if nv != v:
                return go("let-nf", Let(x, nv, b))
            return go("let", subst(b, x, nv))
        case LetNil(bound=a, body=b):
            return go("letnil", subst_stoup(b, a))
        case To(bound=a, x=x, body=b, ty=ty, motive=mot):
            origin = a if _dependent(mot) else None
            return go("to-push", a, (ToFrame(x, b, ty, mot, origin),) + k)
        case Return(arg=v):
            nv = _nf(sig, v)
            if nv != v:
                return go("return-nf", Return(nv))
            if isinstance(top, ToFrame):
                return go("return-pop", subst(top.body, top.x, nv), rest)
            if isinstance(top, LetNilFrame):
                return go("letnil-pop", subst_stoup(top.body, m), rest)
            return []
        case Force(arg=v):
            nv = _nf(sig, v)
            if nv != v:
                return go("force-nf", Force(nv))
            if isinstance(nv, Thunk):
                return go("force-thunk", nv.body)
            return []
        case PmSum() | PmUnit() | PmPair() | PmId():
            name = {PmSum: "pm-sum", PmUnit: "pm-unit", PmPair: "pm-pair", PmId: "pm-id"}[type(m)]
            nv = _nf(sig, m.scrut)
            if nv != m.scrut:
                return go(name + "-nf", _with_scrut(m, nv))
            red = _pm_step(m, nv)
            return go(name, red) if red is not None else []
        case ProjI(index=i, body=b):
            return go("proj-push", b, (IdxFrame(i, b),) + k)
        case LamI(items=ms):
            if isinstance(top, IdxFrame) and 1 <= top.index <= len(ms):
                return go("proj-pop", ms[top.index - 1], rest)
            return _pop_letnil(m, top, rest, go)
        case App(arg=v, fun=b):
            nv = _nf(sig, v)
            if nv != v:
                return go("app-nf", App(nv, b))
            return go("app-push", b, (ArgFrame(nv),) + k)
        case Lam(x=x, body=b):
            if isinstance(top, ArgFrame):
                return go("app-pop", subst(b, x, top.arg), rest)
            return _pop_letnil(m, top, rest, go)
        case ToTensor(bound=a, x=x, body=b):
            return go("totensor-push", a, (TensorFrame(x, b),) + k)
        case RetTensor(arg=v, body=b):
            nv = _nf(sig, v)
            if nv != v:
                return go("rtensor-nf", RetTensor(nv, b))
            if isinstance(top, TensorFrame):
                return go("rtensor-pop", subst_stoup(subst(top.body, top.x, nv), b), rest)
            return _pop_letnil(m, top, rest, go)
        case AppHom(body=b, arg=v):
            nv = _nf(sig, v)
            if nv != v:
                return go("happ-nf", AppHom(b, nv))
            if isinstance(nv, LamNil):
                return go("happ", subst_stoup(nv.body, b))
            return []
        case Diverge():
            return go("diverge", m)
        case Mu(z=z, body=b):
            return go("mu-unroll", subst(b, z, Thunk(m)))
        case Choose(items=ms):
            return [Transition(f"choose-{j}", Config(mj, k, out, s)) for j, mj in enumerate(ms, 1)]
        case Print(tokens=ts, body=b):
            return go("print", b, o=mult(out, ts))
        case Write(state=s2, body=b):
            return go("write", b, st=s2)
        case Read(states=ss, bodies=ms):
            if s in ss:
                return go("read", ms[ss.index(s)])
            return []
    return []


def _pop_letnil(m, top, rest, go):
    if isinstance(top, LetNilFrame):
        return go("letnil-pop", subst_stoup(top.body, m), rest)
    return []


def _with_scrut(m, v):
    from dataclasses import replace
    return replace(m, scrut=v)


def _pm_step(m, v):
    match m, v:
        case PmSum(branches=brs), Inj(index=i, arg=a) if 1 <= i <= len(brs):
            return subst(brs[i - 1].body, brs[i - 1].x, a)
        case PmUnit(body=b), UnitV():
            return b
        case PmPair(x=x, y=y, body=b), Pair(fst=a, snd=c):
            return subst(b, y, c) if x == y else subst_map(b, {x: a, y: c})
        case PmId(x=x, body=b), Refl(arg=a):
            return subst(b, x, a)
    return None


def classify(sig, c: Config) -> Optional[str]:
    """'terminal', 'neutral', or None when the configuration can still move or is stuck."""
    m, k = c.comp, c.stack
    match m:
        case Error():
            return "terminal"
        case Return(arg=v) | RetTensor(arg=v) if not k and _nf(sig, v) == v:
            return "terminal"
        case Lam() | LamI() if not k:
            return "terminal"
        case Force(arg=v) if _nf(sig, v) == v and not isinstance(v, Thunk) and free_idents(v):
            return "neutral"
        case PmSum() | PmUnit() | PmPair() | PmId():
            v = m.scrut
            if _nf(sig, v) == v and free_idents(v) and _pm_step(m, v) is None:
                return "neutral"
        case AppHom(arg=v) if _nf(sig, v) == v and not isinstance(v, LamNil) and free_idents(v):
            return "neutral"
    return None


def applicable_transitions(sig, c: Config):
    succ = _successors(sig, c)
    return len(succ), [t.label for t in succ]


# --------------------------------------------------------------- strategies


class SplitMix64:
    """splitmix64: state += golden gamma, then two xor-shift-multiply rounds."""
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def pick(self, n: int) -> int:
        return self.next() % n


class First:
    def pick(self, n: int) -> int:
        return 0


def _strategy(s):
    if isinstance(s, (First, SplitMix64)):
        return s
    if s in (None, "first"):
        return First()
    if isinstance(s, str) and s.startswith("seed:"):
        return SplitMix64(int(s[5:]))
    raise ValueError(f"unknown strategy {s!r}")


def parse_strategy(text: str):
    if text in ("first", "all"):
        return text
    if text.startswith("seed:") and text[5:].lstrip("-").isdigit():
        return text
    raise ValueError(f"unknown strategy {text!r}; use first, seed:N or all")


# --------------------------------------------------------------------- run

BRANCH_CAP = 4096


@dataclass
class TraceRecord:
    index: int
    label: str
    config: Config

    def to_json(self) -> dict:
        from .parser import pretty
        return {"step": self.index, "rule": self.label, "comp": pretty(self.config.comp),
                "depth": len(self.config.stack), "out": "".join(self.config.out),
                "state": self.config.state}

    def to_text(self) -> str:
        from .parser import pretty
        c = self.config
        return (f"{self.index:>5}  {self.label:<14} depth={len(c.stack)} "
                f"out={''.join(c.out) or 'ε'} state={c.state}  {pretty(c.comp)}")


def _finish(sig, c, steps):
    kind = classify(sig, c)
    if kind == "terminal":
        return Terminal(c, steps)
    if kind == "neutral":
        return Stuck(c, "neutral", steps)
    return Stuck(c, "no transition applies", steps)


def run(sig: EffectSignature, m, fuel: int = 100_000, strategy="first",
        trace: Optional[Callable[[TraceRecord], None]] = None, config: Optional[Config] = None):
    """Big-step driver: iterate ``step`` until terminal or out of fuel."""
    c = config if config is not None else inject(m, sig)
    if strategy == "all":
        return _run_all(sig, c, fuel)
    strat = _strategy(strategy)
    steps = 0
    while True:
        succ = _successors(sig, c)
        if not succ:
            return _finish(sig, c, steps)
        if steps >= fuel:
            return FuelExhausted(c, steps)
        t = succ[strat.pick(len(succ))] if len(succ) > 1 else succ[0]
        c = t.config
        steps += 1
        if trace is not None:
            trace(TraceRecord(steps, t.label, c))


def _run_all(sig, c0, fuel):
    """Breadth-first exploration of every choice; at most BRANCH_CAP live branches."""
    frontier = deque([(c0, 0)])
    done = []
    truncated = False
    while frontier:
        c, n = frontier.popleft()
        succ = _successors(sig, c)
        if not succ:
            done.append(_finish(sig, c, n))
            continue
        if n >= fuel:
            done.append(FuelExhausted(c, n))
            continue
        for t in succ:
            if len(frontier) + len(done) >= BRANCH_CAP:
                truncated = True
                break
            frontier.append((t.config, n + 1))
    return Branches(tuple(done), truncated)


def leaves(outcome) -> list:
    if isinstance(outcome, Branches):
        out = []
        for o in outcome.outcomes:
            out.extend(leaves(o))
        return out
    return [outcome]


def reachable(sig, c0: Config, fuel: int, cap: int = BRANCH_CAP):
    """Every configuration reachable within ``fuel`` steps along any branch.

    Yields (config, depth, label-path) in breadth-first order; each distinct
    configuration is visited once.
    """
    seen = {c0}
    q = deque([(c0, 0, ())])
    while q:
        c, n, path = q.popleft()
        yield c, n, path
        if n >= fuel:
            continue
        for t in _successors(sig, c):
            if t.config not in seen and len(seen) < cap * 16:
                seen.add(t.config)
                q.append((t.config, n + 1, path + (t.label,)))


# ------------------------------------------------------------ configuration typing

def plug(comp, frame):
    match frame:
        case ToFrame(x=x, body=b, ty=ty, motive=mot):
            return To(comp, x, b, ty, mot)
        case IdxFrame(index=i):
            return ProjI(i, comp)
        case ArgFrame(arg=v):
            return App(v, comp)
        case TensorFrame(x=x, body=b):
            return ToTensor(comp, x, b)
        case LetNilFrame(body=b):
            return LetNil(comp, b)
    raise TypeError(frame)


def elaborate(stack) -> Node:
    """The stack term (with stoup ``nil``) that a frame list abbreviates."""
    t = Nil()
    for fr in stack:
        t = plug(t, fr)
    return t


def unload(c: Config) -> Node:
    t = c.comp
    for fr in c.stack:
        t = plug(t, fr)
    return t


def type_config(sig: EffectSignature, flags: Optional[Flags], c: Config, target) -> None:
    """Raise TypingError unless the configuration has type ``target``.

    The computation is plugged into the elaborated stack and the result is
    checked.  A frame that recorded the computation it sequences (dependent
    sequencing, projection) is certified in two halves: the current
    computation must have the type the recorded one has, and the outer stack
    is typed with the recorded computation plugged in.  Between a dependent
    push and its pop the type therefore stays pinned to the pushed motive.
    """
    ch = Checker(sig, flags)
    ctx = Context()
    cur = c.comp
    for fr in c.stack:
        origin = getattr(fr, "origin", None)
        if origin is not None and origin != cur:
            want = None
            try:
                want = ch.synth_comp(ctx, origin)
            except CannotSynth:
                if isinstance(fr, ToFrame) and fr.ty is not None:
                    want = F(fr.ty)
            if want is not None:
                ch.check_comp(ctx, cur, want)
                cur = origin
        cur = plug(cur, fr)
    ch.check_comp(ctx, cur, target)


def config_types(sig, flags, c, target) -> Optional[TypingError]:
    try:
        type_config(sig, flags, c, target)
    except TypingError as e:
        return e
    except RecursionError:
        return TypingError("config", "recursion limit while typing configuration")
    return None
