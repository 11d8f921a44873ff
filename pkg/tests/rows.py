"""Row tables shared by the unit tests and the acceptance suite.

GOLDEN: one machine transition per row, with the exact successor configuration.
TERMINAL: configurations with no transition.
EQUATIONS: the equational theory, one row per equation.
"""
from dataclasses import dataclass

from dcbpv.kernel import Context, normalize_value, types_equal
from dcbpv.machine import (
    ArgFrame, Config, IdxFrame, LetNilFrame, TensorFrame, ToFrame, _successors,
)
from dcbpv.parser import parse_term as T, parse_type as Y
from dcbpv.syntax import EffectSignature, Flags, Id, Motive, alpha_eq

SIG = EffectSignature(states=("s0", "s1"), init="s0", errors=frozenset({"e"}))
K0 = (IdxFrame(2),)                      # an unrelated frame that must survive each step
OUT = ("m",)


@dataclass(frozen=True)
class Golden:
    name: str
    label: str
    before: Config
    after: Config


def cfg(comp, stack=K0, out=OUT, state="s0"):
    return Config(T(comp) if isinstance(comp, str) else comp, stack, out, state)


_ret_frame = ToFrame("x", T("return <x, x>"))
_dep = Motive("z", Y("F Id(U F 1, z, z)"))
_dep_body = T("return (refl (thunk (return x)))")

GOLDEN = [
    # core CK machine
    Golden("let-normalizes-bound", "let-nf",
           cfg("let x be pm () as () in () in return x"), cfg("let x be () in return x")),
    Golden("let-substitutes", "let", cfg("let x be () in return <x, x>"), cfg("return <(), ()>")),
    Golden("letnil-substitutes-stoup", "letnil",
           cfg("let nil be return () in nil to y in return y"),
           cfg("return () to y in return y")),
    Golden("to-pushes-frame", "to-push",
           cfg("return () to x in return <x, x>"),
           cfg("return ()", (_ret_frame,) + K0)),
    Golden("to-push-annotated", "to-push",
           cfg("return () to x : 1 in return <x, x>"),
           cfg("return ()", (ToFrame("x", T("return <x, x>"), Y("1")),) + K0)),
    Golden("to-push-dependent-records-origin", "to-push",
           cfg("return () to x [z. F Id(U F 1, z, z)] in return (refl (thunk (return x)))"),
           cfg("return ()", (ToFrame("x", _dep_body, None, _dep, T("return ()")),) + K0)),
    Golden("return-normalizes", "return-nf",
           cfg("return (let y be () in <y, y>)"), cfg("return <(), ()>")),
    Golden("return-pops-to-frame", "return-pop",
           cfg("return ()", (_ret_frame,) + K0), cfg("return <(), ()>")),
    Golden("return-pops-letnil-frame", "letnil-pop",
           cfg("return ()", (LetNilFrame(T("nil to y in return y")),) + K0),
           cfg("return () to y in return y")),
    Golden("lam-pops-letnil-frame", "letnil-pop",
           cfg("lam x. return x", (LetNilFrame(T("app () nil")),)),
           cfg("app () (lam x. return x)", ())),
    Golden("force-normalizes", "force-nf",
           cfg("force (let t be thunk (return ()) in t)"), cfg("force (thunk (return ()))")),
    Golden("force-thunk", "force-thunk", cfg("force (thunk (print \"a\" (return ())))"),
           cfg("print \"a\" (return ())")),
    Golden("pm-sum-normalizes", "pm-sum-nf",
           cfg("pm (let y be <2, ()> in y) as {<1, a> -> return a | <2, b> -> diverge}"),
           cfg("pm <2, ()> as {<1, a> -> return a | <2, b> -> diverge}")),
    Golden("pm-sum-first", "pm-sum",
           cfg("pm <1, ()> as {<1, a> -> return a | <2, b> -> diverge}"), cfg("return ()")),
    Golden("pm-sum-second", "pm-sum",
           cfg("pm <2, ()> as {<1, a> -> return a | <2, b> -> diverge}"), cfg("diverge")),
    Golden("pm-unit", "pm-unit", cfg("pm () as () in return ()"), cfg("return ()")),
    Golden("pm-unit-normalizes", "pm-unit-nf",
           cfg("pm (let u be () in u) as () in return ()"), cfg("pm () as () in return ()")),
    Golden("pm-pair", "pm-pair",
           cfg("pm <(), <1, ()>> as <a, b> in return <b, a>"), cfg("return <<1, ()>, ()>")),
    Golden("pm-pair-normalizes", "pm-pair-nf",
           cfg("pm (let p be <(), ()> in p) as <a, b> in return a"),
           cfg("pm <(), ()> as <a, b> in return a")),
    Golden("proj-pushes-index", "proj-push",
           cfg("proj 1 (lam {return () | diverge})"),
           cfg("lam {return () | diverge}", (IdxFrame(1, T("lam {return () | diverge}")),) + K0)),
    Golden("proj-pops-index", "proj-pop",
           cfg("lam {return () | diverge}", (IdxFrame(2),)), cfg("diverge", ())),
    Golden("app-normalizes", "app-nf",
           cfg("app (let y be () in y) (lam x. return x)"), cfg("app () (lam x. return x)")),
    Golden("app-pushes-argument", "app-push",
           cfg("app () (lam x. return x)"),
           cfg("lam x. return x", (ArgFrame(T("()")),) + K0)),
    Golden("app-pops-argument", "app-pop",
           cfg("lam x. return <x, x>", (ArgFrame(T("()")),) + K0), cfg("return <(), ()>")),
    # identity witnesses
    Golden("pm-id", "pm-id", cfg("pm (refl ()) as refl x in return <x, x>"),
           cfg("return <(), ()>")),
    Golden("pm-id-normalizes", "pm-id-nf",
           cfg("pm (let r be refl () in r) as refl x in return x"),
           cfg("pm (refl ()) as refl x in return x")),
    # divergence, recursion, choice, errors
    Golden("diverge-loops", "diverge", cfg("diverge"), cfg("diverge")),
    Golden("mu-unrolls", "mu-unroll", cfg("mu z. force z"), cfg("force (thunk (mu z. force z))")),
    Golden("mu-unrolls-body", "mu-unroll",
           cfg("mu z. print \"a\" (return ())"), cfg("print \"a\" (return ())")),
    Golden("choose-first", "choose-1",
           cfg("choose {return <1, ()> | return <2, ()>}"), cfg("return <1, ()>")),
    Golden("choose-second", "choose-2",
           cfg("choose {return <1, ()> | return <2, ()>}"), cfg("return <2, ()>")),
    # printing and global state
    Golden("print-appends", "print", cfg("print \"a\" (return ())"),
           cfg("return ()", out=("m", "a"))),
    Golden("print-several-tokens", "print", cfg("print \"a\" \"b\" diverge"),
           cfg("diverge", out=("m", "a", "b"))),
    Golden("write-sets-state", "write", cfg("write s1 (return ())"),
           cfg("return ()", state="s1")),
    Golden("read-branches-s0", "read", cfg("read {s0 -> return <1, ()> | s1 -> diverge}"),
           cfg("return <1, ()>")),
    Golden("read-branches-s1", "read",
           cfg("read {s0 -> return <1, ()> | s1 -> diverge}", state="s1"),
           cfg("diverge", state="s1")),
    # tensor and homomorphism connectives
    Golden("totensor-pushes", "totensor-push",
           cfg("rtensor () (return ()) to rtensor x in nil"),
           cfg("rtensor () (return ())", (TensorFrame("x", T("nil")),) + K0)),
    Golden("rtensor-normalizes", "rtensor-nf",
           cfg("rtensor (let y be () in y) (return ())"), cfg("rtensor () (return ())")),
    Golden("rtensor-pops", "rtensor-pop",
           cfg("rtensor <1, ()> (return ())", (TensorFrame("x", T("nil to y in return <x, y>")),)),
           cfg("return () to y in return <<1, ()>, y>", ())),
    Golden("happ-normalizes", "happ-nf",
           cfg("happ (return ()) (let h be (lam nil : F 1. nil to y in return <y, y>) in h)"),
           cfg("happ (return ()) (lam nil : F 1. nil to y in return <y, y>)")),
    Golden("happ-plugs-stoup", "happ",
           cfg("happ (return ()) (lam nil : F 1. nil to y in return <y, y>)"),
           cfg("return () to y in return <y, y>")),
]

TERMINAL = [
    ("return-empty-stack", cfg("return ()", ())),
    ("lambda-empty-stack", cfg("lam x. return x", ())),
    ("product-empty-stack", cfg("lam {return () | diverge}", ())),
    ("error-with-stack", cfg("error e", (_ret_frame,))),
    ("error-empty-stack", cfg("error e", ())),
    ("rtensor-empty-stack", cfg("rtensor () (return ())", ())),
]


def successors(c):
    return _successors(SIG, c)


# --------------------------------------------------------------- equations

@dataclass(frozen=True)
class Equation:
    name: str
    kind: str               # value-beta | machine-beta | eta | not-definitional
    lhs: str
    rhs: str
    ty: str = ""
    ctx: tuple = ()
    labels: tuple = ()
    flag: str = ""


def _ctx(pairs):
    return Context(tuple((x, Y(a)) for x, a in pairs))


EQUATIONS = [
    # beta rows on values: normalize_value(lhs) == rhs
    Equation("let-beta (value)", "value-beta", "let x be <1, ()> in <x, x>", "<<1, ()>, <1, ()>>"),
    Equation("sum-beta (value)", "value-beta",
             "pm <1, () : Sum(1, 1)> as {<1, x> -> x | <2, y> -> ()} [z. 1]", "()"),
    Equation("unit-beta (value)", "value-beta", "pm () as () [z. Sum(1, 1)] in <2, ()>", "<2, ()>"),
    Equation("pair-beta (value)", "value-beta", "pm <(), <1, ()>> as <a, b> in <b, a>",
             "<<1, ()>, ()>"),
    Equation("refl-beta (value)", "value-beta", "pm (refl ()) as refl x in <x, x>", "<(), ()>"),
    Equation("value-function-beta", "value-beta", "vapp <2, ()> (vlam x. <x, ()>)",
             "<<2, ()>, ()>"),
    # beta rows on computations: the machine rewrites lhs to rhs along labels
    Equation("let-beta", "machine-beta", "let x be () in return <x, x>", "return <(), ()>",
             labels=("let",)),
    Equation("letnil-beta", "machine-beta", "let nil be return () in nil to y in return y",
             "return () to y in return y", labels=("letnil",)),
    Equation("sum-beta", "machine-beta", "pm <2, ()> as {<1, a> -> diverge | <2, b> -> return b}",
             "return ()", labels=("pm-sum",)),
    Equation("unit-beta", "machine-beta", "pm () as () in return <1, ()>", "return <1, ()>",
             labels=("pm-unit",)),
    Equation("pair-beta", "machine-beta", "pm <(), <1, ()>> as <a, b> in return b",
             "return <1, ()>", labels=("pm-pair",)),
    Equation("force-thunk-beta", "machine-beta", "force (thunk (return ()))", "return ()",
             labels=("force-thunk",)),
    Equation("F-beta", "machine-beta", "return () to x in return <x, x>", "return <(), ()>",
             labels=("to-push", "return-pop")),
    Equation("product-beta", "machine-beta", "proj 2 (lam {diverge | return ()})", "return ()",
             labels=("proj-push", "proj-pop")),
    Equation("function-beta", "machine-beta", "app <1, ()> (lam x. return x)", "return <1, ()>",
             labels=("app-push", "app-pop")),
    Equation("refl-beta", "machine-beta", "pm (refl ()) as refl x in return x", "return ()",
             labels=("pm-id",)),
    # eta rows behind a flag: accepted with it, rejected without
    Equation("U-eta", "eta", "f", "thunk (force f)", "U F 1", (("f", "U F 1"),), flag="eta_thunk"),
    Equation("function-eta", "eta", "thunk (force f)", "thunk (lam x. app x (force f))",
             "U Pi (x : 1) -> F 1", (("f", "U Pi (x : 1) -> F 1"),), flag="eta_fun"),
    Equation("product-eta", "eta", "thunk (force f)",
             "thunk (lam {proj 1 (force f) | proj 2 (force f)})", "U Prod(F 1, F 1)",
             (("f", "U Prod(F 1, F 1)"),), flag="eta_fun"),
    Equation("value-function-eta", "eta", "g", "vlam x. vapp x g", "Pi (x : 1) -> 1",
             (("g", "Pi (x : 1) -> 1"),), flag="eta_fun"),
    Equation("hom-eta", "eta", "h", "lam nil. happ nil h", "Hom(F 1, F 1)",
             (("h", "Hom(F 1, F 1)"),), flag="eta_fun"),
    # eta rows that are never definitional (intensional by design)
    Equation("F-eta", "not-definitional", "thunk (force f)", "thunk (force f to x in return x)",
             "U F 1", (("f", "U F 1"),)),
    Equation("sum-eta", "not-definitional", "b",
             "pm b as {<1, x> -> <1, x> | <2, y> -> <2, y>} [z. Sum(1, 1)]", "Sum(1, 1)",
             (("b", "Sum(1, 1)"),)),
    Equation("unit-eta", "not-definitional", "u", "pm u as () [z. 1] in ()", "1", (("u", "1"),)),
    Equation("pair-eta", "not-definitional", "p",
             "pm p as <x, y> [z. Sigma (w : 1) * 1] in <x, y>", "Sigma (w : 1) * 1",
             (("p", "Sigma (w : 1) * 1"),)),
    Equation("refl-eta", "not-definitional", "p",
             "pm p as refl x [a b q. Id(1, a, b)] in refl x", "Id(1, (), ())",
             (("p", "Id(1, (), ())"),)),
]

ALL_FLAGS = Flags(eta_thunk=True, eta_fun=True, effect_eqs=True)


def definitional(eq: Equation, flags: Flags) -> bool:
    """Does ``Id(A, lhs, rhs)`` convert with ``Id(A, rhs, rhs)``?"""
    a, l, r = Y(eq.ty), T(eq.lhs), T(eq.rhs)
    return types_equal(SIG, _ctx(eq.ctx), Id(a, l, r), Id(a, r, r), flags)


def check_equation(eq: Equation) -> bool:
    match eq.kind:
        case "value-beta":
            return alpha_eq(normalize_value(SIG, T(eq.lhs)), T(eq.rhs))
        case "machine-beta":
            c = Config(T(eq.lhs), (), (), "s0")
            for label in eq.labels:
                succ = _successors(SIG, c)
                if len(succ) != 1 or succ[0].label != label:
                    return False
                c = succ[0].config
            return alpha_eq(c.comp, T(eq.rhs)) and c.stack == ()
        case "eta":
            others = Flags(**{f: True for f in ("eta_thunk", "eta_fun", "effect_eqs")
                              if f != eq.flag})
            return (definitional(eq, Flags(**{eq.flag: True}))
                    and not definitional(eq, Flags())
                    and not definitional(eq, others))
        case "not-definitional":
            return not definitional(eq, Flags()) and not definitional(eq, ALL_FLAGS)
    raise ValueError(eq.kind)
