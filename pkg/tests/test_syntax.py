import pytest
from hypothesis import given, settings, strategies as st

from dcbpv.parser import parse_term
from dcbpv.syntax import (
    EffectSignature, Flags, Force, Lam, LamI, Mu, Nil, Pair, ProjI, Return, Thunk, To,
    UnitV, Var, alpha_eq, canonical, free_idents, mult, strip_annotations, subst,
    subst_stoup,
)
from astgen import AstGen


# ------------------------------------------------------------ substitution

def test_subst_variable():
    assert subst(Var("x"), "x", UnitV()) == UnitV()


def test_subst_under_return():
    v = Pair(UnitV(), UnitV())
    assert subst(Return(Var("x")), "x", v) == Return(v)


def test_subst_respects_shadowing():
    lam = Lam("x", Return(Var("x")))
    assert alpha_eq(subst(lam, "x", UnitV()), lam)


def test_subst_avoids_capture():
    t = Lam("y", Return(Pair(Var("x"), Var("y"))))
    out = subst(t, "x", Var("y"))
    assert isinstance(out, Lam) and out.x != "y"
    assert free_idents(out) == {"y"}
    assert alpha_eq(out, Lam("w", Return(Pair(Var("y"), Var("w")))))


def test_subst_stoup_cases():
    assert subst_stoup(Nil(), Return(UnitV())) == Return(UnitV())
    prod = LamI((Return(UnitV()), Return(UnitV())))
    assert subst_stoup(ProjI(1, Nil()), prod) == ProjI(1, prod)
    got = subst_stoup(To(Nil(), "x", Return(Var("x"))), Return(UnitV()))
    assert got == To(Return(UnitV()), "x", Return(Var("x")))


# ------------------------------------------------------------------- alpha

def test_alpha_eq_examples():
    assert alpha_eq(Lam("x", Return(Var("x"))), Lam("y", Return(Var("y"))))
    assert not alpha_eq(Lam("x", Return(Var("x"))), Lam("x", Return(UnitV())))
    assert alpha_eq(Thunk(Mu("z", Force(Var("z")))), Thunk(Mu("w", Force(Var("w")))))


def test_alpha_eq_distinguishes_free_names():
    assert not alpha_eq(Return(Var("x")), Return(Var("y")))


def test_alpha_eq_ignores_nothing_but_binders():
    a = parse_term("pm v as <x, y> in return <x, y>")
    b = parse_term("pm v as <p, q> in return <p, q>")
    c = parse_term("pm v as <p, q> in return <q, p>")
    assert alpha_eq(a, b) and not alpha_eq(a, c)


# ------------------------------------------------------------ free names

def test_free_idents_examples():
    assert free_idents(Return(Var("x"))) == {"x"}
    assert free_idents(Thunk(Return(UnitV()))) == set()
    t = To(Force(Var("f")), "x", Return(Pair(Var("x"), Var("y"))))
    assert free_idents(t) == {"f", "y"}


def test_free_idents_in_motive_and_types():
    t = parse_term("pm v as () [z. F Id(1, z, w)] in return ()")
    assert free_idents(t) == {"v", "w"}


def test_strip_annotations_drops_only_annotations():
    t = parse_term("lam x : 1. return <1, x : Sum(1, 1)>")
    assert strip_annotations(t) == parse_term("lam x. return <1, x>")


# -------------------------------------------------------------- signature

def test_signature_defaults():
    sig = EffectSignature()
    assert sig.states == ("s0",) and sig.init == "s0" and not sig.errors
    assert sig.features == Flags()


def test_signature_rejects_bad_initial_state():
    with pytest.raises(ValueError):
        EffectSignature(states=("s0",), init="s9")
    with pytest.raises(ValueError):
        EffectSignature(states=(), init="s0")


def test_flags_parse_and_merge():
    f = Flags.parse(["plus", "eta-fun"])
    assert f.plus and f.eta_fun and not f.effect_eqs
    assert f.names() == ["plus", "eta-fun"]
    assert f.merge(Flags(effect_eqs=True)).names() == ["plus", "eta-fun", "effect-eqs"]
    with pytest.raises(ValueError):
        Flags.parse(["nonsense"])


tokens = st.lists(st.sampled_from(["a", "b", "c"]), max_size=4).map(tuple)


@given(tokens, tokens, tokens)
def test_output_monoid_associative(a, b, c):
    assert mult(mult(a, b), c) == mult(a, mult(b, c))


@given(tokens)
def test_output_monoid_unit(a):
    assert mult((), a) == a == mult(a, ())


# -------------------------------------------------------------- properties

terms = st.integers(0, 10**6).map(lambda s: AstGen(s).comp(3))
values = st.integers(0, 10**6).map(lambda s: AstGen(s).value(2))


@settings(max_examples=150, deadline=None)
@given(terms, values, values)
def test_substitution_absorbs(t, v, w):
    if "x" in free_idents(v):
        return
    once = subst(t, "x", v)
    assert alpha_eq(subst(once, "x", w), once)


@settings(max_examples=150, deadline=None)
@given(terms, values)
def test_substituted_name_disappears(t, v):
    if "x" in free_idents(v):
        return
    assert "x" not in free_idents(subst(t, "x", v))


@settings(max_examples=150, deadline=None)
@given(terms, values)
def test_subst_respects_alpha(t, v):
    renamed = canonical(t)
    assert alpha_eq(renamed, t)
    assert alpha_eq(subst(renamed, "x", v), subst(t, "x", v))


@settings(max_examples=150, deadline=None)
@given(terms, terms)
def test_alpha_eq_is_an_equivalence(a, b):
    assert alpha_eq(a, a)
    assert alpha_eq(a, b) == alpha_eq(b, a)
    if alpha_eq(a, b):
        c = canonical(b)
        assert alpha_eq(a, c)
