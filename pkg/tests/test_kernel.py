import json

import pytest
from hypothesis import given, settings, strategies as st

from dcbpv.generate import Gen
from dcbpv.kernel import (
    EMPTY, Checker, Context, TypingError, check_comp, check_value, normalize_value,
    synth_comp, synth_value, types_equal, wf_context, wf_ctype, wf_vtype,
)
from dcbpv.parser import parse_term as T, parse_type as Y, pretty
from dcbpv.syntax import (
    F, FinProd, FinSum, Flags, FunPi, Hom, Id, Let, Node, Pi, Sigma, SigmaF, To, U, Unit,
    UnitV, Var, free_idents, has_nil, iter_children, subst,
)
from rows import EQUATIONS, SIG, check_equation

PLUS = Flags(plus=True)


# ---------------------------------------------------------------- contexts

def test_empty_context():
    wf_context(SIG, EMPTY)


def test_context_with_stoup():
    wf_context(SIG, Context((("x", Unit()),), F(Unit())))


def test_duplicate_identifier():
    with pytest.raises(TypingError) as e:
        wf_context(SIG, Context((("x", Unit()), ("x", Unit()))))
    assert "duplicate" in str(e.value)


def test_context_entry_must_be_well_formed():
    with pytest.raises(TypingError):
        wf_context(SIG, Context((("x", Y("Id(1, y, ())")),)))


# ------------------------------------------------------------------- types

def test_identity_type_formation():
    wf_vtype(SIG, EMPTY, Y("Id(1, (), ())"))


def test_sigma_of_thunks():
    wf_vtype(SIG, EMPTY, Y("Sigma (x : 1) * U F 1"))


def test_identity_type_checks_its_values():
    with pytest.raises(TypingError):
        wf_vtype(SIG, EMPTY, Y("Id(1, <1, ()>, ())"))


def test_projection_products_gated():
    ty = Y("DepProd(z1 : F 1, z2 : F 1)")
    with pytest.raises(TypingError) as e:
        wf_ctype(SIG, EMPTY, ty)
    assert "feature disabled" in str(e.value)
    wf_ctype(SIG, EMPTY, ty, Flags(proj_products=True))


def test_dependent_function_type():
    wf_ctype(SIG, EMPTY, Y("Pi (x : Sum(1, 1)) -> F Id(Sum(1, 1), x, x)"))


# ------------------------------------------------------------------ values

def test_thunk_of_return():
    check_value(SIG, EMPTY, T("thunk (return ())"), Y("U F 1"))


def test_refl_introduction():
    check_value(SIG, EMPTY, T("refl ()"), Y("Id(1, (), ())"))


def test_unbound_identifier():
    with pytest.raises(TypingError) as e:
        check_value(SIG, EMPTY, T("thunk (force x)"), Y("U F 1"))
    assert e.value.rule == "var"


def test_refl_at_unequal_values_rejected():
    with pytest.raises(TypingError):
        check_value(SIG, EMPTY, T("refl <1, ()>"), Y("Id(Sum(1, 1), <1, ()>, <2, ()>)"))


def test_refl_up_to_value_beta():
    check_value(SIG, EMPTY, T("refl ()"), Y("Id(1, pm () as () [z. 1] in (), ())"))


def test_dependent_pair():
    ty = Y("Sigma (b : Sum(1, 1)) * Id(Sum(1, 1), b, b)")
    check_value(SIG, EMPTY, T("<<2, ()>, refl <2, ()>>"), ty)


def test_value_synthesis_of_annotated_lambda():
    got = synth_value(SIG, EMPTY, T("vlam x : 1. <x, x>"))
    assert isinstance(got, Pi)


# ------------------------------------------------------------ computations

def test_sequencing_from_the_stoup():
    ctx = Context((), F(Unit()))
    check_comp(SIG, ctx, T("nil to x in return <x, x>"), Y("F Sigma (w : 1) * 1"))


def test_return_requires_empty_stoup():
    with pytest.raises(TypingError):
        check_comp(SIG, Context((), F(Unit())), T("return ()"), Y("F 1"))


def test_effects_require_empty_stoup():
    with pytest.raises(TypingError):
        check_comp(SIG, Context((), F(Unit())), T('print "a" nil'), Y("F 1"))


def test_stoup_must_be_used():
    with pytest.raises(TypingError):
        check_comp(SIG, EMPTY, T("nil"), Y("F 1"))


DEP = "return () to x [z. F Id(U F 1, z, z)] in return (refl (thunk (return x)))"


def test_dependent_motive_requires_plus():
    with pytest.raises(TypingError) as e:
        synth_comp(SIG, EMPTY, T(DEP))
    assert "dependent motive requires plus" in str(e.value)


def test_dependent_sequencing_with_plus():
    got = synth_comp(SIG, EMPTY, T(DEP), PLUS)
    # the rule's result type: the motive at z := thunk (return ())
    assert types_equal(SIG, EMPTY, got, Y("F Id(U F 1, thunk (return ()), thunk (return ()))"))


def test_dependency_escape_in_minus():
    with pytest.raises(TypingError) as e:
        synth_comp(SIG, EMPTY, T("return () to x in return (refl (thunk (return x)))"))
    assert "dependency escape" in str(e.value)


def test_effect_operators():
    check_comp(SIG, EMPTY, T('write s1 (read {s0 -> print "a" (return ()) | s1 -> error e})'),
               Y("F 1"))


def test_unknown_state_rejected():
    with pytest.raises(TypingError):
        check_comp(SIG, EMPTY, T("write s9 (return ())"), Y("F 1"))


def test_unknown_error_label_rejected():
    with pytest.raises(TypingError):
        check_comp(SIG, EMPTY, T("error nope"), Y("F 1"))


def test_read_needs_every_state():
    with pytest.raises(TypingError):
        check_comp(SIG, EMPTY, T("read {s0 -> return ()}"), Y("F 1"))


def test_hom_and_tensor():
    check_value(SIG, EMPTY, T("lam nil : F 1. nil to y in return <y, y>"),
                Y("Hom(F 1, F Sigma (w : 1) * 1)"))
    check_comp(SIG, EMPTY, T("rtensor () (return ()) to rtensor x in nil to y in return <x, y>"),
               Y("F Sigma (w : 1) * 1"))


def test_sigma_f_introduction():
    check_comp(SIG, EMPTY, T("rtensor <1, ()> (return ())"),
               Y("SigmaF (x : Sum(1, 1)) * F 1"))


def test_error_json_shape():
    try:
        check_comp(SIG, EMPTY, T("return ()"), Y("F Sum(1, 1)"))
    except TypingError as e:
        d = e.to_json()
        assert set(d) == {"rule", "message", "location", "expected", "found"}
        json.dumps(d)
    else:
        pytest.fail("expected a type error")


# --------------------------------------------------------- normalization

def test_normalize_sum_beta():
    v = T("pm <1, () : Sum(1, 1)> as {<1, x> -> x | <2, y> -> ()} [z. 1]")
    assert normalize_value(SIG, v) == UnitV()


def test_normalize_refl_beta():
    assert pretty(normalize_value(SIG, T("pm (refl ()) as refl x in <x, x>"))) == "<(), ()>"


def test_normalize_leaves_thunks_alone():
    v = T("thunk (force (thunk diverge))")
    assert normalize_value(SIG, v) == v


# --------------------------------------------------------- type equality

def test_types_equal_examples():
    assert types_equal(SIG, EMPTY, Y("Id(1, pm () as () [z. 1] in (), ())"), Y("Id(1, (), ())"))
    assert not types_equal(SIG, EMPTY, Y("U F 1"), Y("F 1"))


def test_printing_thunks_never_identified():
    a = Y('F Id(U F 1, thunk (print "a" (return ())), thunk (return ()))')
    b = Y('F Id(U F 1, thunk (return ()), thunk (print "a" (return ())))')
    c = Y("F Id(U F 1, thunk (return ()), thunk (return ()))")
    for flags in (Flags(), Flags(effect_eqs=True, eta_thunk=True, eta_fun=True)):
        assert not types_equal(SIG, EMPTY, a, b, flags)
        assert not types_equal(SIG, EMPTY, a, c, flags)
        assert not types_equal(SIG, EMPTY, b, c, flags)


def test_algebraicity_under_effect_eqs():
    a = Y('F Id(U F 1, thunk (print "a" (return ()) to x in return x), '
          'thunk (print "a" (return () to x in return x)))')
    b = Y('F Id(U F 1, thunk (print "a" (return () to x in return x)), '
          'thunk (print "a" (return () to x in return x)))')
    assert not types_equal(SIG, EMPTY, a, b)
    assert types_equal(SIG, EMPTY, a, b, Flags(effect_eqs=True))


def test_mu_unrolling_under_effect_eqs():
    a = Y("F Id(U F 1, thunk (mu z. force z), thunk (force (thunk (mu z. force z))))")
    b = Y("F Id(U F 1, thunk (force (thunk (mu z. force z))), "
          "thunk (force (thunk (mu z. force z))))")
    assert not types_equal(SIG, EMPTY, a, b)
    assert types_equal(SIG, EMPTY, a, b, Flags(effect_eqs=True))


def test_annotations_ignored_by_conversion():
    a = Y("Id(U F 1, thunk (return <1, () : Sum(1, 1)> to x : Sum(1, 1) in return ()), "
          "thunk (return ()))")
    b = Y("Id(U F 1, thunk (return <1, ()> to x in return ()), thunk (return ()))")
    assert types_equal(SIG, EMPTY, a, b)


@pytest.mark.parametrize("eq", EQUATIONS, ids=lambda e: e.name)
def test_equation(eq):
    assert check_equation(eq)


# -------------------------------------------------------------- properties

def _generated(seed):
    g = Gen(seed, depth=4)
    a = g.vtype(2)
    return g, a, g.value((), a, 4)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_normalize_idempotent_and_type_preserving(seed):
    g, a, v = _generated(seed)
    check_value(SIG, EMPTY, v, a)
    n = normalize_value(SIG, v)
    assert normalize_value(SIG, n) == n
    check_value(SIG, EMPTY, n, a)


def _expand(t):
    """Beta-expand every value inside identity types: V becomes `let q be V in q`."""
    if isinstance(t, Id):
        return Id(_expand(t.ty), Let("q", t.lhs, Var("q")), Let("q", t.rhs, Var("q")))
    if not isinstance(t, Node):
        return t
    upd = {}
    for fname, idx, child, _ in iter_children(t):
        if idx is None:
            upd[fname] = _expand(child)
    if not upd:
        return t
    from dataclasses import replace
    return replace(t, **upd)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_types_equal_is_an_equivalence(seed):
    g = Gen(seed, depth=3)
    a = g.vtype(3)
    a1 = _expand(a)
    a2 = _expand(a1)
    other = g.vtype(3)
    assert types_equal(SIG, EMPTY, a, a)
    assert types_equal(SIG, EMPTY, a, a1) and types_equal(SIG, EMPTY, a1, a)
    assert types_equal(SIG, EMPTY, a1, a2) and types_equal(SIG, EMPTY, a, a2)
    assert types_equal(SIG, EMPTY, a, other) == types_equal(SIG, EMPTY, other, a)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_types_equal_is_a_congruence(seed):
    g = Gen(seed, depth=3)
    a = g.vtype(2)
    a1 = _expand(a)
    b = F(a)
    b1 = F(a1)
    pairs = [
        (U(b), U(b1)), (FinSum((a, Unit())), FinSum((a1, Unit()))),
        (Sigma("w", a, Unit()), Sigma("w", a1, Unit())), (Sigma("w", Unit(), a), Sigma("w", Unit(), a1)),
        (Pi("w", a, a), Pi("w", a1, a1)), (Hom(b, b), Hom(b1, b1)),
        (FinProd((b, b)), FinProd((b1, b1))), (FunPi("w", a, b), FunPi("w", a1, b1)),
        (SigmaF("w", a, b), SigmaF("w", a1, b1)),
    ]
    for x, y in pairs:
        assert types_equal(SIG, EMPTY, x, y)


def _open_program(seed):
    """x : A ⊢ K : B with B closed, plus a closed value V : A."""
    g = Gen(seed, depth=4, loops=True)
    a = g.vtype(1)
    b = F(g.vtype(1))
    return a, b, g.comp((("x", a),), b, 4), g.value((), a, 2)


@pytest.mark.parametrize("seed", range(40))
def test_substitution_lemma(seed):
    a, b, k, v = _open_program(seed)
    ctx = Context((("x", a),))
    check_comp(SIG, ctx, k, b)
    check_comp(SIG, EMPTY, subst(k, "x", v), subst(b, "x", v))


@pytest.mark.parametrize("seed", range(40))
def test_weakening(seed):
    a, b, k, _ = _open_program(seed)
    check_comp(SIG, Context((("x", a),)), k, b)
    check_comp(SIG, Context((("fresh", Y("Sum(1, 1)")), ("x", a))), k, b)
    check_comp(SIG, Context((("x", a), ("fresh", Unit()))), k, b)


def _sequencings(t):
    if isinstance(t, To):
        yield t
    for _, _, c, _ in iter_children(t):
        if isinstance(c, Node):
            yield from _sequencings(c)


@pytest.mark.parametrize("seed", range(30))
def test_minus_sequencing_never_leaks_the_bound_name(seed):
    g = Gen(seed, depth=5)
    b = F(g.vtype(2))
    m = g.comp((), b, 5)
    ch = Checker(SIG)
    ch.check_comp(EMPTY, m, b)
    for t in _sequencings(m):
        if free_idents(t) or has_nil(t):
            continue
        got = ch.synth_comp(EMPTY, t)
        assert t.x not in free_idents(got)
