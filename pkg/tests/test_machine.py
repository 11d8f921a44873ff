import pytest
from hypothesis import given, settings, strategies as st

from dcbpv.generate import SIGNATURE, generate
from dcbpv.kernel import TypingError
from dcbpv.machine import (
    BRANCH_CAP, Branches, Config, FuelExhausted, IdxFrame, MachineError, SplitMix64, Stuck,
    Terminal,
    ToFrame, applicable_transitions, classify, config_types, inject, leaves, parse_strategy,
    run, step, type_config,
)
from dcbpv.parser import parse_term as T, parse_type as Y
from dcbpv.syntax import EffectSignature, Flags, Return, UnitV
from rows import GOLDEN, SIG, TERMINAL, successors

SIG1 = EffectSignature()


@pytest.mark.parametrize("row", GOLDEN, ids=lambda r: r.name)
def test_golden_transition(row):
    hits = [t for t in successors(row.before) if t.label == row.label]
    assert len(hits) == 1
    assert hits[0].config == row.after


@pytest.mark.parametrize("name,c", TERMINAL, ids=[n for n, _ in TERMINAL])
def test_terminal_configuration(name, c):
    assert applicable_transitions(SIG, c) == (0, [])
    assert classify(SIG, c) == "terminal"


def test_deterministic_rows_have_one_successor():
    for row in GOLDEN:
        if not row.label.startswith("choose"):
            assert len(successors(row.before)) == 1, row.name


# ------------------------------------------------------------------ inject

def test_inject_return():
    assert inject(T("return ()")) == Config(Return(UnitV()), (), (), "s0")


def test_inject_uses_initial_state():
    sig = EffectSignature(states=("a", "b"), init="b")
    assert inject(T("diverge"), sig).state == "b"


def test_inject_rejects_open_terms():
    with pytest.raises(MachineError):
        inject(T("force x"))
    with pytest.raises(MachineError):
        inject(T("nil"))


# ----------------------------------------------------------------- running

def test_run_print():
    o = run(SIG1, T('print "a" (return ())'), fuel=10)
    assert isinstance(o, Terminal)
    assert o.config == Config(Return(UnitV()), (), ("a",), "s0")


def test_run_mu_loop_exhausts_fuel():
    o = run(SIG1, T("mu z. force z"), fuel=50)
    assert isinstance(o, FuelExhausted) and o.steps == 50


def test_run_mu_loop_cycles_by_hand():
    # mu-unroll, force-thunk, mu-unroll, ...: the configuration recurs every two steps
    c0 = inject(T("mu z. force z"))
    c1 = step(SIG1, c0)[0].config
    c2 = step(SIG1, c1)[0].config
    assert c1.comp == T("force (thunk (mu z. force z))")
    assert c2 == c0


def test_run_all_branches():
    o = run(SIG1, T("choose {return <1, ()> | return <2, ()>}"), strategy="all")
    assert isinstance(o, Branches) and not o.truncated
    got = {t.config.comp for t in o.outcomes}
    assert got == {T("return <1, ()>"), T("return <2, ()>")}
    assert all(isinstance(t, Terminal) for t in o.outcomes)


def test_branch_cap():
    # thirteen binary choices in sequence: 8192 leaves, more than the cap allows
    m = "return ()"
    for _ in range(13):
        m = f"choose {{return () | return ()}} to x in {m}"
    o = run(SIG1, T(m), strategy="all")
    assert o.truncated and len(o.outcomes) <= BRANCH_CAP


def test_small_tree_not_truncated():
    m = "return ()"
    for _ in range(3):
        m = f"choose {{return () | return ()}} to x in {m}"
    o = run(SIG1, T(m), strategy="all")
    assert not o.truncated and len(o.outcomes) == 8


def test_error_is_terminal_under_a_stack():
    o = run(SIG, T("error e to x in return x"))
    assert isinstance(o, Terminal) and o.config.comp == T("error e")
    assert len(o.config.stack) == 1


def test_stuck_read_outside_signature():
    o = run(SIG1, T("read {s1 -> return ()}"))
    assert isinstance(o, Stuck)


def test_state_threads_through():
    o = run(SIG, T("write s1 (read {s0 -> return <1, ()> | s1 -> return <2, ()>})"))
    assert o.config.comp == T("return <2, ()>") and o.config.state == "s1"


def test_print_pipeline_counts():
    m = "return ()"
    for _ in range(50):
        m = f'print "t" ({m})'
    o = run(SIG1, T(m))
    assert isinstance(o, Terminal) and len(o.config.out) == 50


def test_applicable_transitions_counts():
    assert applicable_transitions(SIG1, inject(T("return ()")))[0] == 0
    assert applicable_transitions(SIG, inject(T("error e")))[0] == 0
    assert applicable_transitions(SIG1, inject(T("choose {diverge | return ()}"))) == (
        2, ["choose-1", "choose-2"])


# -------------------------------------------------------------- strategies

def test_splitmix64_reference_vector():
    s = SplitMix64(1234567)
    assert [s.next() for _ in range(3)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423]


def test_seeded_strategy_reproducible():
    m = T("choose {return <1, ()> | return <2, ()> | return <3, ()>} to x in "
          "choose {return <x, <1, ()>> | return <x, <2, ()>>}")
    outs = {run(SIG1, m, strategy=f"seed:{n}").config.comp for n in range(20)}
    assert len(outs) > 1
    for n in range(5):
        assert run(SIG1, m, strategy=f"seed:{n}") == run(SIG1, m, strategy=f"seed:{n}")


def test_parse_strategy():
    assert parse_strategy("first") == "first"
    assert parse_strategy("seed:42") == "seed:42"
    assert parse_strategy("all") == "all"
    with pytest.raises(ValueError):
        parse_strategy("random")


# --------------------------------------------------------- configuration typing

def test_type_config_examples():
    type_config(SIG1, Flags(), inject(T("return ()")), Y("F 1"))
    frame = ToFrame("x", T("return <x, x>"))
    type_config(SIG1, Flags(), Config(T("return ()"), (frame,)), Y("F Sigma (w : 1) * 1"))
    with pytest.raises(TypingError):
        type_config(SIG1, Flags(), Config(T("return ()"), (IdxFrame(1),)), Y("F 1"))


def test_type_config_wrong_target():
    assert config_types(SIG1, Flags(), inject(T("return ()")), Y("F Sum(1, 1)")) is not None


# -------------------------------------------------------------- properties

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_big_step_is_the_fold_of_step(seed):
    g = generate(seed, depth=5)
    o = run(SIGNATURE, g.main, fuel=2000)
    c, n = inject(g.main, SIGNATURE), 0
    while n < 2000:
        succ = step(SIGNATURE, c, "first")
        if not succ:
            break
        c, n = succ[0].config, n + 1
    assert o.config == c and o.steps == n


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_no_transition_means_terminal(seed):
    g = generate(seed, depth=5)
    for leaf in leaves(run(SIGNATURE, g.main, fuel=2000, strategy="all")):
        if isinstance(leaf, FuelExhausted):
            continue
        assert isinstance(leaf, Terminal), leaf
        assert applicable_transitions(SIGNATURE, leaf.config)[0] == 0


@pytest.mark.parametrize("m", ["force x", "pm x as () in return ()", "happ (return ()) x"])
def test_neutral_forms_are_stuck_not_terminal(m):
    c = Config(T(m))
    assert applicable_transitions(SIGNATURE, c)[0] == 0
    assert classify(SIGNATURE, c) == "neutral"
