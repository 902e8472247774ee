import pytest
from hypothesis import given, settings

from elgot.core import ProcError, Summand, parse_system
from elgot.guardedness import (ActionGuarded, StepPositive, Total, Vacuous,
                               check_guarded, visible_actions, weaken)

from .strategies import generated_systems


def guarded(text, mode, sigma=("x",)):
    return check_guarded(parse_system(text), Summand.of(sigma), mode)


def test_guarded_loop():
    r = guarded("actions a; params y; vars x; x = {y, a.x};", ActionGuarded(frozenset({"a"})))
    assert r.guarded and r.violations == () and r.lines() == ["guarded"]


def test_bare_reference_is_unguarded():
    r = guarded("actions a; vars x; x = {x, a.x};", ActionGuarded(frozenset({"a"})))
    assert not r.guarded
    assert r.violations == (("x", (0,), "x"),)
    assert r.lines() == ["not guarded", "violation x/0 leaf x"]


def test_tau_is_not_a_visible_guard():
    f = parse_system("actions a; vars x; x = {tau.x};")
    assert not check_guarded(f, Summand.all_vars(f), ActionGuarded(frozenset({"a"}))).guarded
    assert not check_guarded(f, Summand.all_vars(f), visible_actions(f)).guarded
    assert check_guarded(f, Summand.all_vars(f), StepPositive()).guarded


def test_vacuous_without_references():
    assert guarded("params y; vars x; x = {y};", Vacuous()).guarded
    assert not guarded("actions a; params y; vars x; x = a.x;", Vacuous()).guarded


def test_total_always_guarded():
    assert guarded("vars x; x = x;", Total()).guarded


def test_default_mode_and_summand():
    f = parse_system("actions a; params y; vars x; x = {y, a.x};")
    assert check_guarded(f).guarded


def test_unknown_summand_name():
    with pytest.raises(ProcError):
        guarded("vars x; x = x;", Total(), sigma=("nope",))


def test_undeclared_guard_action():
    with pytest.raises(ProcError):
        guarded("vars x; x = x;", ActionGuarded(frozenset({"zz"})))


def test_summand_over_params():
    text = "actions a; params y, z; vars x; x = {a.y, z};"
    assert guarded(text, ActionGuarded(frozenset({"a"})), sigma=("y",)).guarded
    assert not guarded(text, ActionGuarded(frozenset({"a"})), sigma=("z",)).guarded


def test_weaken():
    s12 = Summand.of(["x1", "x2"])
    assert weaken(s12, Summand.of(["x1"])) == Summand.of(["x1"])
    assert weaken(Summand.of(["x"]), Summand.of(["x"])) == Summand.of(["x"])
    with pytest.raises(ProcError):
        weaken(s12, Summand.of(["x1", "x2", "x3"]))


def test_union_closed():
    text = "actions a; params y, z; vars x; x = {a.y, a.z, y};"
    m = ActionGuarded(frozenset({"a"}))
    f = parse_system(text)
    both = check_guarded(f, Summand.of(["z", "x"]), m).guarded
    assert both == (check_guarded(f, Summand.of(["z"]), m).guarded
                    and check_guarded(f, Summand.of(["x"]), m).guarded)


@settings(max_examples=200, deadline=None)
@given(generated_systems(mode=("unique",)))
def test_generator_respects_mode(f):
    assert check_guarded(f).guarded


@settings(max_examples=200, deadline=None)
@given(generated_systems())
def test_mode_chain(f):
    sigma = Summand.all_vars(f)
    res = [check_guarded(f, sigma, m).guarded
           for m in (Vacuous(), visible_actions(f), ActionGuarded(frozenset(f.action_names)),
                     StepPositive(), Total())]
    assert all((not a) or b for a, b in zip(res, res[1:]))
