"""Shared hypothesis strategies."""
from fractions import Fraction

from hypothesis import strategies as st

from elgot.core import Choice, EffectKind, EquationSystem, Leaf, Prefix
from elgot.laws import gen_system, params_for

NAMES = ["x1", "x2", "y1", "y2", "q"]
ACTS = ["a", "b", "tau", "c"]


def weights():
    return st.sampled_from([Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(3, 2)])


@st.composite
def raw_terms(draw, depth=3):
    """Terms that may break any invariant (undeclared names, bad weights...)."""
    if depth == 0 or draw(st.integers(0, 2)) == 0:
        return Leaf(draw(st.sampled_from(NAMES)), draw(st.booleans()))
    if draw(st.booleans()):
        return Prefix(draw(st.sampled_from(ACTS)), draw(raw_terms(depth - 1)))
    n = draw(st.integers(0, 3))
    return Choice(tuple((draw(weights()), draw(raw_terms(depth - 1))) for _ in range(n)))


@st.composite
def raw_systems(draw):
    kind = draw(st.sampled_from(list(EffectKind)))
    actions = draw(st.lists(st.sampled_from(["a", "b", "a"]), max_size=3))
    params = draw(st.lists(st.sampled_from(["y1", "y2", "x1"]), max_size=2))
    vars = draw(st.lists(st.sampled_from(["x1", "x2"]), min_size=1, max_size=2))
    eq_names = draw(st.lists(st.sampled_from(["x1", "x2"]), max_size=2, unique=True))
    eqs = {x: draw(raw_terms()) for x in eq_names}
    return EquationSystem(kind, actions, params, vars, eqs)


@st.composite
def generated_systems(draw, instance=("set", "maybe", "subdist"), mode=("unique", "elgot")):
    inst = draw(st.sampled_from(instance))
    m = draw(st.sampled_from(mode))
    if inst == "subdist":
        m = "unique"
    p = params_for(inst, m, seed=draw(st.integers(0, 2 ** 32)))
    return gen_system(p, draw(st.integers(0, 1000)))
