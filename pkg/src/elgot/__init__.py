"""Guarded and Elgot iteration for effectful process definitions."""
from .core import (Action, Choice, DEADLOCK, EffectKind, EquationSystem, KindError,
                   Leaf, ParseError, Prefix, ProcError, SignatureError, Summand,
                   TAU, ValidationError, copair, format_system, parse_system,
                   validate)
from .guardedness import (ActionGuarded, GuardReport, StepPositive, Total,
                          Vacuous, check_guarded, weaken)
from .procgraph import (BisimResult, OneLayer, Output, ProcessGraph, Step,
                        bisimilar, bounded_unfold, dump_lts, kleisli_substitute,
                        map_outputs, minimize, out)
from .solve import (BOTTOM, INFINITY, FlatDone, StepDone, StepSystem,
                    check_fixpoint, epsilon_closure, rho_outputs, rho_steps,
                    solve_banach, solve_elgot, solve_kleene, solve_unique,
                    upsilon_steps)
from .trace import (Trace, TraceAutomaton, TraceSet, rho_trace_automaton,
                    trace_equiv, traces_bounded, upsilon_determinize)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Choice",
    "DEADLOCK",
    "EffectKind",
    "EquationSystem",
    "KindError",
    "Leaf",
    "ParseError",
    "Prefix",
    "ProcError",
    "SignatureError",
    "Summand",
    "TAU",
    "ValidationError",
    "copair",
    "format_system",
    "parse_system",
    "validate",
    "ActionGuarded",
    "GuardReport",
    "StepPositive",
    "Total",
    "Vacuous",
    "check_guarded",
    "weaken",
    "BisimResult",
    "OneLayer",
    "Output",
    "ProcessGraph",
    "Step",
    "bisimilar",
    "bounded_unfold",
    "dump_lts",
    "kleisli_substitute",
    "map_outputs",
    "minimize",
    "out",
    "BOTTOM",
    "INFINITY",
    "FlatDone",
    "StepDone",
    "StepSystem",
    "check_fixpoint",
    "epsilon_closure",
    "rho_outputs",
    "rho_steps",
    "solve_banach",
    "solve_elgot",
    "solve_kleene",
    "solve_unique",
    "upsilon_steps",
    "Trace",
    "TraceAutomaton",
    "TraceSet",
    "rho_trace_automaton",
    "trace_equiv",
    "traces_bounded",
    "upsilon_determinize",
]
