"""Transient simulator for superconducting (RSFQ) and conventional circuits."""
from .elaborate import FlatCircuit, check_flat, flatten, sort_modules
from .engine import (
    EngineState,
    SimConfig,
    init_simulation,
    load_state,
    run_transient,
    save_state,
    simulate,
    step_once,
)
from .mna import PHI0, SymbolicSystem, assign_unknowns, build_system, derive_post_currents
from .native import parse_native, print_native
from .netlist import Netlist, netlist_arity_check, netlist_syntax_check
from .pipeline import compile_netlist, elaborate, parse_netlist, read_netlist
from .record import SimulationRecord, TimeLine
from .solver import SolvePlan, SparseMatrix, dense_oracle_solve, factor, solve_with_plan
from .spice import parse_spice
from .terms import (
    SubtermTable,
    collect_ordered_subterms,
    parse_term,
    print_term,
    sweep_evaluate,
    vw_eval,
)

__all__ = [name for name in dir() if not name.startswith("_")]
