"""Exergetic port-Hamiltonian systems on a staggered 1D grid.

The package is layered: :mod:`ephs.pattern` handles interconnection
patterns, :mod:`ephs.dsl` their text format, :mod:`ephs.grid` and
:mod:`ephs.components` the discrete primitives, :mod:`ephs.assembly`
binding and time stepping, and :mod:`ephs.verify` the structural checks.
"""

from .assembly import CompositeSystem, Trajectory, bind, run, step_midpoint, step_rk4
from .components import make_component, register
from .dsl import ModelDocument, parse, serialize
from .eos import Environment
from .grid import Grid1D
from .model import build_model, load_model
from .pattern import (OUTER, Interface, Junction, Pattern, PortAttribute, PortRef, Quantity,
                      compose, expand_multiports, flatten, junction_equations,
                      validate_pattern)

__version__ = "0.1.0"

__all__ = [
    "CompositeSystem", "Trajectory", "bind", "run", "step_midpoint", "step_rk4",
    "make_component", "register", "ModelDocument", "parse", "serialize", "Environment",
    "Grid1D", "build_model", "load_model", "OUTER", "Interface", "Junction", "Pattern",
    "PortAttribute", "PortRef", "Quantity", "compose", "expand_multiports", "flatten",
    "junction_equations", "validate_pattern",
]
