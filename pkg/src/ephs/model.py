"""From a parsed document to a runnable system with an initial state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .assembly import CompositeSystem, bind
from .components import Component, EKCElectrostatic, make_component
from .dsl import InitSpec, ModelDocument, load
from .eos import Environment
from .errors import BindError, MissingDefinition, ParameterError
from .grid import Grid1D
from .pattern import Pattern, PortRef, flatten

SIM_DEFAULTS = {"t_end": 1.0, "dt": 1e-3, "output_every": 100, "integrator": "rk4",
                "theta0": 1.0, "mu0": 0.0}


def flatten_document(doc: ModelDocument) -> Pattern:
    root = doc.root_name()
    if root not in doc.patterns:
        raise MissingDefinition(f"no pattern named {root!r}")
    return flatten(doc.patterns[root], doc.patterns)


def grid_from(doc: ModelDocument, **override) -> Grid1D:
    spec = {"L": 1.0, "n": 64, "periodic": False}
    spec.update(doc.domain)
    spec.update({k: v for k, v in override.items() if v is not None})
    unknown = set(spec) - {"L", "n", "periodic"}
    if unknown:
        raise ParameterError(f"unknown domain settings: {', '.join(sorted(unknown))}")
    return Grid1D(float(spec["L"]), int(spec["n"]), bool(spec["periodic"]))


def sim_settings(doc: ModelDocument) -> dict[str, Any]:
    out = dict(SIM_DEFAULTS)
    unknown = set(doc.sim) - set(SIM_DEFAULTS)
    if unknown:
        raise ParameterError(f"unknown sim settings: {', '.join(sorted(unknown))}")
    out.update(doc.sim)
    return out


def components_from(doc: ModelDocument) -> dict[str, Component]:
    return {path: make_component(spec.component, spec.param_map)
            for path, spec in doc.bindings.items()}


@dataclass
class Model:
    doc: ModelDocument
    flat: Pattern
    system: CompositeSystem
    settings: dict[str, Any]

    @property
    def grid(self) -> Grid1D:
        return self.system.grid

    def initial_state(self) -> np.ndarray:
        return initial_state(self.system, self.doc.init)


def build_model(doc: ModelDocument, **grid_override) -> Model:
    if doc.root is None:
        raise BindError("model has no bindings section")
    flat = flatten_document(doc)
    settings = sim_settings(doc)
    env = Environment(float(settings["theta0"]), float(settings["mu0"]))
    system = bind(flat, components_from(doc), grid_from(doc, **grid_override), env)
    return Model(doc, flat, system, settings)


def load_model(path, **grid_override) -> Model:
    return build_model(load(path), **grid_override)


# ---------------------------------------------------------------------------
# initial conditions


def _coords(sys: CompositeSystem, name: str) -> np.ndarray:
    return sys.grid.coordinates(sys.entry(name).placement)


def _preset(sys: CompositeSystem, name: str, spec: InitSpec, fields) -> np.ndarray:
    p = spec.param_map
    z = _coords(sys, name)
    L = sys.grid.L
    kind = spec.preset

    def need(key, default=None):
        if key in p:
            return float(p[key])
        if default is None:
            raise ParameterError(f"preset {kind} for {name} needs parameter {key!r}")
        return float(default)

    if kind == "uniform":
        return np.full(z.shape, need("value"))
    if kind == "gaussian":
        return need("offset", 0.0) + need("amplitude") * np.exp(
            -0.5 * ((z - need("center", L / 2)) / need("width")) ** 2)
    if kind in ("sine", "cosine"):
        arg = 2 * math.pi * need("mode", 1) * z / L + need("phase", 0.0)
        wave = np.sin(arg) if kind == "sine" else np.cos(arg)
        return need("offset", 0.0) + need("amplitude") * wave
    if kind == "gauss_law":
        return _gauss_law(sys, name, p, fields)
    raise ParameterError(f"unknown initial-condition preset {kind!r}")


def _gauss_law(sys: CompositeSystem, name: str, p: Mapping, fields) -> np.ndarray:
    """Displacement whose discrete divergence equals the charge density."""
    grid = sys.grid
    couplings = [(b, c) for b, c in sys.components.items() if isinstance(c, EKCElectrostatic)]
    charge = p.get("charge")
    background = p.get("background")
    source = p.get("source")
    if len(couplings) == 1:
        box, comp = couplings[0]
        charge = comp.params.get("c", 1.0) if charge is None else charge
        background = comp.params.get("rho_bg", 0.0) if background is None else background
        if source is None:
            source = sys.entry(str(PortRef(box, "f.m"))).name
    if charge is None or source is None:
        raise ParameterError("gauss_law needs charge and source when the model has no "
                             "single electrostatic coupling")
    rho = fields[sys.entry(str(source)).name]
    q = float(charge) * (rho - float(background or 0.0))
    d = np.concatenate(([0.0], np.cumsum(grid.dz * q)))
    if grid.periodic:
        if abs(d[-1]) > 1e-9 * max(1.0, float(np.sum(np.abs(q))) * grid.dz):
            raise ParameterError("gauss_law on a periodic grid needs zero net charge, "
                                 f"got {d[-1]:.3e}")
        d = d[:-1]
        d = d - np.mean(d)
    else:
        d = d + float(p.get("left", 0.0))
    return d


def initial_state(sys: CompositeSystem, init: Mapping[str, InitSpec]) -> np.ndarray:
    fields: dict[str, np.ndarray] = {}
    deferred = []
    for key, spec in init.items():
        name = sys.entry(key).name
        if spec.preset == "gauss_law":
            deferred.append((name, spec))
        elif spec.values is not None:
            fields[name] = np.array(spec.values, dtype=float)
        else:
            fields[name] = _preset(sys, name, spec, fields)
    for name, spec in deferred:
        fields[name] = _preset(sys, name, spec, fields)
    return sys.pack(fields)


# ---------------------------------------------------------------------------
# bundled models


def bundled_models() -> dict[str, Path]:
    root = resources.files("ephs") / "models"
    return {Path(str(p)).stem: Path(str(p)) for p in root.iterdir()
            if str(p).endswith(".ephs")}


def bundled_path(name: str) -> Path:
    models = bundled_models()
    stem = name[:-5] if name.endswith(".ephs") else name
    try:
        return models[stem]
    except KeyError:
        raise FileNotFoundError(f"no bundled model {name!r}; available: "
                                f"{', '.join(sorted(models))}") from None
