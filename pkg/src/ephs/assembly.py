"""Turn a flat pattern plus component bindings into an evaluable system.

Binding resolves the junction structure into

* a state layout: every junction that contains a storage port stores its
  state once, owned by one storage port (kinetic before potential before
  internal, then by name); every other port at that junction reads it;
* kind groups: per junction and power-port kind, exactly one port
  supplies the effort (a storage port or a transformer output such as
  ``pps.p``) and the others supply flows;
* an explicit evaluation plan: storage efforts, then transformer efforts
  in dependency order, then flows in dependency order.  Dependency
  cycles are reported as :class:`CausalityLoop` with the port path.

The state derivative of a stored field equals the net flow of its owner
port, i.e. the sum of outer flows minus the flows of every other port in
the owner's kind group.
"""

from __future__ import annotations

import graphlib
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .components import EFFORT_OUT, BoundaryValue, Component, EKCElectrostatic, Reversible
from .eos import Environment
from .errors import (BindError, CausalityError, CausalityLoop, DuplicateStateOwner,
                     InadmissibleState, InterfaceMismatch, NonConvergence, PatternError,
                     UnboundBox)
from .grid import Grid1D
from .pattern import KINDS, Pattern, PortRef, expand_multiports, require_valid

KIND_ORDER = {k: i for i, k in enumerate(KINDS)}

# ports of non-storage components that read the junction state
STATE_READS = {
    "pps": ("m",),
    "adv": ("m", "s"),
    "ekc.electrostatic": ("f.m",),
}


@dataclass(frozen=True)
class LayoutEntry:
    name: str
    owner: PortRef
    quantity: str
    placement: str
    start: int
    stop: int
    aliases: tuple[str, ...] = ()

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)


@dataclass
class KindGroup:
    index: int
    junction: int
    kind: str
    inner: list[PortRef]
    outer: list[str]
    provider: PortRef | None = None


@dataclass
class Evaluation:
    """Everything computed by one sweep through the plan."""

    efforts: dict[PortRef, np.ndarray]
    flows: dict[PortRef, np.ndarray]
    boundary: dict[PortRef, BoundaryValue]
    derivative: np.ndarray
    consistency: float

    def boundary_power(self, grid: Grid1D) -> float:
        return float(sum(b.power(grid) for b in self.boundary.values()))


@dataclass(frozen=True)
class Diagnostics:
    t: float
    E: float
    S: float
    N: float
    H: float
    Q_residual: float | None
    boundary_power: float


class CompositeSystem:
    """A bound, flat model on a grid."""

    def __init__(self, pattern: Pattern, components: Mapping[str, Component], grid: Grid1D,
                 env: Environment):
        self.pattern = pattern
        self.components = dict(components)
        self.grid = grid
        self.env = env
        self.layout: list[LayoutEntry] = []
        self.groups: list[KindGroup] = []
        self.group_of: dict[PortRef, int] = {}
        self.state_of: dict[PortRef, int] = {}  # port -> layout index
        self.storage_boxes: list[str] = []
        self.effort_plan: list[str] = []
        self.flow_plan: list[str] = []
        self.structural: list[str] = [k for k, c in self.components.items() if c.structural_only]
        self.owner_ports: list[PortRef] = []
        self.secondary_storage: list[tuple[PortRef, int]] = []
        self._alias: dict[str, int] = {}
        self.size = 0

    # -- state access -------------------------------------------------------

    def entry(self, name: str) -> LayoutEntry:
        try:
            return self.layout[self._alias[name]]
        except KeyError:
            raise KeyError(f"no stored field named {name!r}; known: "
                           f"{', '.join(sorted(self._alias))}") from None

    def view(self, x: np.ndarray, name: str) -> np.ndarray:
        return x[self.entry(name).slice]

    def unpack(self, x: np.ndarray) -> dict[str, np.ndarray]:
        return {e.name: x[e.slice] for e in self.layout}

    def pack(self, fields: Mapping[str, np.ndarray]) -> np.ndarray:
        x = np.zeros(self.size)
        done = set()
        for name, val in fields.items():
            e = self.entry(name)
            if e.name in done:
                raise BindError(f"field {e.name} initialised twice (via {name})")
            val = np.asarray(val, dtype=float)
            if val.shape == ():
                val = np.full(e.stop - e.start, float(val))
            if val.shape != (e.stop - e.start,):
                raise BindError(f"field {name} needs {e.stop - e.start} values, got {val.shape}")
            x[e.slice] = val
            done.add(e.name)
        missing = [e.name for e in self.layout if e.name not in done]
        if missing:
            raise BindError(f"no initial value for {', '.join(missing)}")
        return x

    def _port_states(self, box: str, x: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        for port in self.components[box].interface:
            idx = self.state_of.get(PortRef(box, port))
            if idx is not None:
                out[port] = x[self.layout[idx].slice]
        return out

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x: np.ndarray, parts=("reversible", "irreversible"),
                 inputs: Mapping[str, np.ndarray] | None = None) -> Evaluation:
        if self.structural:
            raise CausalityLoop(
                "structural-only components cannot be evaluated: "
                + ", ".join(f"{b} ({self.components[b].id})" for b in self.structural),
                self.structural)
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InadmissibleState("state contains non-finite values")
        grid, env = self.grid, self.env
        geff: list[np.ndarray | None] = [None] * len(self.groups)
        gsum: list[np.ndarray | float] = [0.0] * len(self.groups)
        for g in self.groups:
            for name in g.outer:
                if inputs and name in inputs:
                    gsum[g.index] = gsum[g.index] - np.asarray(inputs[name], dtype=float)
        states = {b: self._port_states(b, x) for b in self.components}
        efforts: dict[PortRef, np.ndarray] = {}

        for box in self.storage_boxes:
            for port, val in self.components[box].efforts(grid, states[box], env).items():
                r = PortRef(box, port)
                efforts[r] = val
                if self.groups[self.group_of[r]].provider == r:
                    geff[self.group_of[r]] = val
        for box in self.effort_plan:
            comp = self.components[box]
            e_in = {p: geff[self.group_of[PortRef(box, p)]] for p in comp.power_ports()
                    if comp.causality[p] != EFFORT_OUT}
            for port, val in comp.compute_efforts(grid, states[box], e_in).items():
                geff[self.group_of[PortRef(box, port)]] = val

        flows: dict[PortRef, np.ndarray] = {}
        boundary: dict[PortRef, BoundaryValue] = {}
        for box in self.flow_plan:
            comp = self.components[box]
            e = {}
            for p in comp.power_ports():
                r = PortRef(box, p)
                e[p] = geff[self.group_of[r]]
                efforts[r] = e[p]
            outs = comp.effort_outputs()
            f_in = {p: -np.broadcast_to(gsum[self.group_of[PortRef(box, p)]],
                                        e[p].shape).astype(float) for p in outs}
            if isinstance(comp, Reversible):
                f, bnd = comp.flows(grid, states[box], e, f_in)
            else:
                f, bnd = comp.flows(grid, states[box], e, env)
            if comp.fill not in parts and not outs:
                f = {p: np.zeros_like(v) for p, v in f.items()}
                bnd = {p: BoundaryValue(b.e, np.zeros(2)) for p, b in bnd.items()}
            for p, v in f.items():
                r = PortRef(box, p)
                flows[r] = v
                gsum[self.group_of[r]] = gsum[self.group_of[r]] + v
            for p, v in f_in.items():
                flows[PortRef(box, p)] = v
            for p, b in bnd.items():
                boundary[PortRef(box, p)] = b

        dx = np.zeros(self.size)
        for r in self.owner_ports:
            g = self.group_of[r]
            f = -np.broadcast_to(gsum[g], dx[self.layout[self.state_of[r]].slice].shape)
            flows[r] = f
            dx[self.layout[self.state_of[r]].slice] = f
        consistency = 0.0
        for r, idx in self.secondary_storage:
            g = self.group_of[r]
            target = dx[self.layout[idx].slice]
            f = -np.broadcast_to(gsum[g], target.shape)
            flows[r] = f
            scale = max(1.0, float(np.max(np.abs(target))) if target.size else 1.0)
            consistency = max(consistency, float(np.max(np.abs(f - target))) / scale)
        return Evaluation(efforts, flows, boundary, dx, consistency)

    def rhs(self, x: np.ndarray, t: float = 0.0,
            parts=("reversible", "irreversible")) -> np.ndarray:
        return self.evaluate(x, parts).derivative

    # -- functionals --------------------------------------------------------

    def _total(self, x, quantity: str) -> float:
        return float(sum(self.grid.dz * np.sum(x[e.slice]) for e in self.layout
                         if e.quantity == quantity and e.placement == "cell"))

    def energy(self, x: np.ndarray) -> float:
        return float(sum(self.components[b].energy(self.grid, self._port_states(b, x))
                         for b in self.storage_boxes))

    def charge_residual(self, x: np.ndarray) -> float | None:
        """max |d_nc d - c (rho - rho_bg)| over all electrostatic couplings."""
        worst = None
        for box, comp in self.components.items():
            if not isinstance(comp, EKCElectrostatic):
                continue
            d_idx = self.state_of.get(PortRef(box, "em.d"))
            m_idx = self.state_of.get(PortRef(box, "f.m"))
            if d_idx is None or m_idx is None:
                continue
            d = x[self.layout[d_idx].slice]
            rho = x[self.layout[m_idx].slice]
            c = comp.params.get("c", 1.0)
            res = self.grid.d_nc(d) - c * (rho - comp.params.get("rho_bg", 0.0))
            worst = max(worst or 0.0, float(np.max(np.abs(res))))
        return worst

    def functionals(self, x: np.ndarray) -> tuple[float, float, float, float | None, float]:
        """(E, S, N, Q_residual, H) with H = E - theta0 S - mu0 N."""
        E = self.energy(x)
        S = self._total(x, "entropy")
        N = self._total(x, "mass")
        H = E - self.env.theta0 * S - self.env.mu0 * N
        return E, S, N, self.charge_residual(x), H

    def exergy_gradient(self, x: np.ndarray) -> np.ndarray:
        """Storage efforts with zero environment, laid out like the state (dE)."""
        out = np.zeros(self.size)
        env0 = Environment(theta0=1.0, mu0=0.0)
        for box in self.storage_boxes:
            comp = self.components[box]
            eff = comp.efforts(self.grid, self._port_states(box, x), env0)
            for port, val in eff.items():
                r = PortRef(box, port)
                if r in self.owner_ports:
                    q = comp.interface[port].quantity.name
                    out[self.layout[self.state_of[r]].slice] = val + (1.0 if q == "entropy" else 0.0)
        # storages that only read a field (e.g. internal energy of mass) add their part
        for r, idx in self.secondary_storage:
            comp = self.components[r.box]
            eff = comp.efforts(self.grid, self._port_states(r.box, x), env0)[r.port]
            q = comp.interface[r.port].quantity.name
            out[self.layout[idx].slice] += eff + (1.0 if q == "entropy" else 0.0)
        return out

    def entropy_gradient(self) -> np.ndarray:
        out = np.zeros(self.size)
        for e in self.layout:
            if e.quantity == "entropy":
                out[e.slice] = 1.0
        return out

    def pairing(self, a: np.ndarray, b: np.ndarray) -> float:
        """<a, b> over the layout with the grid inner products."""
        return float(sum(self.grid.inner(e.placement, a[e.slice], b[e.slice])
                         for e in self.layout))

    def diagnostics(self, x: np.ndarray, t: float = 0.0) -> Diagnostics:
        E, S, N, Q, H = self.functionals(x)
        bp = self.evaluate(x).boundary_power(self.grid)
        return Diagnostics(t, E, S, N, H, Q, bp)


# ---------------------------------------------------------------------------
# binding


def _interface_diff(a, b) -> str:
    da, db = a.as_dict(), b.as_dict()
    parts = []
    for k in sorted(set(da) | set(db)):
        if da.get(k) != db.get(k):
            parts.append(f"{k}: box has {da.get(k)}, component has {db.get(k)}")
    return "; ".join(parts)


def bind(flat: Pattern, bindings: Mapping[str, Component], grid: Grid1D,
         env: Environment | None = None) -> CompositeSystem:
    env = env or Environment()
    flat = require_valid(expand_multiports(flat))
    if not flat.is_flat():
        raise PatternError(f"pattern {flat.name} still has composite boxes; flatten it first")
    boxes = flat.box_map
    for name in boxes:
        if name not in bindings:
            raise UnboundBox(f"box {name} has no component binding")
    for name in bindings:
        if name not in boxes:
            raise UnboundBox(f"binding for {name!r} does not match any box")
    for name, b in boxes.items():
        comp = bindings[name]
        if comp.fill != b.fill:
            raise InterfaceMismatch(f"box {name} is {b.fill} but {comp.id} is {comp.fill}")
        if comp.interface != b.interface:
            raise InterfaceMismatch(f"box {name} and component {comp.id} differ: "
                                    + _interface_diff(b.interface, comp.interface))

    sysm = CompositeSystem(flat, bindings, grid, env)

    # junction list including stubs for unconnected inner ports
    junctions = [list(j.refs) for j in flat.junctions]
    connected = {r for j in junctions for r in j}
    for name, b in flat.boxes:
        for port in b.interface:
            r = PortRef(name, port)
            if r not in connected:
                junctions.append([r])

    def attr(r):
        return flat.attribute(r)

    start = 0
    for ji, refs in enumerate(junctions):
        if any(attr(r).port_class == "boundary" for r in refs):
            continue
        storage = [r for r in refs if not r.is_outer
                   and bindings[r.box].fill == "storage" and attr(r).port_class == "power"]
        by_kind: dict[str, list[PortRef]] = {}
        for r in storage:
            by_kind.setdefault(attr(r).kind, []).append(r)
        for kind, rs in by_kind.items():
            if len(rs) > 1:
                raise DuplicateStateOwner(
                    f"storage ports {', '.join(map(str, rs))} all claim the {kind}-kind "
                    "state of one junction")
        state_idx = None
        if storage:
            owner = min(storage, key=lambda r: (KIND_ORDER[attr(r).kind], r))
            q = attr(owner).quantity
            size = grid.size(q.placement)
            aliases = tuple(str(r) for r in refs)
            entry = LayoutEntry(str(owner), owner, q.name, q.placement, start, start + size,
                                aliases)
            start += size
            state_idx = len(sysm.layout)
            sysm.layout.append(entry)
            sysm.owner_ports.append(owner)
            for r in refs:
                sysm.state_of[r] = state_idx
                sysm._alias[str(r)] = state_idx
            for r in storage:
                if r != owner:
                    sysm.secondary_storage.append((r, state_idx))
        for kind in KINDS:
            members = [r for r in refs if attr(r).port_class == "power" and attr(r).kind == kind]
            if not members:
                continue
            g = KindGroup(len(sysm.groups), ji, kind,
                          [r for r in members if not r.is_outer],
                          [r.port for r in members if r.is_outer])
            providers = [r for r in g.inner
                         if bindings[r.box].causality.get(r.port) == EFFORT_OUT]
            if not providers:
                raise CausalityError(
                    f"no port supplies the {kind}-kind effort at the junction of "
                    f"{', '.join(map(str, members))}")
            if len(providers) > 1:
                raise CausalityError(
                    f"conflicting effort sources {', '.join(map(str, providers))}")
            g.provider = providers[0]
            sysm.groups.append(g)
            for r in g.inner:
                sysm.group_of[r] = g.index
    sysm.size = start

    # state readers must find a stored field
    for name, comp in bindings.items():
        for port in STATE_READS.get(comp.id, ()):
            if port in comp.interface and PortRef(name, port) not in sysm.state_of:
                raise BindError(f"{name}.{port} needs a state but its junction stores none")

    sysm.storage_boxes = sorted(n for n, c in bindings.items() if c.fill == "storage")
    _plan(sysm)
    return sysm


def _plan(sysm: CompositeSystem) -> None:
    comps = sysm.components
    groups = sysm.groups
    if sysm.structural:
        sysm.flow_plan = sorted(n for n, c in comps.items()
                                if c.fill != "storage" and not c.structural_only)
        return

    # effort phase
    eff = graphlib.TopologicalSorter()
    eff_edges: dict[tuple[str, str], str] = {}
    transformers = [n for n, c in comps.items() if c.fill != "storage" and c.effort_outputs()]
    for box in transformers:
        eff.add(box)
        comp = comps[box]
        for p in comp.power_ports():
            if comp.causality[p] == EFFORT_OUT:
                continue
            prov = groups[sysm.group_of[PortRef(box, p)]].provider
            if comps[prov.box].fill != "storage":
                eff.add(box, prov.box)
                eff_edges[(prov.box, box)] = f"{box}.{p} <- {prov}"
    sysm.effort_plan = _order(eff, eff_edges, "effort")

    # flow phase
    flo = graphlib.TopologicalSorter()
    flo_edges: dict[tuple[str, str], str] = {}
    for box, comp in comps.items():
        if comp.fill == "storage":
            continue
        flo.add(box)
        for p in comp.effort_outputs():
            g = groups[sysm.group_of[PortRef(box, p)]]
            for r in g.inner:
                if r.box != box and comps[r.box].fill != "storage":
                    flo.add(box, r.box)
                    flo_edges[(r.box, box)] = f"{box}.{p}.f <- {r}.f"
    sysm.flow_plan = _order(flo, flo_edges, "flow")


def _order(ts: graphlib.TopologicalSorter, edges, phase: str) -> list[str]:
    try:
        return list(ts.static_order())
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        path = []
        for a, b in zip(cycle, cycle[1:]):
            path.append(edges.get((b, a)) or edges.get((a, b)) or f"{a} -> {b}")
        raise CausalityLoop(f"{phase} dependencies form a loop: " + "; ".join(path),
                            path) from None


# ---------------------------------------------------------------------------
# time stepping


def step_rk4(sys: CompositeSystem, x: np.ndarray, dt: float) -> np.ndarray:
    if dt == 0:
        return np.array(x, dtype=float)
    f = sys.rhs
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_midpoint(sys: CompositeSystem, x: np.ndarray, dt: float, tol: float = 1e-14,
                  max_iter: int = 200) -> np.ndarray:
    """Implicit midpoint rule solved by damped fixed-point iteration.

    The iteration stops once successive iterates differ by at most
    ``tol * max(1, |x|_inf)``.  The relaxation factor is halved whenever
    the update grows.
    """
    if dt == 0:
        return np.array(x, dtype=float)
    x = np.asarray(x, dtype=float)
    scale = tol * max(1.0, float(np.max(np.abs(x))))
    y = x + dt * sys.rhs(x)
    omega = 1.0
    prev = math.inf
    for _ in range(max_iter):
        target = x + dt * sys.rhs(0.5 * (x + y))
        delta = target - y
        size = float(np.max(np.abs(delta)))
        if size <= scale:
            return target
        if size > prev:
            omega *= 0.5
            if omega < 1e-6:
                break
        prev = size
        y = y + omega * delta
    raise NonConvergence(f"implicit midpoint did not converge in {max_iter} iterations "
                         f"(last update {prev:.3e}, tolerance {scale:.3e})")


INTEGRATORS: dict[str, Callable] = {"rk4": step_rk4, "midpoint": step_midpoint}


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    diagnostics: list[Diagnostics] = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics], dtype=float)


class RunAborted(InadmissibleState):
    """A run stopped early; carries the trajectory up to the last good state."""

    def __init__(self, message: str, trajectory: Trajectory, t_last: float, cause: Exception):
        super().__init__(message)
        self.trajectory = trajectory
        self.t_last = t_last
        self.cause = cause


def run(sys: CompositeSystem, init: np.ndarray, t_end: float, dt: float,
        integrator: str = "rk4", output_every: int = 1,
        on_output: Callable[[int, float, np.ndarray, Diagnostics], None] | None = None,
        **step_kw) -> Trajectory:
    """Fixed-step integration from ``init`` to ``t_end``.

    States and diagnostics are recorded at t = 0, every ``output_every``
    steps and at the final time.  A step that leaves the admissible set
    (or fails to converge) raises :class:`RunAborted` holding everything
    recorded so far.
    """
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if dt <= 0 and t_end > 0:
        raise ValueError("dt must be positive")
    try:
        step = INTEGRATORS[integrator]
    except KeyError:
        raise ValueError(f"unknown integrator {integrator!r}; use "
                         f"{' or '.join(INTEGRATORS)}") from None
    traj = Trajectory()
    x = np.array(init, dtype=float)
    nsteps = 0 if t_end == 0 else max(1, int(math.ceil(t_end / dt - 1e-9)))

    def record(i, t, x):
        d = sys.diagnostics(x, t)
        traj.times.append(t)
        traj.states.append(x.copy())
        traj.diagnostics.append(d)
        if on_output is not None:
            on_output(len(traj.times) - 1, t, x, d)

    record(0, 0.0, x)
    t = 0.0
    for i in range(1, nsteps + 1):
        h = min(dt, t_end - t) if i == nsteps else dt
        try:
            x_new = step(sys, x, h, **step_kw)
            if not np.all(np.isfinite(x_new)):
                raise InadmissibleState("state became non-finite")
            t_new = t_end if i == nsteps else i * dt
            if i % output_every == 0 or i == nsteps:
                record(i, t_new, x_new)
        except (InadmissibleState, NonConvergence) as exc:
            raise RunAborted(f"run aborted after t = {t:.6g}: {exc}", traj, t, exc) from exc
        x, t = x_new, t_new
    return traj
