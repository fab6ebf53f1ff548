"""Numerical probes of the structural laws.

All probes draw random inputs from a seeded generator and embed the seed
in their report, so every number printed by ``ephs check`` can be
reproduced.  Residuals are normalized by the same expression with
absolute values inserted term by term (e.g. ``sum <|e|, |f|>``), which
keeps the scale meaningful when the signed terms cancel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import RunAborted, Trajectory, run
from .components import Component, EKCElectrostatic, Irreversible, Reversible, Storage
from .eos import Environment
from .grid import Grid1D
from .pattern import PortRef

TINY = 1e-300


@dataclass(frozen=True)
class CheckRow:
    check: str
    target: str
    residual: float
    tolerance: float
    passed: bool
    seed: int | None = None

    def csv(self) -> list[str]:
        return [self.check, self.target, f"{self.residual:.6e}", f"{self.tolerance:.1e}",
                "true" if self.passed else "false"]


@dataclass(frozen=True)
class PowerReport:
    max_residual: float
    trials: int
    seed: int


@dataclass(frozen=True)
class OnsagerReport:
    symmetry: float
    min_quadratic: float
    degeneracy: float
    trials: int
    seed: int


@dataclass(frozen=True)
class TrajectoryReport:
    dE_rel: float
    dN: float
    min_dS_step: float
    max_dH_step: float
    max_Q: float | None
    rows: tuple[CheckRow, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _abs_inner(grid, placement, a, b):
    return grid.inner(placement, np.abs(a), np.abs(b))


def _random_effort(grid: Grid1D, comp: Component, port: str, rng, env: Environment,
                   operating: bool) -> np.ndarray:
    a = comp.interface[port]
    size = grid.size(a.quantity.placement)
    if operating and a.quantity.name == "entropy":
        return rng.uniform(0.5, 2.0, size) * env.theta0 - env.theta0
    return rng.uniform(-1.0, 1.0, size)


def power_balance(comp: Reversible, grid: Grid1D, x, e, f_in) -> tuple[float, float]:
    """(signed total power, absolute scale) of one evaluation."""
    e = dict(e)
    e.update(comp.compute_efforts(grid, x, {k: v for k, v in e.items()}))
    flows, bnd = comp.flows(grid, x, e, f_in)
    flows = dict(flows)
    flows.update(f_in)
    total = scale = 0.0
    for p in comp.power_ports():
        pl = comp.placement(p)
        total += grid.inner(pl, e[p], flows[p])
        scale += _abs_inner(grid, pl, e[p], flows[p])
    for b in bnd.values():
        total += b.power(grid)
        if not grid.periodic:
            scale += float(np.sum(np.abs(b.e * b.f)))
    return total, scale


def check_power_preservation(comp: Reversible, grid: Grid1D, trials: int = 100,
                             seed: int = 0, state=None) -> PowerReport:
    rng = np.random.default_rng(seed)
    env = Environment()
    worst = 0.0
    for _ in range(trials):
        x = state if state is not None else comp.random_state(grid, rng)
        outs = set(comp.effort_outputs())
        e = {p: _random_effort(grid, comp, p, rng, env, False)
             for p in comp.power_ports() if p not in outs}
        f_in = {p: rng.uniform(-1.0, 1.0, grid.size(comp.placement(p))) for p in outs}
        total, scale = power_balance(comp, grid, x, e, f_in)
        worst = max(worst, abs(total) / max(scale, TINY))
    return PowerReport(worst, trials, seed)


def weak_form(comp: Irreversible, grid: Grid1D, x, e_op, a, b, env) -> tuple[float, float]:
    """W(a, b) = <a, M(e_op) b> including boundary pairs, and its abs scale."""
    fb, bb = comp.linear(grid, x, e_op, b, env)
    _, ba = comp.linear(grid, x, e_op, a, env)
    total = scale = 0.0
    for p in comp.power_ports():
        pl = comp.placement(p)
        total += grid.inner(pl, a[p], fb[p])
        scale += _abs_inner(grid, pl, a[p], fb[p])
    for name, side in comp.flux_side.items():
        if side == "f":
            e_, f_ = ba[name].e, bb[name].f
        else:
            e_, f_ = bb[name].e, ba[name].f
        total += grid.boundary_pairing(e_, f_)
        if not grid.periodic:
            scale += float(np.sum(np.abs(e_ * f_)))
    return total, scale


def check_onsager(comp: Irreversible, grid: Grid1D, trials: int = 100, seed: int = 0,
                  state=None, env: Environment | None = None) -> OnsagerReport:
    env = env or Environment()
    rng = np.random.default_rng(seed)
    sym = deg = 0.0
    quad = np.inf
    for _ in range(trials):
        x = state if state is not None else comp.random_state(grid, rng)
        e_op = {p: _random_effort(grid, comp, p, rng, env, True) for p in comp.power_ports()}
        e1 = {p: _random_effort(grid, comp, p, rng, env, False) for p in comp.power_ports()}
        e2 = {p: _random_effort(grid, comp, p, rng, env, False) for p in comp.power_ports()}
        w12, s12 = weak_form(comp, grid, x, e_op, e1, e2, env)
        w21, s21 = weak_form(comp, grid, x, e_op, e2, e1, env)
        sym = max(sym, abs(w12 - w21) / max(s12, s21, TINY))
        wq, sq = weak_form(comp, grid, x, e_op, e_op, e_op, env)
        quad = min(quad, wq / max(sq, TINY))
        phys, _ = comp.linear(grid, x, e_op, e_op, env)
        flows, _ = comp.linear(grid, x, e_op, comp.unshift(e_op, env), env)
        ref = max(max(float(np.max(np.abs(v))) for v in phys.values()), TINY)
        deg = max(deg, max(float(np.max(np.abs(v))) for v in flows.values()) / ref)
    return OnsagerReport(sym, float(quad), deg, trials, seed)


def check_effort_gradients(comp: Storage, grid: Grid1D, h: float = 1e-6, seed: int = 0,
                           state=None, env: Environment | None = None) -> float:
    """Max relative gap between efforts and central differences of the exergy."""
    env = env or Environment(theta0=1.0, mu0=0.25)
    rng = np.random.default_rng(seed)
    x = {k: np.array(v, dtype=float) for k, v in
         (state if state is not None else comp.random_state(grid, rng)).items()}
    eff = comp.efforts(grid, x, env)
    worst = 0.0
    scale = max(max(float(np.max(np.abs(v))) for v in eff.values()), TINY)
    for port, field_ in x.items():
        w = grid.weights(comp.placement(port))
        fd = np.empty_like(field_)
        for j in range(field_.size):
            xp = {k: v.copy() for k, v in x.items()}
            xm = {k: v.copy() for k, v in x.items()}
            xp[port][j] += h
            xm[port][j] -= h
            fd[j] = (comp.exergy(grid, xp, env) - comp.exergy(grid, xm, env)) / (2 * h) / w[j]
        worst = max(worst, float(np.max(np.abs(fd - eff[port]))) / scale)
    return worst


MODEL_CLASSES = ("reversible", "dissipative", "charged")


def check_trajectory(traj: Trajectory, model_class: str | tuple[str, ...] = "reversible",
                     energy_tol: float = 1e-8, step_tol: float = 1e-10,
                     charge_tol: float = 1e-10, mass_tol: float = 1e-12) -> TrajectoryReport:
    """Conservation and monotonicity over a recorded trajectory.

    ``model_class`` is one or several of ``reversible`` (energy
    conserved, entropy constant), ``dissipative`` (entropy steps >= 0 and
    exergy steps <= 0 within ``step_tol`` relative) and ``charged``
    (charge residual bounded).  Mass is always checked.
    """
    classes = (model_class,) if isinstance(model_class, str) else tuple(model_class)
    E, S, N, H = (traj.series(k) for k in ("E", "S", "N", "H"))
    Qs = [d.Q_residual for d in traj.diagnostics if d.Q_residual is not None]
    dE = float(np.max(np.abs(E - E[0])) / max(abs(E[0]), TINY))
    dN = float(np.max(np.abs(N - N[0])))
    dS = np.diff(S) / max(float(np.max(np.abs(S))), TINY) if len(S) > 1 else np.zeros(1)
    dH = np.diff(H) / max(float(np.max(np.abs(H))), TINY) if len(H) > 1 else np.zeros(1)
    min_dS = float(np.min(dS)) if dS.size else 0.0
    max_dH = float(np.max(dH)) if dH.size else 0.0
    max_Q = max(Qs) if Qs else None
    rows = [CheckRow("mass_drift", "trajectory", dN, mass_tol * max(1.0, abs(N[0])),
                     dN <= mass_tol * max(1.0, abs(N[0])))]
    if "reversible" in classes:
        rows.append(CheckRow("energy_drift", "trajectory", dE, energy_tol, dE <= energy_tol))
        sdrift = float(np.max(np.abs(S - S[0]))) / max(abs(S[0]), 1.0)
        rows.append(CheckRow("entropy_drift", "trajectory", sdrift, step_tol,
                             sdrift <= step_tol))
    if "dissipative" in classes:
        rows.append(CheckRow("entropy_monotone", "trajectory", -min_dS, step_tol,
                             min_dS >= -step_tol))
        rows.append(CheckRow("exergy_monotone", "trajectory", max_dH, step_tol,
                             max_dH <= step_tol))
    if "charged" in classes:
        q = max_Q if max_Q is not None else float("inf")
        rows.append(CheckRow("charge_constraint", "trajectory", q, charge_tol, q <= charge_tol))
    return TrajectoryReport(dE, dN, min_dS, max_dH, max_Q, tuple(rows))


# ---------------------------------------------------------------------------
# whole-model suites, as run by ``ephs check``

PROBE_TOL = 1e-12
GRADIENT_TOL = 1e-6


def random_system_state(sys, rng: np.random.Generator) -> np.ndarray:
    """A unit-scale admissible state for an assembled system."""
    x = np.empty(sys.size)
    for e in sys.layout:
        n = e.stop - e.start
        if e.quantity == "mass":
            x[e.start:e.stop] = rng.uniform(0.5, 2.0, n)
        elif e.quantity == "entropy":
            x[e.start:e.stop] = rng.uniform(0.5, 1.5, n)
        else:
            x[e.start:e.stop] = rng.uniform(-1.0, 1.0, n)
    return x


def check_component(target: str, comp: Component, grid: Grid1D, trials: int = 100,
                    seed: int = 0, env: Environment | None = None) -> list[CheckRow]:
    env = env or Environment()
    rows = []
    if comp.structural_only:
        return rows
    if isinstance(comp, Reversible):
        for periodic in (False, True):
            g = Grid1D(grid.L, grid.n, periodic)
            rep = check_power_preservation(comp, g, trials, seed)
            name = "power_periodic" if periodic else "power_bounded"
            rows.append(CheckRow(name, target, rep.max_residual, PROBE_TOL,
                                 rep.max_residual <= PROBE_TOL, seed))
    elif isinstance(comp, Irreversible):
        rep = check_onsager(comp, grid, trials, seed, env=env)
        neg = max(0.0, -rep.min_quadratic)
        rows += [
            CheckRow("onsager_symmetry", target, rep.symmetry, PROBE_TOL,
                     rep.symmetry <= PROBE_TOL, seed),
            CheckRow("onsager_nonnegative", target, neg, PROBE_TOL, neg <= PROBE_TOL, seed),
            CheckRow("degeneracy", target, rep.degeneracy, PROBE_TOL,
                     rep.degeneracy <= PROBE_TOL, seed),
        ]
    elif isinstance(comp, Storage):
        gap = check_effort_gradients(comp, grid, seed=seed, env=env)
        rows.append(CheckRow("effort_gradient", target, gap, GRADIENT_TOL,
                             gap <= GRADIENT_TOL, seed))
    return rows


def charge_degeneracy(sys, trials: int = 100, seed: int = 0) -> float:
    """Worst relative rate of change of the Gauss-law residual, max |d/dt (d_nc d - c rho)|.

    The charge constraint is a Casimir of the reversible structure, so the
    rate vanishes at every state, not only at states obeying the constraint.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for box, comp in sys.components.items():
        if isinstance(comp, EKCElectrostatic):
            d = sys.state_of.get(PortRef(box, "em.d"))
            m = sys.state_of.get(PortRef(box, "f.m"))
            if d is not None and m is not None:
                pairs.append((sys.layout[d].slice, sys.layout[m].slice,
                              comp.params.get("c", 1.0)))
    worst = 0.0
    for _ in range(trials):
        dx = sys.rhs(random_system_state(sys, rng))
        for ds, ms, c in pairs:
            a = sys.grid.d_nc(dx[ds])
            b = c * dx[ms]
            scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), TINY)
            worst = max(worst, float(np.max(np.abs(a - b))) / scale)
    return worst


def model_classes(sys) -> tuple[str, ...]:
    irreversible = any(isinstance(c, Irreversible) for c in sys.components.values())
    classes = ["dissipative" if irreversible else "reversible"]
    if any(isinstance(c, EKCElectrostatic) for c in sys.components.values()):
        classes.append("charged")
    return tuple(classes)


def check_model(sys, init: np.ndarray, dt: float, steps: int = 200, trials: int = 100,
                seed: int = 0, integrator: str = "rk4") -> list[CheckRow]:
    """Component probes for every bound box plus a short trajectory check."""
    rows = []
    for box in sorted(sys.components):
        rows += check_component(box, sys.components[box], sys.grid, trials, seed, sys.env)
    classes = model_classes(sys)
    if "charged" in classes:
        deg = charge_degeneracy(sys, trials, seed)
        rows.append(CheckRow("charge_degeneracy", "model", deg, PROBE_TOL,
                             deg <= PROBE_TOL, seed))
    t_end = steps * dt
    try:
        traj = run(sys, init, t_end, dt, integrator=integrator)
    except RunAborted as exc:
        # an inadmissible state is itself a failed check; keep what was recorded
        traj = exc.trajectory
        rows.append(CheckRow("trajectory_complete", "trajectory", t_end - exc.t_last, 0.0,
                             False))
    rows += list(check_trajectory(traj, classes).rows)
    return rows
