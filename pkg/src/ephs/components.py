"""Primitive components on a :class:`~ephs.grid.Grid1D`.

Each component is an immutable object with a fill class, an interface
and, for every power port, a causality: ``"effort_out"`` ports hand an
effort to their junction and receive a flow (all storage ports, and the
momentum port of ``pps``); ``"effort_in"`` ports read the junction effort
and emit a flow.

Port state values (``x``) and efforts/flows are plain numpy arrays keyed
by port name.  Boundary ports are reported as :class:`BoundaryValue`
pairs of endpoint samples; their power is ``(e f)(L) - (e f)(0)``, and
for every reversible component the bulk power plus this boundary power
vanishes.

The module also exposes the underlying relations as free functions
(``ke_storage``, ``sa_relation``, ...) for direct use and testing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .eos import Environment, IdealGas, Polytropic, check_density, check_temperature
from .errors import (NegativeViscosity, NonPositivePermeability, NonPositivePermittivity,
                     ParameterError, UnknownComponent)
from .grid import Grid1D
from .pattern import Interface, PortAttribute

P = PortAttribute


@dataclass(frozen=True)
class BoundaryValue:
    e: np.ndarray
    f: np.ndarray

    def power(self, grid: Grid1D) -> float:
        return grid.boundary_pairing(self.e, self.f)


# ---------------------------------------------------------------------------
# storage relations


def ke_storage(grid: Grid1D, v, rho):
    """Kinetic energy E = <avg_nc(v^2/2), rho>_cell with its efforts."""
    rho = check_density(rho, "ke")
    v = np.asarray(v, dtype=float)
    spec = grid.avg_nc(0.5 * v * v)
    E = grid.inner_cell(spec, rho)
    return E, grid.avg_cn(rho) * v, spec


def ie_barotropic_storage(grid: Grid1D, rho, eos: Polytropic, mu0: float = 0.0):
    rho = check_density(rho, "ie")
    H = grid.dz * float(np.sum(eos.U(rho) - mu0 * rho))
    return H, eos.mu(rho) - mu0


def ie_entropy_storage(grid: Grid1D, sigma, rho, eos: IdealGas, theta0: float = 1.0,
                       mu0: float = 0.0):
    rho = check_density(rho, "ie")
    sigma = np.asarray(sigma, dtype=float)
    theta = check_temperature(eos.theta(sigma, rho), "ie")
    H = grid.dz * float(np.sum(eos.U(sigma, rho) - theta0 * sigma - mu0 * rho))
    return H, theta - theta0, eos.mu(sigma, rho) - mu0


def ee_storage(grid: Grid1D, d, eps: float):
    if not eps > 0:
        raise NonPositivePermittivity(f"permittivity must be positive, got {eps}")
    d = np.asarray(d, dtype=float)
    return 0.5 * grid.inner_node(d, d) / eps, d / eps


def me_storage(grid: Grid1D, b, mu: float):
    if not mu > 0:
        raise NonPositivePermeability(f"permeability must be positive, got {mu}")
    b = np.asarray(b, dtype=float)
    return 0.5 * grid.inner_cell(b, b) / mu, b / mu


# ---------------------------------------------------------------------------
# reversible relations


def pps_relation(grid: Grid1D, rho, ps_e, p_f):
    """(p_s.e, p.f) -> (p_s.f, p.e) through the node density."""
    rho_n = grid.avg_cn(check_density(rho, "pps"))
    ps_e = np.asarray(ps_e, dtype=float)
    p_f = np.asarray(p_f, dtype=float)
    return -p_f / rho_n, ps_e / rho_n


def sa_relation(grid: Grid1D, ps_e, m_e):
    """Returns (p_s.f, m.f, b_k)."""
    ps_e = np.asarray(ps_e, dtype=float)
    m_e = np.asarray(m_e, dtype=float)
    return (grid.d_cn(m_e), grid.d_nc(ps_e),
            BoundaryValue(grid.boundary_cells(m_e), -grid.restrict_boundary(ps_e)))


def adv_relation(grid: Grid1D, rho, p_e, m_e, sigma=None, s_e=None):
    """Advection of mass (and optionally entropy) by the velocity effort p.e.

    Returns a dict with flows ``p``, ``m`` (and ``s``) and boundary values
    ``b_m`` (and ``b_s``).
    """
    rho_n = grid.avg_cn(check_density(rho, "adv"))
    p_e = np.asarray(p_e, dtype=float)
    m_e = np.asarray(m_e, dtype=float)
    mass_flux = rho_n * p_e
    p_f = rho_n * grid.d_cn(m_e)
    out = {
        "m": grid.d_nc(mass_flux),
        "b_m": BoundaryValue(grid.boundary_cells(m_e), -grid.restrict_boundary(mass_flux)),
    }
    if sigma is not None:
        sig_n = grid.avg_cn(np.asarray(sigma, dtype=float))
        s_e = np.asarray(s_e, dtype=float)
        s_flux = sig_n * p_e
        p_f = p_f + sig_n * grid.d_cn(s_e)
        out["s"] = grid.d_nc(s_flux)
        out["b_s"] = BoundaryValue(grid.boundary_cells(s_e), -grid.restrict_boundary(s_flux))
    out["p"] = p_f
    return out


def emc_relation(grid: Grid1D, d_e, b_e):
    """Returns (d.f, b.f, b_em); the composite gives d' = d_cn h, b' = d_nc e."""
    d_e = np.asarray(d_e, dtype=float)
    b_e = np.asarray(b_e, dtype=float)
    return (-grid.d_cn(b_e), -grid.d_nc(d_e),
            BoundaryValue(grid.boundary_cells(b_e), grid.restrict_boundary(d_e)))


def ekc_electrostatic_relation(grid: Grid1D, c: float, rho, p_e, d_e):
    """Returns (f.p.f, em.d.f): electric force and convection current."""
    rho_n = grid.avg_cn(check_density(rho, "ekc"))
    q = c * rho_n
    return -q * np.asarray(d_e, dtype=float), q * np.asarray(p_e, dtype=float)


# ---------------------------------------------------------------------------
# irreversible relations, written as operators linear in a direction


def _theta(theta0, s_e, where):
    return check_temperature(theta0 + np.asarray(s_e, dtype=float), where)


def _node_theta_product(grid: Grid1D, theta):
    """theta_left * theta_right at nodes, ghosts copied at the ends."""
    if grid.periodic:
        return theta * np.roll(theta, 1)
    ext = np.concatenate(([theta[0]], theta, [theta[-1]]))
    return ext[1:] * ext[:-1]


def th_operator(grid: Grid1D, theta0: float, kappa: float, s_op, s_dir):
    """Thermal conduction applied to an entropy-effort direction.

    Returns (f.s.f, b_t) with b_t.e taken from ``s_dir``-independent data
    left to the caller; here b_t.f is the flux side.
    """
    theta = _theta(theta0, s_op, "th")
    K = kappa * _node_theta_product(grid, theta) / theta0
    flux = K * grid.d_cn(np.asarray(s_dir, dtype=float) / theta)
    f = -grid.d_nc(flux) / theta
    return f, grid.restrict_boundary(flux) / grid.boundary_cells(theta)


def th_relation(grid: Grid1D, theta0: float, kappa: float, s_e):
    """Returns (f.s.f, b_t) for thermal conduction at effort s_e = theta - theta0."""
    f, bf = th_operator(grid, theta0, kappa, s_e, s_e)
    return f, BoundaryValue(grid.boundary_cells(np.asarray(s_e, dtype=float)), bf)


def vol_blocks(grid: Grid1D, theta0: float, mu_v: float, v_op, s_op):
    """The four blocks (A, B, C, D) of volume viscosity at an operating point.

    ``A(v') + B(s')`` is the momentum flow and ``C(v') + D(s')`` the
    entropy flow; A(v) + B(theta) and C(v) + D(theta) vanish exactly.
    """
    theta = _theta(theta0, s_op, "vol")
    div = grid.d_nc(v_op)
    c = mu_v / theta0
    w = c * (div * div)

    def A(vd):
        return -grid.d_cn(c * (theta * grid.d_nc(vd)))

    def B(sd):
        return grid.d_cn(c * (div * np.asarray(sd, dtype=float)))

    def C(vd):
        return -(c * (div * grid.d_nc(vd)))

    def D(sd):
        return w * (np.asarray(sd, dtype=float) / theta)

    return A, B, C, D


def vol_operator(grid: Grid1D, theta0: float, mu_v: float, v_op, s_op, v_dir, s_dir):
    """Returns (f.p.f, f.s.f, Y) where -Y at the boundary cells is b_vv.e."""
    if mu_v < 0:
        raise NegativeViscosity(f"volume viscosity must be >= 0, got {mu_v}")
    A, B, C, D = vol_blocks(grid, theta0, mu_v, v_op, s_op)
    theta = theta0 + np.asarray(s_op, dtype=float)
    div = grid.d_nc(v_op)
    c = mu_v / theta0
    Y = c * (theta * grid.d_nc(v_dir)) - c * (div * np.asarray(s_dir, dtype=float))
    return A(v_dir) + B(s_dir), C(v_dir) + D(s_dir), Y


def vol_relation(grid: Grid1D, theta0: float, mu_v: float, v, s_e):
    """Returns (f.p.f, f.s.f, b_vv) for volume viscosity."""
    fp, fs, Y = vol_operator(grid, theta0, mu_v, v, s_e, v, s_e)
    return fp, fs, BoundaryValue(-grid.boundary_cells(Y), -grid.restrict_boundary(v))


def _el_halves(grid: Grid1D):
    """Node indices of the left and right half of every cell, and node counts."""
    left = np.arange(grid.n)
    right = (left + 1) % grid.n_nodes if grid.periodic else left + 1
    count = np.full(grid.n_nodes, 2.0)
    if not grid.periodic:
        count[0] = count[-1] = 1.0
    return left, right, count


def el_operator(grid: Grid1D, theta0: float, kappa: float, e_op, s_op, e_dir, s_dir):
    """Electric conduction as a half-cell Onsager block; returns (em.d.f, f.s.f)."""
    if kappa < 0:
        raise ParameterError(f"electric conductivity must be >= 0, got {kappa}")
    theta = _theta(theta0, s_op, "el")
    e_op = np.asarray(e_op, dtype=float)
    e_dir = np.asarray(e_dir, dtype=float)
    s_dir = np.asarray(s_dir, dtype=float)
    c = kappa / theta0
    left, right, count = _el_halves(grid)
    ratio = s_dir / theta
    fd = np.zeros(grid.n_nodes)
    fs = np.zeros(grid.n)
    for idx in (left, right):
        eh = e_op[idx]
        np.add.at(fd, idx, c * (theta * e_dir[idx] - eh * s_dir))
        fs += 0.5 * c * (-(eh * e_dir[idx]) + (eh * eh) * ratio)
    return fd / count, fs


def el_relation(grid: Grid1D, theta0: float, kappa: float, d_e, s_e):
    return el_operator(grid, theta0, kappa, d_e, s_e, d_e, s_e)


# ---------------------------------------------------------------------------
# component objects


EFFORT_OUT = "effort_out"
EFFORT_IN = "effort_in"


@dataclass(frozen=True)
class Component:
    """Base class; subclasses fill in the evaluation methods."""

    id: str
    fill: str
    interface: Interface
    causality: Mapping[str, str]
    params: Mapping[str, Any] = field(default_factory=dict)
    structural_only: bool = False

    def power_ports(self) -> list[str]:
        return [k for k, a in self.interface.items() if a.port_class == "power"]

    def state_ports(self) -> list[str]:
        return [k for k, a in self.interface.items() if a.port_class == "state"]

    def boundary_ports(self) -> list[str]:
        return [k for k, a in self.interface.items() if a.port_class == "boundary"]

    def effort_outputs(self) -> list[str]:
        return [k for k in self.power_ports() if self.causality.get(k) == EFFORT_OUT]

    def placement(self, port: str) -> str:
        return self.interface[port].quantity.placement

    def random_state(self, grid: Grid1D, rng: np.random.Generator) -> dict:
        """A unit-scale admissible state for the component's state-bearing ports."""
        out = {}
        for k, a in self.interface.items():
            if a.port_class == "boundary":
                continue
            out[k] = _random_field(grid, a, rng)
        return out


def _random_field(grid: Grid1D, a: PortAttribute, rng) -> np.ndarray:
    size = grid.size(a.quantity.placement)
    if a.quantity.name == "mass":
        return rng.uniform(0.5, 2.0, size)
    if a.quantity.name == "entropy":
        return rng.uniform(0.5, 1.5, size)
    return rng.uniform(-1.0, 1.0, size)


class Storage(Component):
    def energy(self, grid: Grid1D, x) -> float:
        return self.exergy(grid, x, Environment(theta0=1.0, mu0=0.0), shifted=False)

    def exergy(self, grid: Grid1D, x, env: Environment, shifted: bool = True) -> float:
        raise NotImplementedError

    def efforts(self, grid: Grid1D, x, env: Environment) -> dict:
        raise NotImplementedError


class Reversible(Component):
    def compute_efforts(self, grid: Grid1D, x, e_in) -> dict:
        return {}

    def flows(self, grid: Grid1D, x, e, f_in) -> tuple[dict, dict]:
        """Return (flows by power port, BoundaryValue by boundary port)."""
        raise NotImplementedError


class Irreversible(Component):
    flux_side: Mapping[str, str] = {}

    def linear(self, grid: Grid1D, x, e_op, e_dir, env: Environment) -> tuple[dict, dict]:
        """Flows of M(e_op) applied to e_dir, plus boundary values.

        Both entries of each boundary value are linear in ``e_dir``.
        :attr:`flux_side` names the entry carrying the boundary flux; the
        weak form pairs that entry of one direction with the other entry
        of a second direction.
        """
        raise NotImplementedError

    def flows(self, grid: Grid1D, x, e, env: Environment) -> tuple[dict, dict]:
        return self.linear(grid, x, e, e, env)

    def unshift(self, e, env: Environment) -> dict:
        """Efforts with the environment shifts added back (theta, mu)."""
        out = {}
        for k, v in e.items():
            q = self.interface[k].quantity.name
            if q == "entropy":
                out[k] = np.asarray(v) + env.theta0
            elif q == "mass":
                out[k] = np.asarray(v) + env.mu0
            else:
                out[k] = np.asarray(v)
        return out


class Structural(Component):
    """Interface and causality only; assembling it into an RHS is refused."""


# -- storage ----------------------------------------------------------------


class KineticEnergy(Storage):
    def exergy(self, grid, x, env, shifted=True):
        return ke_storage(grid, x["p_s"], x["m"])[0]

    def efforts(self, grid, x, env):
        _, ps, m = ke_storage(grid, x["p_s"], x["m"])
        return {"p_s": ps, "m": m}


class BarotropicInternalEnergy(Storage):
    @property
    def eos(self) -> Polytropic:
        return Polytropic(self.params.get("K", 1.0), self.params.get("gamma", 2.0))

    def exergy(self, grid, x, env, shifted=True):
        return ie_barotropic_storage(grid, x["m"], self.eos, env.mu0 if shifted else 0.0)[0]

    def efforts(self, grid, x, env):
        return {"m": ie_barotropic_storage(grid, x["m"], self.eos, env.mu0)[1]}


class EntropyInternalEnergy(Storage):
    @property
    def eos(self) -> IdealGas:
        p = self.params
        return IdealGas(p.get("c_v", 1.0), p.get("gamma", 1.4), p.get("K", 1.0))

    def exergy(self, grid, x, env, shifted=True):
        t0, m0 = (env.theta0, env.mu0) if shifted else (0.0, 0.0)
        return ie_entropy_storage(grid, x["s"], x["m"], self.eos, t0, m0)[0]

    def efforts(self, grid, x, env):
        _, se, me = ie_entropy_storage(grid, x["s"], x["m"], self.eos, env.theta0, env.mu0)
        return {"s": se, "m": me}

    def temperature(self, x):
        return self.eos.theta(x["s"], x["m"])


class HeatCapacity(Storage):
    """Entropy reservoir with U = c theta_ref exp(sigma / c)."""

    def _parts(self, sigma):
        c = self.params.get("c", 1.0)
        tref = self.params.get("theta_ref", 1.0)
        theta = tref * np.exp(np.asarray(sigma, dtype=float) / c)
        return c * theta, theta

    def exergy(self, grid, x, env, shifted=True):
        U, _ = self._parts(x["s"])
        t0 = env.theta0 if shifted else 0.0
        return grid.dz * float(np.sum(U - t0 * np.asarray(x["s"])))

    def efforts(self, grid, x, env):
        _, theta = self._parts(x["s"])
        return {"s": theta - env.theta0}


class ElectricEnergy(Storage):
    @property
    def eps(self) -> float:
        return self.params.get("eps0", 1.0) * self.params.get("eps_r", 1.0)

    def exergy(self, grid, x, env, shifted=True):
        return ee_storage(grid, x["d"], self.eps)[0]

    def efforts(self, grid, x, env):
        return {"d": ee_storage(grid, x["d"], self.eps)[1]}


class MagneticEnergy(Storage):
    @property
    def mu(self) -> float:
        return self.params.get("mu0", 1.0) * self.params.get("mu_r", 1.0)

    def exergy(self, grid, x, env, shifted=True):
        return me_storage(grid, x["b"], self.mu)[0]

    def efforts(self, grid, x, env):
        return {"b": me_storage(grid, x["b"], self.mu)[1]}


# -- reversible -------------------------------------------------------------


class PPS(Reversible):
    sign = 1.0

    def compute_efforts(self, grid, x, e_in):
        rho_n = grid.avg_cn(check_density(x["m"], "pps"))
        return {"p": e_in["p_s"] / rho_n}

    def flows(self, grid, x, e, f_in):
        ps_f, _ = pps_relation(grid, x["m"], e["p_s"], f_in["p"])
        return {"p_s": self.sign * ps_f}, {}


class SA(Reversible):
    def flows(self, grid, x, e, f_in):
        ps_f, m_f, bk = sa_relation(grid, e["p_s"], e["m"])
        return {"p_s": ps_f, "m": m_f}, {"b_k": bk}


class ADV(Reversible):
    def flows(self, grid, x, e, f_in):
        entropy = "s" in self.interface
        out = adv_relation(grid, x["m"], e["p"], e["m"],
                           x["s"] if entropy else None, e["s"] if entropy else None)
        flows = {k: out[k] for k in ("p", "m", "s") if k in out}
        bnd = {k: out[k] for k in ("b_m", "b_s") if k in out}
        return flows, bnd


class EMC(Reversible):
    def flows(self, grid, x, e, f_in):
        df, bf, bem = emc_relation(grid, e["d"], e["b"])
        return {"d": df, "b": bf}, {"b_em": bem}


class EKCElectrostatic(Reversible):
    def flows(self, grid, x, e, f_in):
        fp, fd = ekc_electrostatic_relation(grid, self.params.get("c", 1.0), x["f.m"],
                                            e["f.p"], e["em.d"])
        return {"f.p": fp, "em.d": fd}, {}


# -- irreversible -----------------------------------------------------------


class TH(Irreversible):
    flux_side = {"b_t": "f"}

    def linear(self, grid, x, e_op, e_dir, env):
        kappa = self.params.get("kappa", 1.0)
        if kappa < 0:
            raise ParameterError(f"thermal conductivity must be >= 0, got {kappa}")
        f, bf = th_operator(grid, env.theta0, kappa, e_op["f.s"], e_dir["f.s"])
        be = grid.boundary_cells(np.asarray(e_dir["f.s"], dtype=float))
        return {"f.s": f}, {"b_t": BoundaryValue(be, bf)}


class VOL(Irreversible):
    flux_side = {"b_vv": "e"}

    def linear(self, grid, x, e_op, e_dir, env):
        fp, fs, Y = vol_operator(grid, env.theta0, self.params.get("mu_v", 1.0),
                                 e_op["f.p"], e_op["f.s"], e_dir["f.p"], e_dir["f.s"])
        bnd = BoundaryValue(-grid.boundary_cells(Y), -grid.restrict_boundary(e_dir["f.p"]))
        return {"f.p": fp, "f.s": fs}, {"b_vv": bnd}


class EL(Irreversible):
    def linear(self, grid, x, e_op, e_dir, env):
        fd, fs = el_operator(grid, env.theta0, self.params.get("kappa", 1.0),
                             e_op["em.d"], e_op["f.s"], e_dir["em.d"], e_dir["f.s"])
        return {"em.d": fd, "f.s": fs}, {}


class ZeroShear(Irreversible):
    """Shear viscosity reduced to one dimension.

    A one-dimensional velocity field has no trace-free strain, so the
    shear stress and its entropy production vanish identically.
    """

    flux_side = {"b_sv": "e"}

    def linear(self, grid, x, e_op, e_dir, env):
        zero_b = BoundaryValue(np.zeros(2), np.zeros(2))
        return ({"f.p": np.zeros(grid.n_nodes), "f.s": np.zeros(grid.n)},
                {"b_sv": zero_b})


# ---------------------------------------------------------------------------
# registry


def _itf(**ports) -> Interface:
    return Interface.of(ports)


def _causal(itf: Interface, out=()):
    return {k: (EFFORT_OUT if k in out else EFFORT_IN)
            for k, a in itf.items() if a.port_class == "power"}


MOM = ("momentum", "node")
SPEC_MOM = ("specific_momentum", "node")
MASS = ("mass", "cell")
ENT = ("entropy", "cell")
DISP = ("electric_displacement", "node")
FLUX = ("magnetic_flux", "cell")


def _storage(cls, cid, itf, params):
    return cls(cid, "storage", itf, _causal(itf, out=itf.names()), dict(params))


def _make_ke(params):
    return _storage(KineticEnergy, "ke",
                    _itf(p_s=P.power("k", *SPEC_MOM), m=P.power("k", *MASS)), params)


def _make_ie_barotropic(params):
    Polytropic(params.get("K", 1.0), params.get("gamma", 2.0))
    return _storage(BarotropicInternalEnergy, "ie.barotropic",
                    _itf(m=P.power("i", *MASS)), params)


def _make_ie_entropy(params):
    IdealGas(params.get("c_v", 1.0), params.get("gamma", 1.4), params.get("K", 1.0))
    return _storage(EntropyInternalEnergy, "ie.entropy",
                    _itf(s=P.power("i", *ENT), m=P.power("i", *MASS)), params)


def _make_hc(params):
    return _storage(HeatCapacity, "hc", _itf(s=P.power("i", *ENT)), params)


def _make_ee(params):
    c = ElectricEnergy("ee", "storage", Interface(), {}, dict(params))
    if not c.eps > 0:
        raise NonPositivePermittivity(f"permittivity must be positive, got {c.eps}")
    return _storage(ElectricEnergy, "ee", _itf(d=P.power("p", *DISP)), params)


def _make_me(params):
    c = MagneticEnergy("me", "storage", Interface(), {}, dict(params))
    if not c.mu > 0:
        raise NonPositivePermeability(f"permeability must be positive, got {c.mu}")
    return _storage(MagneticEnergy, "me", _itf(b=P.power("k", *FLUX)), params)


PPS_INTERFACE = _itf(p_s=P.power("k", *SPEC_MOM), p=P.power("k", *MOM), m=P.state(*MASS))


def _make_pps(params):
    return PPS("pps", "reversible", PPS_INTERFACE, _causal(PPS_INTERFACE, out=("p",)),
               dict(params))


def _make_sa(params):
    itf = _itf(p_s=P.power("k", *SPEC_MOM), m=P.power("k", *MASS),
               b_k=P.boundary("both", "sa", "mass"))
    return SA("sa", "reversible", itf, _causal(itf), dict(params))


def _make_adv(params):
    ports = dict(p=P.power("k", *MOM), m=P.power("i", *MASS),
                 b_m=P.boundary("both", "adv_m", "mass"))
    if params.get("entropy", False):
        ports.update(s=P.power("i", *ENT), b_s=P.boundary("both", "adv_s", "entropy"))
    itf = _itf(**ports)
    return ADV("adv", "reversible", itf, _causal(itf), dict(params))


def _make_emc(params):
    itf = _itf(d=P.power("p", *DISP), b=P.power("k", *FLUX),
               b_em=P.boundary("both", "emc", "electric_displacement"))
    return EMC("emc", "reversible", itf, _causal(itf), dict(params))


EKC_ES_INTERFACE = _itf(**{"f.p": P.power("k", *MOM), "em.d": P.power("p", *DISP),
                           "f.m": P.state(*MASS)})


def _make_ekc_es(params):
    return EKCElectrostatic("ekc.electrostatic", "reversible", EKC_ES_INTERFACE,
                            _causal(EKC_ES_INTERFACE), dict(params))


def _make_th(params):
    if params.get("kappa", 1.0) < 0:
        raise ParameterError("thermal conductivity must be >= 0")
    itf = _itf(**{"f.s": P.power("i", *ENT), "b_t": P.boundary("both", "th", "entropy")})
    return TH("th", "irreversible", itf, _causal(itf), dict(params))


VOL_INTERFACE = _itf(**{"f.p": P.power("k", *MOM), "f.s": P.power("i", *ENT),
                        "b_vv": P.boundary("both", "vol", "momentum")})
SHR_INTERFACE = _itf(**{"f.p": P.power("k", *MOM), "f.s": P.power("i", *ENT),
                        "b_sv": P.boundary("both", "shr", "momentum")})


def _make_vol(params):
    if params.get("mu_v", 1.0) < 0:
        raise NegativeViscosity("volume viscosity must be >= 0")
    return VOL("vol", "irreversible", VOL_INTERFACE, _causal(VOL_INTERFACE), dict(params))


def _make_el(params):
    if params.get("kappa", 1.0) < 0:
        raise ParameterError("electric conductivity must be >= 0")
    itf = _itf(**{"em.d": P.power("p", *DISP), "f.s": P.power("i", *ENT)})
    return EL("el", "irreversible", itf, _causal(itf), dict(params))


def _make_shr_1d(params):
    return ZeroShear("shr.1d", "irreversible", SHR_INTERFACE, _causal(SHR_INTERFACE),
                     dict(params))


def _structural(cid, fill, itf):
    def make(params):
        return Structural(cid, fill, itf, _causal(itf), dict(params), structural_only=True)
    return make


REGISTRY: dict[str, Callable[[Mapping[str, Any]], Component]] = {
    "ke": _make_ke,
    "ie.barotropic": _make_ie_barotropic,
    "ie.entropy": _make_ie_entropy,
    "hc": _make_hc,
    "pps": _make_pps,
    "sa": _make_sa,
    "adv": _make_adv,
    "th": _make_th,
    "vol": _make_vol,
    "ee": _make_ee,
    "me": _make_me,
    "emc": _make_emc,
    "el": _make_el,
    "ekc.electrostatic": _make_ekc_es,
    "shr.1d": _make_shr_1d,
    "shr": _structural("shr", "irreversible", SHR_INTERFACE),
    "ekc": _structural("ekc", "reversible", _itf(**{
        "f.p": P.power("k", *MOM), "em.d": P.power("p", *DISP),
        "f.m": P.state(*MASS), "em.b": P.state(*FLUX)})),
    "kec": _structural("kec", "reversible", _itf(**{
        "f.p": P.power("k", *MOM), "em.d": P.power("p", *DISP), "em.b": P.state(*FLUX)})),
    "res": _structural("res", "irreversible", _itf(**{
        "em.d": P.power("p", *DISP), "f.s": P.power("i", *ENT),
        "b_r": P.boundary("both", "res", "electric_displacement")})),
}


def register(cid: str, factory: Callable[[Mapping[str, Any]], Component]) -> None:
    """Add (or replace) a component factory under ``cid``."""
    REGISTRY[cid] = factory


def make_component(cid: str, params: Mapping[str, Any] | None = None) -> Component:
    try:
        factory = REGISTRY[cid]
    except KeyError:
        raise UnknownComponent(f"no component registered as {cid!r}; known: "
                               f"{', '.join(sorted(REGISTRY))}") from None
    return factory(dict(params or {}))
