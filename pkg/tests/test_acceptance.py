"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test is named ``test_criterion_NN_<label>``; the conftest prints a
PASS/FAIL line per criterion at the end of the run.  Wall-clock budgets
are asserted as part of each criterion.
"""

import math
import time

import numpy as np
import pytest

from ephs.assembly import run
from ephs.components import make_component
from ephs.dsl import load, parse, serialize
from ephs.eos import Environment
from ephs.errors import DslError
from ephs.grid import Grid1D
from ephs.model import bundled_models, bundled_path, flatten_document, load_model
from ephs.pattern import OUTER, PortRef, isomorphic_up_to_prefix
from ephs.verify import (check_effort_gradients, check_onsager, check_power_preservation,
                         check_trajectory, random_system_state)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f}s > {self.seconds}s"


def crossings(t, y):
    """Times where y changes sign, linearly interpolated."""
    t = np.asarray(t)
    y = np.asarray(y)
    idx = np.nonzero(np.sign(y[1:]) * np.sign(y[:-1]) < 0)[0]
    return t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])


def period_from_crossings(t, y):
    z = crossings(t, y)
    assert len(z) >= 3, "too few zero crossings to measure a period"
    return 2.0 * (z[-1] - z[0]) / (len(z) - 1)


# The flat ideal fluid, written out by hand: five primitive boxes, mass
# stored once and shared by all five, one momentum junction between the
# transformer and the advection box.
FIG1_BOXES = {"ke": "storage", "ie": "storage", "pps": "reversible", "sa": "reversible",
              "adv": "reversible"}
FIG1_JUNCTIONS = {
    frozenset({("ke", "p_s"), ("sa", "p_s"), ("pps", "p_s")}),
    frozenset({("ke", "m"), ("ie", "m"), ("pps", "m"), ("sa", "m"), ("adv", "m")}),
    frozenset({("pps", "p"), ("adv", "p")}),
    frozenset({("sa", "b_k"), (OUTER, "b_k")}),
    frozenset({("adv", "b_m"), (OUTER, "b_m")}),
}


def _short_wiring(p):
    def short(r: PortRef):
        return (r.box.rsplit(".", 1)[-1] if r.box != OUTER else OUTER, r.port)
    return {frozenset(short(r) for r in j) for j in p.junctions}


def test_criterion_01_structural_flattening():
    with Budget(1.0):
        hier = flatten_document(load(bundled_path("ideal_fluid_hier_1d")))
        flat = flatten_document(load(bundled_path("ideal_fluid_1d")))
        assert hier.is_flat()
        assert len(hier.boxes) == 5
        assert {k.rsplit(".", 1)[-1]: b.fill for k, b in hier.boxes} == FIG1_BOXES
        assert _short_wiring(hier) == FIG1_JUNCTIONS
        assert _short_wiring(flat) == FIG1_JUNCTIONS
        assert isomorphic_up_to_prefix(hier, flat)

        nsf = flatten_document(load(bundled_path("nsf_1d")))
        names = sorted(k for k, _ in nsf.boxes)
        assert names == ["if.int.adv", "if.int.ie", "if.kin.ke", "if.kin.pps", "if.kin.sa",
                         "shr", "th", "vol"]


REVERSIBLE = [("pps", {}), ("sa", {}), ("adv", {}), ("adv", {"entropy": True}), ("emc", {}),
              ("ekc.electrostatic", {"c": 10.0, "rho_bg": 1.0})]


def test_criterion_02_power_preservation():
    with Budget(5.0):
        worst = {}
        for cid, params in REVERSIBLE:
            comp = make_component(cid, params)
            for periodic in (False, True):
                rep = check_power_preservation(comp, Grid1D(1.0, 64, periodic), trials=100, seed=0)
                worst[(cid, str(params), periodic)] = rep.max_residual
        bad = {k: v for k, v in worst.items() if not v <= 1e-12}
        assert not bad, bad


IRREVERSIBLE = [("th", {"kappa": 0.7}), ("vol", {"mu_v": 0.3}), ("el", {"kappa": 1.3})]


def test_criterion_03_onsager_suite():
    with Budget(5.0):
        for cid, params in IRREVERSIBLE:
            comp = make_component(cid, params)
            for periodic in (False, True):
                for theta0 in (1.0, 2.5):
                    rep = check_onsager(comp, Grid1D(1.0, 48, periodic), trials=100, seed=1,
                                        env=Environment(theta0=theta0))
                    tag = (cid, periodic, theta0)
                    assert rep.symmetry <= 1e-12, tag
                    assert rep.min_quadratic >= 0.0, tag
                    assert rep.degeneracy <= 1e-12, tag

        # uniform temperature: heat flow identically zero, bit for bit
        g = Grid1D(1.0, 48)
        th = make_component("th", {"kappa": 0.7})
        env = Environment(theta0=1.0)
        flows, _ = th.flows(g, {}, {"f.s": np.full(g.n, 0.37)}, env)
        assert np.all(flows["f.s"] == 0.0)


STORAGE = [("ke", {}), ("ie.barotropic", {"K": 1.3, "gamma": 1.7}),
           ("ie.entropy", {"c_v": 1.2, "gamma": 1.4, "K": 0.8}), ("hc", {"c": 2.0}),
           ("ee", {"eps0": 1.5}), ("me", {"mu0": 0.7})]


def test_criterion_04_gradient_consistency():
    with Budget(5.0):
        for cid, params in STORAGE:
            comp = make_component(cid, params)
            for periodic in (False, True):
                gap = check_effort_gradients(comp, Grid1D(1.0, 24, periodic), h=1e-6, seed=2)
                assert gap <= 1e-6, (cid, periodic, gap)


def ideal_fluid_oracle(rho, v, dz, K, gamma):
    """Hand-written periodic discretization of the ideal barotropic fluid.

    Mass on cells, velocity on nodes (node j sits at the left face of
    cell j).  Momentum balance of the barotropic fluid in Bernoulli form:
        rho' = -D(rho_face v),   v' = -G(v^2/2 averaged to cells + mu(rho)).
    """
    n = rho.size
    rho_face = np.array([(rho[j - 1] + rho[j]) / 2 for j in range(n)])
    flux = rho_face * v
    drho = np.array([-(flux[(i + 1) % n] - flux[i]) / dz for i in range(n)])
    kin = np.array([(v[i] ** 2 + v[(i + 1) % n] ** 2) / 4 for i in range(n)])
    mu = K * gamma / (gamma - 1) * rho ** (gamma - 1)
    bern = kin + mu
    dv = np.array([-(bern[j] - bern[j - 1]) / dz for j in range(n)])
    return drho, dv


def test_criterion_05_oracle_equivalence():
    with Budget(5.0):
        model = load_model(bundled_path("ideal_fluid_1d"))
        sysm = model.system
        ie = sysm.components["ie"]
        K, gamma = ie.params["K"], ie.params["gamma"]
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(100):
            x = random_system_state(sysm, rng)
            dx = sysm.rhs(x)
            rho, v = sysm.view(x, "ke.m"), sysm.view(x, "ke.p_s")
            drho, dv = ideal_fluid_oracle(rho, v, sysm.grid.dz, K, gamma)
            ref = np.concatenate([drho, dv])
            got = np.concatenate([sysm.view(dx, "ke.m"), sysm.view(dx, "ke.p_s")])
            worst = max(worst, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
        assert worst <= 1e-12, worst


def test_criterion_06_conservation_trajectories():
    with Budget(30.0):
        m = load_model(bundled_path("ideal_fluid_1d"), n=128, periodic=True)
        traj = run(m.system, m.initial_state(), 1.0, 1e-3, integrator="rk4", output_every=1)
        N = traj.series("N")
        E = traj.series("E")
        assert np.max(np.abs(N - N[0])) <= 8 * np.finfo(float).eps * abs(N[0])
        assert np.max(np.abs(E - E[0])) / abs(E[0]) <= 1e-8
    with Budget(30.0):
        m = load_model(bundled_path("nsf_1d"), n=128, periodic=True)
        traj = run(m.system, m.initial_state(), 1.0, 1e-3, integrator="rk4", output_every=1)
        assert len(traj.times) == 1001
        S = traj.series("S")
        H = traj.series("H")
        assert np.all(np.diff(S) >= -1e-10 * np.abs(S[:-1]))
        assert np.all(np.diff(H) <= 1e-10 * np.abs(H[:-1]))
        assert check_trajectory(traj, "dissipative").passed


def _maxwell_run(integrator):
    m = load_model(bundled_path("maxwell_1d"), n=256, periodic=True)
    traj = run(m.system, m.initial_state(), 2.5, 1e-3, integrator=integrator, output_every=1)
    probe = 64  # node at z = L/4, the antinode of sin(2 pi z)
    d = np.array([m.system.view(x, "ee.d")[probe] for x in traj.states])
    E = traj.series("E")
    return period_from_crossings(traj.times, d), np.max(np.abs(E - E[0])) / E[0]


def test_criterion_07_maxwell_dispersion():
    with Budget(30.0):
        period, drift = _maxwell_run("rk4")
        assert abs(period - 1.0) <= 0.005, period
        assert drift <= 1e-8, drift
        _, drift_mid = _maxwell_run("midpoint")
        assert drift_mid <= 1e-10, drift_mid


def test_criterion_08_plasma_oscillation():
    with Budget(60.0):
        m = load_model(bundled_path("plasma_1d"), n=256, periodic=True)
        ekc = m.system.components["ekc"]
        ee = m.system.components["ee"]
        c = ekc.params["c"]
        eps = ee.params["eps0"] * ee.params.get("eps_r", 1.0)
        x0 = m.initial_state()
        rho0 = float(np.mean(m.system.view(x0, "fluid.kin.ke.m")))
        perturbation = np.max(np.abs(m.system.view(x0, "fluid.kin.ke.m") - rho0)) / rho0
        # cell-centre samples of the cosine peak just below its amplitude
        assert perturbation == pytest.approx(1e-3, rel=1e-3)
        traj = run(m.system, x0, 2.0, 1e-3, integrator="rk4", output_every=1)
        drho = np.array([m.system.view(x, "fluid.kin.ke.m")[0] - rho0 for x in traj.states])
        omega = 2 * math.pi / period_from_crossings(traj.times, drho)
        omega_p = math.sqrt(c * c * rho0 / eps)
        assert abs(omega - omega_p) / omega_p <= 0.01, (omega, omega_p)
        Q = [d.Q_residual for d in traj.diagnostics]
        assert max(Q) <= 1e-10, max(Q)


def test_criterion_09_dsl_roundtrip_and_fuzz():
    with Budget(60.0):
        sources = {}
        for name, path in sorted(bundled_models().items()):
            doc = load(path)
            text = serialize(doc)
            assert serialize(parse(text)) == text, name
            assert parse(text) == doc, name
            sources[name] = path.read_bytes()

        rng = np.random.default_rng(9)
        seeds = list(sources.values())
        crashes = []
        for i in range(10_000):
            if i % 2 == 0:
                data = rng.integers(0, 256, rng.integers(0, 200), dtype=np.uint8).tobytes()
            else:
                buf = bytearray(seeds[i % len(seeds)])
                for _ in range(int(rng.integers(1, 6))):
                    buf[int(rng.integers(len(buf)))] = int(rng.integers(256))
                data = bytes(buf)
            try:
                parse(data)
            except DslError as exc:
                if exc.line is not None and exc.line < 1:
                    crashes.append((i, "bad line number"))
            except Exception as exc:  # noqa: BLE001 - any other exception is a crash
                crashes.append((i, repr(exc)))
        assert not crashes, crashes[:5]


def test_criterion_10_reversible_irreversible_split():
    with Budget(5.0):
        m = load_model(bundled_path("nsf_1d"))
        s = m.system
        rng = np.random.default_rng(10)
        dS = s.entropy_gradient()
        for _ in range(100):
            x = random_system_state(s, rng)
            rev = s.rhs(x, parts=("reversible",))
            irr = s.rhs(x, parts=("irreversible",))
            np.testing.assert_allclose(rev + irr, s.rhs(x), rtol=0, atol=1e-12)
            assert abs(s.pairing(s.exergy_gradient(x), irr)) <= 1e-10
            assert abs(s.pairing(dS, rev)) <= 1e-10
            assert s.pairing(dS, irr) >= 0.0
