import numpy as np

from ephs.assembly import run
from ephs.components import make_component
from ephs.grid import Grid1D
from ephs.model import bundled_path, load_model
from ephs.verify import (PROBE_TOL, check_component, check_effort_gradients, check_model,
                         check_onsager, check_power_preservation, check_trajectory,
                         charge_degeneracy, model_classes, random_system_state)


def test_power_probe_is_seed_reproducible():
    g = Grid1D(1.0, 16)
    a = check_power_preservation(make_component("pps"), g, trials=10, seed=7)
    b = check_power_preservation(make_component("pps"), g, trials=10, seed=7)
    assert a == b and a.seed == 7
    assert a.max_residual <= PROBE_TOL


def test_power_probe_catches_a_sign_flip():
    g = Grid1D(1.0, 16)
    rep = check_power_preservation(make_component("pps.flipped"), g, trials=5, seed=0)
    assert rep.max_residual > 1e-3


def test_onsager_report_fields():
    rep = check_onsager(make_component("th", {"kappa": 0.3}), Grid1D(1.0, 16), trials=20, seed=1)
    assert rep.symmetry <= PROBE_TOL
    assert rep.min_quadratic >= 0.0
    assert rep.degeneracy <= PROBE_TOL


def test_effort_gradient_probe():
    gap = check_effort_gradients(make_component("ie.barotropic", {"K": 2.0, "gamma": 1.5}),
                                 Grid1D(1.0, 12), seed=3)
    assert gap <= 1e-6


def test_component_rows_by_kind():
    g = Grid1D(1.0, 12)
    assert [r.check for r in check_component("a", make_component("adv"), g, 5)] == [
        "power_bounded", "power_periodic"]
    assert [r.check for r in check_component("b", make_component("vol", {"mu_v": 0.1}), g, 5)] == [
        "onsager_symmetry", "onsager_nonnegative", "degeneracy"]
    assert [r.check for r in check_component("c", make_component("ke"), g, 5)] == [
        "effort_gradient"]
    assert check_component("d", make_component("shr"), g, 5) == []


def test_model_classes():
    assert model_classes(load_model(bundled_path("ideal_fluid_1d")).system) == ("reversible",)
    assert model_classes(load_model(bundled_path("nsf_1d"), n=16).system) == ("dissipative",)
    assert model_classes(load_model(bundled_path("plasma_1d"), n=16).system) == (
        "reversible", "charged")


def test_random_state_is_admissible(rng):
    s = load_model(bundled_path("nsf_1d"), n=16).system
    x = random_system_state(s, rng)
    assert np.all(s.view(x, "if.kin.ke.m") > 0)
    assert np.isfinite(s.rhs(x)).all()


def test_charge_degeneracy_holds_off_constraint():
    s = load_model(bundled_path("plasma_1d"), n=32).system
    assert charge_degeneracy(s, trials=10, seed=2) <= PROBE_TOL


def test_check_trajectory_flags_energy_growth():
    m = load_model(bundled_path("maxwell_1d"), n=32)
    traj = run(m.system, m.initial_state(), 0.05, 1e-3)
    assert check_trajectory(traj).passed
    bumped = traj.diagnostics[-1].__class__(**{**traj.diagnostics[-1].__dict__,
                                               "E": traj.diagnostics[-1].E * 1.01})
    traj.diagnostics[-1] = bumped
    rep = check_trajectory(traj)
    assert not rep.passed
    assert [r.check for r in rep.rows if not r.passed] == ["energy_drift"]


def test_check_model_ideal_fluid_passes():
    m = load_model(bundled_path("ideal_fluid_1d"), n=32)
    rows = check_model(m.system, m.initial_state(), 1e-3, steps=20, trials=10)
    assert all(r.passed for r in rows)
    assert [r.target for r in rows if r.target != "trajectory"] == sorted(
        r.target for r in rows if r.target != "trajectory")


def test_check_model_flags_flipped_pps(fixtures):
    from ephs.dsl import load
    from ephs.model import build_model
    m = build_model(load(fixtures / "flipped_pps.ephs"), n=32)
    rows = check_model(m.system, m.initial_state(), 1e-3, steps=20, trials=5)
    failed = {(r.check, r.target) for r in rows if not r.passed}
    assert ("power_bounded", "pps") in failed and ("power_periodic", "pps") in failed
