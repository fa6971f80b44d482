import math

import numpy as np
import pytest

import nlc2

SMOOTH = """
[grid]
nx = 32
ny = 32
[params]
M = 10
[scheme]
dt = 0.005
t_end = 0.1
[ic]
type = taylor_green
director_tilt = 0.3
[diagnostics]
sample_stride = 5
"""


def grid(n):
    x = -math.pi + 2 * math.pi * np.arange(n) / n
    return np.meshgrid(x, x)


def test_config_roundtrip_and_errors():
    c = nlc2.parse_config(SMOOTH)
    assert (c.nx, c.ny, c.M) == (32, 32, 10)
    assert math.isinf(c.N)
    assert nlc2.parse_config(c.to_ini()) == c
    with pytest.raises(nlc2.ConfigError, match="theta_floor"):
        nlc2.parse_config(SMOOTH.replace("M = 10", "M = 10\ntheta_floor = 0"))
    assert issubclass(nlc2.ConfigError, nlc2.Error)


def test_spectral_operators():
    X, Y = grid(64)
    f = np.sin(3 * X) * np.cos(2 * Y)
    assert np.max(np.abs(nlc2.derivative(f, 0) - 3 * np.cos(3 * X) * np.cos(2 * Y))) < 1e-12
    assert np.max(np.abs(nlc2.laplacian(f) + 13 * f)) < 1e-11
    u = np.stack([np.sin(X), np.sin(Y)])
    assert np.max(np.abs(nlc2.leray_project(u))) < 1e-13


def test_initial_condition_and_energies():
    c = nlc2.parse_config(SMOOTH)
    s = nlc2.initial_condition(c)
    assert s.u.shape == (2, 32, 32)
    assert s.d.shape == (3, 32, 32)
    e = nlc2.energies(s, c)
    assert e["kinetic"] == pytest.approx(math.pi**2, rel=1e-12)
    assert e["heat"] == pytest.approx(4 * math.pi**2, rel=1e-12)


def test_simulation_conserves_total_energy():
    c = nlc2.parse_config(SMOOTH)
    sim = nlc2.Simulation(c)
    e0 = nlc2.energies(sim.state, c)["total"]
    assert sim.advance(4) == 4
    sim.run()
    assert sim.done
    assert sim.t == pytest.approx(0.1)
    assert abs(nlc2.energies(sim.state, c)["total"] - e0) / e0 < 1e-4


def test_diagnostics_are_deterministic():
    c = nlc2.parse_config(SMOOTH)
    _, a = nlc2.run_diagnostics(c)
    _, b = nlc2.run_diagnostics(c)
    assert a == b
    assert a.splitlines()[0].startswith("t,kinetic")


def test_checkpoint_roundtrip(tmp_path):
    c = nlc2.parse_config(SMOOTH)
    s = nlc2.initial_condition(c)
    path = str(tmp_path / "s.nlc2")
    nlc2.write_checkpoint(s, c, path)
    back, meta = nlc2.read_checkpoint(path)
    assert np.array_equal(back.u, s.u)
    assert np.array_equal(back.theta, s.theta)
    assert meta["M"] == 10
    (tmp_path / "bad.nlc2").write_bytes(b"NLC2")
    with pytest.raises(nlc2.IoError):
        nlc2.read_checkpoint(str(tmp_path / "bad.nlc2"))


def test_horizon_formula():
    assert nlc2.horizon_tau0(2.0, 3.0) == pytest.approx((16 / 3) ** 5, rel=1e-14)
    assert nlc2.horizon_T0(2.0, 0.5) == pytest.approx(0.25)
    s = nlc2.State(64, 64)
    d = s.d
    d[2] = 1.0
    s.d = d
    s.theta = np.ones((64, 64))
    u = s.u
    u[0] = 0.6
    s.u = u
    h = nlc2.horizon_estimate(s, 1.0)
    closed = 1 / (2 * 0.6 * math.sqrt(math.pi))
    assert abs(h["R0"] - closed) < 2 * 2 * math.pi / 64
