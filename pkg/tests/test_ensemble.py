import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import voigt_profile

from zwanzig.dynamics import evolve_oracle
from zwanzig.echo import TWO_PI
from zwanzig.ensemble import (EnsembleSpec, dephasing_factor, ensemble_dynamics, lineshape, sample_member,
                              thermal_dispersion)
from zwanzig.model import Bare, ReservoirSpec, SpecError, build_hamiltonian, level_arrays

BASE = ReservoirSpec(Bare(), C=1.0, N=40)


@given(T1=st.floats(0.01, 50.0), T2=st.floats(0.01, 50.0), eq=st.floats(0.1, 5.0))
def test_coth_law(T1, T2, eq):
    r = thermal_dispersion(1.0, T2, eq) ** 2 / thermal_dispersion(1.0, T1, eq) ** 2
    assert r == pytest.approx(math.tanh(eq / T1) / math.tanh(eq / T2), rel=1e-12)


def test_dispersion_limits():
    assert thermal_dispersion(0.3, 0.0, 1.0) == 0.3
    hot = thermal_dispersion(1.0, 1e4, 1.0)
    assert hot == pytest.approx(math.sqrt(1e4), rel=1e-6)
    with pytest.raises(SpecError):
        thermal_dispersion(1.0, -1.0, 1.0)


def test_spec_validation():
    with pytest.raises(SpecError):
        EnsembleSpec(BASE, M=0)
    with pytest.raises(SpecError):
        EnsembleSpec(BASE, delta0=-0.1)
    with pytest.raises(SpecError):
        EnsembleSpec(BASE, mean_shifts=(0.0,))


def test_zero_dispersion_member_is_base():
    m = sample_member(EnsembleSpec(BASE, delta0=0.0), np.random.default_rng(0))
    assert np.array_equal(build_hamiltonian(m).matrix, build_hamiltonian(BASE).matrix)


def test_sample_mean_converges():
    ens = EnsembleSpec(ReservoirSpec(Bare(), C=1.0, N=5), delta0=0.1, M=10_000, seed=3)
    draws = np.array([level_arrays(sample_member(ens, g))[0] for g in ens.streams()])
    assert np.all(np.abs(draws.mean(axis=0) - np.arange(-5, 6)) < 3 * 0.1 / 100)
    assert np.allclose(draws.std(axis=0), 0.1, rtol=0.05)


def test_streams_reproducible():
    a = EnsembleSpec(BASE, delta0=0.1, seed=11).streams(5)
    b = EnsembleSpec(BASE, delta0=0.1, seed=11).streams(5)
    assert all(np.array_equal(x.normal(size=4), y.normal(size=4)) for x, y in zip(a, b))


def test_resolution_flag():
    assert EnsembleSpec(BASE, delta0=0.05).resolution()["resolved"]
    assert not EnsembleSpec(BASE, delta0=0.4).resolution()["resolved"]


def test_zero_dispersion_equals_single_particle():
    t = np.linspace(0.0, 3 * math.pi, 61)
    r = ensemble_dynamics(EnsembleSpec(BASE, delta0=0.0, M=3), t)
    single = evolve_oracle(build_hamiltonian(BASE), t)
    assert np.allclose(r.population, single.population, atol=1e-14)
    assert np.allclose(r.stderr, 0.0, atol=1e-14)


def test_threads_do_not_change_results():
    t = np.linspace(0.0, 2 * math.pi, 41)
    ens = EnsembleSpec(BASE, delta0=0.05, M=12, seed=5)
    a = ensemble_dynamics(ens, t, threads=1)
    b = ensemble_dynamics(ens, t, threads=4)
    assert np.array_equal(a.population, b.population)
    assert np.array_equal(a.amplitude, b.amplitude)
    with pytest.raises(ValueError):
        ensemble_dynamics(ens, t, M=1)


def test_standard_error_scaling():
    base = ReservoirSpec(Bare(), C=1.0, N=10)
    t = np.array([0.0, TWO_PI + 0.5])
    errs = []
    for M in (100, 1000, 10_000):
        errs.append(ensemble_dynamics(EnsembleSpec(base, delta0=0.1, M=M, seed=1), t).stderr[1])
    assert errs[0] / errs[1] == pytest.approx(math.sqrt(10), rel=0.25)
    assert errs[1] / errs[2] == pytest.approx(math.sqrt(10), rel=0.25)


@pytest.fixture(scope="module")
def dephased():
    t = np.linspace(0.0, 4 * TWO_PI + 3, 801)
    r = ensemble_dynamics(EnsembleSpec(BASE, delta0=0.05, M=400, seed=7), t)
    single = evolve_oracle(build_hamiltonian(BASE), t)
    return t, r, single


def _echo(t, k, *series):
    w = (t > TWO_PI * k - 1) & (t < TWO_PI * k + 3)
    i = np.argmax(np.abs(series[0][w]))
    return [s[w][i] for s in series]


def test_echoes_fade_faster_than_single_particle(dephased):
    t, r, single = dephased
    ratios = [r.population[(t > TWO_PI * k - 1) & (t < TWO_PI * k + 3)].max()
              / single.population[(t > TWO_PI * k - 1) & (t < TWO_PI * k + 3)].max() for k in (1, 2, 3, 4)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.8


@pytest.mark.parametrize("k", [2, 3, 4])
def test_dephasing_estimate(dephased, k):
    # interlacing keeps the mixed levels stiffer than the bare ones, so the
    # measured suppression is weaker than the estimate but of the same form
    t, r, single = dephased
    s, m = _echo(t, k, single.a_s, r.amplitude)
    measured = abs(m) / abs(s)
    assert 0.4 <= math.log(measured) / math.log(dephasing_factor(k, 0.05)) <= 1.1


def test_lineshape_limits():
    eps = np.linspace(-5, 5, 41)
    assert np.allclose(lineshape(0.3, 0.0, eps), 0.3 / math.pi / (eps**2 + 0.09))
    assert np.allclose(lineshape(0.0, 0.4, eps), np.exp(-eps**2 / 0.32) / (0.4 * math.sqrt(2 * math.pi)))
    with pytest.raises(ValueError):
        lineshape(0.0, 0.0, eps)


@given(g=st.floats(0.05, 2.0), d=st.floats(0.05, 2.0))
def test_lineshape_matches_voigt(g, d):
    eps = np.linspace(-6, 6, 25)
    assert np.allclose(lineshape(g, d, eps), voigt_profile(eps, d, g), rtol=1e-6, atol=1e-9)


def test_lineshape_tails():
    eps = np.array([6.0, 8.0, 10.0])
    lor = 1 / math.pi / (eps**2 + 1)
    assert np.allclose(lineshape(1.0, 1.0, eps), lor, rtol=0.1)
