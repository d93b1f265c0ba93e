import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zwanzig.chain import (BESSEL_MAX_C2, ChainSpec, chain_critical_cycle, chain_hamiltonian, chain_oracle,
                           chain_secular, chain_spectrum, cycle_windows, d_n, echo_period, front_arrival,
                           impurity_amplitude, site_amplitudes, space_time)
from zwanzig.echo import critical_cycle
from zwanzig.model import SpecError


def test_determinant_recurrence():
    # D_N obeys D_N = E D_{N-1} - D_{N-2} with E = 2 cos k
    k = np.linspace(0.1, 3.0, 7)
    E = 2 * np.cos(k)
    for N in range(2, 8):
        assert np.allclose(d_n(N, k), E * d_n(N - 1, k) - d_n(N - 2, k), atol=1e-12)
        H = np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
        assert np.linalg.det(E[2] * np.eye(N) - H) == pytest.approx(d_n(N, k[2]), abs=1e-10)


def test_small_chain_against_dense():
    spec = ChainSpec(N=3, C2=0.5)
    sp = chain_spectrum(spec)
    assert np.allclose(sp.roots, np.linalg.eigvalsh(chain_hamiltonian(spec)), atol=1e-10)


@settings(max_examples=25)
@given(N=st.integers(1, 60), C2=st.floats(0.01, 0.99))
def test_spectrum_against_dense(N, C2):
    spec = ChainSpec(N=N, C2=C2)
    sp = chain_spectrum(spec)
    assert np.allclose(sp.roots, np.linalg.eigvalsh(chain_hamiltonian(spec)), atol=1e-10)
    V = sp.vectors
    assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-10)
    assert sp.weights.sum() == pytest.approx(1.0, abs=1e-12)
    anti = sp.parity == -1
    sym = sp.roots[~anti]
    inside = np.abs(sym) < 2
    assert np.allclose(chain_secular(spec, sym[inside]), 0.0, atol=1e-8)
    assert np.allclose(np.sort(sp.roots[anti]), np.sort(sp.band), atol=1e-12)


def test_decoupled_levels_doubly_degenerate():
    spec = ChainSpec(N=6, C2=0.0)
    r = chain_spectrum(spec).roots
    band = 2 * np.cos(np.pi * np.arange(1, 7) / 7)
    for e in band:
        assert np.sum(np.abs(r - e) < 1e-12) == 2
    assert np.sum(np.abs(r) < 1e-12) >= 1


def test_interaction_width():
    assert ChainSpec(N=49, C2=0.5).Gamma == pytest.approx(50 / math.pi)
    assert math.isinf(ChainSpec(N=49, C2=1.0).Gamma)


def test_spec_validation():
    for kw in ({"N": 0}, {"C2": -0.1}, {"n0": 60}):
        with pytest.raises(SpecError):
            ChainSpec(**kw)


def test_decoupled_impurity_stays():
    s = np.linspace(0.0, 50.0, 101)
    a = impurity_amplitude(ChainSpec(N=10, C2=0.0), s, "oracle").a_s
    assert np.allclose(a, 1.0, atol=1e-13)


def test_fourier_matches_oracle():
    spec = ChainSpec(N=49, C2=0.5)
    s = np.linspace(0.0, 300.0, 1501)
    o = impurity_amplitude(spec, s, "oracle")
    f = impurity_amplitude(spec, s, "fourier")
    assert np.max(np.abs(o.a_s - f.a_s)) < 1e-8


@pytest.mark.parametrize("C2", [0.25, 0.8])
def test_cycle_path_matches_oracle(C2):
    spec = ChainSpec(N=20, C2=C2)
    s = np.linspace(0.0, 3 * spec.period, 241)
    o = impurity_amplitude(spec, s, "oracle")
    c = impurity_amplitude(spec, s, "cycle")
    assert np.max(np.abs(o.a_s - c.a_s)) < 1e-8


def test_echo_period_weak_coupling():
    spec = ChainSpec(N=49, C2=0.1)
    s = np.linspace(0.0, 250.0, 12501)
    p = np.abs(impurity_amplitude(spec, s).a_s) ** 2
    late = s > 40
    revival = s[late][np.argmax(p[late])]
    assert revival == pytest.approx(spec.period, rel=0.15)
    assert echo_period(chain_spectrum(spec)) == pytest.approx(revival, rel=0.05)


def test_bessel_sites_match_oracle():
    spec = ChainSpec(N=49, C2=0.25)
    s = np.linspace(0.0, 120.0, 241)
    sites = [0, 5, 10, 20]
    b = site_amplitudes(spec, s, sites)
    o = chain_oracle(spec, s, sites)
    assert np.max(np.abs(b.a_n - o.a_n)) < 1e-6
    assert np.max(np.abs(impurity_amplitude(spec, s, "bessel").a_s - o.a_s)) < 1e-6


def test_bessel_limited_to_weak_coupling():
    with pytest.raises(ValueError):
        site_amplitudes(ChainSpec(N=10, C2=BESSEL_MAX_C2 + 0.1), [0.0, 1.0], [0])


@settings(max_examples=10)
@given(C2=st.floats(0.0, 0.99), N=st.integers(2, 30))
def test_norm_and_mirror_symmetry(C2, N):
    spec = ChainSpec(N=N, C2=C2)
    s = np.linspace(0.0, 10 * math.pi, 60)
    o = chain_oracle(spec, s)
    assert np.max(np.abs(np.sum(np.abs(o.a_n) ** 2, axis=1) - 1.0)) < 1e-10
    assert np.allclose(o.a_n, o.a_n[:, ::-1], atol=1e-12)


def test_cycle_windows():
    spec = ChainSpec(N=49, C2=0.5)
    assert cycle_windows(spec, 10, 0) == (10.0, 90.0)
    assert cycle_windows(spec, -7, 1) == (107.0, 193.0)


def test_ballistic_fronts():
    spec = ChainSpec(N=49, C2=0.5)
    s = np.linspace(0.0, 60.0, 1201)
    sites = np.arange(5, 21)
    o = chain_oracle(spec, s, sites)
    arr = front_arrival(o, spec)
    assert np.all(np.abs(arr - sites) <= 2)
    assert np.polyfit(sites, arr, 1)[0] == pytest.approx(1.0, abs=0.05)
    assert space_time(o).shape == (sites.size, s.size)


def test_critical_cycle_formula():
    spec = ChainSpec(N=49, C2=0.5)
    assert chain_critical_cycle(spec, detect=False).formula == pytest.approx(50.0)
    assert critical_cycle(spec).value == pytest.approx(50.0)
    assert chain_critical_cycle(ChainSpec(N=49, C2=1e-6), detect=False).formula < 1e-3


def test_detector_reports_ratios():
    res = chain_critical_cycle(ChainSpec(N=49, C2=0.2), k_max=32)
    assert res.detected is not None
    assert res.ratios[res.detected - 1] >= 0.5
    assert np.all(res.ratios[:res.detected - 1] < 0.5)
