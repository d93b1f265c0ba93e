import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zwanzig.model import (Bare, Explicit, HomogeneousDeformation, ReservoirSpec, Sublattices,
                           build_hamiltonian, level_arrays)
from zwanzig.spectrum import (PoleError, SmallDenominatorError, absorption_band,
                              critical_mixing_deformation, mixing_spec, moments, secular_value,
                              solve_spectrum)


def dense_roots(spec):
    return np.linalg.eigvalsh(build_hamiltonian(spec).matrix)


def test_secular_half_integer():
    assert secular_value(ReservoirSpec(Bare(), C=1.0, N=100), 0.5) == pytest.approx(0.5, abs=1e-14)


def test_secular_pole_side():
    spec = ReservoirSpec(Bare(), C=1.0, N=100)
    assert secular_value(spec, 2.0 + 1e-9) < -1e8
    with pytest.raises(PoleError):
        secular_value(spec, 2.0)


def test_secular_toy_direct_sum():
    toy = ReservoirSpec(Explicit(((-1, 0.3, 0), (0, 0.3, 0), (1, 0.3, 0))), C=0.3)
    ref = 0.5 - 0.09 * (1 / 1.5 + 1 / 0.5 + 1 / -0.5)
    assert secular_value(toy, 0.5) == pytest.approx(ref, rel=1e-15)


def test_resummed_matches_truncated_sum():
    spec = ReservoirSpec(Bare(), C=0.7, N=20000)
    eps = np.array([0.3, -0.25, 0.77])
    assert np.allclose(secular_value(spec, eps), secular_value(spec, eps, resummed=False), atol=1e-4)


def test_weak_coupling_limit():
    C = 1e-4
    sol = solve_spectrum(ReservoirSpec(Bare(), C=C, N=50, eps_s=0.5))
    i = np.argmax(sol.weights)
    assert sol.weights[i] == pytest.approx(1.0, abs=10 * C**2)
    assert abs(sol.roots[i] - 0.5) < 10 * C**2


def test_weak_coupling_degenerate_split():
    # the initial state sits on level n = 0 and splits into +-C
    C = 1e-4
    sol = solve_spectrum(ReservoirSpec(Bare(), C=C, N=50))
    top = np.argsort(sol.weights)[-2:]
    assert np.allclose(sol.weights[top], 0.5, atol=1e-6)
    assert np.allclose(np.sort(sol.roots[top]), [-C, C], rtol=1e-3)


def test_bare_against_dense():
    spec = ReservoirSpec(Bare(), C=1.0, N=200)
    sol = solve_spectrum(spec)
    assert np.max(np.abs(sol.roots - dense_roots(spec))) < 1e-10
    assert abs(sol.weights.sum() - 1.0) < 1e-8
    assert np.max(sol.residual) < 1e-12
    assert np.all(sol.weights > 0)


def test_toy_against_dense():
    toy = ReservoirSpec(Explicit(((-1, 0.3, 0), (0, 0.3, 0), (1, 0.3, 0))), C=0.3)
    assert np.allclose(solve_spectrum(toy).roots, dense_roots(toy), atol=1e-10)


def test_eigenvectors_orthonormal():
    sol = solve_spectrum(ReservoirSpec(Bare(), C=1.0, N=60))
    V = sol.eigenvectors()
    assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-10)


mixing_free = st.one_of(
    st.builds(HomogeneousDeformation, st.floats(0, 0.4), st.floats(0, 0.4), st.sampled_from([1, -1])),
    st.builds(lambda x: Sublattices(2, (x,)), st.floats(-0.45, 0.45)),
    st.builds(lambda x, y: Sublattices(3, (x, y)), st.floats(-0.45, -0.05), st.floats(0.0, 0.45)),
)


@settings(max_examples=60)
@given(variant=mixing_free, C=st.floats(0.05, 1.5), N=st.integers(3, 60))
def test_interlacing_and_completeness(variant, C, N):
    spec = ReservoirSpec(variant, C=C, N=N)
    sol = solve_spectrum(spec)
    e, _, _ = level_arrays(spec)
    r = sol.roots
    assert r.size == e.size + 1
    inner = r[1:-1]
    assert np.all((inner > e[:-1]) & (inner < e[1:]))
    assert r[0] < e[0] and r[-1] > e[-1]
    assert abs(sol.weights.sum() - 1.0) < 1e-8
    assert np.allclose(r, dense_roots(spec), atol=1e-10 * max(1.0, np.abs(e).max()))


def test_absorption_peak_and_scaling():
    spec = ReservoirSpec(Bare(), C=1.0, N=100, gamma=0.05)
    band = absorption_band(spec, np.array([0.0]))
    G = math.pi
    n = np.arange(-100, 101)
    ref = G / (G**2 * math.pi**2) * np.sum(0.05 / (n**2 + 0.05**2))
    assert band.rho[0] == pytest.approx(ref, rel=1e-12)
    assert band.resolved
    eps = np.linspace(-30, 30, 6001)
    half = ReservoirSpec(Bare(), C=0.5, N=100, gamma=0.05)
    for s in (spec, half):
        env = absorption_band(s, eps).envelope
        above = eps[env >= env.max() / 2]
        assert (above.max() - above.min()) / 2 == pytest.approx(s.Gamma, abs=0.02)


def test_absorption_merges_when_broad():
    assert not absorption_band(ReservoirSpec(Bare(), C=1.0, N=20, gamma=0.4), [0.0]).resolved
    with pytest.raises(ValueError):
        absorption_band(ReservoirSpec(Bare(), C=1.0, N=20), [0.0])


def test_moments_bare():
    spec = ReservoirSpec(Bare(), C=1.0, N=4000)
    tab = moments(spec, 0, 1)
    assert abs(tab.M[0]) < 1e-12
    # partial sums of 1/k**2 converge as 2/N
    assert tab.M[1] == pytest.approx(math.pi**2 / 3 - 2.0 / 4000, abs=1e-6)


def test_moments_spike_near_resonance():
    # with delta = 0.1 levels 5 and 6 of the mixing ladder coincide
    far = moments(mixing_spec(1.0, 0.05, N=30), 6, 1).M
    near = moments(mixing_spec(1.0, 0.099, N=30), 6, 1).M
    assert abs(near[0]) > 30 * abs(far[0])
    assert near[1] > 1000 * far[1]
    with pytest.raises(SmallDenominatorError):
        moments(mixing_spec(1.0, 0.1, N=30), 6, 1)


def first_crossing(Gamma):
    # sub-lattice 2 of block j overtakes sub-lattice 0 of block j+1 at
    # delta = 1 / (2 (3j + 2)); the outermost pair inside the window wins
    j = int((Gamma - 2) // 3)
    return 1.0 / (2 * (3 * j + 2)) if j >= 0 else None


@pytest.mark.parametrize("Gamma", [2.0, 3.0, 4.0, 5.0, 8.0, 11.0, 14.5])
def test_critical_mixing_matches_first_crossing(Gamma):
    assert critical_mixing_deformation(Gamma) == pytest.approx(first_crossing(Gamma), abs=1e-9)


def test_critical_mixing_none_without_deformation():
    assert critical_mixing_deformation(3.0, delta_max=0.0) is None
    sol = solve_spectrum(mixing_spec(1.0, 0.0, N=30))
    assert sol.method == "secular"
