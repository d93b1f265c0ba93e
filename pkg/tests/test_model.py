import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zwanzig.model import (Bare, Explicit, HomogeneousDeformation, MixingSublattices, ReservoirSpec,
                           SpecError, Sublattices, build_hamiltonian, default_truncation, level,
                           level_arrays)


def test_bare_level():
    assert level(ReservoirSpec(Bare(), C=1.0, N=10), 3) == (3.0, 1.0, 0.0)


def test_deformation_level_matches_high_precision():
    spec = ReservoirSpec(HomogeneousDeformation(0.15, 0.0, 1), C=1.0, N=10)
    ref = mpmath.sqrt(4 * (1 + mpmath.mpf("0.0225") * 4))
    assert level(spec, 2)[0] == pytest.approx(float(ref), rel=1e-15)
    assert level(spec, -2)[0] == pytest.approx(-float(ref), rel=1e-15)


def test_mixing_level():
    spec = ReservoirSpec(MixingSublattices(3, (0.1, 0.2)), C=1.0, N=10)
    # n = 4 sits on sub-lattice 1 (n = 1*3 + 1)
    assert level(spec, 4)[0] == pytest.approx(4 * 1.1, rel=1e-15)
    assert level(spec, 3)[0] == 3.0


def test_level_out_of_range():
    with pytest.raises(IndexError):
        level(ReservoirSpec(Bare(), N=5), 6)


def test_default_truncation():
    assert ReservoirSpec(Bare(), C=0.1).N == 50
    assert default_truncation(2.0) == math.ceil(40 * math.pi)
    assert ReservoirSpec(Bare(), C=1.0).truncation_ok


@pytest.mark.parametrize("variant", [
    MixingSublattices(3, (0.2, 0.1)),
    MixingSublattices(3, (0.1, 0.5)),
    Sublattices(2, ()),
    HomogeneousDeformation(0.1, 0.0, 2),
])
def test_invalid_variants(variant):
    with pytest.raises(SpecError):
        ReservoirSpec(variant, N=10)


def test_invalid_explicit_and_widths():
    with pytest.raises(SpecError):
        ReservoirSpec(Explicit(((0, 1, 0), (1, 1, 0))))
    with pytest.raises(SpecError):
        ReservoirSpec(Bare(), gamma=-0.1, N=3)


def test_decoupled_matrix():
    H = build_hamiltonian(ReservoirSpec(Bare(), C=0.0, N=1)).matrix
    assert np.array_equal(H, np.diag([0.0, -1.0, 0.0, 1.0]))


def test_arrow_matrix():
    H = build_hamiltonian(ReservoirSpec(Bare(), C=1.0, N=1)).matrix
    expect = np.array([[0, 1, 1, 1], [1, -1, 0, 0], [1, 0, 0, 0], [1, 0, 0, 1]], dtype=float)
    assert np.array_equal(H, expect)


def test_widths_on_diagonal():
    hm = build_hamiltonian(ReservoirSpec(Bare(), C=1.0, N=2, gamma=0.1, gamma_s=0.2))
    assert hm.matrix[0, 0] == -0.2j
    assert np.allclose(np.diag(hm.matrix)[1:], np.arange(-2, 3) - 0.1j)
    assert not hm.hermitian


def test_permutations_reported_not_reordered():
    levels = ((-1.0, 0.5, 0.0), (0.3, 0.5, 0.0), (0.2, 0.5, 0.0))
    hm = build_hamiltonian(ReservoirSpec(Explicit(levels), C=0.5))
    assert hm.permutations == (0,)
    assert list(hm.energies) == [-1.0, 0.3, 0.2]


variants = st.one_of(
    st.just(Bare()),
    st.builds(HomogeneousDeformation, st.floats(0, 0.5), st.floats(0, 0.5), st.sampled_from([1, -1])),
    st.builds(lambda x: Sublattices(2, (x,)), st.floats(-0.45, 0.45)),
    st.builds(lambda d: MixingSublattices(3, (d, 2 * d)), st.floats(0.0, 0.2)),
)


@given(variant=variants, C=st.floats(0.0, 2.0), N=st.integers(0, 30),
       g=st.floats(0.0, 0.5), gs=st.floats(0.0, 0.5))
def test_matrix_reproduces_levels(variant, C, N, g, gs):
    spec = ReservoirSpec(variant, C=C, N=N, gamma=g, gamma_s=gs)
    hm = build_hamiltonian(spec)
    M = hm.matrix
    e, c, w = level_arrays(spec)
    assert np.array_equal(np.diag(M)[1:].real, e)
    assert np.array_equal(-np.diag(M)[1:].imag, w)
    assert np.array_equal(M[0, 1:].real, c) and np.array_equal(M[1:, 0].real, c)
    off = M[1:, 1:] - np.diag(np.diag(M)[1:])
    assert not np.any(off)
    if g == 0 and gs == 0:
        assert np.array_equal(M, M.conj().T)


@given(a=st.floats(0, 0.5), b=st.floats(0, 0.5), sign=st.sampled_from([1, -1]), N=st.integers(1, 60))
def test_deformation_preserves_order(a, b, sign, N):
    e, _, _ = level_arrays(ReservoirSpec(HomogeneousDeformation(a, b, sign), N=N))
    if sign == 1 or a * N < 1e3:
        assert np.all(np.diff(e) > 0)
