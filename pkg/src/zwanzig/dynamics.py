"""Reference time evolution and the residue (Fourier) evolution.

Three independent routes are provided:

* ``evolve_oracle(..., method="eigen")`` propagates with an exact
  eigendecomposition of the Hamiltonian (Hermitian or complex symmetric);
* ``evolve_oracle(..., method="ode")`` integrates ``i da/dt = H a`` with an
  adaptive Runge-Kutta scheme;
* ``evolve_fourier`` sums residues of the secular function.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig

from .model import HamiltonianMatrix
from .spectrum import SpectrumSolution

DEFAULT_SAMPLES_PER_UNIT = 40


@dataclass
class AmplitudeSeries:
    """Complex amplitudes on a time grid.

    Attributes
    ----------
    t : ndarray
        Time grid.
    a_s : ndarray
        Amplitude of the tracked state (initial state, impurity, ...).
    a_n : ndarray or None
        Optional full state, shape ``(len(t), dim - 1)``.
    method : str
        One of ``oracle-eigen``, ``oracle-ode``, ``fourier``, ``cycle-sum``,
        ``bessel``.
    meta : dict
    """

    t: np.ndarray
    a_s: np.ndarray
    a_n: np.ndarray | None = None
    method: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def population(self) -> np.ndarray:
        return np.abs(self.a_s) ** 2

    def total_population(self) -> np.ndarray:
        if self.a_n is None:
            raise ValueError("series carries no reservoir block")
        return self.population + np.sum(np.abs(self.a_n) ** 2, axis=1)


def time_grid(t_max: float, samples_per_unit: float = DEFAULT_SAMPLES_PER_UNIT) -> np.ndarray:
    """Uniform grid ``0 .. t_max`` with the requested density."""
    n = int(round(t_max * samples_per_unit))
    return np.linspace(0.0, t_max, n + 1)


def _check_grid(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing and start at 0")
    return t


def _initial(dim, init):
    if init is None:
        a0 = np.zeros(dim, dtype=complex)
        a0[0] = 1.0
        return a0
    a0 = np.asarray(init, dtype=complex)
    if a0.shape != (dim,):
        raise ValueError(f"initial vector must have length {dim}")
    return a0


def _matrix(H):
    return H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H)


def propagate(H, psi0, times, full: bool = True, track: int = 0) -> np.ndarray:
    """Exact propagation ``exp(-i H t) psi0`` by eigendecomposition.

    Returns ``(len(times), dim)`` when ``full`` else the ``track`` component.
    """
    M = _matrix(H)
    psi0 = np.asarray(psi0, dtype=complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.allclose(M, M.conj().T, rtol=0, atol=0):
        w, V = np.linalg.eigh(M)
        c = V.conj().T @ psi0
        left = V
    else:
        w, V = eig(M)
        c = np.linalg.solve(V, psi0)
        left = V
    phase = np.exp(-1j * np.outer(times, w))
    if full:
        return (phase * c) @ left.T
    return phase @ (c * left[track])


def evolve_oracle(H, grid, init=None, method: str = "eigen", full: bool = False,
                  rtol: float = 1e-10, atol: float = 1e-12) -> AmplitudeSeries:
    """Brute-force evolution of ``i da/dt = H a``.

    Parameters
    ----------
    H : HamiltonianMatrix or ndarray
    grid : array_like
        Strictly increasing times starting at 0.
    init : array_like, optional
        Initial vector; defaults to the first basis state.
    method : {"eigen", "ode"}
    full : bool
        Keep every component (``a_n`` block) instead of only the first.
    """
    t = _check_grid(grid)
    M = _matrix(H)
    a0 = _initial(M.shape[0], init)
    if method == "eigen":
        if full:
            psi = propagate(M, a0, t, full=True)
            return AmplitudeSeries(t, psi[:, 0], psi[:, 1:], "oracle-eigen")
        return AmplitudeSeries(t, propagate(M, a0, t, full=False), None, "oracle-eigen")
    if method == "ode":
        Mc = np.asarray(M, dtype=complex)

        def rhs(_, y):
            return -1j * (Mc @ y)

        sol = solve_ivp(rhs, (0.0, t[-1]), a0, method="DOP853", t_eval=t,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise FloatingPointError(f"ODE integration failed: {sol.message}")
        y = sol.y.T
        return AmplitudeSeries(t, y[:, 0], y[:, 1:] if full else None, "oracle-ode")
    raise ValueError(f"unknown oracle method {method!r}")


def evolve_fourier(spectrum: SpectrumSolution, grid, init=None, full: bool = False) -> AmplitudeSeries:
    """Residue-sum evolution from a solved spectrum.

    With the default initial condition the amplitude is
    ``sum_j w_j exp(-i e_j t)`` where ``w_j`` are residue weights. Other
    initial vectors use eigenvectors rebuilt from the roots. A common width
    shared by the initial state and all levels enters as ``exp(-gamma t)``;
    unequal widths are rejected (use the oracle).
    """
    if spectrum.weights is None or spectrum.weights.size == 0:
        raise ValueError("missing weights")
    t = _check_grid(grid)
    spec = spectrum.spec
    if spec.gamma != spec.gamma_s:
        raise ValueError("residue path supports only a common width; use the oracle")
    damp = np.exp(-spec.gamma * t)
    phase = np.exp(-1j * np.outer(t, spectrum.roots))
    if init is None and not full:
        a = phase @ spectrum.weights
        return AmplitudeSeries(t, a * damp, None, "fourier")
    V = spectrum.eigenvectors()
    a0 = _initial(V.shape[0], init)
    c = V.T @ a0
    if full:
        psi = (phase * c) @ V.T * damp[:, None]
        return AmplitudeSeries(t, psi[:, 0], psi[:, 1:], "fourier")
    return AmplitudeSeries(t, (phase @ (c * V[0])) * damp, None, "fourier")
