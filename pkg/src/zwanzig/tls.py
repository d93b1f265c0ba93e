"""Two-level system coupled to two identical ladders.

States ``L`` and ``R`` (splitting ``2 Delta``) each talk to their own bare
ladder. The even and odd combinations decouple into two bare models whose
initial-state energies are ``+Delta`` and ``-Delta``; everything below is
built on that split. The system starts in ``L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AmplitudeSeries, evolve_fourier, evolve_oracle
from .echo import TWO_PI, partial_amplitude_bare
from .kernels import bessel_j
from .model import Bare, ReservoirSpec, SpecError, default_truncation
from .spectrum import SpectrumSolution, solve_spectrum


@dataclass(frozen=True)
class TlsSpec:
    """Two-level system parameters.

    Parameters
    ----------
    Delta : float
        Half-splitting of the isolated pair.
    C : float
        Coupling of each state to its ladder.
    gamma0 : float
        Width of ``L`` and ``R``.
    gamma : float
        Width of every ladder level.
    N : int, optional
        Half-size of each ladder.
    """

    Delta: float = 0.0
    C: float = 1.0
    gamma0: float = 0.0
    gamma: float = 0.0
    N: int | None = None

    def __post_init__(self):
        if self.N is None:
            object.__setattr__(self, "N", default_truncation(self.C))
        if self.N < 0 or self.gamma0 < 0 or self.gamma < 0 or self.Delta < 0:
            raise SpecError("Delta, widths and N must be non-negative")

    @property
    def Gamma(self) -> float:
        return math.pi * self.C**2

    def parity_spec(self, parity: int) -> ReservoirSpec:
        """Bare model of the even (``+1``) or odd (``-1``) combination."""
        return ReservoirSpec(Bare(), self.C, self.N, self.gamma, self.gamma0, parity * self.Delta)

    @property
    def dim(self) -> int:
        return 2 * (2 * self.N + 2)


def tls_hamiltonian(spec: TlsSpec) -> np.ndarray:
    """Matrix in the basis ``[L, R, L_{-N..N}, R_{-N..N}]``."""
    M = 2 * spec.N + 1
    herm = spec.gamma0 == 0 and spec.gamma == 0
    H = np.zeros((spec.dim, spec.dim), dtype=float if herm else complex)
    H[0, 0] = H[1, 1] = -1j * spec.gamma0 if not herm else 0.0
    H[0, 1] = H[1, 0] = spec.Delta
    levels = np.arange(-spec.N, spec.N + 1) - (1j * spec.gamma if not herm else 0.0)
    iL = 2 + np.arange(M)
    iR = 2 + M + np.arange(M)
    H[iL, iL] = levels
    H[iR, iR] = levels
    H[0, iL] = H[iL, 0] = spec.C
    H[1, iR] = H[iR, 1] = spec.C
    return H


def tls_spectrum(spec: TlsSpec) -> tuple[SpectrumSolution, SpectrumSolution]:
    """Even and odd spectra (real parts; widths do not move the roots)."""
    return solve_spectrum(spec.parity_spec(+1)), solve_spectrum(spec.parity_spec(-1))


@dataclass
class TlsSeries:
    t: np.ndarray
    a_L: np.ndarray
    a_R: np.ndarray
    reservoir_L: np.ndarray | None
    reservoir_R: np.ndarray | None
    method: str

    def total_population(self) -> np.ndarray:
        if self.reservoir_L is None:
            raise ValueError("series carries no reservoir blocks")
        return (np.abs(self.a_L) ** 2 + np.abs(self.a_R) ** 2
                + np.sum(np.abs(self.reservoir_L) ** 2, axis=1)
                + np.sum(np.abs(self.reservoir_R) ** 2, axis=1))


def _combine(even: AmplitudeSeries, odd: AmplitudeSeries, method: str, full: bool) -> TlsSeries:
    aL = 0.5 * (even.a_s + odd.a_s)
    aR = 0.5 * (even.a_s - odd.a_s)
    rL = rR = None
    if full:
        rL = 0.5 * (even.a_n + odd.a_n)
        rR = 0.5 * (even.a_n - odd.a_n)
    return TlsSeries(even.t, aL, aR, rL, rR, method)


def tls_evolve(spec: TlsSpec, grid, method: str = "oracle", full: bool = False,
               swap: bool = False) -> TlsSeries:
    """Evolve the pair from ``L`` (or from ``R`` with ``swap=True``).

    ``method`` is ``oracle`` (full matrix), ``oracle-ode``, ``parity``
    (two bare oracles combined), ``fourier`` or ``cycle``.
    """
    t = np.asarray(grid, dtype=float)
    if method in ("oracle", "oracle-ode"):
        H = tls_hamiltonian(spec)
        init = np.zeros(spec.dim, dtype=complex)
        init[1 if swap else 0] = 1.0
        s = evolve_oracle(H, t, init, "eigen" if method == "oracle" else "ode", full=True)
        M = 2 * spec.N + 1
        psi = np.column_stack([s.a_s, s.a_n])
        aL, aR = psi[:, 0], psi[:, 1]
        rL, rR = psi[:, 2:2 + M], psi[:, 2 + M:]
        return TlsSeries(t, aL, aR, rL if full else None, rR if full else None, method)
    if method == "parity":
        from .model import build_hamiltonian
        ev = evolve_oracle(build_hamiltonian(spec.parity_spec(+1)), t, full=full)
        od = evolve_oracle(build_hamiltonian(spec.parity_spec(-1)), t, full=full)
        out = _combine(ev, od, "parity", full)
    elif method == "fourier":
        se, so = tls_spectrum(spec)
        out = _combine(evolve_fourier(se, t, full=full), evolve_fourier(so, t, full=full), "fourier", full)
    elif method == "cycle":
        if full:
            raise ValueError("cycle path carries no reservoir blocks")
        aL, aR = tls_cycle_amplitudes(spec, t)
        out = TlsSeries(t, aL.sum(axis=0), aR.sum(axis=0), None, None, "cycle")
    else:
        raise ValueError(f"unknown method {method!r}")
    if swap:
        out.a_L, out.a_R = out.a_R, out.a_L
        out.reservoir_L, out.reservoir_R = out.reservoir_R, out.reservoir_L
    return out


def tls_cycle_amplitudes(spec: TlsSpec, t, k_max: int | None = None):
    """Per-cycle partial amplitudes of ``L`` and ``R``.

    Returns
    -------
    (a_L, a_R)
        Arrays of shape ``(k_max + 1, len(t))``. Cycle ``k`` is the bare
        partial amplitude times ``cos(Delta (t - 2 k pi))`` for ``L`` and
        ``-i sin(Delta (t - 2 k pi))`` for ``R``.
    """
    t = np.asarray(t, dtype=float)
    top = int(t.max() // TWO_PI)
    k_max = top if k_max is None else min(k_max, top)
    even, odd = spec.parity_spec(+1), spec.parity_spec(-1)
    pe = np.array([partial_amplitude_bare(k, t, even) for k in range(k_max + 1)])
    po = np.array([partial_amplitude_bare(k, t, odd) for k in range(k_max + 1)])
    return 0.5 * (pe + po), 0.5 * (pe - po)


@dataclass(frozen=True)
class TlsRates:
    k_L: object
    k_LR: float
    t_m: float
    t_m_printed: float
    ratio: float
    in_regime: bool


def tls_rates(spec: TlsSpec) -> TlsRates:
    """First-cycle rates of the pair.

    ``k_L(t) = Gamma + Delta tan(Delta t)`` is the decrement of ``|a_L|``,
    ``k_LR = Delta**2 / Gamma`` the transfer rate. ``t_m`` is the located
    maximum of ``|a_R|`` in cycle 0 and ``ratio`` is ``|a_R / a_L|`` there.
    """
    G, D = spec.Gamma, spec.Delta

    def k_L(t):
        return G + D * np.tan(D * np.asarray(t, dtype=float))

    if D == 0:
        return TlsRates(k_L, 0.0, 1.0 / G, math.nan, 0.0, True)
    t = np.linspace(0.0, min(TWO_PI, 10.0 / G + math.pi / (2 * D)), 20001)
    aL, aR = tls_cycle_amplitudes(spec, t, k_max=0)
    i = int(np.argmax(np.abs(aR[0])))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    # refine on the closed form |a_R| ~ exp(-G t) sin(D t)
    for _ in range(60):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        f1 = math.exp(-G * m1) * math.sin(D * m1)
        f2 = math.exp(-G * m2) * math.sin(D * m2)
        lo, hi = (m1, hi) if f1 < f2 else (lo, m2)
    tm = 0.5 * (lo + hi)
    ratio = math.tan(D * tm)
    return TlsRates(k_L, D * D / G, tm, math.tan(D / G) / D, ratio, D < G)


def fitted_transfer_rate(spec: TlsSpec, t_eval: float | None = None, series=None, bare=None) -> float:
    """Transfer rate read off the extra decrement of ``|a_L|`` at ``t_m``.

    The decrement of ``|a_L|`` minus that of the uncoupled state (same
    ladder, ``Delta = 0``) is evaluated by centred differences on oracle
    runs, which cancels the truncation error common to both.
    """
    tm = tls_rates(spec).t_m if t_eval is None else t_eval
    h = 1e-4
    t = np.array([0.0, tm - h, tm, tm + h])
    s = series or tls_evolve(spec, t, "parity")
    b = bare or evolve_oracle(_bare_matrix(spec), t)
    d = -(np.log(np.abs(s.a_L[3])) - np.log(np.abs(s.a_L[1]))) / (2 * h)
    d0 = -(np.log(np.abs(b.a_s[3])) - np.log(np.abs(b.a_s[1]))) / (2 * h)
    return float(d - d0)


def _bare_matrix(spec: TlsSpec):
    from .model import build_hamiltonian
    return build_hamiltonian(ReservoirSpec(Bare(), spec.C, spec.N, spec.gamma, spec.gamma0))


@dataclass
class TlsCycleTable:
    k: np.ndarray
    L: np.ndarray
    R: np.ndarray
    total: np.ndarray
    bessel_L: np.ndarray
    bessel_R: np.ndarray
    total_law: np.ndarray


def tls_cycle_averages(spec: TlsSpec, ks, points: int = 4001) -> TlsCycleTable:
    """Per-cycle populations integrated over each window ``[2 k pi, 2 (k+1) pi]``.

    The reference columns are ``exp(-4 k pi gamma) / Gamma`` for the total
    and ``(1 +- J0(4 k alpha (1 + alpha**2)**(-1/3)) / (1 + alpha**2)) / (2 Gamma)``
    with ``alpha = Delta / Gamma`` for the split.
    """
    ks = np.asarray(ks, dtype=int)
    G = spec.Gamma
    aL_avg, aR_avg = [], []
    for k in ks:
        t = np.linspace(TWO_PI * k, TWO_PI * (k + 1), points)
        aL, aR = tls_cycle_amplitudes(spec, t, k_max=int(k))
        pL = np.abs(aL.sum(axis=0)) ** 2
        pR = np.abs(aR.sum(axis=0)) ** 2
        aL_avg.append(np.trapezoid(pL, t))
        aR_avg.append(np.trapezoid(pR, t))
    L, R = np.array(aL_avg), np.array(aR_avg)
    alpha = spec.Delta / G
    j0 = bessel_j(0, 4.0 * ks * alpha * (1 + alpha**2) ** (-1.0 / 3.0))
    bL = (1 + j0 / (1 + alpha**2)) / (2 * G)
    bR = (1 - j0 / (1 + alpha**2)) / (2 * G)
    law = np.exp(-4.0 * math.pi * ks * spec.gamma) / G
    return TlsCycleTable(ks, L, R, L + R, bL, bR, law)
