"""Tight-binding chain with a single impurity site.

Sites run over ``n = -N .. N`` with unit hopping; the impurity sits at
``n0`` (centre by default) with zero energy and is linked to its two
neighbours by ``C``. Amplitudes are reported against the scaled time
``s = 2 J t``, in which the band is traversed at unit speed: a front leaves
the impurity and reaches site ``n`` at ``s = n`` and the echo period is
``2 (N + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .dynamics import AmplitudeSeries, propagate
from .echo import _GL_W, _GL_X, _cycle_coefficient
from .kernels import bessel_j_all
from .model import SpecError

BESSEL_MAX_C2 = 0.5


@dataclass(frozen=True)
class ChainSpec:
    """Chain parameters.

    Parameters
    ----------
    N : int
        Half-length; the chain has ``2N + 1`` sites.
    C2 : float
        Squared impurity coupling in units of the hopping.
    n0 : int
        Impurity position.
    """

    N: int = 49
    C2: float = 0.5
    n0: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise SpecError("N must be >= 1")
        if self.C2 < 0:
            raise SpecError("C2 must be non-negative")
        if abs(self.n0) > self.N:
            raise SpecError("impurity outside the chain")

    @property
    def C(self) -> float:
        return math.sqrt(self.C2)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def Gamma(self) -> float:
        """``C**2 (N + 1) / (pi (1 - C**2))``; infinite at ``C**2 = 1``."""
        if self.C2 >= 1:
            return math.inf
        return self.C2 * (self.N + 1) / (math.pi * (1.0 - self.C2))

    @property
    def period(self) -> float:
        return 2.0 * (self.N + 1)

    def index(self, n: int) -> int:
        if abs(n) > self.N:
            raise IndexError(f"site {n} outside the chain")
        return n + self.N


def chain_hamiltonian(spec: ChainSpec) -> np.ndarray:
    d = 2 * spec.N + 1
    H = np.zeros((d, d))
    i = np.arange(d - 1)
    H[i, i + 1] = H[i + 1, i] = 1.0
    p = spec.index(spec.n0)
    for q in (p - 1, p + 1):
        if 0 <= q < d:
            H[p, q] = H[q, p] = spec.C
    return H


def d_n(N: int, k):
    """``D_N = sin((N+1) k) / sin k`` (determinant of the free ``N``-site block at ``2 cos k``)."""
    k = np.asarray(k, dtype=float)
    return np.sin((N + 1) * k) / np.sin(k)


@dataclass
class ChainSpectrum:
    """Eigenpairs of the centred chain.

    Attributes
    ----------
    band : ndarray
        Free half-chain levels ``2 cos(pi j / (N + 1))``, ``j = 1 .. N``.
    couplings : ndarray
        Couplings of the symmetric band states to the impurity.
    roots : ndarray
        All ``2N + 1`` eigenvalues in ascending order.
    parity : ndarray
        ``+1`` for symmetric, ``-1`` for antisymmetric states.
    k : ndarray
        Band angle of every root (``roots = 2 cos k``).
    vectors : ndarray
        Eigenvectors as columns, rows indexed by site ``-N .. N``.
    """

    spec: ChainSpec
    band: np.ndarray
    couplings: np.ndarray
    roots: np.ndarray
    parity: np.ndarray
    k: np.ndarray
    vectors: np.ndarray
    method: str

    @property
    def weights(self) -> np.ndarray:
        """Impurity weights ``|<n0|j>|**2``."""
        return self.vectors[self.spec.index(self.spec.n0)] ** 2

    @property
    def Gamma(self) -> float:
        return self.spec.Gamma


def _symmetric_roots(N: int, C2: float) -> np.ndarray:
    """Roots in ``k`` of ``2 cos k sin((N+1) k) - 2 C**2 sin(N k) = 0``.

    One root lies in every interval ``(pi j/(N+1), pi (j+1)/(N+1))`` for
    ``j = 0 .. N``; with ``C = 0`` they collapse onto the band levels.
    """
    def g(k):
        return 2.0 * math.cos(k) * math.sin((N + 1) * k) - 2.0 * C2 * math.sin(N * k)

    grid = np.pi * np.arange(N + 2) / (N + 1)
    # k = 0 and k = pi are spurious zeros of g; step just inside the band
    tiny = 1e-9 * grid[1]
    grid[0] += tiny
    grid[-1] -= tiny
    out = np.empty(N + 1)
    for j in range(N + 1):
        a, b = grid[j], grid[j + 1]
        ga, gb = g(a), g(b)
        if ga * gb > 0:
            raise ArithmeticError(f"root {j} not bracketed (state outside the band)")
        out[j] = brentq(g, a, b, xtol=1e-15, maxiter=200)
    return out


def _symmetric_vectors(N: int, C2: float, k: np.ndarray) -> np.ndarray:
    m = np.arange(1, N + 1)
    s_top = np.sin((N + 1) * k)
    sum_sq = 0.5 * N - np.sin(N * k) * np.cos((N + 1) * k) / (2.0 * np.sin(k))
    v0 = 1.0 / np.sqrt(1.0 + 2.0 * C2 * sum_sq / s_top**2)
    arms = math.sqrt(C2) * v0[None, :] * np.sin((N + 1 - m)[:, None] * k[None, :]) / s_top[None, :]
    V = np.empty((2 * N + 1, k.size))
    V[N] = v0
    V[N + m] = arms
    V[N - m] = arms
    return V


def chain_spectrum(spec: ChainSpec, dense: bool = False) -> ChainSpectrum:
    """Eigenpairs from the band-angle parameterisation.

    Symmetric roots solve ``eps D_N - 2 C**2 D_{N-1} = 0`` by bracketed
    root finding; antisymmetric roots are the bare band levels. An
    off-centre impurity, ``C = 0`` or ``dense=True`` use dense
    diagonalisation instead.
    """
    N = spec.N
    j = np.arange(1, N + 1)
    band = 2.0 * np.cos(np.pi * j / (N + 1))
    couplings = 2.0 * spec.C / math.sqrt(N + 1) * np.sin(np.pi * j / (N + 1))
    if dense or spec.n0 != 0 or spec.C2 == 0:
        w, V = np.linalg.eigh(chain_hamiltonian(spec))
        p = spec.index(spec.n0)
        par = np.where(np.abs(V[p]) > 1e-12, 1, -1)
        kk = np.arccos(np.clip(w / 2.0, -1.0, 1.0))
        return ChainSpectrum(spec, band, couplings, w, par, kk, V, "dense")
    try:
        ks = _symmetric_roots(N, spec.C2)
    except ArithmeticError:
        return chain_spectrum(spec, dense=True)
    Vs = _symmetric_vectors(N, spec.C2, ks)
    ka = np.pi * j / (N + 1)
    Va = np.zeros((2 * N + 1, N))
    m = np.arange(1, N + 1)
    arm = np.sin(np.outer(m, ka)) / math.sqrt(N + 1)
    Va[N + m] = arm
    Va[N - m] = -arm
    k_all = np.concatenate([ks, ka])
    e_all = 2.0 * np.cos(k_all)
    par = np.concatenate([np.ones(N + 1, int), -np.ones(N, int)])
    V = np.concatenate([Vs, Va], axis=1)
    order = np.argsort(e_all, kind="stable")
    return ChainSpectrum(spec, band, couplings, e_all[order], par[order], k_all[order], V[:, order], "secular")


def chain_secular(spec: ChainSpec, eps):
    """``eps - 2 C**2 D_{N-1}(eps) / D_N(eps)`` inside the band."""
    k = np.arccos(np.asarray(eps, dtype=float) / 2.0)
    N = spec.N
    return 2.0 * np.cos(k) - 2.0 * spec.C2 * np.sin(N * k) / np.sin((N + 1) * k)


# --------------------------------------------------------------------------
# dynamics


def _check_grid(s):
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(s < 0):
        raise ValueError("grid must be a 1-d array of non-negative times")
    return s


def chain_oracle(spec: ChainSpec, grid, sites=None) -> AmplitudeSeries:
    """Dense evolution from the impurity; ``a_n`` holds the requested sites."""
    s = _check_grid(grid)
    H = chain_hamiltonian(spec)
    psi0 = np.zeros(H.shape[0])
    p = spec.index(spec.n0)
    psi0[p] = 1.0
    psi = propagate(H, psi0, s / 2.0, full=True)
    cols = spec.sites if sites is None else np.asarray(sites)
    idx = [spec.index(int(n)) for n in cols]
    return AmplitudeSeries(s, psi[:, p], psi[:, idx], "oracle-eigen", {"sites": cols.tolist(), "time": "s=2Jt"})


def impurity_amplitude(spec: ChainSpec, grid, method: str = "fourier", k_max: int | None = None) -> AmplitudeSeries:
    """Impurity amplitude on the scaled time grid ``s``.

    ``method`` is ``oracle``, ``fourier``, ``cycle`` or ``bessel``.
    """
    s = _check_grid(grid)
    if method == "oracle":
        o = chain_oracle(spec, s, sites=[spec.n0])
        return AmplitudeSeries(s, o.a_s, None, "oracle-eigen")
    if method == "fourier":
        sp = chain_spectrum(spec)
        a = np.exp(-0.5j * np.outer(s, sp.roots)) @ sp.weights
        return AmplitudeSeries(s, a, None, "fourier")
    if method == "cycle":
        top = int(s.max() // spec.period)
        k_max = top if k_max is None else min(k_max, top)
        parts = np.array([chain_partial_amplitude(spec, k, s) for k in range(k_max + 1)])
        return AmplitudeSeries(s, parts.sum(axis=0), None, "cycle-sum", {"k_max": k_max})
    if method == "bessel":
        b = site_amplitudes(spec, s, [spec.n0])
        return AmplitudeSeries(s, b.a_n[:, 0], None, "bessel")
    raise ValueError(f"unknown method {method!r}")


def chain_partial_amplitude(spec: ChainSpec, k: int, s, panels_per_unit: float = 4.0) -> np.ndarray:
    """Cycle-``k`` contribution to the impurity amplitude of a centred chain.

    With ``eps = 2 sin(alpha lam)``, ``alpha = pi / (N + 1)``, the secular
    function takes the form ``P (Q - cot(pi mu))`` with
    ``P = 2 C**2 cos(alpha lam)``, ``Q = (1 - C**2) tan(alpha lam) / C**2``
    and ``mu = lam`` (odd ``N``) or ``lam + 1/2`` (even ``N``). Cycle ``k``
    is the band integral of ``-Im[c_k(Q) exp(2 pi i k mu) / P] / pi``
    against ``exp(-i eps s / 2)``, evaluated in ``lam``.
    """
    if spec.n0 != 0:
        raise ValueError("cycle form needs a centred impurity")
    if not 0 < spec.C2 < 1:
        raise ValueError("cycle form needs 0 < C**2 < 1")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    N, C2 = spec.N, spec.C2
    alpha = math.pi / (N + 1)
    half = 0.5 * (N + 1)
    shift = 0.0 if N % 2 else 0.5
    n_pan = int(math.ceil((N + 1) * panels_per_unit * (k + 1)))
    edges = np.linspace(-half, half, n_pan + 1)
    a, b = edges[:-1], edges[1:]
    h = 0.5 * (b - a)
    lam = ((0.5 * (a + b))[:, None] + h[:, None] * _GL_X).ravel()
    w = (h[:, None] * _GL_W).ravel()
    ang = alpha * lam
    Q = (1.0 - C2) * np.tan(ang) / C2
    P = 2.0 * C2 * np.cos(ang)
    # c_k expands 1/(cot - Q); the retarded Green function carries the opposite sign
    G = -_cycle_coefficient(k, Q) * np.exp(2j * math.pi * k * (lam + shift)) / P
    dens = -G.imag / math.pi * 2.0 * alpha * np.cos(ang)
    eps = 2.0 * np.sin(ang)
    out = np.exp(-0.5j * np.outer(s, eps)) @ (w * dens)
    return out


def _s_matrix(sp: ChainSpectrum, sites, m_max: int) -> np.ndarray:
    """``S_nm = sum_j v_j(n0) v_j(n) cos(m k_j)`` for the requested sites."""
    p = sp.spec.index(sp.spec.n0)
    rows = np.array([sp.spec.index(int(n)) for n in sites])
    amp = sp.vectors[p][None, :] * sp.vectors[rows]
    cosm = np.cos(np.outer(np.arange(m_max + 1), sp.k))
    return amp @ cosm.T


def site_amplitudes(spec: ChainSpec, grid, sites, m_max: int | None = None) -> AmplitudeSeries:
    """Site amplitudes ``b_n(s)`` by the Bessel expansion.

    ``b_n(s) = sum_m (-i)**m e_m J_m(s) S_nm`` with ``e_0 = 1`` and
    ``e_m = 2``; the sum runs to ``m_max`` (default ``s_max + 40 + 10 sqrt(s_max)``).
    """
    if spec.C2 > BESSEL_MAX_C2:
        raise ValueError(f"Bessel expansion is limited to C**2 <= {BESSEL_MAX_C2}")
    s = _check_grid(grid)
    smax = float(s.max())
    if m_max is None:
        m_max = int(smax + 40 + 10 * math.sqrt(smax))
    if m_max > 100_000:
        raise OverflowError("expansion order exceeds the Bessel kernel range")
    sp = chain_spectrum(spec)
    S = _s_matrix(sp, sites, m_max)
    J = bessel_j_all(m_max, s)
    m = np.arange(m_max + 1)
    coef = (-1j) ** (m % 4) * np.where(m == 0, 1.0, 2.0)
    b = (J.T * coef) @ S.T
    a_s = b[:, list(sites).index(spec.n0)] if spec.n0 in list(sites) else None
    return AmplitudeSeries(s, a_s, b, "bessel", {"sites": list(map(int, sites)), "m_max": m_max})


def cycle_windows(spec: ChainSpec, n: int, k: int) -> tuple:
    """Arrival and departure times of site ``n`` in cycle ``k`` (scaled time).

    The outgoing front reaches distance ``d`` from the impurity at
    ``2k(N+1) + d``; after reflection at the chain end it passes the site
    again at ``2(k+1)(N+1) - d``.
    """
    L = spec.N + 1
    d = abs(n - spec.n0)
    return 2.0 * k * L + d, 2.0 * (k + 1) * L - d


def front_arrival(series: AmplitudeSeries, spec: ChainSpec, frac: float = 0.2) -> np.ndarray:
    """First time ``|b_n|**2`` exceeds ``frac`` of its cycle-0 maximum.

    The cycle-0 window is ``0 <= s <= N + 1``. Returns ``nan`` for sites
    that never cross.
    """
    s = series.t
    win = s <= spec.N + 1
    p = np.abs(series.a_n) ** 2
    out = np.full(p.shape[1], np.nan)
    for j in range(p.shape[1]):
        top = p[win, j].max()
        hit = np.nonzero(win & (p[:, j] > frac * top))[0]
        if hit.size:
            out[j] = s[hit[0]]
    return out


def space_time(series: AmplitudeSeries) -> np.ndarray:
    """``|b_n(s_j)|**2`` with sites as rows."""
    return (np.abs(series.a_n) ** 2).T


# --------------------------------------------------------------------------
# critical cycle


@dataclass(frozen=True)
class ChainCriticalCycle:
    formula: float
    detected: int | None
    ratios: np.ndarray | None = None
    period: float | None = None


def echo_period(sp: ChainSpectrum) -> float:
    """Effective echo period ``4 pi / <d eps>`` in scaled time.

    ``<d eps>`` is the impurity-weighted mean spacing of adjacent roots.
    """
    w = sp.weights
    sel = w > 1e-14
    e, ww = sp.roots[sel], w[sel]
    de = np.diff(e)
    wm = 0.5 * (ww[1:] + ww[:-1])
    return 4.0 * math.pi / float(np.sum(de * wm) / wm.sum())


def chain_critical_cycle(spec: ChainSpec, detect: bool = True, k_max: int = 64,
                         threshold: float = 0.5, ds: float = 0.2) -> ChainCriticalCycle:
    """Formula ``(N+1) C**2 / (1 - C**2)`` and the echo-detector value.

    The detector splits the impurity population into windows one echo
    period wide centred on ``k T``. Cycle ``k`` is irregular when the
    second highest peak in its window reaches ``threshold`` times the
    highest. The first irregular cycle is reported.
    """
    formula = math.inf if spec.C2 >= 1 else (spec.N + 1) * spec.C2 / (1.0 - spec.C2)
    if not detect:
        return ChainCriticalCycle(formula, None)
    sp = chain_spectrum(spec)
    T = echo_period(sp)
    s = np.arange(0.0, (k_max + 1) * T, ds)
    w = sp.weights
    sel = w > 1e-14
    p = np.empty(s.size)
    step = 4096
    for i in range(0, s.size, step):
        blk = s[i:i + step]
        p[i:i + step] = np.abs(np.exp(-0.5j * np.outer(blk, sp.roots[sel])) @ w[sel]) ** 2
    ratios = np.zeros(k_max)
    for k in range(1, k_max + 1):
        c = k * T
        m = (s >= c - T / 2) & (s < c + T / 2)
        pk, _ = find_peaks(p[m])
        h = np.sort(p[m][pk])[::-1]
        ratios[k - 1] = h[1] / h[0] if h.size > 1 else 0.0
    hit = np.nonzero(ratios >= threshold)[0]
    det = int(hit[0]) + 1 if hit.size else None
    return ChainCriticalCycle(formula, det, ratios, T)


def crossover_scan(N: int = 49, C2_values=None, **kw) -> dict:
    """Detector ``k_c`` for each ``C**2`` of the scan."""
    if C2_values is None:
        C2_values = np.round(np.arange(0.05, 0.951, 0.05), 2)
    return {float(c): chain_critical_cycle(ChainSpec(N, float(c)), **kw).detected for c in C2_values}
