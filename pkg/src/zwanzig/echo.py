"""Recurrence-cycle (Loschmidt echo) analysis.

The initial-state amplitude of the bare ladder splits into partial
amplitudes, one per recurrence cycle ``k``. Cycle ``k`` switches on at
``t = 2 k pi`` and is a function of the local time

    tau_k = 2 Gamma (t - 2 k pi)

only. Reservoir amplitudes split the same way. Everything here refers to the
infinite ladder; comparisons with a truncated Hamiltonian carry an error of
order ``C**2 / N``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import argrelmax

from .dynamics import AmplitudeSeries
from .kernels import laguerre_scaled
from .model import Bare, HomogeneousDeformation, MixingSublattices, ReservoirSpec

TWO_PI = 2.0 * math.pi
ETA_CRITICAL = 4.0 / 27.0
MAX_PANELS = 400_000


class DeformationWarning(UserWarning):
    """Deformation strong enough for the extra poles to merge."""


# --------------------------------------------------------------------------
# bare partial amplitudes


def laguerre_assoc(k: int, x, alpha: int = 1) -> np.ndarray:
    """``L^1_{k-1}(x) exp(-x/2)``; see :func:`zwanzig.kernels.laguerre_scaled`."""
    if alpha != 1:
        raise NotImplementedError("only alpha = 1 is used")
    return laguerre_scaled(k, x)


def local_time(k: int, t, Gamma: float) -> np.ndarray:
    return 2.0 * Gamma * (np.asarray(t, dtype=float) - TWO_PI * k)


def partial_amplitude_unit(k: int, tau) -> np.ndarray:
    """Width-free partial amplitude as a function of local time.

    ``-(tau/k) L^1_{k-1}(tau) exp(-tau/2)`` for ``tau >= 0`` and zero before.
    ``k = 0`` is not a function of ``tau`` alone and is rejected.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    on = tau >= 0
    out[on] = -(tau[on] / k) * laguerre_scaled(k, tau[on])
    return out


def partial_amplitude_bare(k: int, t, spec: ReservoirSpec) -> np.ndarray:
    """Cycle-``k`` contribution to the initial-state amplitude.

    Widths enter as ``exp(-2 k pi gamma)`` and ``exp(-gamma_s (t - 2 k pi))``;
    a non-zero initial energy adds the phase ``exp(-i eps_s (t - 2 k pi))``.
    """
    t = np.asarray(t, dtype=float)
    G = spec.Gamma
    shift = t - TWO_PI * k
    if k == 0:
        out = np.exp(-(G + spec.gamma_s) * t) * np.exp(-1j * spec.eps_s * t)
        return np.where(t >= 0, out, 0.0)
    if G == 0:
        return np.zeros_like(t, dtype=complex)
    base = partial_amplitude_unit(k, 2.0 * G * shift)
    fac = math.exp(-TWO_PI * k * spec.gamma) * np.exp(-spec.gamma_s * shift - 1j * spec.eps_s * shift)
    return np.where(shift >= 0, base * fac, 0.0)


@dataclass
class CycleDecomposition:
    """Per-cycle partial amplitudes on a common time grid.

    ``partials[i]`` belongs to cycle ``ks[i]``; ``tau[i]`` is its local time.
    """

    t: np.ndarray
    ks: np.ndarray
    tau: np.ndarray
    partials: np.ndarray
    Gamma: float
    meta: dict = field(default_factory=dict)

    def total(self) -> np.ndarray:
        return self.partials.sum(axis=0)


def assemble_cycles(spec: ReservoirSpec, grid, k_max: int | None = None,
                    deformation: "DeformationMap | None" = None):
    """Sum partial amplitudes ``k = 0 .. min(k_max, floor(t / 2 pi))``.

    Returns
    -------
    (AmplitudeSeries, CycleDecomposition)
    """
    t = np.asarray(grid, dtype=float)
    top = int(t.max() // TWO_PI) if t.size else 0
    k_max = top if k_max is None else min(k_max, top)
    ks = np.arange(k_max + 1)
    G = spec.Gamma
    if spec.C == 0:
        parts = np.zeros((ks.size, t.size), dtype=complex)
        parts[0] = np.exp(-spec.gamma_s * t - 1j * spec.eps_s * t)
    elif isinstance(spec.variant, Bare):
        parts = np.array([partial_amplitude_bare(int(k), t, spec) for k in ks])
    else:
        dm = deformation or scaling_map(spec)
        parts = np.array([partial_amplitude_deformed(int(k), t, dm) for k in ks])
    tau = np.array([local_time(int(k), t, G) for k in ks])
    dec = CycleDecomposition(t, ks, tau, parts, G)
    series = AmplitudeSeries(t, dec.total(), None, "cycle-sum", {"k_max": int(k_max)})
    return series, dec


# --------------------------------------------------------------------------
# deformed ladders


@dataclass(frozen=True)
class DeformationMap:
    """Map from the auxiliary variable ``lam`` to energies of a smooth ladder.

    The secular function takes the form ``P(lam) (Q(lam) - cot(pi lam))``
    with ``eps = eps(lam)``. ``scale`` sets the width of the region where
    ``Q`` is of order one and ``eta`` is the cubic deformation strength.
    """

    eps: Callable
    deps: Callable
    Q: Callable
    P: Callable
    scale: float
    eta: float = 0.0


def scaling_map(spec: ReservoirSpec) -> DeformationMap:
    """Smooth interpolation of the bare or homogeneously deformed ladder."""
    G = spec.Gamma
    v = spec.variant
    if isinstance(v, Bare):
        return DeformationMap(lambda x: x, lambda x: np.ones_like(x),
                              lambda x: x / G, lambda x: np.full_like(x, G), G)
    if isinstance(v, HomogeneousDeformation):
        a2, b2, s = v.a**2, v.b**2, v.sign

        def eps(x):
            return x * (1.0 + a2 * x * x) ** (0.5 * s)

        def deps(x):
            return (1.0 + a2 * x * x) ** (0.5 * s - 1.0) * (1.0 + a2 * x * x * (1.0 + s))

        def h(x):
            return (1.0 + b2 * x * x) ** s

        def P(x):
            return G * h(x) / deps(x)

        def Q(x):
            return eps(x) / P(x)

        eta = s * (2.0 * a2 - b2) * G * G
        return DeformationMap(eps, deps, Q, P, G, eta)
    raise ValueError(f"no smooth scaling map for {type(v).__name__}; use the oracle")


def cubic_poles(eta: float) -> np.ndarray:
    """Roots of ``eta x**3 + x - i = 0`` (poles of the cubic deformation).

    Sorted by modulus, so the first entry continues the bare pole ``x = i``.
    """
    r = np.roots([eta, 0.0, 1.0, -1j])
    return r[np.argsort(np.abs(r))]


def cubic_pole_series(eta: float) -> tuple:
    """Small-``eta`` expansions of the three poles.

    The ``eta**2`` coefficient of the first pole is 3 (the exact cubic
    fixes it); the two far poles are ``+-i (eta**-1/2 -+ 1/2)``.
    """
    p1 = 1j * (1.0 + eta + 3.0 * eta**2)
    r = eta ** -0.5
    return p1, 1j * (r - 0.5), -1j * (r + 0.5)


def _cycle_coefficient(k: int, Q):
    if k == 0:
        return -1.0 / (Q + 1j)
    return 2j * (Q - 1j) ** (k - 1) / (Q + 1j) ** (k + 1)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _panel_edges(lo, hi, width_fn):
    edges = [lo]
    x = lo
    while x < hi:
        x = min(hi, x + width_fn(x))
        edges.append(x)
    return np.asarray(edges)


def partial_amplitude_deformed(k: int, t, dm: DeformationMap, Q: Callable | None = None,
                               P: Callable | None = None, lam_max: float | None = None) -> np.ndarray:
    """Cycle-``k`` amplitude of a smoothly deformed ladder by real-axis quadrature.

    Evaluates

        -(i / 2 pi) int exp(-i eps(lam) t + 2 pi i k lam) c_k(Q) eps'(lam) / P(lam) dlam

    with ``c_0 = -1/(Q + i)`` and ``c_k = 2i (Q - i)**(k-1) / (Q + i)**(k+1)``.
    Panels follow the local phase speed; the two tails beyond the cutoff are
    closed with a two-term integration-by-parts correction. ``Q`` and ``P``
    override the map's own functions.
    """
    Qf = Q or dm.Q
    Pf = P or dm.P
    if dm.eta >= ETA_CRITICAL:
        warnings.warn(f"eta = {dm.eta:.3f} >= {ETA_CRITICAL:.3f}: far poles have merged",
                      DeformationWarning, stacklevel=2)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    base = 10.0 * max(dm.scale, 1.0)
    out = np.empty(tt.size, dtype=complex)

    def g(x):
        return _cycle_coefficient(k, Qf(x)) * dm.deps(x) / Pf(x)

    for i, ti in enumerate(tt):
        def phi(x):
            return -dm.eps(x) * ti + TWO_PI * k * x

        def dphi(x):
            return -dm.deps(x) * ti + TWO_PI * k

        def width(x):
            osc = abs(dphi(x)) + 2.0 * (k + 1) / max(abs(x), dm.scale)
            return min(0.25 * max(abs(x), dm.scale), math.pi / osc)

        L = lam_max if lam_max is not None else _cutoff(dphi, base)
        right = _panel_edges(0.0, L, width)
        left = _panel_edges(0.0, L, lambda x: width(-x))
        edges = np.concatenate([-left[::-1], right[1:]])
        if edges.size > MAX_PANELS:
            raise ArithmeticError(f"quadrature needs {edges.size} panels at t = {ti:g}")
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        x = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
        val = np.sum(half[:, None] * _GL_W[None, :] * g(x) * np.exp(1j * phi(x)))
        val += _tail(g, phi, dphi, L, +1) + _tail(g, phi, dphi, -L, -1)
        out[i] = -1j / TWO_PI * val
    return out if np.ndim(t) else out[0]


def _cutoff(dphi, start, target=2e3, top=1e6):
    """Smallest ``L >= start`` on a geometric ladder with ``|phi'(+-L)| L >= target``.

    Beyond such an ``L`` the two-term partial integration is accurate to a
    few parts in ``target**2``.
    """
    x = start
    while x < top:
        v = dphi(np.array([x, -x]))
        if np.min(np.abs(v)) * x >= target:
            return x
        x *= 1.25
    return top


def _tail(g, phi, dphi, x0, side):
    """Asymptotic value of int_{x0}^{side*inf} g exp(i phi) by two partial integrations."""
    h = 1e-3 * max(abs(x0), 1.0)
    d0 = dphi(np.array([x0]))[0]
    if abs(d0) * abs(x0) < 10.0:
        # phase nearly frozen: the envelope decay closes the tail by itself
        return 0.0

    def r(x):
        return g(x) / (1j * dphi(x))

    xs = np.array([x0 - h, x0, x0 + h])
    rv = r(xs)
    dr = (rv[2] - rv[0]) / (2 * h)
    e = np.exp(1j * phi(np.array([x0])))[0]
    first = -rv[1] * e
    second = dr * e / (1j * d0)
    return side * (first + second)


def effective_decrement(series: AmplitudeSeries, window: tuple | None = None) -> tuple:
    """Time-dependent decrement ``-d log|a_s| / dt`` by centred differences.

    Returns
    -------
    (t, d) restricted to ``window`` (inclusive bounds) when given.
    """
    t = series.t
    mag = np.abs(series.a_s)
    sel = np.ones(t.size, bool) if window is None else (t >= window[0]) & (t <= window[1])
    if np.any(mag[sel] <= 1e-12):
        raise FloatingPointError("amplitude underflow inside the decrement window")
    d = -np.gradient(np.log(np.maximum(mag, 1e-300)), t)
    return t[sel], d[sel]


# --------------------------------------------------------------------------
# critical cycle and echo metrics


@dataclass(frozen=True)
class CriticalCycle:
    value: float
    formula: str
    valid: bool = True
    note: str = ""


def critical_cycle(spec) -> CriticalCycle:
    """Critical cycle number from the closed-form laws.

    Bare ladder: ``pi**2 C**2``. Three mixing sub-lattices: the interpolation
    ``1/k = 1/k_bare + 3 delta`` with ``delta = deltas[0]``, flagged outside
    ``0 <= delta <= 0.15``, ``1 <= C**2 <= 4``. Chains dispatch to
    :func:`zwanzig.chain.chain_critical_cycle`.
    """
    from .chain import ChainSpec, chain_critical_cycle

    if isinstance(spec, ChainSpec):
        res = chain_critical_cycle(spec, detect=False)
        return CriticalCycle(res.formula, "chain", spec.C2 < 1)
    kc = math.pi**2 * spec.C**2
    v = spec.variant
    if isinstance(v, Bare):
        return CriticalCycle(kc, "bare")
    if isinstance(v, MixingSublattices):
        if v.K != 3:
            return CriticalCycle(kc, "mixing", False, "interpolation only known for K = 3")
        d = v.deltas[0]
        ok = 0 <= d <= 0.15 and 1 <= spec.C**2 <= 4
        val = kc if d == 0 else 1.0 / (1.0 / kc + 3.0 * d)
        return CriticalCycle(val, "mixing", ok, "" if ok else "outside interpolation range")
    return CriticalCycle(kc, "bare", False, "variant has no dedicated law; bare value reported")


def cycle_extent(k: int, frac: float = 0.5, tau_max: float | None = None) -> float:
    """Extent in local time of the cycle-``k`` echo.

    Measured from the switch-on at ``tau = 0`` to the point where the
    amplitude falls below ``frac`` times the peak of its outermost lobe.
    """
    tau_max = tau_max or 4.0 * k + 40.0 + 10.0 * math.sqrt(k)
    tau = np.linspace(0.0, tau_max, int(tau_max * 40) + 1)
    a = np.abs(partial_amplitude_unit(k, tau))
    peaks = argrelmax(a)[0]
    last = int(peaks[-1]) if peaks.size else int(np.argmax(a))
    below = np.nonzero(a[last:] < frac * a[last])[0]
    if below.size == 0:
        raise ArithmeticError("tail not resolved; increase tau_max")
    return float(tau[last + below[0]])


def overlap_cycle(spec: ReservoirSpec, frac: float = 0.5, k_max: int = 400) -> int | None:
    """First cycle whose echo extent reaches the cycle period ``4 pi Gamma``.

    The extent is measured on the computed partial amplitude, not taken
    from the ``4k`` law.
    """
    period = 2.0 * spec.Gamma * TWO_PI
    for k in range(1, k_max + 1):
        if cycle_extent(k, frac) >= period:
            return k
    return None


def zero_count(k: int, tau_max: float | None = None) -> int:
    """Zeros of the cycle-``k`` partial amplitude on ``tau >= 0``, including ``tau = 0``."""
    tau_max = tau_max or 4.0 * k + 60.0
    tau = np.linspace(0.0, tau_max, int(tau_max * 200) + 2)[1:]
    v = partial_amplitude_unit(k, tau)
    v = v[np.abs(v) > 1e-250]
    return 1 + int(np.sum(np.signbit(v[1:]) != np.signbit(v[:-1])))


def component_count(values) -> int:
    """Number of strict local maxima of a sampled population curve."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0
    return int(argrelmax(v)[0].size)


@dataclass
class EchoMetrics:
    k_c: float
    k_c_detected: int | None
    cycle_average: dict
    zeros: dict
    components: dict
    overlap: dict

    def as_dict(self) -> dict:
        return {"k_c": self.k_c, "k_c_detected": self.k_c_detected,
                "cycle_average": self.cycle_average, "zeros": self.zeros,
                "components": self.components, "overlap": self.overlap}


def echo_metrics(spec: ReservoirSpec, ks) -> EchoMetrics:
    kc = critical_cycle(spec).value
    period = 2.0 * spec.Gamma * TWO_PI
    avg, zeros, comps, over = {}, {}, {}, {}
    for k in ks:
        k = int(k)
        if k >= 1:
            tau = np.linspace(0.0, 4.0 * k + 40.0, 4000)
            comps[k] = component_count(np.abs(partial_amplitude_unit(k, tau)) ** 2)
            zeros[k] = zero_count(k)
            over[k] = cycle_extent(k) >= period
            avg[k] = cycle_average(k, spec)
    return EchoMetrics(kc, overlap_cycle(spec), avg, zeros, comps, over)


def cycle_average(k: int, spec: ReservoirSpec, source: str = "full", points: int = 4001) -> float:
    """Initial-state population integrated over the window of cycle ``k``.

    ``(1 / 2 Gamma) int_0^{4 k_c} |a_s|**2 dtau_k``, i.e. the time integral
    over one period ``2 pi``. ``source="full"`` uses the whole amplitude inside
    the window (earlier cycles spill into it once cycles overlap);
    ``source="partial"`` keeps only the cycle-``k`` term.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    G = spec.Gamma
    t = np.linspace(TWO_PI * k, TWO_PI * (k + 1), points)
    if source == "partial":
        a = partial_amplitude_bare(k, t, spec)
    elif source == "full":
        a = sum(partial_amplitude_bare(j, t, spec) for j in range(k + 1))
    else:
        raise ValueError(source)
    tau = 2.0 * G * (t - TWO_PI * k)
    return float(np.trapezoid(np.abs(a) ** 2, tau) / (2.0 * G))


def langevin_residual(series: AmplitudeSeries, spec: ReservoirSpec, margin: int = 3) -> tuple:
    """Residual of the second-order memory equation for the initial state.

    With the comb kernel ``K(u) = 2 pi sum_k delta(u - 2 k pi)`` the amplitude
    obeys ``a'' + C**2 int_0^t a'(t') K(t - t') dt' = -C**2 K(t)``. Away from
    cycle boundaries this reads

        a''(t) + C**2 2 pi sum_k w_k a'(t - 2 k pi) = 0

    with ``w_0 = 1/2`` (the comb tooth sits on the integration edge) and
    ``w_k = 1`` otherwise. Derivatives are centred differences on a uniform
    grid; ``margin`` samples around every boundary are dropped.

    Returns
    -------
    (t, r)
    """
    t = series.t
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValueError("uniform grid required")
    a = series.a_s
    C2 = spec.C**2
    d1 = np.gradient(a, h, edge_order=2)
    d2 = np.gradient(d1, h, edge_order=2)
    r = d2 + C2 * math.pi * d1
    shift = TWO_PI / h
    kmax = int(t[-1] // TWO_PI)
    for k in range(1, kmax + 1):
        s = int(round(k * shift))
        if abs(s - k * shift) > 1e-6:
            raise ValueError("grid step must divide 2 pi")
        r[s:] += C2 * TWO_PI * d1[:-s] if s else 0
    keep = np.ones(t.size, bool)
    keep[: margin + 2] = False
    keep[-(margin + 2):] = False
    for k in range(1, kmax + 1):
        s = int(round(k * shift))
        keep[max(0, s - margin - 2): s + margin + 3] = False
    return t[keep], r[keep]


# --------------------------------------------------------------------------
# reservoir amplitudes


def _gl_cumulative(f, tau, panel):
    """``int_0^tau f`` for every entry of ``tau`` with Gauss-Legendre panels."""
    tau = np.asarray(tau, dtype=float)
    top = float(tau.max(initial=0.0))
    n_pan = max(1, int(math.ceil(top / panel)))
    edges = np.linspace(0.0, n_pan * panel, n_pan + 1)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X
    per = np.sum(half[:, None] * _GL_W * f(x), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(per)])
    idx = np.clip(np.searchsorted(edges, tau, side="right") - 1, 0, n_pan - 1)
    lo = edges[idx]
    hh = 0.5 * (tau - lo)
    xp = (lo + hh)[:, None] + hh[:, None] * _GL_X
    part = np.sum(hh[:, None] * _GL_W * f(xp), axis=1)
    return cum[idx] + part


def reservoir_partial(n: int, k: int, tau, spec: ReservoirSpec) -> np.ndarray:
    """Cycle-``k`` contribution to the amplitude of reservoir level ``n``.

    For ``k >= 1``

        i C / (2 k Gamma) exp(-i beta tau) int_0^tau x L^1_{k-1}(x) exp(-s x) dx

    with ``beta = n / (2 Gamma)`` and ``s = (1 - i n / Gamma) / 2``; for
    ``k = 0`` the closed form of the first cycle is used. Widths are ignored.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    G = spec.Gamma
    C = spec.C
    out = np.zeros(tau.shape, dtype=complex)
    on = tau >= 0
    if G == 0 or not on.any():
        return out
    ton = tau[on]
    if k == 0:
        t = ton / (2.0 * G)
        out[on] = -1j * C * np.exp(-1j * n * t) * (1.0 - np.exp((1j * n - G) * t)) / (G - 1j * n)
        return out
    beta = n / (2.0 * G)

    def f(x):
        return x * laguerre_scaled(k, x) * np.exp(1j * beta * x)

    panel = min(1.0, math.pi / (abs(beta) + 1.0), 4.0 / math.sqrt(k))
    integral = _gl_cumulative(f, ton, panel)
    out[on] = 1j * C / (2.0 * k * G) * np.exp(-1j * beta * ton) * integral
    return out


def reservoir_amplitude(n: int, t, spec: ReservoirSpec) -> np.ndarray:
    """Full amplitude of level ``n``: sum of all switched-on cycles."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    G = spec.Gamma
    kmax = int(t.max() // TWO_PI)
    return sum(reservoir_partial(n, k, 2.0 * G * (t - TWO_PI * k), spec) for k in range(kmax + 1))


def periodic_component(n: int, k: int, tau, spec: ReservoirSpec) -> np.ndarray:
    """Late-time (harmonic) part of the cycle-``k`` reservoir amplitude.

    ``2 i C Gamma (-1)**(k-1) (Gamma + i n)**(k-1) / (Gamma - i n)**(k+1)``
    times ``exp(-i beta tau)``; its modulus is ``2 C Gamma / (Gamma**2 + n**2)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    G, C = spec.Gamma, spec.C
    tau = np.asarray(tau, dtype=float)
    amp = 2j * C * G * (-1) ** (k - 1) * (G + 1j * n) ** (k - 1) / (G - 1j * n) ** (k + 1)
    return amp * np.exp(-1j * n / (2.0 * G) * tau)


def geometric_phase(n: int, Gamma: float) -> float:
    return math.atan2(n, Gamma)


def end_of_cycle(n: int, k: int, spec: ReservoirSpec) -> complex:
    """``a_n(2 k pi)``."""
    return complex(reservoir_amplitude(n, np.array([TWO_PI * k]), spec)[0])


def lorentzian(n, Gamma: float):
    return Gamma / (math.pi * (Gamma**2 + np.asarray(n, dtype=float) ** 2))


@dataclass
class ReservoirCycleView:
    ns: np.ndarray
    ks: np.ndarray
    end_values: np.ndarray
    lorentzian: np.ndarray
    phase: np.ndarray
    geometric_phase: np.ndarray
    resonance_time: np.ndarray
    k_n: np.ndarray


def reservoir_view(spec: ReservoirSpec, ns, ks) -> ReservoirCycleView:
    ns = np.asarray(ns, dtype=int)
    ks = np.asarray(ks, dtype=int)
    G = spec.Gamma
    kc = math.pi**2 * spec.C**2
    end = np.array([[end_of_cycle(int(n), int(k), spec) for k in ks] for n in ns])
    res = np.array([[resonance_time_estimate(int(n), int(k), G) for k in ks] for n in ns])
    kn = np.array([np.inf if n == 0 else 0.25 * (kc / abs(n)) ** 3 for n in ns])
    return ReservoirCycleView(ns, ks, end, lorentzian(ns, G), np.angle(end),
                              np.array([geometric_phase(int(n), G) for n in ns]), res, kn)


def resonance_time_estimate(n: int, k: int, Gamma: float) -> float:
    """``(4k - 0.74 k**(1/3)) * (Gamma/n) atan(n/Gamma)``."""
    base = 4.0 * k - 0.74 * k ** (1.0 / 3.0)
    if n == 0:
        return base
    return base * Gamma / n * math.atan(n / Gamma)


@dataclass(frozen=True)
class DoubleResonance:
    tau_estimate: float
    halfwidth_estimate: float
    k_n_estimate: float
    tau_detected: float
    halfwidth_detected: float


def double_resonance(n: int, k: int, spec: ReservoirSpec, points: int = 8001) -> DoubleResonance:
    """Resonance time and line width of reservoir level ``n`` in cycle ``k``.

    Detection runs on the computed amplitude over the cycle window
    ``tau_k in [0, 4 pi Gamma]``. The resonance time is the zero crossing of
    ``Im a_0`` for ``n = 0`` and the minimum of ``|a_n|`` otherwise. The
    detected width is the full width (in ``tau``) of the dip where
    ``|a_n|`` stays below half its value at the start of the cycle.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    G = spec.Gamma
    kc = math.pi**2 * spec.C**2
    tau = np.linspace(0.0, 4.0 * math.pi * G, points)
    t = TWO_PI * k + tau / (2.0 * G)
    a = reservoir_amplitude(n, t, spec)
    if n == 0:
        im = a.imag
        s = np.nonzero(np.signbit(im[1:]) != np.signbit(im[:-1]))[0]
        if s.size == 0:
            raise ArithmeticError(f"no zero crossing in cycle {k}")
        i = s[0]
        tz = tau[i] - im[i] * (tau[i + 1] - tau[i]) / (im[i + 1] - im[i])
        centre = i
    else:
        centre = int(np.argmin(np.abs(a)))
        tz = float(tau[centre])
    mag = np.abs(a)
    thr = 0.5 * mag[0]
    lo = centre
    while lo > 0 and mag[lo - 1] < thr:
        lo -= 1
    hi = centre
    while hi < mag.size - 1 and mag[hi + 1] < thr:
        hi += 1
    width = float(tau[hi] - tau[lo]) if mag[centre] < thr else 0.0
    kn = math.inf if n == 0 else 0.25 * (kc / abs(n)) ** 3
    return DoubleResonance(resonance_time_estimate(n, k, G), (32.0 * k) ** (1.0 / 3.0), kn,
                           float(tz), width)
