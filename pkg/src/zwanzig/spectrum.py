"""Secular equation, mixed-state spectrum, moments and absorption band.

The secular function of the arrow Hamiltonian is

    F(e) = e - eps_s + i gamma_s - sum_n C_n**2 / (e - eps_n + i gamma_n)

Between two consecutive poles it rises monotonically from -inf to +inf, so
each interval holds exactly one real root when the widths vanish. Roots are
stored as an offset from the nearer pole, which keeps the residual and the
residue weight accurate even for far levels whose roots hug a pole.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (Bare, MixingSublattices, ReservoirSpec, build_hamiltonian,
                    level_arrays, order_violations)


class PoleError(ArithmeticError):
    """Secular function requested too close to one of its poles."""


class BracketError(ArithmeticError):
    """Root bracketing or refinement failed."""


class SmallDenominatorError(ArithmeticError):
    """A level gap vanished while summing moments."""


_CHUNK = 256


def secular_value(spec: ReservoirSpec, eps, resummed: bool | None = None):
    """Secular function ``F(eps)``.

    Parameters
    ----------
    spec : ReservoirSpec
    eps : float or array_like
    resummed : bool, optional
        Use the infinite-ladder cotangent form. Defaults to True for the bare
        ladder and False otherwise; the truncated sum is always available.
    """
    e = np.asarray(eps, dtype=complex)
    if resummed is None:
        resummed = isinstance(spec.variant, Bare)
    if resummed:
        if not isinstance(spec.variant, Bare):
            raise ValueError("cotangent resummation only exists for the bare ladder")
        if spec.gamma == 0:
            frac = np.abs(e.real - np.round(e.real))
            if np.any((frac < 1e-13) & (e.imag == 0)):
                raise PoleError("evaluate-at-pole")
        z = np.pi * (e + 1j * spec.gamma)
        out = e - spec.eps_s + 1j * spec.gamma_s - spec.Gamma * np.cos(z) / np.sin(z)
    else:
        en, cn, gn = level_arrays(spec)
        d = e[..., None] - en + 1j * gn
        if np.any(np.abs(d) < 1e-13 * np.maximum(1.0, np.abs(e[..., None]))):
            raise PoleError("evaluate-at-pole")
        out = e - spec.eps_s + 1j * spec.gamma_s - np.sum(cn**2 / d, axis=-1)
    if np.ndim(eps) == 0:
        out = complex(out)
        return out.real if out.imag == 0 else out
    return out if np.any(out.imag) else out.real


@dataclass(frozen=True)
class SpectrumSolution:
    """Mixed-state eigenvalues and residue weights.

    Attributes
    ----------
    roots : ndarray
        Sorted eigenvalues (one per unperturbed interval, plus the two outer
        roots and any decoupled levels).
    weights : ndarray
        ``1 / F'(root)``, the initial-state weight of each mixed state.
    residual : ndarray
        ``|F(root)|`` (zero for decoupled levels).
    method : str
        ``"secular"`` or ``"dense"``.
    """

    roots: np.ndarray
    weights: np.ndarray
    residual: np.ndarray
    method: str
    spec: ReservoirSpec
    anchor: np.ndarray | None = None
    offset: np.ndarray | None = None

    def eigenvectors(self) -> np.ndarray:
        """Eigenvectors as columns, initial state first then levels ``-N .. N``."""
        if self.method == "dense":
            return self._vecs
        en, cn, _ = level_arrays(self.spec)
        nlev = en.size
        vecs = np.zeros((nlev + 1, self.roots.size))
        for j, (r, w) in enumerate(zip(self.roots, self.weights)):
            if w == 0.0:
                hit = np.nonzero((en == r) & (cn == 0))[0]
                if hit.size:
                    vecs[1 + hit[0], j] = 1.0
                    continue
                # degenerate coupled levels: left for the dense path
                raise BracketError("degenerate coupled levels need the dense path")
            vs = math.sqrt(w)
            a = self.anchor[j]
            if a >= 0:
                den = (en[a] - en) + self.offset[j]
            else:
                den = r - en
            vecs[0, j] = vs
            vecs[1:, j] = cn * vs / den
        return vecs


def _anchored(poles, c2, eps_s, anchor, u):
    """F and F' at ``poles[anchor] + u`` evaluated relative to the anchor."""
    d = (poles[anchor][:, None] - poles[None, :]) + u[:, None]
    t = c2[None, :] / d
    f = poles[anchor] - eps_s + u - t.sum(axis=1)
    fp = 1.0 + (t / d).sum(axis=1)
    return f, fp


def _solve_inner(poles, c2, eps_s):
    """Roots inside each gap between consecutive sorted poles."""
    m = poles.size - 1
    anchors = np.empty(m, dtype=int)
    offsets = np.empty(m)
    for s in range(0, m, _CHUNK):
        idx = np.arange(s, min(s + _CHUNK, m))
        width = poles[idx + 1] - poles[idx]
        lo = np.zeros(idx.size)
        hi = width.copy()
        # bisection in the left-anchored offset down to 1e-4 of the interval
        while np.any(hi - lo > 1e-4 * width):
            mid = 0.5 * (lo + hi)
            f, _ = _anchored(poles, c2, eps_s, idx, mid)
            neg = f < 0
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
        right = 0.5 * (lo + hi) > 0.5 * width
        anc = np.where(right, idx + 1, idx)
        shift = np.where(right, width, 0.0)
        lo, hi = lo - shift, hi - shift
        u = 0.5 * (lo + hi)
        for _ in range(60):
            f, fp = _anchored(poles, c2, eps_s, anc, u)
            lo = np.where(f < 0, u, lo)
            hi = np.where(f > 0, u, hi)
            step = f / fp
            new = u - step
            bad = ((new <= lo) | (new >= hi)) & (f != 0)
            new = np.where(bad, 0.5 * (lo + hi), new)
            done = np.abs(new - u) <= 4e-16 * np.maximum(np.abs(u), 1e-300)
            u = new
            if np.all(done | (f == 0)):
                break
        else:
            raise BracketError(f"Newton refinement stalled near poles {poles[idx[0]]}..")
        anchors[idx] = anc
        offsets[idx] = u
    return anchors, offsets


def _solve_outer(poles, c2, eps_s, side):
    """Root below the lowest pole (side=-1) or above the highest (side=+1).

    Returns the anchor (pole position) and the offset from it.
    """
    S = c2.sum()
    a = 0 if side < 0 else poles.size - 1
    p = poles[a]
    if side < 0:
        lo, hi = min(p, eps_s) - math.sqrt(S) - 1.0 - p, 0.0
    else:
        lo, hi = 0.0, max(p, eps_s) + math.sqrt(S) + 1.0 - p
    anc = np.array([a])
    u = 0.5 * (lo + hi)
    for _ in range(400):
        f, fp = _anchored(poles, c2, eps_s, anc, np.array([u]))
        f, fp = f[0], fp[0]
        if f == 0:
            break
        if f < 0:
            lo = u
        else:
            hi = u
        new = u - f / fp
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - u) <= 4e-16 * abs(u):
            u = new
            break
        u = new
    else:
        raise BracketError("outer root refinement stalled")
    return a, u


def _dense(spec: ReservoirSpec) -> SpectrumSolution:
    H = build_hamiltonian(spec)
    w, V = np.linalg.eigh(np.real(H.matrix))
    sol = SpectrumSolution(w, V[0] ** 2, np.zeros_like(w), "dense", spec)
    object.__setattr__(sol, "_vecs", V)
    return sol


def solve_spectrum(spec: ReservoirSpec, dense: bool = False) -> SpectrumSolution:
    """Mixed-state spectrum of ``spec`` (widths ignored).

    Roots come from bracketed bisection refined by safeguarded Newton
    steps. Permuted or degenerate level orders fall back to dense
    diagonalisation, as does ``dense=True``.
    """
    en, cn, _ = level_arrays(spec)
    coupled = cn != 0
    poles = en[coupled]
    c2 = cn[coupled] ** 2
    if dense or order_violations(en) or (poles.size > 1 and np.any(np.diff(poles) < 1e-12)):
        return _dense(spec)
    roots, weights, resid, anchors, offsets = [], [], [], [], []
    if poles.size == 0:
        roots.append(spec.eps_s)
        weights.append(1.0)
        resid.append(0.0)
        anchors.append(-1)
        offsets.append(0.0)
    else:
        pole_pos = np.nonzero(coupled)[0]
        anc = [_solve_outer(poles, c2, spec.eps_s, -1)]
        if poles.size > 1:
            a_in, u_in = _solve_inner(poles, c2, spec.eps_s)
            anc.extend(zip(a_in, u_in))
        anc.append(_solve_outer(poles, c2, spec.eps_s, +1))
        a_all = np.array([a for a, _ in anc], dtype=int)
        u_all = np.array([u for _, u in anc])
        f, fp = _anchored(poles, c2, spec.eps_s, a_all, u_all)
        roots.extend(poles[a_all] + u_all)
        weights.extend(1.0 / fp)
        resid.extend(np.abs(f))
        anchors.extend(pole_pos[a_all])
        offsets.extend(u_all)
    for e in en[~coupled]:
        roots.append(e), weights.append(0.0), resid.append(0.0), anchors.append(-1), offsets.append(0.0)
    roots = np.asarray(roots)
    order = np.argsort(roots, kind="stable")
    return SpectrumSolution(roots[order], np.asarray(weights)[order], np.asarray(resid)[order],
                            "secular", spec, np.asarray(anchors)[order], np.asarray(offsets)[order])


@dataclass(frozen=True)
class AbsorptionBand:
    eps: np.ndarray
    rho: np.ndarray
    envelope: np.ndarray
    resolved: bool


def absorption_band(spec: ReservoirSpec, eps) -> AbsorptionBand:
    """Absorption profile: Lorentzian envelope of half-width ``Gamma`` times
    width-broadened components at each level.

    ``resolved`` is False when some component width reaches a tenth of the
    neighbouring spacing, i.e. the fine structure starts to merge.
    """
    en, cn, gn = level_arrays(spec)
    if np.any(gn <= 0):
        raise ValueError("absorption band needs positive level widths")
    eps = np.asarray(eps, dtype=float)
    G = spec.Gamma
    env = G / (eps**2 + G**2) / math.pi**2
    comp = np.sum(gn / ((eps[..., None] - en) ** 2 + gn**2), axis=-1)
    gaps = np.diff(np.sort(en))
    resolved = bool(gaps.size == 0 or np.max(gn) < 0.1 * gaps.min())
    return AbsorptionBand(eps, env * comp, env, resolved)


@dataclass(frozen=True)
class MomentsTable:
    """Moments ``M[nu] = sum_k C_{n+k}**2 / gap_k**(nu+1)`` for one interval."""

    n: int
    M: np.ndarray
    gaps: np.ndarray
    min_gap: float


def moments(spec: ReservoirSpec, n: int, nu_max: int, tol: float = 1e-12) -> MomentsTable:
    """Moment expansion coefficients of the secular sum around level ``n``."""
    en, cn, _ = level_arrays(spec)
    i = n + spec.N
    if not 0 <= i < en.size:
        raise IndexError(n)
    mask = np.arange(en.size) != i
    gaps = en[mask] - en[i]
    if gaps.size and np.min(np.abs(gaps)) < tol:
        k = int(np.argmin(np.abs(gaps)))
        raise SmallDenominatorError(f"gap {gaps[k]:.3e} next to level {n}")
    c2 = cn[mask] ** 2
    M = np.array([np.sum(c2 / gaps ** (nu + 1)) for nu in range(nu_max + 1)])
    return MomentsTable(n, M, gaps, float(np.min(np.abs(gaps))) if gaps.size else math.inf)


def mixing_levels(delta: float, K: int, M: int) -> tuple:
    """Indices and energies of the mixing ladder with ``delta_k = k * delta``."""
    m = np.arange(-M, M + 1)
    k = np.abs(m) % K
    return m, m * (1.0 + k * delta)


def _window_permuted(delta, K, M, window):
    m, e = mixing_levels(delta, K, M)
    inside = np.abs(m) <= window
    order = np.argsort(e, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return bool(np.any((rank != np.arange(m.size)) & inside))


def critical_mixing_deformation(Gamma: float, K: int = 3, delta_max: float = 1.0,
                                step: float = 1e-3) -> float | None:
    """Smallest ``delta`` producing a level-order permutation near the centre.

    Sub-lattice ``k`` is scaled by ``1 + k delta`` and only levels whose
    undeformed position satisfies ``|m| <= Gamma`` are watched. Stretching
    moves levels outward, so partners further than ``K`` steps outside the
    window can never cross into it.

    Returns
    -------
    float or None
        The threshold, or None when no permutation appears up to ``delta_max``.
    """
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")
    M = int(math.ceil(Gamma)) + 2 * K + 2
    grid = np.arange(step, delta_max + step / 2, step)
    prev = 0.0
    for d in grid:
        if _window_permuted(d, K, M, Gamma):
            lo, hi = prev, d
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                if _window_permuted(mid, K, M, Gamma):
                    hi = mid
                else:
                    lo = mid
            return hi
        prev = d
    return None


def mixing_spec(C: float, delta: float, K: int = 3, N: int | None = None, gamma: float = 0.0) -> ReservoirSpec:
    """Mixing ladder spec with ``delta_k = k * delta``."""
    deltas = tuple(k * delta for k in range(1, K))
    return ReservoirSpec(MixingSublattices(K, deltas), C=C, N=N, gamma=gamma)
