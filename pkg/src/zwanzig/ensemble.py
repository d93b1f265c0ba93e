"""Ensembles of particles with frozen random level shifts.

Every member sees the same ladder with each level displaced by an
independent Gaussian shift. The dispersion follows

    delta(T)**2 = delta(0)**2 coth(eps_q / T)

for a single representative phonon energy ``eps_q`` (``k_B = 1``).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import evolve_oracle
from .model import Explicit, ReservoirSpec, SpecError, build_hamiltonian, level_arrays


def thermal_dispersion(delta0, T: float, eps_q: float):
    """``delta0 * sqrt(coth(eps_q / T))``; ``T = 0`` returns ``delta0``."""
    if T < 0 or eps_q <= 0:
        raise SpecError("need T >= 0 and eps_q > 0")
    if T == 0:
        return np.asarray(delta0, dtype=float) * 1.0
    return np.asarray(delta0, dtype=float) * math.sqrt(1.0 / math.tanh(eps_q / T))


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble of randomly shifted copies of ``base``.

    Parameters
    ----------
    base : ReservoirSpec
    delta0 : float or sequence
        Zero-temperature dispersion, one value or one per level ``-N .. N``.
    T, eps_q : float
        Temperature and phonon energy.
    M : int
        Number of members.
    seed : int
    mean_shifts, widths : sequence, optional
        Mean level shifts and widths per level; default zero shift and the
        base width.
    """

    base: ReservoirSpec
    delta0: object = 0.0
    T: float = 0.0
    eps_q: float = 1.0
    M: int = 100
    seed: int = 0
    mean_shifts: tuple | None = None
    widths: tuple | None = None

    def __post_init__(self):
        if self.M < 1:
            raise SpecError("M must be positive")
        n = 2 * self.base.N + 1
        for name in ("mean_shifts", "widths"):
            v = getattr(self, name)
            if v is not None and len(v) != n:
                raise SpecError(f"{name} needs {n} entries")
        d = np.broadcast_to(np.asarray(self.delta0, dtype=float), (n,))
        if np.any(d < 0):
            raise SpecError("dispersion must be non-negative")
        thermal_dispersion(0.0, self.T, self.eps_q)

    @property
    def dispersion(self) -> np.ndarray:
        n = 2 * self.base.N + 1
        d = np.broadcast_to(np.asarray(self.delta0, dtype=float), (n,))
        return thermal_dispersion(d, self.T, self.eps_q)

    def mean_levels(self):
        e, c, g = level_arrays(self.base)
        if self.mean_shifts is not None:
            e = e + np.asarray(self.mean_shifts, dtype=float)
        if self.widths is not None:
            g = np.asarray(self.widths, dtype=float)
        return e, c, g

    def resolution(self) -> dict:
        """Dispersion against the local level spacing.

        ``resolved`` is true when every ``delta_n`` stays below a quarter of
        the smaller adjacent spacing.
        """
        e, _, _ = self.mean_levels()
        gap = np.abs(np.diff(e))
        local = np.minimum(np.r_[np.inf, gap], np.r_[gap, np.inf])
        ratio = float(np.max(self.dispersion / local)) if e.size > 1 else 0.0
        return {"max_ratio": ratio, "resolved": ratio < 0.25}

    def streams(self, M: int | None = None) -> list:
        """One independent generator per member, split from ``seed``."""
        M = self.M if M is None else M
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(M)]


def sample_member(ens: EnsembleSpec, rng: np.random.Generator) -> ReservoirSpec:
    """Draw one member as an :class:`Explicit` spec."""
    e, c, g = ens.mean_levels()
    f = rng.normal(0.0, 1.0, e.size) * ens.dispersion
    levels = tuple(zip((e + f).tolist(), c.tolist(), g.tolist()))
    b = ens.base
    return ReservoirSpec(Explicit(levels), b.C, gamma_s=b.gamma_s, eps_s=b.eps_s)


@dataclass
class EnsembleResult:
    t: np.ndarray
    population: np.ndarray
    stderr: np.ndarray
    amplitude: np.ndarray
    M: int
    meta: dict = field(default_factory=dict)


def _member_amplitude(spec: ReservoirSpec, t) -> np.ndarray:
    return evolve_oracle(build_hamiltonian(spec), t).a_s


def ensemble_dynamics(ens: EnsembleSpec, grid, M: int | None = None, threads: int = 1) -> EnsembleResult:
    """Average the initial-state dynamics over ``M`` members.

    ``population`` is the mean of ``|a_s|**2`` with its standard error;
    ``amplitude`` is the mean complex amplitude. Results do not depend on
    ``threads``: member ``i`` always uses stream ``i`` and sums run in index
    order.
    """
    M = ens.M if M is None else M
    if M < 2:
        raise ValueError("need at least two members")
    t = np.asarray(grid, dtype=float)
    streams = ens.streams(M)

    def run(i):
        return _member_amplitude(sample_member(ens, streams[i]), t)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            amps = list(pool.map(run, range(M)))
    else:
        amps = [run(i) for i in range(M)]
    A = np.array(amps)
    P = np.abs(A) ** 2
    return EnsembleResult(t, P.mean(axis=0), P.std(axis=0, ddof=1) / math.sqrt(M), A.mean(axis=0), M,
                          {"dispersion": float(np.max(ens.dispersion)), **ens.resolution()})


def dephasing_factor(k: int, delta: float) -> float:
    """Suppression ``exp(-(2 pi k delta)**2 / 2)`` of the mean amplitude at echo ``k``."""
    return math.exp(-0.5 * (2.0 * math.pi * k * delta) ** 2)


def _lorentz(x, g):
    return g / math.pi / (x * x + g * g)


def _gauss(x, d):
    return np.exp(-0.5 * (x / d) ** 2) / (d * math.sqrt(2.0 * math.pi))


def lineshape(gamma: float, delta: float, eps, points: int = 4001) -> np.ndarray:
    """Lorentzian of half-width ``gamma`` convolved with a Gaussian of rms ``delta``.

    The convolution runs over ``+-10 delta`` on ``points`` nodes.
    """
    eps = np.asarray(eps, dtype=float)
    if gamma < 0 or delta < 0:
        raise ValueError("widths must be non-negative")
    if gamma == 0 and delta == 0:
        raise ValueError("gamma and delta cannot both vanish")
    if delta == 0:
        return _lorentz(eps, gamma)
    if gamma == 0:
        return _gauss(eps, delta)
    x = np.linspace(-10.0 * delta, 10.0 * delta, points)
    gx = _gauss(x, delta)
    return np.trapezoid(_lorentz(eps[..., None] - x, gamma) * gx, x, axis=-1)
