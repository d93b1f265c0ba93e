"""Reservoir specifications and the single-excitation Hamiltonian.

Energies are measured in units of the bare mean level spacing and the
initial state sits at zero energy unless ``eps_s`` says otherwise.
Reservoir levels carry a signed index ``n = -N .. N``; the matrix built by
:func:`build_hamiltonian` puts the initial state first and the levels after
it in index order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class SpecError(ValueError):
    """Raised when a specification violates a model invariant."""


@dataclass(frozen=True)
class Bare:
    """Equidistant levels with constant coupling."""


@dataclass(frozen=True)
class HomogeneousDeformation:
    """Smooth stretch (``sign=+1``) or compression (``sign=-1``) of the ladder.

    Levels follow ``eps_n**2 = n**2 (1 + a**2 n**2)**sign`` with
    ``eps_n`` taking the sign of ``n``; couplings follow
    ``C_n**2 = C**2 (1 + b**2 n**2)**sign``.
    """

    a: float = 0.0
    b: float = 0.0
    sign: int = 1


@dataclass(frozen=True)
class Sublattices:
    """``K`` interleaved sub-lattices displaced by ``offsets`` (k = 1 .. K-1)."""

    K: int
    offsets: tuple = ()


@dataclass(frozen=True)
class MixingSublattices:
    """``K`` sub-lattices whose periods are rescaled by ``1 + deltas[k-1]``."""

    K: int
    deltas: tuple = ()


@dataclass(frozen=True)
class Explicit:
    """Explicit ``(energy, coupling, width)`` triples for ``n = -N .. N``."""

    levels: tuple = ()


Variant = Union[Bare, HomogeneousDeformation, Sublattices, MixingSublattices, Explicit]


def default_truncation(C: float) -> int:
    """Default half-size ``max(ceil(10 Gamma), 50)``."""
    return max(math.ceil(10.0 * math.pi * C * C), 50)


@dataclass(frozen=True)
class ReservoirSpec:
    """Declarative reservoir description.

    Parameters
    ----------
    variant : Variant
        Level scheme.
    C : float
        Base coupling.
    N : int, optional
        Half-size of the reservoir; defaults to :func:`default_truncation`.
        Ignored for :class:`Explicit`, whose size is implied by its levels.
    gamma : float
        Width shared by all reservoir levels (not used by ``Explicit``).
    gamma_s : float
        Width of the initial state.
    eps_s : float
        Energy of the initial state.
    """

    variant: Variant = field(default_factory=Bare)
    C: float = 1.0
    N: int | None = None
    gamma: float = 0.0
    gamma_s: float = 0.0
    eps_s: float = 0.0

    def __post_init__(self):
        if isinstance(self.variant, Explicit):
            lv = tuple(tuple(float(v) for v in row) for row in self.variant.levels)
            if len(lv) % 2 != 1:
                raise SpecError("explicit level list must have odd length 2N+1")
            if any(len(row) != 3 for row in lv):
                raise SpecError("explicit levels are (energy, coupling, width) triples")
            object.__setattr__(self, "variant", Explicit(lv))
            object.__setattr__(self, "N", (len(lv) - 1) // 2)
        elif self.N is None:
            object.__setattr__(self, "N", default_truncation(self.C))
        if self.N < 0:
            raise SpecError("N must be non-negative")
        if self.gamma < 0 or self.gamma_s < 0:
            raise SpecError("widths must be non-negative")
        _check_variant(self.variant)

    @property
    def Gamma(self) -> float:
        """Interaction-region width ``pi C**2``."""
        return math.pi * self.C * self.C

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def truncation_ok(self) -> bool:
        """True when ``N >= ceil(10 Gamma)``."""
        return self.N >= math.ceil(10.0 * self.Gamma)


def _check_variant(v):
    if isinstance(v, HomogeneousDeformation):
        if v.sign not in (1, -1):
            raise SpecError("sign must be +1 or -1")
        if v.a < 0 or v.b < 0:
            raise SpecError("deformation constants must be non-negative")
    elif isinstance(v, Sublattices):
        if v.K < 1 or len(v.offsets) != v.K - 1:
            raise SpecError("Sublattices needs K-1 offsets")
        x = list(v.offsets)
        if any(b <= a for a, b in zip(x, x[1:])) or (x and x[-1] >= 0.5):
            raise SpecError("offsets must increase strictly and stay below 1/2")
    elif isinstance(v, MixingSublattices):
        if v.K < 1 or len(v.deltas) != v.K - 1:
            raise SpecError("MixingSublattices needs K-1 deltas")
        d = list(v.deltas)
        if any(di < 0 for di in d):
            raise SpecError("deltas must be non-negative")
        if any(di != 0 for di in d):
            if any(b <= a for a, b in zip(d, d[1:])) or d[-1] >= 0.5:
                raise SpecError("deltas must increase strictly and stay below 1/2")


def _positive_level(v, m: int, C: float):
    """Energy and coupling of the level with index ``m >= 0``."""
    if isinstance(v, Bare):
        return float(m), C
    if isinstance(v, HomogeneousDeformation):
        e = m * math.sqrt((1.0 + v.a**2 * m * m) ** v.sign)
        c = C * math.sqrt((1.0 + v.b**2 * m * m) ** v.sign)
        return e, c
    if isinstance(v, Sublattices):
        k = m % v.K
        return m + (v.offsets[k - 1] if k else 0.0), C
    if isinstance(v, MixingSublattices):
        k = m % v.K
        return m * (1.0 + (v.deltas[k - 1] if k else 0.0)), C
    raise TypeError(f"unsupported variant {v!r}")


def level(spec: ReservoirSpec, n: int):
    """Unperturbed level, coupling and width for signed index ``n``.

    Returns
    -------
    tuple of float
        ``(eps_n, C_n, gamma_n)``.
    """
    if abs(n) > spec.N:
        raise IndexError(f"level {n} outside truncation |n| <= {spec.N}")
    v = spec.variant
    if isinstance(v, Explicit):
        return v.levels[n + spec.N]
    e, c = _positive_level(v, abs(n), spec.C)
    return (math.copysign(e, n) if n else 0.0), c, spec.gamma


def level_arrays(spec: ReservoirSpec):
    """Vectors of energies, couplings and widths for ``n = -N .. N``."""
    rows = np.array([level(spec, int(n)) for n in spec.indices], dtype=float)
    return rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy()


def order_violations(energies) -> list:
    """Positions ``i`` where ``energies[i+1] <= energies[i]``."""
    e = np.asarray(energies)
    return [int(i) for i in np.nonzero(np.diff(e) <= 0)[0]]


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Bordered single-excitation Hamiltonian.

    ``matrix[0, 0]`` is the initial state; ``matrix[1 + i, 1 + i]`` is the
    level with index ``n = i - N``. ``permutations`` lists level indices ``n``
    for which ``eps_{n+1} <= eps_n`` (reported, never reordered).
    """

    matrix: np.ndarray
    energies: np.ndarray
    couplings: np.ndarray
    widths: np.ndarray
    eps_s: float
    gamma_s: float
    permutations: tuple

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def hermitian(self) -> bool:
        return self.gamma_s == 0 and not np.any(self.widths)


def build_hamiltonian(spec: ReservoirSpec) -> HamiltonianMatrix:
    """Assemble the arrow matrix for ``spec``."""
    e, c, g = level_arrays(spec)
    dim = e.size + 1
    herm = spec.gamma_s == 0 and not np.any(g)
    H = np.zeros((dim, dim), dtype=float if herm else complex)
    H[0, 0] = spec.eps_s - 1j * spec.gamma_s if not herm else spec.eps_s
    idx = np.arange(1, dim)
    H[idx, idx] = e - 1j * g if not herm else e
    H[0, 1:] = c
    H[1:, 0] = c
    perms = tuple(i - spec.N for i in order_violations(e))
    for a in (e, c, g):
        a.setflags(write=False)
    H.setflags(write=False)
    return HamiltonianMatrix(H, e, c, g, spec.eps_s, spec.gamma_s, perms)
