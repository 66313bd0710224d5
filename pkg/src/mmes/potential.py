"""Average purity over balanced bipartitions and its alternative evaluation paths."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from .errors import CapacityError, InvalidInputError
from .state import (
    MAX_QUBITS,
    Bipartition,
    PureState,
    balanced_purities,
    enumerate_balanced,
    matricize,
)

DELTA_CAP = 8
NAIVE_DELTA_CAP = 6


@dataclass
class PurityReport:
    n: int
    n_a: int
    purities: np.ndarray
    pi_me: float
    sigma_me: float
    min: float
    max: float

    @classmethod
    def from_purities(cls, n: int, purities) -> PurityReport:
        p = np.asarray(purities, dtype=float)
        mean = float(p.mean())
        # population variance, not sample variance
        sigma = float(np.sqrt(np.mean((p - mean) ** 2)))
        return cls(n, n // 2, p, mean, sigma, float(p.min()), float(p.max()))

    @property
    def floor(self) -> float:
        return 1.0 / (1 << self.n_a)

    def cost(self, lam: float) -> float:
        return self.pi_me + lam * self.sigma_me

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_a": self.n_a,
            "purities": [float(x) for x in self.purities],
            "pi_me": self.pi_me,
            "sigma_me": self.sigma_me,
            "min": self.min,
            "max": self.max,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def potential_me(state: PureState) -> PurityReport:
    """Purity of every balanced bipartition, with mean and spread."""
    if state.n < 2:
        raise InvalidInputError("the potential needs n >= 2")
    return PurityReport.from_purities(state.n, balanced_purities(state.amplitudes, state.n))


def cost(state: PureState, lam: float) -> float:
    if lam < 0:
        raise InvalidInputError(f"lambda must be nonnegative, got {lam}")
    return potential_me(state).cost(lam)


@dataclass(frozen=True)
class DeltaKernel:
    """Combinatorial weights of the quartic form for the average purity.

    ``g(a, b)`` is the fraction of balanced subsets A that contain every bit
    of ``a`` and none of ``b``.
    """

    n: int
    n_a: int = field(default=-1)

    def __post_init__(self):
        if not 2 <= self.n <= MAX_QUBITS:
            raise InvalidInputError(f"n must be in [2, {MAX_QUBITS}]")
        if self.n_a < 0:
            object.__setattr__(self, "n_a", self.n // 2)

    def g(self, a: int, b: int) -> float:
        return _g_table(self.n, self.n_a)[a.bit_count(), b.bit_count()] if not a & b else 0.0

    def table(self) -> np.ndarray:
        """``T[|a|, |b|]``, valid only for disjoint ``a``, ``b``."""
        return _g_table(self.n, self.n_a)


def _binom(x: int, y: int) -> int:
    if y < 0 or x < 0 or y > x:
        return 0
    return comb(x, y)


@lru_cache(maxsize=None)
def _g_table(n: int, n_a: int) -> np.ndarray:
    total = comb(n, n_a)
    t = np.zeros((n + 1, n + 1))
    for wa in range(n + 1):
        for wb in range(n + 1 - wa):
            t[wa, wb] = _binom(n - wa - wb, n_a - wa) / total
    t.setflags(write=False)
    return t


def g_coeff(kernel: DeltaKernel, a: int, b: int) -> float:
    return kernel.g(a, b)


def potential_via_delta(state: PureState, cap: int = DELTA_CAP) -> float:
    """Average purity from the quartic form with combinatorial weights.

    Writing the four indices as ``k1 = k``, ``l1 = k^x``, ``l2 = k^u``,
    ``k2 = k^x^u``, only disjoint ``(x, u)`` survive, so the sum has
    ``3**n * 2**n`` terms instead of ``2**(4n)``.
    """
    n = state.n
    if n > cap:
        raise CapacityError(f"delta-kernel path is capped at n <= {cap}, got n={n}")
    if n < 2:
        raise InvalidInputError("the potential needs n >= 2")
    z = state.amplitudes
    zc = z.conj()
    dim = 1 << n
    ks = np.arange(dim)
    weights = DeltaKernel(n).table()
    pop = np.array([k.bit_count() for k in range(dim)])
    total = 0.0 + 0.0j
    for x in range(dim):
        # all submasks of the complement of x
        us = ks[(ks & x) == 0]
        w = weights[pop[x], pop[us]]
        keep = w != 0
        if not keep.any():
            continue
        us, w = us[keep], w[keep]
        terms = z[None, :] * z[ks[None, :] ^ us[:, None] ^ x] * zc[ks ^ x][None, :] * zc[ks[None, :] ^ us[:, None]]
        total += np.dot(w, terms.sum(axis=1))
    return float(total.real)


def potential_via_delta_naive(state: PureState, cap: int = NAIVE_DELTA_CAP) -> float:
    """Full quadruple scan with the weights evaluated per index tuple."""
    n = state.n
    if n > cap:
        raise CapacityError(f"naive delta scan is capped at n <= {cap}, got n={n}")
    z = state.amplitudes
    dim = 1 << n
    ks = np.arange(dim)
    kernel = DeltaKernel(n)
    pop = np.array([k.bit_count() for k in range(dim)])
    table = kernel.table()
    k2 = ks[:, None, None]
    l1 = ks[None, :, None]
    l2 = ks[None, None, :]
    total = 0.0 + 0.0j
    for k1 in range(dim):
        a = (k1 ^ l1) | (k2 ^ l2)
        b = (k1 ^ l2) | (k2 ^ l1)
        w = np.where((a & b) == 0, table[pop[a], pop[b]], 0.0)
        quad = z[k1] * z[k2] * z[l1].conj() * z[l2].conj()
        total += np.sum(w * quad)
    return float(total.real)


def phase_purity(phases, bp: Bipartition) -> float:
    """Purity of an equal-modulus state from its phases alone.

    ``(N_A + N_B - 1)/N`` plus ``1/N**2`` times the sum of ``cos x`` over
    ordered quadruples ``l != l'``, ``m != m'``.
    """
    phases = np.asarray(phases, dtype=float).ravel()
    if phases.shape[0] != 1 << bp.n:
        raise InvalidInputError(f"expected {1 << bp.n} phases, got {phases.shape[0]}")
    dim = phases.shape[0]
    typical = (bp.dim_a + bp.dim_b - 1) / dim
    return typical + float(np.cos(cosine_arguments(phases, bp)).sum()) / dim**2


def cosine_arguments(phases: np.ndarray, bp: Bipartition) -> np.ndarray:
    """Flat array of ``x = f[l,m] - f[l',m] + f[l',m'] - f[l,m']`` for l != l', m != m'.

    ``l`` indexes part A and ``m`` the complement, ``f[l, m] = phases[merge(l, m)]``.
    """
    f = matricize(phases, bp.n, bp.mask)
    na, nb = f.shape
    x = f[:, None, :, None] - f[None, :, :, None] + f[None, :, None, :] - f[:, None, None, :]
    off_a = ~np.eye(na, dtype=bool)
    off_b = ~np.eye(nb, dtype=bool)
    return x[off_a[:, :, None, None] & off_b[None, None, :, :]]


def phase_purities(phases) -> np.ndarray:
    phases = np.asarray(phases, dtype=float).ravel()
    n = int(phases.shape[0]).bit_length() - 1
    return np.array([phase_purity(phases, bp) for bp in enumerate_balanced(n)])
