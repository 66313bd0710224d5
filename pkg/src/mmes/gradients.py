"""Analytic derivatives of the average purity and of the penalized cost.

Two parametrizations are supported:

* ``phases``: ``N`` real phases, amplitudes ``exp(i phi_k) / sqrt(N)``.
* ``complex``: ``2N`` reals ``(Re w, Im w)``; the state is ``w / |w|``, so the
  gradient is automatically tangent to the unit sphere at ``|w| = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .state import PureState, balanced_purities, balanced_purities_with_grad

KINDS = ("phases", "complex")
PENALTIES = ("std", "variance")


@dataclass(frozen=True)
class Parametrization:
    kind: str
    n: int
    gauge: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown parametrization {self.kind!r}; expected one of {KINDS}")
        if self.n < 2:
            raise InvalidInputError("parametrizations need n >= 2")

    @classmethod
    def phases(cls, n: int, pin_first: bool = True) -> Parametrization:
        return cls("phases", n, (0,) if pin_first else ())

    @classmethod
    def complex(cls, n: int) -> Parametrization:
        return cls("complex", n)

    @property
    def dim(self) -> int:
        return (1 << self.n) * (1 if self.kind == "phases" else 2)

    @property
    def free(self) -> np.ndarray:
        """Indices the optimizer is allowed to move."""
        mask = np.ones(self.dim, dtype=bool)
        mask[list(self.gauge)] = False
        return np.flatnonzero(mask)

    def amplitudes(self, params: np.ndarray) -> np.ndarray:
        params = self._check(params)
        dim = 1 << self.n
        if self.kind == "phases":
            return np.exp(1j * params) / np.sqrt(dim)
        w = params[:dim] + 1j * params[dim:]
        return w / np.linalg.norm(w)

    def decode(self, params) -> PureState:
        amps = self.amplitudes(params)
        return PureState(self.n, amps, phase_only=self.kind == "phases")

    def encode(self, state: PureState) -> np.ndarray:
        if state.n != self.n:
            raise InvalidInputError(f"state has n={state.n}, parametrization n={self.n}")
        if self.kind == "phases":
            if not state.phase_only:
                raise InvalidInputError("only equal-modulus states can be encoded as phases")
            return np.angle(state.amplitudes)
        return np.concatenate([state.amplitudes.real, state.amplitudes.imag])

    def random(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform phases on [0, 2 pi) or a normalized complex Gaussian."""
        if self.kind == "phases":
            params = rng.uniform(0.0, 2 * np.pi, self.dim)
            params[list(self.gauge)] = 0.0
            return params
        params = rng.standard_normal(self.dim)
        return params / np.linalg.norm(params)

    def _check(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.dim,):
            raise InvalidInputError(f"expected {self.dim} parameters, got shape {params.shape}")
        return params


def _weights(p: np.ndarray, lam: float, penalty: str) -> tuple[float, np.ndarray, float, float]:
    k = p.shape[0]
    mean = float(p.mean())
    dev = p - mean
    var = float(np.mean(dev**2))
    sigma = float(np.sqrt(var))
    w = np.full(k, 1.0 / k)
    if penalty == "variance":
        value = mean + lam * var
        w = w + lam * 2.0 * dev / k
    else:
        value = mean + lam * sigma
        # subgradient 0 at the kink sigma = 0
        if lam and sigma > 0:
            w = w + lam * dev / (k * sigma)
    return value, w, mean, sigma


def objective(params, par: Parametrization, lam: float = 0.0, penalty: str = "std") -> float:
    """``pi_me + lam * sigma_me`` (or ``lam * sigma_me**2`` with ``penalty='variance'``)."""
    _check_lambda(lam, penalty)
    p = balanced_purities(par.amplitudes(params), par.n)
    return _weights(p, lam, penalty)[0]


def objective_and_grad(
    params, par: Parametrization, lam: float = 0.0, penalty: str = "std"
) -> tuple[float, np.ndarray, float, float]:
    """Return ``(value, gradient, pi_me, sigma_me)``."""
    _check_lambda(lam, penalty)
    params = par._check(params)
    dim = 1 << par.n
    z = par.amplitudes(params)
    p, dp = balanced_purities_with_grad(z, par.n)
    value, w, mean, sigma = _weights(p, lam, penalty)
    # d f / d conj(z); real-coordinate gradient is 2 * this
    wirt = 2.0 * (w @ dp)
    if par.kind == "phases":
        grad = np.imag(z.conj() * wirt)
    else:
        gz = np.concatenate([wirt.real, wirt.imag])
        zr = np.concatenate([z.real, z.imag])
        norm = np.linalg.norm(params[:dim] + 1j * params[dim:])
        grad = (gz - np.dot(zr, gz) * zr) / norm
    return value, grad, mean, sigma


def grad_potential(params, par: Parametrization, lam: float = 0.0, penalty: str = "std") -> np.ndarray:
    return objective_and_grad(params, par, lam, penalty)[1]


def _check_lambda(lam: float, penalty: str) -> None:
    if lam < 0:
        raise InvalidInputError(f"lambda must be nonnegative, got {lam}")
    if penalty not in PENALTIES:
        raise InvalidInputError(f"unknown penalty {penalty!r}; expected one of {PENALTIES}")


def fd_gradient(params, par: Parametrization, lam: float = 0.0, h: float = 1e-5, penalty: str = "std") -> np.ndarray:
    params = par._check(params).copy()
    out = np.empty_like(params)
    for i in range(params.shape[0]):
        old = params[i]
        params[i] = old + h
        up = objective(params, par, lam, penalty)
        params[i] = old - h
        down = objective(params, par, lam, penalty)
        params[i] = old
        out[i] = (up - down) / (2 * h)
    return out


def fd_check(
    params, par: Parametrization, lam: float = 0.0, h: float = 1e-5,
    penalty: str = "std", abs_floor: float = 1e-12,
) -> float:
    """Worst componentwise ``|analytic - fd| / max(|fd|, abs_floor)``."""
    if not 1e-8 <= h <= 1e-3:
        raise InvalidInputError(f"step h must lie in [1e-8, 1e-3], got {h}")
    analytic = grad_potential(params, par, lam, penalty)
    numeric = fd_gradient(params, par, lam, h, penalty)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(numeric), abs_floor)))
