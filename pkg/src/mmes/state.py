"""Pure n-qubit states, bipartitions, and the purity kernel.

Basis convention: qubit ``i`` is bit ``i`` of the basis index, so qubit 0 is
the least significant bit. A bipartition is a bitmask over qubits; bit ``i``
set means qubit ``i`` belongs to part A.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidStateError

MAX_QUBITS = 16
NORM_TOL = 1e-9
PHASE_TOL = 1e-12

# above this many gathered entries the batched kernel falls back to a loop
_BATCH_LIMIT = 1 << 22


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector of length ``2**n``.

    ``phase_only`` marks states whose moduli are all ``1/sqrt(N)``; those are
    fully described by a phase vector.
    """

    n: int
    amplitudes: np.ndarray
    phase_only: bool = False

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise InvalidInputError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.shape[0] != 1 << self.n:
            raise InvalidStateError(
                f"expected {1 << self.n} amplitudes for n={self.n}, got {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state is not normalized: |psi|^2 = {norm2!r}")
        if self.phase_only:
            dev = np.max(np.abs(np.abs(amps) - 1.0 / np.sqrt(amps.shape[0])))
            if dev > PHASE_TOL:
                raise InvalidStateError(f"phase_only state has modulus deviation {dev:.3g}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> PureState:
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        n = _qubits_for_length(amps.shape[0])
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0 or not np.isfinite(norm):
                raise InvalidStateError("cannot normalize a zero or non-finite vector")
            amps = amps / norm
        return cls(n, amps)

    @classmethod
    def from_phases(cls, phases) -> PureState:
        phases = np.asarray(phases, dtype=float).ravel()
        n = _qubits_for_length(phases.shape[0])
        amps = np.exp(1j * phases) / np.sqrt(phases.shape[0])
        return cls(n, amps, phase_only=True)

    @classmethod
    def basis(cls, n: int, k: int = 0) -> PureState:
        amps = np.zeros(1 << n, dtype=complex)
        amps[k] = 1.0
        return cls(n, amps)

    def phases(self) -> np.ndarray:
        """Arguments of the amplitudes, in ``(-pi, pi]``."""
        return np.angle(self.amplitudes)

    def to_dict(self) -> dict:
        if self.phase_only:
            return {"n": self.n, "format": "phases", "phases": self.phases().tolist()}
        return {
            "n": self.n,
            "format": "complex",
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes],
        }

    @classmethod
    def from_dict(cls, data: dict, renormalize: bool = False) -> PureState:
        """Parse the JSON state schema.

        Either ``{"n", "format": "complex", "amplitudes": [[re, im], ...]}``
        or ``{"phases": [...]}`` (``n`` and ``"format": "phases"`` optional).
        """
        fmt = data.get("format", "phases" if "phases" in data else "complex")
        if fmt == "phases":
            if "phases" not in data:
                raise InvalidInputError("phase-format state needs a 'phases' array")
            state = cls.from_phases(data["phases"])
        elif fmt == "complex":
            if "amplitudes" not in data:
                raise InvalidInputError("complex-format state needs an 'amplitudes' array")
            pairs = np.asarray(data["amplitudes"], dtype=float)
            if pairs.ndim != 2 or pairs.shape[1] != 2:
                raise InvalidInputError("amplitudes must be a list of [re, im] pairs")
            state = cls.from_amplitudes(pairs[:, 0] + 1j * pairs[:, 1], normalize=renormalize)
        else:
            raise InvalidInputError(f"unknown state format {fmt!r}")
        if "n" in data and int(data["n"]) != state.n:
            raise InvalidInputError(f"declared n={data['n']} does not match {state.dim} entries")
        return state


def _qubits_for_length(length: int) -> int:
    n = int(length).bit_length() - 1
    if length < 2 or 1 << n != length:
        raise InvalidStateError(f"length {length} is not a power of two >= 2")
    return n


def load_state(path, renormalize: bool = False) -> PureState:
    data = json.loads(Path(path).read_text())
    # run records embed their best state
    if "best_state" in data:
        data = data["best_state"]
    return PureState.from_dict(data, renormalize=renormalize)


def save_state(state: PureState, path) -> None:
    Path(path).write_text(json.dumps(state.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class Bipartition:
    n: int
    mask: int

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("a bipartition needs at least two qubits")
        full = (1 << self.n) - 1
        if self.mask <= 0 or self.mask >= full:
            raise InvalidInputError(f"mask {self.mask:#b} must leave both parts nonempty for n={self.n}")

    @property
    def n_a(self) -> int:
        return self.mask.bit_count()

    @property
    def n_b(self) -> int:
        return self.n - self.n_a

    @property
    def dim_a(self) -> int:
        return 1 << self.n_a

    @property
    def dim_b(self) -> int:
        return 1 << self.n_b

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.n) if self.mask >> q & 1)

    def complement(self) -> Bipartition:
        return Bipartition(self.n, ((1 << self.n) - 1) ^ self.mask)


def enumerate_balanced(n: int, canonical: bool = False) -> list[Bipartition]:
    """All subsets of size ``n // 2`` in ascending mask order.

    With ``canonical`` set and ``n`` even, only subsets containing qubit 0 are
    kept; since a part and its complement have equal purity, the average is
    unchanged.
    """
    if n < 2:
        raise InvalidInputError(f"balanced bipartitions need n >= 2, got {n}")
    if n > MAX_QUBITS:
        raise InvalidInputError(f"n={n} exceeds the supported maximum of {MAX_QUBITS}")
    return [Bipartition(n, m) for m in _balanced_masks(n, canonical)]


@lru_cache(maxsize=None)
def _balanced_masks(n: int, canonical: bool) -> tuple[int, ...]:
    masks = sorted(sum(1 << q for q in c) for c in combinations(range(n), n // 2))
    if canonical and n % 2 == 0:
        masks = [m for m in masks if m & 1]
    return tuple(masks)


def split_index(k: int, bp: Bipartition) -> tuple[int, int]:
    """Split basis index ``k`` into its A part and its complement part."""
    a = b = 0
    ja = jb = 0
    for q in range(bp.n):
        bit = k >> q & 1
        if bp.mask >> q & 1:
            a |= bit << ja
            ja += 1
        else:
            b |= bit << jb
            jb += 1
    return a, b


def merge_index(a: int, b: int, bp: Bipartition) -> int:
    k = 0
    ja = jb = 0
    for q in range(bp.n):
        if bp.mask >> q & 1:
            k |= (a >> ja & 1) << q
            ja += 1
        else:
            k |= (b >> jb & 1) << q
            jb += 1
    return k


def matricize(vec: np.ndarray, n: int, mask: int) -> np.ndarray:
    """Reshape a length-``2**n`` vector to ``M[a, b] = vec[merge(a, b)]``."""
    a_q = [q for q in range(n) if mask >> q & 1]
    b_q = [q for q in range(n) if not mask >> q & 1]
    # C-order axis j holds qubit n-1-j
    axes = [n - 1 - q for q in reversed(a_q)] + [n - 1 - q for q in reversed(b_q)]
    return np.asarray(vec).reshape((2,) * n).transpose(axes).reshape(1 << len(a_q), 1 << len(b_q))


def _check_pair(state: PureState, bp: Bipartition) -> None:
    if bp.n != state.n:
        raise InvalidInputError(f"bipartition is for n={bp.n}, state has n={state.n}")


def purity(state: PureState, bp: Bipartition) -> float:
    """Tr(rho_A^2) through the Gram matrix of the reshaped amplitudes."""
    _check_pair(state, bp)
    m = matricize(state.amplitudes, state.n, bp.mask)
    if m.shape[0] > m.shape[1]:
        m = m.T
    gram = m @ m.conj().T
    return float(np.vdot(gram, gram).real)


@lru_cache(maxsize=256)
def _oracle_table(n: int, mask: int) -> np.ndarray:
    bp = Bipartition(n, mask)
    table = np.empty((bp.dim_a, bp.dim_b), dtype=np.int64)
    for a in range(bp.dim_a):
        for b in range(bp.dim_b):
            table[a, b] = merge_index(a, b, bp)
    return table


def purity_oracle(state: PureState, bp: Bipartition) -> float:
    """Reference purity: build rho_A explicitly by summing over the complement."""
    _check_pair(state, bp)
    table = _oracle_table(state.n, bp.mask)
    rho = np.zeros((bp.dim_a, bp.dim_a), dtype=complex)
    for b in range(bp.dim_b):
        col = state.amplitudes[table[:, b]]
        rho += np.outer(col, col.conj())
    return float(np.trace(rho @ rho).real)


@lru_cache(maxsize=32)
def balanced_index_table(n: int, canonical: bool = False) -> np.ndarray:
    """Gather indices of shape (K, N_A, N_B) for every balanced bipartition."""
    ks = np.arange(1 << n)
    table = np.stack([matricize(ks, n, m) for m in _balanced_masks(n, canonical)])
    table.setflags(write=False)
    return table


def _use_batch(n: int, canonical: bool) -> bool:
    return len(_balanced_masks(n, canonical)) << n <= _BATCH_LIMIT


def balanced_purities(amps: np.ndarray, n: int, canonical: bool = False) -> np.ndarray:
    """Purities of all balanced bipartitions of a raw amplitude vector."""
    if not _use_batch(n, canonical):
        out = []
        for mask in _balanced_masks(n, canonical):
            m = matricize(amps, n, mask)
            gram = m @ m.conj().T
            out.append(np.vdot(gram, gram).real)
        return np.array(out)
    m = amps[balanced_index_table(n, canonical)]
    gram = m @ m.conj().transpose(0, 2, 1)
    return np.einsum("kij,kij->k", gram, gram.conj()).real


def balanced_purities_with_grad(amps: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Purities and their Wirtinger derivatives d(pi_A)/d(conj z).

    Returns ``(p, g)`` with ``g`` of shape (K, 2**n); ``g[A, k] = 2 (C M)[a, b]``
    where ``C = M M^dagger`` and ``k = merge(a, b)``.
    """
    masks = _balanced_masks(n, False)
    dim = 1 << n
    if not _use_batch(n, False):
        p = np.empty(len(masks))
        g = np.empty((len(masks), dim), dtype=complex)
        ks = np.arange(dim)
        for i, mask in enumerate(masks):
            m = matricize(amps, n, mask)
            gram = m @ m.conj().T
            p[i] = np.vdot(gram, gram).real
            g[i, matricize(ks, n, mask).ravel()] = (2.0 * gram @ m).ravel()
        return p, g
    table = balanced_index_table(n, False)
    m = amps[table]
    gram = m @ m.conj().transpose(0, 2, 1)
    p = np.einsum("kij,kij->k", gram, gram.conj()).real
    cm = 2.0 * (gram @ m)
    g = np.empty((len(masks), dim), dtype=complex)
    np.put_along_axis(g, table.reshape(len(masks), dim), cm.reshape(len(masks), dim), axis=1)
    return p, g


def parse_mask(text: str, n: int) -> Bipartition:
    """Accepts ``0b0101``, ``0x5``, decimal ``5``, or a qubit list ``0,2``."""
    text = text.strip()
    try:
        if "," in text:
            qubits = {int(t) for t in text.split(",") if t.strip()}
            if any(q < 0 or q >= n for q in qubits):
                raise InvalidInputError(f"qubit list {text!r} has entries outside [0, {n})")
            mask = sum(1 << q for q in qubits)
        else:
            mask = int(text, 0)
    except ValueError as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"cannot parse mask {text!r}") from None
    return Bipartition(n, mask)


def random_state(n: int, rng: np.random.Generator) -> PureState:
    """Normalized complex Gaussian amplitudes (Haar-distributed)."""
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return PureState(n, z / np.linalg.norm(z))


def random_phase_state(n: int, rng: np.random.Generator) -> PureState:
    return PureState.from_phases(rng.uniform(0.0, 2 * np.pi, 1 << n))


def apply_single_qubit(state: PureState | np.ndarray, unitary: np.ndarray, qubit: int, n: int | None = None) -> np.ndarray:
    """Apply a 2x2 matrix to one qubit and return the new amplitude vector."""
    amps = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    if n is None:
        n = _qubits_for_length(amps.shape[0])
    t = amps.reshape((2,) * n)
    axis = n - 1 - qubit
    t = np.moveaxis(np.tensordot(unitary, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def product_state(local: Sequence[np.ndarray]) -> PureState:
    """Tensor product of single-qubit vectors; ``local[i]`` is qubit ``i``."""
    amps = np.array([1.0 + 0j])
    for v in local:
        v = np.asarray(v, dtype=complex)
        amps = np.kron(v / np.linalg.norm(v), amps)
    return PureState.from_amplitudes(amps)
