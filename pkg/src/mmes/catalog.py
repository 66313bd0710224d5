"""Reference states with known potentials, Pauli correlators, and the key-sharing demo."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NumericalFailure
from .potential import potential_me
from .state import PureState, apply_single_qubit

PI = np.pi

# Equal-modulus five-qubit state with every balanced purity at 1/4.
# Index 0 first; basis index k is the decimal position.
MMES5_PHASES = (
    0, 0, 0, 0, 0, PI, PI, 0,
    0, PI, PI, 0, 0, 0, 0, 0,
    0, 0, PI, PI, 0, PI, 0, PI,
    PI, 0, PI, 0, PI, PI, 0, 0,
)

# Whether a state with every balanced purity at the floor exists, per n.
TABLE_VERDICTS = {2: "exist", 3: "exist", 4: "do not exist", 5: "exist", 6: "exist", 7: "unknown"}


def table_verdict(n: int) -> str:
    if n < 2:
        raise InvalidInputError("verdicts are defined for n >= 2")
    return TABLE_VERDICTS.get(n, "do not exist")


def rotate_bits(k: int, shift: int, n: int) -> int:
    """Move qubit q to qubit (q + shift) mod n."""
    shift %= n
    full = (1 << n) - 1
    return ((k << shift) | (k >> (n - shift))) & full


def bell2_phases(phi0: float, phi1: float, phi2: float) -> np.ndarray:
    return np.array([phi0, phi1, phi2, PI - phi0 + phi1 + phi2])


def psi3_phases(phi0: float, phi1: float, phi2: float, phi4: float, phi6: float, shift: int = 0) -> np.ndarray:
    """Three-qubit family with pi_me = 1/2; ``shift`` picks the cyclic qubit relabeling."""
    base = np.array([
        phi0,
        phi1,
        phi2,
        PI - phi0 + phi1 + phi2,
        phi4,
        PI - phi0 + phi1 + phi4,
        phi6,
        -phi0 + phi1 + phi6,
    ])
    if shift % 3 == 0:
        return base
    out = np.empty(8)
    for k in range(8):
        out[rotate_bits(k, shift, 3)] = base[k]
    return out


def psi3_membership(phases, shift: int = 0, tol: float = 1e-9) -> bool:
    """Check the three linear phase constraints (mod 2 pi) of the cyclic family ``shift``."""
    f = np.asarray(phases, dtype=float)
    p = [rotate_bits(k, shift, 3) for k in range(8)]

    def close(x, target):
        return abs(np.angle(np.exp(1j * (x - target)))) < tol

    return (
        close(f[p[0]] + f[p[7]] - f[p[1]] - f[p[6]], 0.0)
        and close(f[p[2]] + f[p[5]] - f[p[4]] - f[p[3]], 0.0)
        and close(f[p[0]] + f[p[3]] - f[p[1]] - f[p[2]], PI)
    )


def _ghz(n: int) -> PureState:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return PureState(n, amps)


def _w3() -> PureState:
    amps = np.zeros(8, dtype=complex)
    amps[[1, 2, 4]] = 1 / np.sqrt(3)
    return PureState(3, amps)


@dataclass(frozen=True)
class ReferenceState:
    name: str
    n: int
    n_params: int
    expected_pi_me: float
    expected_sigma_me: float
    tolerance: float
    provenance: str
    build: Callable[..., PureState]
    description: str = ""

    def make(self, *params, shift: int = 0) -> PureState:
        if len(params) != self.n_params:
            raise InvalidInputError(f"{self.name} takes {self.n_params} parameters, got {len(params)}")
        if self.name == "psi3-family":
            return self.build(*params, shift=shift)
        return self.build(*params)

    def summary(self) -> dict:
        d = asdict(self)
        del d["build"]
        return d


_REFERENCES: dict[str, ReferenceState] = {}


def _register(ref: ReferenceState) -> None:
    _REFERENCES[ref.name] = ref


_register(ReferenceState(
    "bell2-family", 2, 3, 0.5, 0.0, 1e-12, "published family",
    lambda a, b, c: PureState.from_phases(bell2_phases(a, b, c)),
    "two-qubit phase states locally equivalent to a Bell pair",
))
_register(ReferenceState(
    "psi3-family", 3, 5, 0.5, 0.0, 1e-12, "published family",
    lambda a, b, c, d, e, shift=0: PureState.from_phases(psi3_phases(a, b, c, d, e, shift)),
    "three-qubit phase family with a cyclic qubit shift",
))
_register(ReferenceState(
    "ghz3", 3, 0, 0.5, 0.0, 1e-12, "textbook", lambda: _ghz(3), "(|000> + |111>)/sqrt(2)",
))
_register(ReferenceState(
    "w3", 3, 0, 5 / 9, 0.0, 1e-12, "textbook", _w3, "(|001> + |010> + |100>)/sqrt(3)",
))
_register(ReferenceState(
    "mmes5-eq18", 5, 0, 0.25, 0.0, 1e-12, "published phases",
    lambda: PureState.from_phases(MMES5_PHASES), "perfect five-qubit equal-modulus state",
))
for _n in range(2, 9):
    _register(ReferenceState(
        f"product{_n}", _n, 0, 1.0, 0.0, 1e-12, "textbook",
        (lambda m: lambda: PureState.basis(m, 0))(_n), f"|0...0> on {_n} qubits",
    ))

ALIASES = {"mmes5": "mmes5-eq18", "bell2": "bell2-family", "psi3": "psi3-family", "ghz": "ghz3", "w": "w3"}


def reference_names() -> list[str]:
    return list(_REFERENCES)


def get_reference(name: str) -> ReferenceState:
    key = ALIASES.get(name, name)
    if key.startswith("product(") and key.endswith(")"):
        key = "product" + key[len("product("):-1]
    if key not in _REFERENCES:
        raise InvalidInputError(f"unknown reference state {name!r}; known: {', '.join(_REFERENCES)}")
    return _REFERENCES[key]


def make_reference(name: str, *params, shift: int = 0) -> PureState:
    """Build a catalog state; parameterless families ignore ``params``.

    Families called without parameters use all-zero angles.
    """
    ref = get_reference(name)
    if not params and ref.n_params:
        params = (0.0,) * ref.n_params
    return ref.make(*params, shift=shift)


@dataclass
class Verification:
    name: str
    n: int
    expected_pi_me: float
    pi_me: float
    expected_sigma_me: float
    sigma_me: float
    residual: float
    tolerance: float
    passed: bool
    perfect: bool
    table_verdict: str
    purities: list

    def to_dict(self) -> dict:
        return asdict(self)


def verify_table(name: str, params=None, shift: int = 0) -> Verification:
    """Recompute a reference state's metrics and compare them with the catalog."""
    ref = get_reference(name)
    state = make_reference(ref.name, *(params or ()), shift=shift)
    report = potential_me(state)
    residual = max(abs(report.pi_me - ref.expected_pi_me), abs(report.sigma_me - ref.expected_sigma_me))
    perfect = bool(np.all(np.abs(report.purities - report.floor) <= ref.tolerance))
    return Verification(
        ref.name, ref.n, ref.expected_pi_me, report.pi_me, ref.expected_sigma_me, report.sigma_me,
        residual, ref.tolerance, residual <= ref.tolerance, perfect, table_verdict(ref.n),
        report.purities.tolist(),
    )


@dataclass(frozen=True)
class PauliString:
    """Tensor-product label; the leftmost letter acts on the highest qubit.

    ``"ZX"`` on two qubits is Z on qubit 1 and X on qubit 0, i.e.
    ``kron(Z, X)`` with qubit 0 the least significant bit.
    """

    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or set(letters) - set("IXYZ"):
            raise InvalidInputError(f"Pauli string {self.letters!r} must use only I, X, Y, Z")
        object.__setattr__(self, "letters", letters)

    @property
    def n(self) -> int:
        return len(self.letters)

    def on(self, qubit: int) -> str:
        return self.letters[self.n - 1 - qubit]


def pauli_expectation(state: PureState, pauli: PauliString | str) -> float:
    """<psi|P|psi> via a bit flip and a per-index phase, O(N)."""
    if isinstance(pauli, str):
        pauli = PauliString(pauli)
    if pauli.n != state.n:
        raise InvalidInputError(f"Pauli string has length {pauli.n}, state has n={state.n}")
    ks = np.arange(state.dim)
    flip = 0
    phase = np.ones(state.dim, dtype=complex)
    for q in range(state.n):
        letter = pauli.on(q)
        bit = (ks >> q) & 1
        if letter in "XY":
            flip |= 1 << q
        if letter == "Z":
            phase *= 1 - 2 * bit
        elif letter == "Y":
            # Y|0> = i|1>, Y|1> = -i|0>
            phase *= 1j * (1 - 2 * bit)
    z = state.amplitudes
    value = np.sum(z[ks ^ flip].conj() * phase * z)
    if abs(value.imag) > 1e-12:
        raise NumericalFailure(f"Hermitian expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


_TO_Z_BASIS = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2),
}


def sample_pauli_outcomes(state: PureState, pauli: PauliString | str, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Projective measurement of each non-identity factor.

    Returns a ``(shots, n)`` array of +1/-1 outcomes, column ``j`` for label
    position ``j`` (0 for identity factors).
    """
    if isinstance(pauli, str):
        pauli = PauliString(pauli)
    if pauli.n != state.n:
        raise InvalidInputError(f"Pauli string has length {pauli.n}, state has n={state.n}")
    amps = state.amplitudes
    for q in range(state.n):
        letter = pauli.on(q)
        if letter != "I":
            amps = apply_single_qubit(amps, _TO_Z_BASIS[letter], q, state.n)
    probs = np.abs(amps) ** 2
    probs /= probs.sum()
    ks = rng.choice(state.dim, size=shots, p=probs)
    out = np.zeros((shots, state.n), dtype=int)
    for j, letter in enumerate(pauli.letters):
        if letter != "I":
            q = state.n - 1 - j
            out[:, j] = 1 - 2 * ((ks >> q) & 1)
    return out


def key_demo(seed: int, shots: int = 10_000, observable: str = "ZZYYZ", pair: tuple[int, int] = (1, 2)) -> dict:
    """Simulate the five-party correlated measurement on the perfect five-qubit state.

    Parties are numbered 1..5 from the left of the observable label. Everyone
    measures their factor; all parties except ``pair`` publish outcomes, after
    which the second member of ``pair`` infers the first member's bit.
    """
    state = make_reference("mmes5-eq18")
    pauli = PauliString(observable)
    if pauli.n != state.n:
        raise InvalidInputError("the demo observable must act on five qubits")
    i, j = pair
    if not (1 <= i <= 5 and 1 <= j <= 5 and i != j):
        raise InvalidInputError(f"pair must name two distinct parties in 1..5, got {pair}")
    rng = np.random.default_rng(seed)
    s = sample_pauli_outcomes(state, pauli, shots, rng)
    parity = s.prod(axis=1)
    others = [p for p in range(1, 6) if p not in (i, j)]
    inferred = s[:, j - 1] * s[:, [p - 1 for p in others]].prod(axis=1)
    key_a = (1 - s[:, i - 1]) // 2
    key_b = (1 - inferred) // 2

    band = 5.0
    single_sigma = np.sqrt(0.25 / shots)
    single = {str(p): float(np.mean(s[:, p - 1] == 1)) for p in range(1, 6)}
    single_z = max(abs(f - 0.5) / single_sigma for f in single.values())
    pair_sigma = np.sqrt(0.25 * 0.75 / shots)
    pairs = {}
    pair_z = 0.0
    for a, b in combinations(range(1, 6), 2):
        freqs = []
        for va in (1, -1):
            for vb in (1, -1):
                f = float(np.mean((s[:, a - 1] == va) & (s[:, b - 1] == vb)))
                freqs.append(f)
                pair_z = max(pair_z, abs(f - 0.25) / pair_sigma)
        pairs[f"{a},{b}"] = freqs
    return {
        "seed": seed,
        "shots": shots,
        "observable": pauli.letters,
        "expectation": pauli_expectation(state, pauli),
        "parity_violations": int(np.sum(parity != 1)),
        "parity_always_plus": bool(np.all(parity == 1)),
        "key_parties": [i, j],
        "publishing_parties": others,
        "key_agreement": float(np.mean(key_a == key_b)),
        "key_sample": "".join(str(int(b)) for b in key_a[:64]),
        "single_plus_frequencies": single,
        "single_max_sigma": float(single_z),
        "pair_frequencies": pairs,
        "pair_max_sigma": float(pair_z),
        "flat_band_sigma": band,
        "flat": bool(single_z <= band and pair_z <= band),
    }
