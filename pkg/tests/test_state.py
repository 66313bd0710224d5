import json
from math import comb

import numpy as np
import pytest

from mmes.errors import InvalidInputError, InvalidStateError
from mmes.state import (
    Bipartition,
    PureState,
    apply_single_qubit,
    balanced_purities,
    enumerate_balanced,
    load_state,
    matricize,
    merge_index,
    parse_mask,
    product_state,
    purity,
    purity_oracle,
    random_state,
    save_state,
    split_index,
)


def bell():
    return PureState.from_amplitudes([1, 0, 0, 1], normalize=True)


def w3():
    amps = np.zeros(8)
    amps[[1, 2, 4]] = 1
    return PureState.from_amplitudes(amps, normalize=True)


def ghz(n):
    amps = np.zeros(1 << n)
    amps[[0, -1]] = 1
    return PureState.from_amplitudes(amps, normalize=True)


class TestPureState:
    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidStateError, match="not normalized"):
            PureState(1, [1.0, 1.0])

    def test_tolerance_is_1e9(self):
        PureState(1, [np.sqrt(1 + 5e-10), 0])
        with pytest.raises(InvalidStateError):
            PureState(1, [np.sqrt(1 + 5e-9), 0])

    def test_renormalize_on_request(self):
        s = PureState.from_amplitudes([3, 4j], normalize=True)
        assert np.isclose(np.vdot(s.amplitudes, s.amplitudes).real, 1.0)

    def test_length_must_match(self):
        with pytest.raises(InvalidStateError):
            PureState(2, [1, 0, 0])
        with pytest.raises(InvalidStateError):
            PureState.from_amplitudes([1, 0, 0])

    def test_phase_only_invariant(self):
        s = PureState.from_phases([0.1, 2.0, -1.0, 3.0])
        assert s.phase_only
        assert np.allclose(np.abs(s.amplitudes), 0.5, atol=1e-15)
        with pytest.raises(InvalidStateError):
            PureState(2, [1, 0, 0, 0], phase_only=True)

    def test_amplitudes_are_read_only(self):
        s = bell()
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0

    @pytest.mark.parametrize("state", [bell(), PureState.from_phases(np.arange(8.0))])
    def test_json_roundtrip(self, state, tmp_path):
        path = tmp_path / "s.json"
        save_state(state, path)
        back = load_state(path)
        assert back.n == state.n and back.phase_only == state.phase_only
        assert np.allclose(back.amplitudes, state.amplitudes, atol=1e-15)

    def test_json_schema_fields(self):
        d = bell().to_dict()
        assert d["format"] == "complex" and d["n"] == 2 and len(d["amplitudes"][0]) == 2
        d = PureState.from_phases([0, 0]).to_dict()
        assert set(d) == {"n", "format", "phases"}

    def test_phases_only_document_without_n(self):
        s = PureState.from_dict({"phases": [0, 0, 0, np.pi]})
        assert s.n == 2 and s.phase_only

    def test_declared_n_must_match(self):
        with pytest.raises(InvalidInputError):
            PureState.from_dict({"n": 3, "phases": [0, 0, 0, 0]})

    def test_load_renormalize_flag(self, tmp_path):
        path = tmp_path / "raw.json"
        path.write_text(json.dumps({"n": 1, "format": "complex", "amplitudes": [[1, 0], [1, 0]]}))
        with pytest.raises(InvalidStateError):
            load_state(path)
        assert np.isclose(abs(load_state(path, renormalize=True).amplitudes[0]) ** 2, 0.5)


class TestBipartitions:
    @pytest.mark.parametrize("n", range(2, 11))
    def test_count_and_sizes(self, n):
        bps = enumerate_balanced(n)
        assert len(bps) == comb(n, n // 2)
        assert all(bp.n_a == n // 2 for bp in bps)
        assert [bp.mask for bp in bps] == sorted(bp.mask for bp in bps)

    def test_small_cases(self):
        assert [bp.mask for bp in enumerate_balanced(2)] == [0b01, 0b10]
        assert len(enumerate_balanced(6)) == 20
        assert len(enumerate_balanced(5)) == 10

    def test_canonical_halves_even_n(self):
        assert len(enumerate_balanced(6, canonical=True)) == 10
        assert all(bp.mask & 1 for bp in enumerate_balanced(6, canonical=True))
        assert len(enumerate_balanced(5, canonical=True)) == 10

    def test_n_below_two(self):
        with pytest.raises(InvalidInputError):
            enumerate_balanced(1)

    @pytest.mark.parametrize("mask", [0, 0b1111])
    def test_both_parts_nonempty(self, mask):
        with pytest.raises(InvalidInputError):
            Bipartition(4, mask)

    def test_complement(self):
        bp = Bipartition(5, 0b00101)
        assert bp.complement().mask == 0b11010
        assert bp.dim_a == 4 and bp.dim_b == 8


class TestIndexSplit:
    def test_examples(self):
        bp = Bipartition(4, 0b0011)
        assert split_index(0b1011, bp) == (0b11, 0b10)
        assert split_index(0, bp) == (0, 0)
        assert split_index(15, bp) == (bp.dim_a - 1, bp.dim_b - 1)

    def test_order_preserving(self):
        bp = Bipartition(5, 0b10100)
        # qubit 2 -> bit 0 of a, qubit 4 -> bit 1 of a
        assert split_index(0b10000, bp) == (0b10, 0)
        assert split_index(0b00100, bp) == (0b01, 0)

    def test_roundtrip_all_indices(self, rng):
        for n in range(2, 13):
            mask = int(rng.integers(1, (1 << n) - 1))
            bp = Bipartition(n, mask)
            for k in range(1 << n):
                assert merge_index(*split_index(k, bp), bp) == k

    def test_matricize_matches_merge(self, rng):
        for n in (3, 4, 6):
            mask = int(rng.integers(1, (1 << n) - 1))
            bp = Bipartition(n, mask)
            table = matricize(np.arange(1 << n), n, mask)
            for a in range(bp.dim_a):
                for b in range(bp.dim_b):
                    assert table[a, b] == merge_index(a, b, bp)

    @pytest.mark.parametrize("text,mask", [("0b0101", 5), ("5", 5), ("0,2", 5), ("0x3", 3), ("3,", 8)])
    def test_parse_mask(self, text, mask):
        assert parse_mask(text, 4).mask == mask

    @pytest.mark.parametrize("text", ["0,9", "abc", "0", "15"])
    def test_parse_mask_errors(self, text):
        with pytest.raises(InvalidInputError):
            parse_mask(text, 4)


class TestPurity:
    def test_bell(self):
        assert purity(bell(), Bipartition(2, 0b01)) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("mask", [0b0001, 0b0011, 0b0110, 0b0111])
    def test_product_basis_state(self, mask):
        assert purity(PureState.basis(4, 0), Bipartition(4, mask)) == pytest.approx(1.0, abs=1e-15)

    def test_w_state(self):
        # oracle: rho_A = diag(2/3, 1/3) for one qubit, so Tr rho^2 = 4/9 + 1/9
        amps = w3().amplitudes
        rho = np.zeros((2, 2), dtype=complex)
        for k in range(8):
            for kp in range(8):
                if k >> 1 == kp >> 1:
                    rho[k & 1, kp & 1] += amps[k] * amps[kp].conj()
        oracle = float(np.sum(np.linalg.eigvalsh(rho) ** 2))
        assert oracle == pytest.approx(5 / 9, abs=1e-15)
        assert purity(w3(), Bipartition(3, 0b001)) == pytest.approx(5 / 9, abs=1e-14)

    def test_ghz_oracle(self):
        assert purity_oracle(ghz(3), Bipartition(3, 0b011)) == pytest.approx(0.5, abs=1e-15)

    def test_random_product_states(self, rng):
        local = [rng.standard_normal(2) + 1j * rng.standard_normal(2) for _ in range(5)]
        s = product_state(local)
        for bp in enumerate_balanced(5):
            assert purity(s, bp) == pytest.approx(1.0, abs=1e-12)
            assert purity_oracle(s, bp) == pytest.approx(1.0, abs=1e-12)

    def test_matches_oracle(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 9))
            s = random_state(n, rng)
            mask = int(rng.integers(1, (1 << n) - 1))
            bp = Bipartition(n, mask)
            assert abs(purity(s, bp) - purity_oracle(s, bp)) < 1e-12

    def test_complement_symmetry(self, rng):
        s = random_state(6, rng)
        bp = Bipartition(6, 0b000111)
        assert abs(purity(s, bp) - purity(s, bp.complement())) < 1e-12
        unbalanced = Bipartition(6, 0b000001)
        assert abs(purity(s, unbalanced) - purity(s, unbalanced.complement())) < 1e-12

    def test_n_mismatch(self):
        with pytest.raises(InvalidInputError):
            purity(bell(), Bipartition(3, 1))

    def test_batched_matches_single(self, rng):
        for n in (2, 5, 8):
            s = random_state(n, rng)
            batched = balanced_purities(s.amplitudes, n)
            single = [purity(s, bp) for bp in enumerate_balanced(n)]
            assert np.allclose(batched, single, atol=1e-14)

    def test_loop_fallback_for_large_n(self, rng):
        # n=12 exceeds the gather-table limit
        s = random_state(12, rng)
        p = balanced_purities(s.amplitudes, 12)
        assert p.shape == (924,)
        assert abs(p[17] - purity(s, enumerate_balanced(12)[17])) < 1e-14

    def test_local_unitary_invariance(self, rng):
        s = random_state(5, rng)
        before = balanced_purities(s.amplitudes, 5)
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        for qubit in range(5):
            moved = PureState(5, apply_single_qubit(s, q, qubit))
            assert np.max(np.abs(balanced_purities(moved.amplitudes, 5) - before)) < 1e-10

    def test_apply_single_qubit_targets_right_bit(self):
        x = np.array([[0, 1], [1, 0]])
        out = apply_single_qubit(PureState.basis(3, 0), x, 1)
        assert np.argmax(np.abs(out)) == 0b010
