from itertools import permutations

import numpy as np
import pytest

from mmes.analysis import (
    AngleHistogram,
    cosine_histogram,
    expected_total,
    frustration_report,
    symmetry_report,
)
from mmes.catalog import MMES5_PHASES, make_reference
from mmes.errors import InvalidInputError
from mmes.optimize import OptimizerConfig, minimize
from mmes.state import PureState, enumerate_balanced, random_phase_state, random_state


def brute_count(n):
    total = 0
    for bp in enumerate_balanced(n):
        na, nb = bp.dim_a, bp.dim_b
        total += sum(1 for _ in permutations(range(na), 2)) * sum(1 for _ in permutations(range(nb), 2))
    return total


class TestHistogram:
    @pytest.mark.parametrize("n", range(2, 9))
    def test_total_formula(self, n):
        assert expected_total(n) == brute_count(n)

    @pytest.mark.parametrize("n", range(2, 8))
    def test_total_matches(self, n, rng):
        h = cosine_histogram(random_phase_state(n, rng), bins=40)
        assert h.total == expected_total(n) == h.counts.sum()

    def test_six_qubits(self, rng):
        assert cosine_histogram(rng.uniform(0, 6.3, 64)).total == 62720

    def test_mmes5_two_bins(self):
        h = cosine_histogram(np.array(MMES5_PHASES), bins=100)
        assert list(np.flatnonzero(h.counts)) == [0, 50]
        assert symmetry_report(h)["pi_asymmetry"] == 0.0

    def test_all_zero(self):
        h = cosine_histogram(np.zeros(16), bins=10)
        assert h.counts[0] == h.total
        assert symmetry_report(h)["pi_asymmetry"] == 0.0

    def test_global_phase_invariance(self, rng):
        f = rng.uniform(0, 2 * np.pi, 32)
        a = cosine_histogram(f, bins=64).counts
        b = cosine_histogram(f + 0.917, bins=64).counts
        # binning of values on an edge may move by one ulp; compare with slack
        assert np.abs(a - b).sum() <= 4

    def test_rejects_non_phase_state(self, rng):
        with pytest.raises(InvalidInputError, match="np.angle"):
            cosine_histogram(random_state(3, rng))

    def test_bins_and_csv(self, tmp_path):
        with pytest.raises(InvalidInputError):
            cosine_histogram(np.zeros(8), bins=1)
        h = cosine_histogram(np.zeros(8), bins=4)
        path = tmp_path / "h.csv"
        h.to_csv(path)
        rows = path.read_text().splitlines()
        assert rows[0] == "bin_left,bin_right,count" and len(rows) == 5

    def test_per_bipartition(self, rng):
        h = cosine_histogram(random_phase_state(4, rng), bins=8, per_bipartition=True)
        assert h.per_bipartition.shape == (6, 8)
        assert np.array_equal(h.per_bipartition.sum(axis=0), h.counts)


class TestSymmetry:
    def test_odd_bins(self):
        with pytest.raises(InvalidInputError):
            symmetry_report(cosine_histogram(np.zeros(8), bins=5))

    def test_pi_reflection_holds_for_any_phases(self, rng):
        # x and -x both appear (swap l, l'), so the statistic vanishes generically
        h = cosine_histogram(random_phase_state(5, rng), bins=100)
        assert symmetry_report(h)["pi_asymmetry"] < 1e-3

    def test_found_six_qubit_mmes(self):
        rec = minimize(OptimizerConfig(n=6, starts=5, seed=2))
        assert rec.pi_me == pytest.approx(0.125, abs=1e-9)
        rep = symmetry_report(cosine_histogram(rec.state(), bins=100))
        assert rep["total"] == 62720
        assert rep["pi_asymmetry"] < 0.01
        assert rep["count_cos_minus_one"] > rep["count_cos_plus_one"]

    def test_counts_extremal_bins(self):
        h = AngleHistogram(2, np.linspace(0, 1, 5), np.array([3, 1, 2, 1]), 7)
        rep = symmetry_report(h)
        assert rep["count_cos_plus_one"] == 3 and rep["count_cos_minus_one"] == 2
        assert rep["pi_asymmetry"] == 0.0


class TestFrustration:
    def test_four_qubits(self):
        rec = minimize(OptimizerConfig(n=4, starts=5, seed=1))
        rep = frustration_report([rec])
        assert rep["frustrated"] and rep["gap"] == pytest.approx(1 / 12, abs=1e-4)
        assert rep["table_verdict"] == "do not exist"

    def test_five_qubits(self):
        rec = minimize(OptimizerConfig(n=5, starts=10, seed=1))
        rep = frustration_report([rec])
        assert not rep["frustrated"] and rep["gap"] < 1e-6

    def test_dict_records_and_zero_gap(self):
        rows = [{"config": {"n": 2}, "pi_me": 0.6, "sigma_me": 0.0},
                {"config": {"n": 2}, "pi_me": 0.5, "sigma_me": 0.0}]
        rep = frustration_report(rows)
        assert rep["best_pi_me"] == 0.5 and rep["gap"] == 0.0 and not rep["frustrated"]

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            frustration_report([])
        with pytest.raises(InvalidInputError):
            frustration_report([{"config": {"n": 2}, "pi_me": 0.5, "sigma_me": 0},
                                {"config": {"n": 3}, "pi_me": 0.5, "sigma_me": 0}])
