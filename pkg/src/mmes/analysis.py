"""Cosine-argument histograms, their reflection symmetries, and frustration summaries."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import comb
from typing import Iterable

import numpy as np

from .catalog import table_verdict
from .errors import InvalidInputError
from .potential import cosine_arguments
from .state import PureState, enumerate_balanced

TWO_PI = 2 * np.pi
FRUSTRATION_GAP = 1e-4


@dataclass
class AngleHistogram:
    """Counts of cosine arguments on bins centred at ``i * 2 pi / bins``.

    Bin ``i`` covers ``[(i - 1/2) w, (i + 1/2) w)`` with ``w = 2 pi / bins``,
    so 0 and pi (for an even bin count) are bin centres and the reflections
    ``x -> -x`` and ``x -> pi - x`` map whole bins onto whole bins.
    """

    n: int
    edges: np.ndarray
    counts: np.ndarray
    total: int
    per_bipartition: np.ndarray | None = field(default=None, repr=False)

    @property
    def bins(self) -> int:
        return self.counts.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for left, right, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([f"{left:.15g}", f"{right:.15g}", int(c)])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "bins": self.bins,
            "total": self.total,
            "edges": self.edges.tolist(),
            "counts": self.counts.tolist(),
        }


def expected_total(n: int) -> int:
    n_a = n // 2
    da, db = 1 << n_a, 1 << (n - n_a)
    return comb(n, n_a) * da * (da - 1) * db * (db - 1)


def _phases_of(source) -> np.ndarray:
    if isinstance(source, PureState):
        if not source.phase_only:
            raise InvalidInputError(
                "histogram needs an equal-modulus phase state; extract phases with np.angle(amplitudes) first"
            )
        return source.phases()
    return np.asarray(source, dtype=float).ravel()


def cosine_histogram(phases, bins: int = 100, per_bipartition: bool = False) -> AngleHistogram:
    """Histogram of every cosine argument over all balanced bipartitions."""
    if bins < 2:
        raise InvalidInputError("need at least 2 bins")
    phases = _phases_of(phases)
    n = int(phases.shape[0]).bit_length() - 1
    if 1 << n != phases.shape[0] or n < 2:
        raise InvalidInputError(f"phase vector length {phases.shape[0]} is not 2**n with n >= 2")
    width = TWO_PI / bins
    edges = (np.arange(bins + 1) - 0.5) * width
    counts = np.zeros(bins, dtype=np.int64)
    rows = []
    for bp in enumerate_balanced(n):
        x = cosine_arguments(phases, bp)
        idx = np.floor(np.mod(x + 0.5 * width, TWO_PI) / width).astype(np.int64) % bins
        c = np.bincount(idx, minlength=bins)
        counts += c
        if per_bipartition:
            rows.append(c)
    return AngleHistogram(
        n, edges, counts, int(counts.sum()), np.array(rows) if per_bipartition else None
    )


def symmetry_report(h: AngleHistogram) -> dict:
    """Reflection statistics about pi and pi/2, plus the extremal-cosine counts.

    ``pi_asymmetry`` compares bin ``i`` with bin ``-i``; ``half_pi_asymmetry``
    compares bin ``i`` with bin ``bins/2 - i`` after dropping the cos = +1
    and cos = -1 bins.
    """
    b = h.bins
    if b % 2:
        raise InvalidInputError("symmetry statistics need an even bin count")
    c = h.counts.astype(float)
    total = float(c.sum())
    i = np.arange(b)
    pi_asym = float(np.abs(c - c[(-i) % b]).sum() / total) if total else 0.0
    half = b // 2
    rest = c.copy()
    rest[[0, half]] = 0.0
    rest_total = float(rest.sum())
    half_pi_asym = float(np.abs(rest - rest[(half - i) % b]).sum() / rest_total) if rest_total else 0.0
    centres = i * (TWO_PI / b)
    return {
        "bins": b,
        "total": int(total),
        "pi_asymmetry": pi_asym,
        "count_cos_plus_one": int(c[0]),
        "count_cos_minus_one": int(c[half]),
        "half_pi_asymmetry": half_pi_asym,
        "remaining_cosine_sum": float(np.dot(rest, np.cos(centres))),
    }


def frustration_report(records: Iterable) -> dict:
    """Compare the best potential found with the 1/N_A floor for one n."""
    records = list(records)
    if not records:
        raise InvalidInputError("frustration_report needs at least one run record")
    rows = [_as_row(r) for r in records]
    ns = {r[0] for r in rows}
    if len(ns) != 1:
        raise InvalidInputError(f"records mix qubit counts {sorted(ns)}")
    n = ns.pop()
    n_best, pi_best, sigma_best = min(rows, key=lambda r: r[1])
    floor = 1.0 / (1 << (n // 2))
    gap = pi_best - floor
    return {
        "n": n,
        "records": len(rows),
        "best_pi_me": pi_best,
        "sigma_me_at_best": sigma_best,
        "floor": floor,
        "gap": gap,
        "frustrated": bool(gap > FRUSTRATION_GAP),
        "table_verdict": table_verdict(n),
    }


def _as_row(record) -> tuple[int, float, float]:
    if isinstance(record, dict):
        return int(record["config"]["n"]), float(record["pi_me"]), float(record["sigma_me"])
    return int(record.config.n), float(record.pi_me), float(record.sigma_me)
