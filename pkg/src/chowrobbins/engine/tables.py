"""Turning boundary records into the stop rule as a function of n."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .types import BoundaryRecord, IncompleteCertification


@dataclass(frozen=True)
class BetaTable:
    """beta[n] = smallest reachable d >= 1 at which stopping is optimal at time n."""

    n_max: int
    beta: np.ndarray  # index n, entry 0 unused

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.n_max:
            raise KeyError(n)
        return int(self.beta[n])

    def __len__(self):
        return self.n_max

    def items(self):
        return ((n, int(self.beta[n])) for n in range(1, self.n_max + 1))


def beta_table(records: Sequence[BoundaryRecord], n_max: int | None = None) -> BetaTable:
    """Invert n_s(d) into beta_n for every n the records cover.

    A time n is covered when both parities have a settled record reaching past
    it, i.e. n <= min(n_s(D), n_s(D-1)) for the top two heights D.
    """
    by_d = {r.d: r for r in records}
    top = max(by_d)
    if any(d not in by_d for d in range(1, top + 1)):
        raise IncompleteCertification("records must cover every d from 1 up")
    unsettled = [d for d in range(1, top + 1) if not by_d[d].settled]
    # only the prefix of settled heights is usable
    limit = (unsettled[0] - 1) if unsettled else top
    if limit < 2:
        raise IncompleteCertification("need at least two settled heights")
    ns = np.array([0] + [by_d[d].ns for d in range(1, limit + 1)], dtype=np.int64)
    covered = int(min(ns[limit], ns[limit - 1]))
    if n_max is None:
        n_max = covered
    elif n_max > covered:
        raise IncompleteCertification(
            f"records certify n <= {covered} only (first unsettled d: "
            f"{unsettled[0] if unsettled else 'none'})")
    for first in (1, 2):
        if np.any(np.diff(ns[first::2]) <= 0):
            raise IncompleteCertification("n_s(d) is not increasing along a parity class")
    beta = np.zeros(n_max + 1, dtype=np.int64)
    for parity in (0, 1):
        ds = np.arange(2 if parity == 0 else 1, limit + 1, 2)
        seq = ns[ds]
        n = np.arange(1, n_max + 1)
        n = n[n % 2 == parity]
        pos = np.searchsorted(seq, n, side="left")
        beta[n] = ds[pos]
    return BetaTable(n_max, beta)


def boundary_points(records: Sequence[BoundaryRecord]):
    """(d, n_s(d)) for every settled record."""
    return [(r.d, r.ns) for r in records if r.settled]
