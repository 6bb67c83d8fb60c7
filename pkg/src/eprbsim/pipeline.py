"""Shared simulate-and-estimate plumbing for sweeps, optimizers and scenarios.

A :class:`ThetaEngine` fixes one ensemble of hidden draws (one seed) and
evaluates many relative angles against it.  Station 1 is pinned to z-hat and
station 2 to z-hat rotated by ``theta`` in the xz-plane; the engine's output
at any ``theta`` is bit-identical to ``run_pairs`` with the same parameters,
it merely avoids regenerating the draws and the station-1 events per point.
"""

from __future__ import annotations

import numpy as np

from .coincidence import (
    CorrelationEstimate,
    JACKKNIFE_BLOCKS,
    CoincidenceCounts,
    estimate,
    merge_counts,
)
from .model import Setting, SimParams, _hidden_arrays, _station_kernel

_CHUNK = 1 << 22  # trials per chunk when the ensemble is too big to cache


class ThetaEngine:
    """Evaluates correlation estimates over relative angles at a shared seed."""

    def __init__(self, params: SimParams, cache_limit: int = 8 * 10**6):
        self.params = params
        self._cached = params.n_trials <= cache_limit
        if self._cached:
            self._hidden = _hidden_arrays(params.seed, 0, params.n_trials)
            self._ev1 = _station_kernel(
                0.0, 0.0, 1.0,
                self._hidden[0], self._hidden[1], self._hidden[2],
                self._hidden[3], params.t0_ratio, params.d,
            )

    def _chunks(self):
        n = self.params.n_trials
        if self._cached:
            yield 0, n, self._hidden, self._ev1
            return
        for lo in range(0, n, _CHUNK):
            hi = min(lo + _CHUNK, n)
            hidden = _hidden_arrays(self.params.seed, lo, hi)
            ev1 = _station_kernel(0.0, 0.0, 1.0, hidden[0], hidden[1], hidden[2],
                                  hidden[3], self.params.t0_ratio, self.params.d)
            yield lo, hi, hidden, ev1

    def events_at(self, theta: float):
        """Full event arrays ``(x1, k1, x2, k2)`` for one relative angle."""
        if not self._cached:
            raise ValueError("events_at requires a cached ensemble")
        a2 = Setting.from_polar(theta)
        sx, sy, sz, _, lam2 = self._hidden
        x2, k2 = _station_kernel(float(a2.vec[0]), float(a2.vec[1]), float(a2.vec[2]),
                                 -sx, -sy, -sz, lam2,
                                 self.params.t0_ratio, self.params.d)
        x1, k1 = self._ev1
        return x1, k1, x2, k2

    def block_counts_at(self, theta: float, w_bins=None,
                        n_blocks: int = JACKKNIFE_BLOCKS) -> list[CoincidenceCounts]:
        """Per-block tallies at one angle, for one or many windows.

        ``w_bins`` may be an int, a sequence of ints, or None (the params
        window).  Returns a list of per-block counts for a single window, or
        a dict keyed by window for a sequence.
        """
        windows = self.params.w_bins if w_bins is None else w_bins
        single = np.isscalar(windows)
        window_list = [int(windows)] if single else [int(w) for w in windows]
        if any(w < 1 for w in window_list):
            raise ValueError("w_bins must be >= 1")

        a2 = Setting.from_polar(theta)
        n = self.params.n_trials
        n_blocks = min(n_blocks, n)
        edges = np.linspace(0, n, n_blocks + 1).astype(np.int64)
        cells = {w: np.zeros((n_blocks, 4), dtype=np.int64) for w in window_list}
        for lo, hi, hidden, ev1 in self._chunks():
            sx, sy, sz, _, lam2 = hidden
            x2, k2 = _station_kernel(float(a2.vec[0]), float(a2.vec[1]), float(a2.vec[2]),
                                     -sx, -sy, -sz, lam2,
                                     self.params.t0_ratio, self.params.d)
            x1, k1 = ev1
            dk = np.abs(k1 - k2)
            cell = ((x1 < 0).astype(np.int64) << 1) | (x2 < 0).astype(np.int64)
            block_of = np.searchsorted(edges, np.arange(lo, hi), side="right") - 1
            for w in window_list:
                mask = dk < w
                combined = block_of[mask] * 4 + cell[mask]
                cells[w] += np.bincount(combined, minlength=4 * n_blocks).reshape(n_blocks, 4)
        sizes = np.diff(edges)
        settings = (Setting.from_polar(0.0), a2)
        by_window = {
            w: [
                CoincidenceCounts(int(c[0]), int(c[1]), int(c[2]), int(c[3]),
                                  n_total=int(sz), settings=settings)
                for c, sz in zip(cells[w], sizes)
            ]
            for w in window_list
        }
        return by_window[window_list[0]] if single else by_window

    def estimate_at(self, theta: float, w_bins: int | None = None,
                    n_blocks: int = JACKKNIFE_BLOCKS) -> CorrelationEstimate:
        """Jackknifed correlation estimate at one angle."""
        blocks = self.block_counts_at(theta, w_bins, n_blocks)
        return estimate(merge_counts(blocks), blocks)

    def gamma_at(self, theta: float, w_bins: int | None = None) -> float:
        """Coincidence frequency at one angle (cheaper than a full estimate)."""
        return self.estimate_at(theta, w_bins, n_blocks=1).gamma


def correlation_at(params: SimParams, theta: float,
                   n_blocks: int = JACKKNIFE_BLOCKS) -> CorrelationEstimate:
    """One-shot estimate for a single relative angle."""
    return ThetaEngine(params).estimate_at(theta, n_blocks=n_blocks)
