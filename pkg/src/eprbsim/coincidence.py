"""Coincidence selection, outcome tallies and correlation estimators.

Two events are coincident when their time-tag bins differ by less than the
window, ``|k1 - k2| < w_bins``, so ``w_bins = 1`` selects same-bin pairs
only.  Correlations are ratio estimators over the coincident subset; the
coincidence frequency ``gamma`` is normalized by all trials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import TrialBlock, TrialRecord

#: Default number of blocks for the delete-one jackknife.
JACKKNIFE_BLOCKS = 100


def coincide(k1: int, k2: int, w_bins: int) -> bool:
    """True when two tag bins fall inside one coincidence window."""
    if w_bins < 1:
        raise ValueError("w_bins must be >= 1")
    return abs(int(k1) - int(k2)) < w_bins


@dataclass(frozen=True)
class CoincidenceCounts:
    """Outcome-pair tallies over the coincident subset of a trial sequence.

    ``n_pp`` counts coincident trials with ``(x1, x2) = (+1, +1)`` and so on;
    ``n_total`` counts all trials, coincident or not.  ``settings`` is
    carried as metadata and does not participate in comparisons.
    """

    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    n_total: int
    settings: object = field(default=None, compare=False)

    def __post_init__(self):
        if min(self.n_pp, self.n_pm, self.n_mp, self.n_mm) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_coinc > self.n_total:
            raise ValueError("coincident counts exceed n_total")

    @property
    def n_coinc(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def merge(self, other: "CoincidenceCounts") -> "CoincidenceCounts":
        """Combine tallies of two disjoint trial blocks."""
        return CoincidenceCounts(
            self.n_pp + other.n_pp,
            self.n_pm + other.n_pm,
            self.n_mp + other.n_mp,
            self.n_mm + other.n_mm,
            self.n_total + other.n_total,
            settings=self.settings if self.settings is not None else other.settings,
        )


@dataclass(frozen=True)
class CorrelationEstimate:
    """Point estimates from one tally.

    ``e`` is the two-particle correlation and ``e1``/``e2`` the single
    station averages, all over the coincident subset; they are ``None`` when
    no trial is coincident.  ``gamma = n_coinc / n_total`` is always defined.
    ``stderr_e`` is the delete-one block jackknife error when block tallies
    were available, otherwise the i.i.d. ratio approximation.
    """

    e: float | None
    e1: float | None
    e2: float | None
    gamma: float
    stderr_e: float | None
    n_coinc: int


def _cells_from_arrays(x1, k1, x2, k2, w_bins: int) -> np.ndarray:
    mask = np.abs(k1 - k2) < w_bins
    cell = ((x1 < 0).astype(np.int64) << 1) | (x2 < 0).astype(np.int64)
    return np.bincount(cell[mask], minlength=4)


def tally(trials, w_bins: int) -> CoincidenceCounts:
    """Tally outcome pairs over the coincident subset of ``trials``.

    Accepts a :class:`TrialBlock` (vectorized) or any iterable of
    :class:`TrialRecord`.  Tallies of disjoint blocks merge associatively to
    the tally of the concatenation.
    """
    if w_bins < 1:
        raise ValueError("w_bins must be >= 1")
    if isinstance(trials, TrialBlock):
        cells = _cells_from_arrays(trials.x1, trials.k1, trials.x2, trials.k2, w_bins)
        return CoincidenceCounts(
            int(cells[0]), int(cells[1]), int(cells[2]), int(cells[3]),
            n_total=len(trials), settings=(trials.a1, trials.a2),
        )
    counts = [0, 0, 0, 0]
    n_total = 0
    for rec in trials:
        n_total += 1
        if coincide(rec.ev1.k, rec.ev2.k, w_bins):
            cell = (2 if rec.ev1.x < 0 else 0) + (1 if rec.ev2.x < 0 else 0)
            counts[cell] += 1
    if n_total == 0:
        raise ValueError("empty trial sequence")
    return CoincidenceCounts(*counts, n_total=n_total)


def tally_blocks(trials: TrialBlock, w_bins: int,
                 n_blocks: int = JACKKNIFE_BLOCKS) -> list[CoincidenceCounts]:
    """Per-block tallies over ``n_blocks`` contiguous index slices."""
    if w_bins < 1:
        raise ValueError("w_bins must be >= 1")
    n = len(trials)
    n_blocks = min(n_blocks, n)
    mask = np.abs(trials.k1 - trials.k2) < w_bins
    cell = ((trials.x1 < 0).astype(np.int64) << 1) | (trials.x2 < 0).astype(np.int64)
    edges = np.linspace(0, n, n_blocks + 1).astype(np.int64)
    block_of = np.searchsorted(edges, np.arange(n), side="right") - 1
    combined = block_of[mask] * 4 + cell[mask]
    cells = np.bincount(combined, minlength=4 * n_blocks).reshape(n_blocks, 4)
    sizes = np.diff(edges)
    return [
        CoincidenceCounts(int(c[0]), int(c[1]), int(c[2]), int(c[3]),
                          n_total=int(sz), settings=(trials.a1, trials.a2))
        for c, sz in zip(cells, sizes)
    ]


def merge_counts(blocks: Iterable[CoincidenceCounts]) -> CoincidenceCounts:
    blocks = list(blocks)
    if not blocks:
        raise ValueError("nothing to merge")
    out = blocks[0]
    for b in blocks[1:]:
        out = out.merge(b)
    return out


def _point_estimates(c: CoincidenceCounts):
    nc = c.n_coinc
    if nc == 0:
        return None, None, None
    e = (c.n_pp + c.n_mm - c.n_pm - c.n_mp) / nc
    e1 = (c.n_pp + c.n_pm - c.n_mp - c.n_mm) / nc
    e2 = (c.n_pp + c.n_mp - c.n_pm - c.n_mm) / nc
    return e, e1, e2


def jackknife_stderr_e(blocks: Sequence[CoincidenceCounts]) -> float | None:
    """Delete-one-block jackknife standard error of the correlation ``e``."""
    total = merge_counts(blocks)
    if total.n_coinc == 0 or len(blocks) < 2:
        return None
    loo = []
    for b in blocks:
        rest = CoincidenceCounts(
            total.n_pp - b.n_pp, total.n_pm - b.n_pm,
            total.n_mp - b.n_mp, total.n_mm - b.n_mm,
            total.n_total - b.n_total,
        )
        e, _, _ = _point_estimates(rest)
        if e is None:
            return None  # a block holds every coincidence; jackknife undefined
        loo.append(e)
    loo = np.asarray(loo)
    nb = len(loo)
    return float(np.sqrt((nb - 1) / nb * np.sum((loo - loo.mean()) ** 2)))


def estimate(counts: CoincidenceCounts,
             blocks: Sequence[CoincidenceCounts] | None = None) -> CorrelationEstimate:
    """Correlation and coincidence-frequency estimates from a tally.

    With ``blocks`` (disjoint sub-tallies merging to ``counts``) the error on
    ``e`` comes from the delete-one jackknife; without them it falls back to
    ``sqrt((1 - e^2) / n_coinc)``.
    """
    if counts.n_total <= 0:
        raise ValueError("n_total must be positive")
    e, e1, e2 = _point_estimates(counts)
    gamma = counts.n_coinc / counts.n_total
    if e is None:
        return CorrelationEstimate(None, None, None, gamma, None, 0)
    if blocks is not None:
        merged = merge_counts(blocks)
        if (merged.n_pp, merged.n_pm, merged.n_mp, merged.n_mm, merged.n_total) != (
                counts.n_pp, counts.n_pm, counts.n_mp, counts.n_mm, counts.n_total):
            raise ValueError("blocks do not merge to the given counts")
        stderr = jackknife_stderr_e(blocks)
    else:
        stderr = float(np.sqrt(max(0.0, 1.0 - e * e) / counts.n_coinc))
    return CorrelationEstimate(e, e1, e2, gamma, stderr, counts.n_coinc)


def estimate_block(trials: TrialBlock, w_bins: int,
                   n_blocks: int = JACKKNIFE_BLOCKS) -> CorrelationEstimate:
    """Tally a block and estimate with jackknife errors in one step."""
    blocks = tally_blocks(trials, w_bins, n_blocks)
    return estimate(merge_counts(blocks), blocks)


def singles_means(trials: TrialBlock) -> tuple[float, float]:
    """Diagnostic single-particle averages over all trials (no selection)."""
    return float(trials.x1.mean(dtype=np.float64)), float(trials.x2.mean(dtype=np.float64))


def match_streams(stream_a, stream_b, w_bins: int) -> dict[tuple[int, int], CoincidenceCounts]:
    """Pair two sorted station streams and tally per setting-pair cell.

    Greedy single pass: walk both streams in time order and pair each event
    with the nearest unmatched event of the other stream whenever the tag
    difference is inside the window; every event is used at most once.  When
    the immediate candidate's successor is strictly closer, the candidate is
    skipped in its favour.  Entries are keyed by ``(setting_a, setting_b)``;
    each cell's ``n_total`` is the maximum number of pairs that cell could
    have produced, ``min(count_a, count_b)`` of events carrying those
    settings.

    ``stream_a`` and ``stream_b`` expose arrays ``k``, ``setting_index`` and
    ``x`` sorted by ``k`` (see :class:`eprbsim.ttag_io.EventStream`).
    """
    if w_bins < 1:
        raise ValueError("w_bins must be >= 1")
    for name, s in (("stream_a", stream_a), ("stream_b", stream_b)):
        dk = np.diff(s.k)
        if len(dk) and int(dk.min()) < 0:
            bad = int(np.argmax(dk < 0)) + 1
            raise ValueError(f"{name} is not sorted by k (first violation at event {bad})")

    ka = stream_a.k.tolist()
    kb = stream_b.k.tolist()
    na, nb = len(ka), len(kb)
    pairs_a: list[int] = []
    pairs_b: list[int] = []
    i = j = 0
    while i < na and j < nb:
        delta = kb[j] - ka[i]
        if delta <= -w_bins:
            j += 1
            continue
        if delta >= w_bins:
            i += 1
            continue
        # inside the window: prefer a strictly closer successor of the
        # earlier event's partner before committing
        if ka[i] <= kb[j]:
            if i + 1 < na and abs(ka[i + 1] - kb[j]) < abs(delta):
                i += 1
                continue
        else:
            if j + 1 < nb and abs(kb[j + 1] - ka[i]) < abs(delta):
                j += 1
                continue
        pairs_a.append(i)
        pairs_b.append(j)
        i += 1
        j += 1

    sa = stream_a.setting_index
    sb = stream_b.setting_index
    xa = stream_a.x
    xb = stream_b.x
    counts_a = np.bincount(sa)
    counts_b = np.bincount(sb)
    out: dict[tuple[int, int], CoincidenceCounts] = {}
    raw: dict[tuple[int, int], list[int]] = {}
    for ia, ib in zip(pairs_a, pairs_b):
        key = (int(sa[ia]), int(sb[ib]))
        cell = raw.setdefault(key, [0, 0, 0, 0])
        cell[(2 if xa[ia] < 0 else 0) + (1 if xb[ib] < 0 else 0)] += 1
    keys = {(int(a), int(b)) for a in np.unique(sa) for b in np.unique(sb)}
    for key in sorted(keys | set(raw)):
        cell = raw.get(key, [0, 0, 0, 0])
        ia, ib = key
        n_opp = int(min(counts_a[ia] if ia < len(counts_a) else 0,
                        counts_b[ib] if ib < len(counts_b) else 0))
        out[key] = CoincidenceCounts(*cell, n_total=max(n_opp, sum(cell)), settings=key)
    return out
