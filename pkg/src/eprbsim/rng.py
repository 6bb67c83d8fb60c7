"""Counter-based random streams with one independent substream per trial.

Every draw is a pure function of ``(seed, trial_index, draw_index)``: the
seed and trial index are avalanched through the SplitMix64 finalizer into a
per-trial initial state, and draw ``j`` is the ``j``-th output of the
SplitMix64 sequence started there.  No state is shared between trials, so
blocks of trials can be generated in any order, in chunks of any size, or on
any number of workers and still produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0x632BE59BD9B4E019)

# doubles take the top 53 bits of a 64-bit word
_INV_2_53 = 1.0 / float(1 << 53)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.array(z, dtype=np.uint64, copy=True)
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= _MIX_A
        z ^= z >> np.uint64(27)
        z *= _MIX_B
        z ^= z >> np.uint64(31)
    return z


def _stream_state(seed: int, trial_index: np.ndarray) -> np.ndarray:
    """Initial substream state for each trial index (uint64 array in, out)."""
    base = _mix64(np.asarray(np.uint64(seed)))
    with np.errstate(over="ignore"):
        salted = np.asarray(trial_index, dtype=np.uint64) + _STREAM_SALT
    return _mix64(salted) ^ base


def raw_uint64(seed: int, trial_index, draw_index) -> np.ndarray:
    """Raw 64-bit outputs; ``trial_index`` and ``draw_index`` broadcast."""
    s0 = _stream_state(seed, np.asarray(trial_index, dtype=np.uint64))
    j = np.asarray(draw_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = s0 + (j + np.uint64(1)) * _GOLDEN
    return _mix64(state)


def uniform_block(seed: int, first_trial: int, last_trial: int, n_draws: int) -> np.ndarray:
    """Uniform [0, 1) doubles for a contiguous block of trials.

    Returns an array of shape ``(n_draws, last_trial - first_trial)`` where
    row ``j`` holds draw ``j`` of every trial in the block.
    """
    if last_trial < first_trial:
        raise ValueError("empty trial range")
    trials = np.arange(first_trial, last_trial, dtype=np.uint64)
    draws = np.arange(n_draws, dtype=np.uint64)
    u = raw_uint64(seed, trials[None, :], draws[:, None])
    return (u >> np.uint64(11)).astype(np.float64) * _INV_2_53


class TrialStream:
    """Sequential view of one trial's substream.

    The stream is deterministic in ``(seed, trial_index)`` and the number of
    values consumed so far; two instances with equal arguments yield
    bit-identical sequences.
    """

    def __init__(self, seed: int, trial_index: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if trial_index < 0:
            raise ValueError("trial_index must be non-negative")
        self.seed = int(seed)
        self.trial_index = int(trial_index)
        self._pos = 0

    def uniforms(self, count: int) -> np.ndarray:
        """Next ``count`` uniform [0, 1) doubles of this substream."""
        draws = np.arange(self._pos, self._pos + count, dtype=np.uint64)
        self._pos += count
        u = raw_uint64(self.seed, np.uint64(self.trial_index), draws)
        return (u >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def next_uniform(self) -> float:
        return float(self.uniforms(1)[0])
