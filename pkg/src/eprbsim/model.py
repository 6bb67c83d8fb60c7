"""Source and station model: hidden pair variables, local outcomes, time tags.

A trial emits a pair with opposite unit spins ``+s`` / ``-s`` and one delay
fraction per station.  Each station sees only its own setting, its own
particle and its own delay fraction:

* outcome ``x = sign(s_local . a)`` with ``sign(0) := +1``;
* the maximum delay is ``t0_ratio * (1 - (s_local . a)^2)^(d/2)`` in units of
  the tag resolution, which spans ``m = max(1, ceil(...))`` whole resolution
  bins, and the integer time tag is drawn uniformly over those bins as
  ``k = floor(lambda * m)``.

Both laws read only local arguments, so the station-1 event stream is
bit-identical under any change of the station-2 setting and vice versa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .rng import TrialStream, uniform_block

#: Draws consumed per trial: s_z, azimuth, lambda_1, lambda_2 (in this order).
DRAWS_PER_TRIAL = 4

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class SimParams:
    """The four model parameters plus the master seed.

    w_bins    coincidence window in units of the tag resolution (W/tau >= 1)
    t0_ratio  maximum delay in units of the tag resolution (T0/tau > 0)
    d         delay exponent shaping the angle dependence (real, >= 0)
    n_trials  number of emitted pairs
    seed      64-bit master seed; all randomness derives from it
    """

    w_bins: int
    t0_ratio: float
    d: float
    n_trials: int
    seed: int = 1

    def __post_init__(self):
        if int(self.w_bins) != self.w_bins or self.w_bins < 1:
            raise ValueError(f"w_bins must be an integer >= 1, got {self.w_bins!r}")
        if not (self.t0_ratio > 0 and math.isfinite(self.t0_ratio)):
            raise ValueError(f"t0_ratio must be positive and finite, got {self.t0_ratio!r}")
        if not (self.d >= 0 and math.isfinite(self.d)):
            raise ValueError(f"d must be a finite real >= 0, got {self.d!r}")
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ValueError(f"n_trials must be an integer >= 1, got {self.n_trials!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def max_tag(self) -> int:
        """Largest time-tag bin any event can occupy."""
        return int(math.ceil(self.t0_ratio))


@dataclass(frozen=True, eq=False)
class Setting:
    """A detector orientation, normalized to a unit 3-vector on construction."""

    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=np.float64).reshape(3)
        norm = float(np.sqrt(v @ v))
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("setting vector must be non-zero and finite")
        v = v / norm
        v.flags.writeable = False
        object.__setattr__(self, "vec", v)
        assert abs(float(np.sqrt(self.vec @ self.vec)) - 1.0) < _UNIT_TOL

    @classmethod
    def from_polar(cls, theta: float) -> "Setting":
        """Unit vector at angle ``theta`` from z-hat in the xz-plane."""
        return cls(np.array([math.sin(theta), 0.0, math.cos(theta)]))

    def dot(self, other: "Setting") -> float:
        return float(self.vec @ other.vec)

    def angle_to(self, other: "Setting") -> float:
        return math.acos(min(1.0, max(-1.0, self.dot(other))))

    def __repr__(self):  # keep reprs short in reports
        x, y, z = self.vec
        return f"Setting([{x:.6g}, {y:.6g}, {z:.6g}])"


@dataclass(frozen=True)
class HiddenPair:
    """Hidden per-trial variables: particle-1 spin direction and delay fractions."""

    s: tuple[float, float, float]
    lambda1: float
    lambda2: float

    def __post_init__(self):
        sx, sy, sz = self.s
        if abs(sx * sx + sy * sy + sz * sz - 1.0) > 1e-9:
            raise ValueError("s must be a unit vector")
        if not (0.0 <= self.lambda1 < 1.0 and 0.0 <= self.lambda2 < 1.0):
            raise ValueError("delay fractions must lie in [0, 1)")


@dataclass(frozen=True)
class StationEvent:
    """One detection: outcome ``x`` in {-1, +1} and integer time-tag bin ``k``."""

    x: int
    k: int

    def __post_init__(self):
        if self.x * self.x != 1:
            raise ValueError("x must be -1 or +1")
        if self.k < 0:
            raise ValueError("k must be non-negative")


@dataclass(frozen=True)
class TrialRecord:
    """One emission: trial number, optional hidden variables, both events."""

    index: int
    hidden: HiddenPair | None
    ev1: StationEvent
    ev2: StationEvent


def sample_hidden(stream: TrialStream) -> HiddenPair:
    """Draw one trial's hidden variables, consuming exactly four uniforms.

    Order: ``s_z`` uniform on [-1, 1), azimuth uniform on [0, 2*pi), then
    ``lambda1`` and ``lambda2`` uniform on [0, 1).  The polar draw makes ``s``
    uniform on the unit sphere.
    """
    u = stream.uniforms(DRAWS_PER_TRIAL)
    z = 2.0 * u[0] - 1.0
    phi = 2.0 * math.pi * u[1]
    rho = math.sqrt(max(0.0, 1.0 - z * z))
    s = (rho * math.cos(phi), rho * math.sin(phi), z)
    return HiddenPair(s=s, lambda1=float(u[2]), lambda2=float(u[3]))


def _station_kernel(ax, ay, az, sx, sy, sz, lam, t0_ratio, d):
    """Vectorized station law; every input local to the station.

    Returns ``(x, k)`` as int8 / int64 arrays.
    """
    c = sx * ax + sy * ay + sz * az
    x = np.where(c >= 0.0, 1, -1).astype(np.int8)
    q = np.maximum(0.0, 1.0 - c * c)
    reach = t0_ratio * np.power(q, d / 2.0)  # max delay, units of tau
    m = np.maximum(1, np.ceil(reach)).astype(np.int64)
    k = np.floor(lam * m).astype(np.int64)
    return x, k


def station(a: Setting, s_local, lam: float, params: SimParams) -> StationEvent:
    """Scalar station response for one particle.

    ``s_local`` is the unit spin arriving at this station (``+s`` at station 1,
    ``-s`` at station 2).  Runs the same kernel as the bulk path, so scalar
    and vectorized results are bit-identical.
    """
    s = np.asarray(s_local, dtype=np.float64).reshape(3)
    if abs(float(s @ s) - 1.0) > 1e-9:
        raise ValueError("s_local must be a unit vector")
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    ax, ay, az = (float(v) for v in a.vec)
    x, k = _station_kernel(
        ax, ay, az,
        np.array([s[0]]), np.array([s[1]]), np.array([s[2]]),
        np.array([lam]), params.t0_ratio, params.d,
    )
    return StationEvent(x=int(x[0]), k=int(k[0]))


def _hidden_arrays(seed: int, first: int, last: int):
    """Hidden variables for trials ``first..last-1`` as flat arrays."""
    u = uniform_block(seed, first, last, DRAWS_PER_TRIAL)
    z = 2.0 * u[0] - 1.0
    phi = 2.0 * np.pi * u[1]
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return rho * np.cos(phi), rho * np.sin(phi), z, u[2], u[3]


class TrialBlock:
    """Column-oriented sequence of trial records.

    Behaves as a read-only sequence of :class:`TrialRecord`; bulk consumers
    read the event arrays directly.
    """

    def __init__(self, params, a1, a2, x1, k1, x2, k2, hidden=None, first_index=0):
        self.params = params
        self.a1 = a1
        self.a2 = a2
        self.x1 = x1
        self.k1 = k1
        self.x2 = x2
        self.k2 = k2
        self.hidden = hidden  # (sx, sy, sz, lam1, lam2) or None
        self.first_index = first_index
        for arr in (x1, k1, x2, k2):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.x1)

    def __getitem__(self, i: int) -> TrialRecord:
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        i = i % len(self)
        hp = None
        if self.hidden is not None:
            sx, sy, sz, l1, l2 = self.hidden
            hp = HiddenPair(
                s=(float(sx[i]), float(sy[i]), float(sz[i])),
                lambda1=float(l1[i]), lambda2=float(l2[i]),
            )
        return TrialRecord(
            index=self.first_index + i,
            hidden=hp,
            ev1=StationEvent(int(self.x1[i]), int(self.k1[i])),
            ev2=StationEvent(int(self.x2[i]), int(self.k2[i])),
        )

    def __iter__(self) -> Iterator[TrialRecord]:
        for i in range(len(self)):
            yield self[i]


def run_pairs(a1: Setting, a2: Setting, params: SimParams,
              keep_hidden: bool = False) -> TrialBlock:
    """Simulate all ``params.n_trials`` emissions for one setting pair.

    Trial ``n`` consumes the substream ``(params.seed, n)``; station 1
    receives ``(+s, lambda1, a1)`` and station 2 ``(-s, lambda2, a2)``.
    Output is bit-identical across runs with equal params, and the station-1
    columns are bit-identical under any change of ``a2`` (and symmetrically).
    """
    n = params.n_trials
    sx, sy, sz, lam1, lam2 = _hidden_arrays(params.seed, 0, n)
    a1x, a1y, a1z = (float(v) for v in a1.vec)
    a2x, a2y, a2z = (float(v) for v in a2.vec)
    x1, k1 = _station_kernel(a1x, a1y, a1z, sx, sy, sz, lam1,
                             params.t0_ratio, params.d)
    x2, k2 = _station_kernel(a2x, a2y, a2z, -sx, -sy, -sz, lam2,
                             params.t0_ratio, params.d)
    hidden = (sx, sy, sz, lam1, lam2) if keep_hidden else None
    return TrialBlock(params, a1, a2, x1, k1, x2, k2, hidden=hidden)
