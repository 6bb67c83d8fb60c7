"""CHSH-type combinations, their bounds, and searches over settings.

``maximize_S`` exploits rotational invariance: the correlation depends on a
setting pair only through their relative angle, so it is estimated once on a
theta grid (one shared seed), interpolated with a monotone cubic, and the
four-correlation combination is then maximized over planar angle quadruples.
The coincidence-frequency infimum is the grid minimum refined by a
golden-section step around the argmin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import FitError
from .model import Setting, SimParams
from .pipeline import ThetaEngine

TRIVIAL_BOUND = 4.0
CHSH_BOUND = 2.0

_GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SettingsQuad:
    """Four detector orientations: ``a``, ``b`` at station 1, ``c``, ``d`` at station 2."""

    a: Setting
    b: Setting
    c: Setting
    d: Setting

    @classmethod
    def from_angles(cls, a: float, b: float, c: float, d: float) -> "SettingsQuad":
        return cls(*(Setting.from_polar(t) for t in (a, b, c, d)))


def s_value(e_ac: float, e_ad: float, e_bc: float, e_bd: float) -> float:
    """The four-correlation combination ``e_ac - e_ad + e_bc + e_bd``.

    Inputs must be valid correlations in [-1, 1]; the result there is bounded
    by 4 in magnitude.
    """
    for name, e in (("e_ac", e_ac), ("e_ad", e_ad), ("e_bc", e_bc), ("e_bd", e_bd)):
        if not -1.0 <= e <= 1.0:
            raise ValueError(f"{name} must lie in [-1, 1], got {e!r}")
    return e_ac - e_ad + e_bc + e_bd


def lg_bound(gamma: float) -> float:
    """Window post-selection bound ``6/gamma - 4`` on the combination.

    Defined for a coincidence-frequency infimum in (0, 1]; at ``gamma = 1``
    it reduces to the bound 2.  Values of ``gamma`` below 3/4 make the bound
    exceed the trivial bound 4, rendering it vacuous.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma!r}")
    return 6.0 / gamma - 4.0


@dataclass(frozen=True)
class ViolationFlags:
    """Which descriptive bounds a combination magnitude exceeds."""

    chsh: bool
    lg: bool
    super_quantum: bool


def check_violations(s: float, gamma_inf: float) -> ViolationFlags:
    """Flag the bounds exceeded by ``|s|``.  Descriptive report fields only."""
    if abs(s) > TRIVIAL_BOUND + 1e-12:
        raise ValueError(f"|s| must not exceed {TRIVIAL_BOUND}, got {s!r}")
    return ViolationFlags(
        chsh=abs(s) > CHSH_BOUND,
        lg=abs(s) > lg_bound(gamma_inf),
        super_quantum=abs(s) > 2.0 * math.sqrt(2.0),
    )


@dataclass(frozen=True)
class SearchSpec:
    """Grid resolutions for the settings search.

    theta_step    spacing of the correlation-estimation grid on [0, pi]
    coarse_step   spacing of the coarse angle-quadruple grid
    refine_tol    golden-section termination width for both refinements
    n_blocks      jackknife blocks per grid point
    """

    theta_step: float = math.pi / 72
    coarse_step: float = math.pi / 36
    refine_tol: float = math.pi / 720
    n_blocks: int = 100


@dataclass(frozen=True)
class SReport:
    """Result of a settings search: the combination, its maximizer and bounds."""

    s: float
    quad: SettingsQuad
    gamma_inf: float
    bound_trivial: float
    bound_chsh: float
    bound_lg: float
    flags: ViolationFlags
    stderr_s: float | None = None
    gamma_argmin: float | None = None
    quad_angles: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class GammaInfimum:
    """Minimum estimated coincidence frequency and the angle attaining it."""

    gamma: float
    theta: float


def _theta_grid(theta_step: float) -> np.ndarray:
    n = int(round(math.pi / theta_step))
    if n < 4:
        raise ValueError("theta grid needs at least 5 points covering [0, pi]")
    return np.linspace(0.0, math.pi, n + 1)


def _golden_max(f, lo: float, hi: float, tol: float):
    """Golden-section maximization of ``f`` on [lo, hi] to interval width ``tol``."""
    x1 = hi - _GOLDEN_RATIO * (hi - lo)
    x2 = lo + _GOLDEN_RATIO * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN_RATIO * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN_RATIO * (hi - lo)
            f1 = f(x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def _fold(delta):
    """Map an angle difference to the relative angle in [0, pi]."""
    d = np.abs(np.mod(delta, 2.0 * math.pi))
    return np.where(d > math.pi, 2.0 * math.pi - d, d)


class _CurveMaximizer:
    """Maximizes the combination over planar quadruples of one E(theta) curve."""

    def __init__(self, thetas, e_values, search: SearchSpec):
        self._interp = PchipInterpolator(thetas, e_values)
        self._search = search

    def e_of(self, delta):
        return self._interp(_fold(delta))

    def s_of(self, quad_angles) -> float:
        a, b, c, d = quad_angles
        return float(self.e_of(a - c) - self.e_of(a - d)
                     + self.e_of(b - c) + self.e_of(b - d))

    def maximize(self):
        spec = self._search
        m = max(8, int(round(2.0 * math.pi / spec.coarse_step)))
        step = 2.0 * math.pi / m
        table = self.e_of(np.arange(m) * step)
        # the combination only sees angle differences, so pin a = 0
        b = np.arange(m)[:, None, None]
        c = np.arange(m)[None, :, None]
        d = np.arange(m)[None, None, :]
        s = (table[(-c) % m] - table[(-d) % m]
             + table[(b - c) % m] + table[(b - d) % m])
        ib, ic, id_ = np.unravel_index(int(np.argmax(s)), s.shape)
        best = [0.0, ib * step, ic * step, id_ * step]
        best_s = float(s[ib, ic, id_])

        for _ in range(4):
            improved = False
            for axis in range(4):
                def on_axis(x, axis=axis):
                    q = list(best)
                    q[axis] = x
                    return self.s_of(q)

                x, v = _golden_max(on_axis, best[axis] - step, best[axis] + step,
                                   spec.refine_tol)
                if v > best_s + 1e-15:
                    best[axis] = x
                    best_s = v
                    improved = True
            if not improved:
                break
        return best_s, tuple(t % (2.0 * math.pi) for t in best)


def _gamma_infimum(engine: ThetaEngine, thetas, gammas, w_bins: int,
                   refine_tol: float) -> GammaInfimum:
    """Grid minimum of the coincidence frequency plus a refinement step."""
    idx = int(np.argmin(gammas))
    best_g = float(gammas[idx])
    best_t = float(thetas[idx])
    step = float(thetas[1] - thetas[0]) if len(thetas) > 1 else math.pi / 72
    lo = max(0.0, best_t - step)
    hi = min(math.pi, best_t + step)
    t, neg_g = _golden_max(lambda th: -engine.gamma_at(th, w_bins), lo, hi, refine_tol)
    if -neg_g < best_g:
        best_g, best_t = -neg_g, t
    return GammaInfimum(gamma=best_g, theta=best_t)


def maximize_S(params: SimParams, search: SearchSpec = SearchSpec()) -> SReport:
    """Search planar settings for the maximal combination at one seed.

    Estimates E(theta) on the search grid with trials shared across points,
    interpolates, maximizes over angle quadruples (coarse grid then
    coordinate-wise golden-section refinement), and reports the coincidence
    infimum over the same grid alongside the trivial, CHSH-form and
    post-selection bounds.
    """
    thetas = _theta_grid(search.theta_step)
    engine = ThetaEngine(params)
    ests = [engine.estimate_at(float(t), n_blocks=search.n_blocks) for t in thetas]
    e_vals = np.array([est.e if est.e is not None else 0.0 for est in ests])
    undefined = [i for i, est in enumerate(ests) if est.e is None]
    if undefined:
        raise FitError(
            f"no coincidences at {len(undefined)} grid angles "
            f"(first at theta={thetas[undefined[0]]:.4f}); window too small for N")
    gammas = np.array([est.gamma for est in ests])
    maximizer = _CurveMaximizer(thetas, e_vals, search)
    best_s, angles = maximizer.maximize()

    se_interp = PchipInterpolator(thetas, [est.stderr_e or 0.0 for est in ests])
    a, b, c, d = angles
    legs = [_fold(a - c), _fold(a - d), _fold(b - c), _fold(b - d)]
    stderr_s = float(np.sqrt(sum(float(se_interp(t)) ** 2 for t in legs)))

    inf = _gamma_infimum(engine, thetas, gammas, params.w_bins, search.refine_tol)
    flags = check_violations(best_s, inf.gamma)
    return SReport(
        s=best_s,
        quad=SettingsQuad.from_angles(*angles),
        gamma_inf=inf.gamma,
        bound_trivial=TRIVIAL_BOUND,
        bound_chsh=CHSH_BOUND,
        bound_lg=lg_bound(inf.gamma),
        flags=flags,
        stderr_s=stderr_s,
        gamma_argmin=inf.theta,
        quad_angles=angles,
    )


def min_gamma(params: SimParams, theta_step: float = math.pi / 72,
              thetas=None, refine_tol: float = math.pi / 720) -> GammaInfimum:
    """Minimum estimated coincidence frequency over a theta grid.

    The grid must cover [0, pi]; the grid minimum is refined by a
    golden-section step around the argmin at the same seed.
    """
    if thetas is None:
        grid = _theta_grid(theta_step)
    else:
        grid = np.asarray(sorted(float(t) for t in thetas))
        if len(grid) < 2 or grid[0] > 1e-9 or grid[-1] < math.pi - 1e-9:
            raise ValueError("theta grid must cover [0, pi]")
    engine = ThetaEngine(params)
    gammas = np.array([engine.estimate_at(float(t), n_blocks=1).gamma for t in grid])
    return _gamma_infimum(engine, grid, gammas, params.w_bins, refine_tol)
