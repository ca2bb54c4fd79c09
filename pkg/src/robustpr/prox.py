"""Half-thresholding: the proximal operator of mu * ||.||_{1/2}^{1/2}.

chi(t, mu) minimizes |v - t|^2 + mu |v|^(1/2) over scalars v.  Below the
threshold tbar(mu) = (54^(1/3)/4) mu^(2/3) the minimizer is 0; above it a
closed-form cosine shrinkage applies.  The tie at |t| = tbar is resolved
to 0.  For complex t the output is a real scaling of t (phase preserved),
because the penalty depends on v only through |v|.

In the MM solver the prox weight is mu = 2*lam*tau: minimizing the
surrogate at step tau is equivalent to min ||x - (y - 2 tau g(y))||^2
+ 2 lam tau ||x||_{1/2}^{1/2}.
"""

from __future__ import annotations

import numpy as np

_TBAR_COEF = 54.0 ** (1.0 / 3.0) / 4.0


def threshold_point(mu: float) -> float:
    """The hard-thresholding radius tbar(mu) = (54^(1/3)/4) mu^(2/3)."""
    if mu <= 0:
        raise ValueError("prox weight mu must be positive")
    return _TBAR_COEF * mu ** (2.0 / 3.0)


def half_threshold(xi: np.ndarray, mu: float) -> np.ndarray:
    """Componentwise chi(., mu); global minimizer of ||v-xi||^2 + mu||v||_{1/2}^{1/2}."""
    tbar = threshold_point(mu)
    xi = np.asarray(xi)
    if not np.iscomplexobj(xi):
        xi = xi.astype(np.float64, copy=False)
    mag = np.abs(xi)
    keep = mag > tbar
    out = np.zeros_like(xi)
    if np.any(keep):
        t = xi[keep]
        # arccos argument < 1/sqrt(2) on the kept set; clip guards rounding
        # for |t| within machine epsilon of tbar.
        arg = np.clip((mu / 8.0) * (np.abs(t) / 3.0) ** (-1.5), 0.0, 1.0)
        phi = (2.0 / 3.0) * np.arccos(arg)
        out[keep] = (2.0 / 3.0) * t * (1.0 + np.cos(2.0 * np.pi / 3.0 - phi))
    return out


def chi(t, mu: float):
    """Scalar half-thresholding; see half_threshold."""
    return half_threshold(np.asarray([t]), mu)[0]


def _prox_objective(r: np.ndarray, mag: float, mu: float) -> np.ndarray:
    return (r - mag) ** 2 + mu * np.sqrt(r)


def chi_oracle(t, mu: float, grid_step: float):
    """Brute-force minimizer of |v - t|^2 + mu |v|^(1/2) on a radial grid.

    The objective depends on v only through |v| and Re(conj(v) t), which is
    maximized at phase alignment, so the search reduces to v = r * t/|t| with
    r in [0, 2|t|].  The grid is refined coarse-to-fine: every local minimum
    of each pass is re-examined at a finer spacing until the spacing drops
    below grid_step, which is equivalent to the full grid at that resolution.
    """
    if grid_step <= 0:
        raise ValueError("grid step must be positive")
    mag = float(np.abs(t))
    if mag == 0.0:
        return 0.0 * t
    hi = 2.0 * mag
    windows = [(0.0, hi)]
    step = hi / 20000.0
    best_r = 0.0
    while True:
        step = max(step, grid_step)
        candidates = []
        for lo, up in windows:
            lo = max(lo, 0.0)
            up = min(up, hi)
            npts = max(int(np.ceil((up - lo) / step)) + 1, 3)
            r = np.linspace(lo, up, npts)
            vals = _prox_objective(r, mag, mu)
            interior = np.where(
                (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
            )[0]
            idx = set(interior + 1) | {0, npts - 1}
            candidates.extend((vals[i], r[i]) for i in idx)
        candidates.sort()
        best_r = candidates[0][1]
        if step <= grid_step:
            break
        next_step = max(step / 64.0, grid_step)
        windows = [(r - step, r + step) for _, r in candidates[:8]]
        step = next_step
    return best_r * (t / mag)
