"""Monotone 1-Lipschitz link functions and their least-squares estimation.

A link is stored as a piecewise-linear function through knots
x_1 < ... < x_k with values g_1 <= ... <= g_k whose increments never exceed
the knot spacing.  Outside the knot range the function extends linearly
with slopes in [0, 1], so evaluation is monotone and 1-Lipschitz on all of
the real line.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from .errors import InvalidInputError


@dataclass(frozen=True)
class LinkFunction:
    """Piecewise-linear monotone 1-Lipschitz scalar function.

    Attributes
    ----------
    knots : ndarray, shape (k,)
        Strictly increasing abscissae.
    values : ndarray, shape (k,)
        Fitted ordinates; non-decreasing with increments bounded by the
        knot spacing.
    slope_left, slope_right : float
        Extension slopes in [0, 1] used left/right of the knot range.
    """

    knots: np.ndarray
    values: np.ndarray
    slope_left: float = 0.0
    slope_right: float = 0.0

    def __post_init__(self):
        knots = np.atleast_1d(np.asarray(self.knots, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slope_left", float(self.slope_left))
        object.__setattr__(self, "slope_right", float(self.slope_right))
        self._validate()

    def _validate(self):
        knots, values = self.knots, self.values
        if knots.ndim != 1 or knots.size == 0 or knots.shape != values.shape:
            raise InvalidInputError(
                "link needs equal-length 1-d knot and value arrays"
            )
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise InvalidInputError("link knots and values must be finite")
        dx = np.diff(knots)
        if np.any(dx <= 0):
            raise InvalidInputError("link knots must be strictly increasing")
        dv = np.diff(values)
        # constructed links satisfy the chain constraints exactly; the slack
        # only absorbs float rounding from round trips
        tol = 1e-9 * max(1.0, float(np.max(np.abs(values))))
        if np.any(dv < -tol):
            raise InvalidInputError("link not monotone: values must be non-decreasing")
        if np.any(dv - dx > tol):
            raise InvalidInputError(
                "link not 1-Lipschitz: value increment exceeds knot spacing"
            )
        for name in ("slope_left", "slope_right"):
            s = getattr(self, name)
            if not np.isfinite(s) or s < 0.0 or s > 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {s}")

    def evaluate(self, theta):
        """Evaluate the link; linear interpolation inside the knot range,
        linear extension with the stored slopes outside."""
        t = np.asarray(theta, dtype=float)
        out = np.interp(t, self.knots, self.values)
        k0, k1 = self.knots[0], self.knots[-1]
        out = np.where(t < k0, self.values[0] + self.slope_left * (t - k0), out)
        out = np.where(t > k1, self.values[-1] + self.slope_right * (t - k1), out)
        if np.ndim(theta) == 0:
            return float(out)
        return out

    __call__ = evaluate

    @cached_property
    def _knot_integrals(self):
        # integral from knots[0] to each knot; trapezoid is exact for a
        # piecewise-linear integrand
        dx = np.diff(self.knots)
        mids = 0.5 * (self.values[:-1] + self.values[1:])
        return np.concatenate(([0.0], np.cumsum(mids * dx)))

    @cached_property
    def _segment_slopes(self):
        if self.knots.size < 2:
            return np.zeros(0)
        return np.diff(self.values) / np.diff(self.knots)

    def _integral_from_first_knot(self, t):
        knots, values = self.knots, self.values
        k = knots.size
        idx = np.searchsorted(knots, t, side="right") - 1
        idx_c = np.clip(idx, 0, k - 1)
        dt = t - knots[idx_c]
        if k > 1:
            slope = np.where(
                idx_c >= k - 1,
                self.slope_right,
                self._segment_slopes[np.minimum(idx_c, k - 2)],
            )
        else:
            slope = np.full(np.shape(t), self.slope_right)
        out = self._knot_integrals[idx_c] + values[idx_c] * dt + 0.5 * slope * dt * dt
        dtl = t - knots[0]
        left = values[0] * dtl + 0.5 * self.slope_left * dtl * dtl
        return np.where(idx < 0, left, out)

    def antiderivative(self, theta):
        """Exact integral of the link from 0 to theta.

        Convex, differentiable, and its derivative equals ``evaluate``.
        """
        t = np.asarray(theta, dtype=float)
        out = self._integral_from_first_knot(t) - self._integral_from_first_knot(
            np.asarray(0.0)
        )
        if np.ndim(theta) == 0:
            return float(out)
        return out

    def to_dict(self):
        return {
            "knots": [float(v) for v in self.knots],
            "values": [float(v) for v in self.values],
            "slope_left": self.slope_left,
            "slope_right": self.slope_right,
        }

    @classmethod
    def from_dict(cls, payload):
        missing = {"knots", "values", "slope_left", "slope_right"} - set(payload)
        if missing:
            raise InvalidInputError(f"link JSON missing keys: {sorted(missing)}")
        return cls(
            np.asarray(payload["knots"], dtype=float),
            np.asarray(payload["values"], dtype=float),
            float(payload["slope_left"]),
            float(payload["slope_right"]),
        )


@njit(cache=True)
def _pav(y, w):
    # weighted pool-adjacent-violators; returns the isotonic (monotone
    # non-decreasing) least-squares fit
    n = y.shape[0]
    mean = np.empty(n)
    weight = np.empty(n)
    length = np.empty(n, np.int64)
    m = 0
    for i in range(n):
        mean[m] = y[i]
        weight[m] = w[i]
        length[m] = 1
        m += 1
        while m > 1 and mean[m - 2] > mean[m - 1]:
            tw = weight[m - 2] + weight[m - 1]
            mean[m - 2] = (weight[m - 2] * mean[m - 2] + weight[m - 1] * mean[m - 1]) / tw
            weight[m - 2] = tw
            length[m - 2] += length[m - 1]
            m -= 1
    out = np.empty(n)
    pos = 0
    for b in range(m):
        for _ in range(length[b]):
            out[pos] = mean[b]
            pos += 1
    return out


@njit(cache=True)
def _refresh_residuals(g1, d, ybar, r):
    k = ybar.shape[0]
    acc = g1
    r[0] = acc - ybar[0]
    for j in range(1, k):
        acc += d[j - 1]
        r[j] = acc - ybar[j]


@njit(cache=True)
def _lmr_dp(ybar, w, dx):
    """Exact minimizer of sum_j w[j]*(g[j]-ybar[j])^2 under the chain
    constraints 0 <= g[j+1]-g[j] <= dx[j].

    Forward dynamic program over the derivative of the value function,
    which stays piecewise linear and strictly increasing.  At each step the
    derivative is split at its root, the right part is translated by dx[j]
    (a zero plateau opens up where the interval constraint is slack), and
    the new point's quadratic adds an affine term.  Breakpoints live on two
    stacks around the current root with a lazy shift for the right side;
    per-point work is O(1) plus the number of breakpoints the root crosses.
    """
    k = ybar.shape[0]
    cap = 2 * k + 8
    pos_l = np.empty(cap)
    ds_l = np.empty(cap)
    pos_r = np.empty(cap)
    ds_r = np.empty(cap)
    n_l = 0
    n_r = 0
    off_r = 0.0
    roots = np.empty(k)

    root = ybar[0]
    slope_l = 2.0 * w[0]  # slope of the piece left of the root
    slope_r = 2.0 * w[0]  # slope of the piece right of the root
    roots[0] = root

    for j in range(1, k):
        delta = dx[j - 1]
        wj = 2.0 * w[j]
        yj = ybar[j]
        # split at the root: a zero plateau [root, root+delta] opens up and
        # its edges become breakpoints (left edge drops slope_l, right edge
        # restores slope_r); the new quadratic adds slope wj everywhere, so
        # the plateau piece is exactly wj*(g - yj)
        off_r += delta
        lo = root
        hi = root + delta
        if lo <= yj <= hi:
            pos_l[n_l] = lo
            ds_l[n_l] = -slope_l
            n_l += 1
            pos_r[n_r] = hi - off_r
            ds_r[n_r] = slope_r
            n_r += 1
            root = yj
            slope_l = wj
            slope_r = wj
        elif yj < lo:
            # new root lies left of the plateau: both plateau edges end up
            # on the right stack (top of R = leftmost right-side breakpoint)
            pos_r[n_r] = hi - off_r
            ds_r[n_r] = slope_r
            n_r += 1
            pos_r[n_r] = lo - off_r
            ds_r[n_r] = -slope_l
            n_r += 1
            # walk left; v = f(cur), sigma = slope of the piece left of cur
            cur = lo
            v = wj * (lo - yj)
            sigma = slope_l + wj
            while n_l > 0:
                b = pos_l[n_l - 1]
                vb = v - sigma * (cur - b)
                if vb > 0.0:
                    n_l -= 1
                    pos_r[n_r] = b - off_r
                    ds_r[n_r] = ds_l[n_l]
                    n_r += 1
                    sigma -= ds_l[n_l]
                    cur = b
                    v = vb
                else:
                    break
            root = cur - v / sigma
            slope_l = sigma
            slope_r = sigma
        else:
            # new root lies right of the plateau: both edges go to the left
            # stack (top of L = rightmost left-side breakpoint)
            pos_l[n_l] = lo
            ds_l[n_l] = -slope_l
            n_l += 1
            pos_l[n_l] = hi
            ds_l[n_l] = slope_r
            n_l += 1
            # walk right; sigma = slope of the piece right of cur
            cur = hi
            v = wj * (hi - yj)
            sigma = slope_r + wj
            while n_r > 0:
                b = pos_r[n_r - 1] + off_r
                vb = v + sigma * (b - cur)
                if vb < 0.0:
                    n_r -= 1
                    pos_l[n_l] = b
                    ds_l[n_l] = ds_r[n_r]
                    n_l += 1
                    sigma += ds_r[n_r]
                    cur = b
                    v = vb
                else:
                    break
            root = cur - v / sigma
            slope_l = sigma
            slope_r = sigma
        roots[j] = root

    # backtrack: clip each unconstrained argmin into the interval allowed
    # by the successor value
    g = np.empty(k)
    g[k - 1] = roots[k - 1]
    for j in range(k - 2, -1, -1):
        hi = g[j + 1]
        lo = hi - dx[j]
        a = roots[j]
        if a < lo:
            g[j] = lo
        elif a > hi:
            g[j] = hi
        else:
            g[j] = a
    return g


@njit(cache=True)
def _lmr_cd(ybar, w, dx, g1, d, tol, max_sweeps):
    """Cyclic coordinate descent on (offset, increments) with box clipping.

    Objective: sum_j w[j] * (g1 + prefix(d)[j] - ybar[j])^2 with
    0 <= d[l] <= dx[l].  Each coordinate is minimized exactly and clipped.
    Running-sum bookkeeping makes a full sweep O(k).  Terminates when the
    max coordinate-wise KKT violation of the box QP drops to ``tol``.
    """
    k = ybar.shape[0]
    kd = k - 1
    wsum = w.sum()
    # suffix weights W[l] = sum of w[j] over j > l
    W = np.empty(kd)
    acc = 0.0
    for l in range(kd - 1, -1, -1):
        acc += w[l + 1]
        W[l] = acc
    r = np.empty(k)
    S0 = np.empty(kd)
    kkt = np.inf
    for sweep in range(1, max_sweeps + 1):
        # exact offset update
        _refresh_residuals(g1, d, ybar, r)
        s = 0.0
        for j in range(k):
            s += w[j] * r[j]
        shift = -s / wsum
        g1 += shift
        for j in range(k):
            r[j] += shift
        # ascending pass; S_l = suffix sum of w*r over j > l, maintained via
        # the total increment shift applied so far (affects all later j)
        acc = 0.0
        for l in range(kd - 1, -1, -1):
            acc += w[l + 1] * r[l + 1]
            S0[l] = acc
        total = 0.0
        for l in range(kd):
            s_l = S0[l] + total * W[l]
            new = d[l] - s_l / W[l]
            if new < 0.0:
                new = 0.0
            elif new > dx[l]:
                new = dx[l]
            total += new - d[l]
            d[l] = new
        # descending pass; updates at l' > l shift suffix sums by step*W[l']
        _refresh_residuals(g1, d, ybar, r)
        s = 0.0
        for j in range(k):
            s += w[j] * r[j]
        shift = -s / wsum
        g1 += shift
        for j in range(k):
            r[j] += shift
        acc = 0.0
        for l in range(kd - 1, -1, -1):
            acc += w[l + 1] * r[l + 1]
            S0[l] = acc
        carried = 0.0
        for l in range(kd - 1, -1, -1):
            s_l = S0[l] + carried
            new = d[l] - s_l / W[l]
            if new < 0.0:
                new = 0.0
            elif new > dx[l]:
                new = dx[l]
            carried += (new - d[l]) * W[l]
            d[l] = new
        # KKT violations of the box QP at the current point
        _refresh_residuals(g1, d, ybar, r)
        s = 0.0
        for j in range(k):
            s += w[j] * r[j]
        kkt = abs(2.0 * s)
        acc = 0.0
        for l in range(kd - 1, -1, -1):
            acc += w[l + 1] * r[l + 1]
            grad = 2.0 * acc
            if d[l] <= 0.0:
                v = -grad if grad < 0.0 else 0.0
            elif d[l] >= dx[l]:
                v = grad if grad > 0.0 else 0.0
            else:
                v = abs(grad)
            if v > kkt:
                kkt = v
        if kkt <= tol:
            return g1, sweep, kkt, True
    return g1, max_sweeps, kkt, False


def lmr(abscissae, ordinates, *, tol=1e-8, max_sweeps=10000):
    """Least-squares fit of a monotone 1-Lipschitz function to scatter data.

    Solves, over fitted values at the sorted unique abscissae,

        minimize   sum_i (g(x_i) - y_i)^2
        subject to 0 <= g_[j+1] - g_[j] <= x_[j+1] - x_[j].

    Tied abscissae are collapsed to their weighted-mean ordinate first; the
    chain constraints force equal fitted values there, so the least-squares
    objective is preserved exactly.

    The solution is computed by an exact forward dynamic program over
    piecewise-linear derivative functions and then certified (and, if float
    dust remains, polished) by exact cyclic coordinate descent on the
    box-constrained (offset, increments) reparametrization, which
    terminates once the max coordinate-wise KKT violation of that box QP
    falls below ``tol``.

    Parameters
    ----------
    abscissae, ordinates : array_like
        Paired samples; flattened.  Must be finite and non-empty.
    tol : float
        Max-norm KKT termination tolerance of the equivalent box QP.
    max_sweeps : int
        Sweep budget for the coordinate-descent certificate.

    Returns
    -------
    LinkFunction
        Extension slopes equal the boundary segment slopes (zero when the
        data collapses to a single knot).
    """
    x = np.asarray(abscissae, dtype=float).ravel()
    y = np.asarray(ordinates, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInputError("lmr requires at least one sample")
    if x.size != y.size:
        raise InvalidInputError(
            f"lmr got {x.size} abscissae but {y.size} ordinates"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("lmr requires finite samples")

    ux, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    w = counts.astype(float)
    ybar = np.bincount(inverse, weights=y) / w
    if ux.size == 1:
        return LinkFunction(ux.copy(), np.array([ybar[0]]), 0.0, 0.0)

    dx = np.diff(ux)
    fitted = _lmr_dp(ybar, w, dx)
    d = np.clip(np.diff(fitted), 0.0, dx)
    g1, _, _, _ = _lmr_cd(ybar, w, dx, float(fitted[0]), d, float(tol), int(max_sweeps))
    values = g1 + np.concatenate(([0.0], np.cumsum(d)))
    slope_l = min(max(d[0] / dx[0], 0.0), 1.0)
    slope_r = min(max(d[-1] / dx[-1], 0.0), 1.0)
    return LinkFunction(ux.copy(), values, slope_l, slope_r)
