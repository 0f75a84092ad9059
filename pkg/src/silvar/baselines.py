"""Fixed-link and restricted comparison fits.

The GLM baseline runs the same proximal loop as the full fit but freezes
the link (identity, or the softplus log(1+e^x), whose derivative lies in
(0,1) so it stays 1-Lipschitz).  The sparse-SIM baseline learns the link
but clamps the low-rank part to zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .solver import fit

FIXED_LINK_KINDS = ("identity", "softplus")

# composite Gauss-Legendre rule on [0, 1]; 64 panels of order 10 give far
# more than the 1e-10 absolute accuracy promised for the softplus integral
_PANELS = 64
_ORDER = 10
_nodes, _weights = np.polynomial.legendre.leggauss(_ORDER)
_edges = np.linspace(0.0, 1.0, _PANELS + 1)
_mid = 0.5 * (_edges[:-1] + _edges[1:])
_half = 0.5 * (_edges[1:] - _edges[:-1])
_U = (_mid[:, None] + _half[:, None] * _nodes[None, :]).ravel()
_W = (_half[:, None] * _weights[None, :]).ravel()

# beyond +-40 the integrand equals t (resp. e^t) to double precision
_TAIL = 40.0


def _softplus(t):
    return np.logaddexp(0.0, t)


def softplus_antiderivative(theta):
    """Integral of log(1 + e^t) from 0 to theta, absolute error < 1e-10.

    Quadrature over [0, clip(theta, -40, 40)] plus closed-form tails.
    """
    th = np.asarray(theta, dtype=float)
    flat = th.ravel()
    out = np.empty_like(flat)
    core = np.clip(flat, -_TAIL, _TAIL)
    chunk = 8192  # bounds the quadrature workspace
    for s in range(0, flat.size, chunk):
        c = core[s : s + chunk]
        out[s : s + chunk] = c * (_softplus(c[:, None] * _U[None, :]) @ _W)
    hi = flat > _TAIL
    lo = flat < -_TAIL
    if np.any(hi):
        out[hi] += 0.5 * (flat[hi] ** 2 - _TAIL**2)
    if np.any(lo):
        out[lo] += np.exp(flat[lo]) - np.exp(-_TAIL)
    return out.reshape(th.shape)


@dataclass(frozen=True)
class FixedLink:
    """A known link used in place of the learned one."""

    kind: str = "identity"

    def __post_init__(self):
        if self.kind not in FIXED_LINK_KINDS:
            raise InvalidInputError(
                f"fixed link kind must be one of {FIXED_LINK_KINDS}, got {self.kind!r}"
            )

    def evaluate(self, theta):
        t = np.asarray(theta, dtype=float)
        out = t if self.kind == "identity" else _softplus(t)
        if np.ndim(theta) == 0:
            return float(out)
        return out

    __call__ = evaluate

    def antiderivative(self, theta):
        t = np.asarray(theta, dtype=float)
        if self.kind == "identity":
            out = 0.5 * t * t
        else:
            out = softplus_antiderivative(t)
        if np.ndim(theta) == 0:
            return float(out)
        return out

    def to_dict(self):
        return {"fixed": self.kind}

    @classmethod
    def from_dict(cls, payload):
        if "fixed" not in payload:
            raise InvalidInputError("fixed link JSON missing the 'fixed' key")
        return cls(str(payload["fixed"]))


def fit_glm(data, link, reg, solver=None):
    """Sparse plus low-rank fit with the link frozen; monotone regression
    is never invoked."""
    if not isinstance(link, FixedLink):
        raise InvalidInputError("fit_glm needs a FixedLink")
    return fit(data, reg, solver, fixed_link=link)


def fit_sparse_sim(data, reg, solver=None):
    """Learned-link fit with the low-rank part clamped to zero."""
    return fit(data, reg, solver, clamp_lowrank=True)
