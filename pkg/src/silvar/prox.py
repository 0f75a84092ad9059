"""Regularizers on the sparse and low-rank coefficient parts and their
proximal operators.

Coefficient matrices are m x (p*M) with M lag blocks side by side
(lag-1 block first).  The sparse penalty is either the elementwise l1 norm
or, for autoregressive fits, the sum over matrix entries (i, j) of the l2
norm of the M-vector of lag coefficients.  The low-rank penalty is the sum
of per-lag nuclear norms, which reduces to a single nuclear norm when M=1.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError

SPARSE_STRUCTURES = ("l1", "group")

#: singular values below this fraction of the largest one count as zero
#: when reporting ranks
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class RegularizerConfig:
    """Penalty weights and structure.

    ``lambda_sparse`` weights the sparse penalty on A, ``lambda_lowrank``
    the nuclear penalty on L.  ``math.inf`` clamps the corresponding part
    to zero exactly.  ``sparse_structure`` is "l1" (elementwise) or "group"
    (per-entry lag blocks); "group" with ``lag_count`` 1 coincides with
    "l1".
    """

    lambda_sparse: float
    lambda_lowrank: float
    sparse_structure: str = "l1"
    lag_count: int = 1

    def __post_init__(self):
        for name in ("lambda_sparse", "lambda_lowrank"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise InvalidInputError(f"{name} must be >= 0, got {v}")
        if self.sparse_structure not in SPARSE_STRUCTURES:
            raise InvalidInputError(
                f"sparse_structure must be one of {SPARSE_STRUCTURES}, "
                f"got {self.sparse_structure!r}"
            )
        if not isinstance(self.lag_count, int) or self.lag_count < 1:
            raise InvalidInputError(f"lag_count must be a positive integer, got {self.lag_count}")


def _check_matrix(W, op):
    W = np.asarray(W, dtype=float)
    if not np.all(np.isfinite(W)):
        raise InvalidInputError(f"{op} requires finite entries")
    return W


def _check_tau(tau, op):
    if math.isnan(tau) or tau < 0:
        raise InvalidInputError(f"{op} requires a non-negative threshold, got {tau}")
    return float(tau)


def _split_lags(W, lag_count, op):
    if W.ndim != 2 or W.shape[1] % lag_count != 0:
        raise InvalidInputError(
            f"{op}: matrix with {W.shape} cannot be split into {lag_count} lag blocks"
        )
    return W.shape[1] // lag_count


def prox_l1(W, tau):
    """Elementwise soft-thresholding: sign(w) * max(|w| - tau, 0)."""
    W = _check_matrix(W, "prox_l1")
    tau = _check_tau(tau, "prox_l1")
    if math.isinf(tau):
        return np.zeros_like(W)
    return np.sign(W) * np.maximum(np.abs(W) - tau, 0.0)


def prox_group(W, tau, lag_count):
    """Blockwise soft-thresholding of per-entry lag blocks.

    Each length-M block (w_ij^(1), ..., w_ij^(M)) is scaled by
    max(1 - tau/||block||, 0); blocks at or below the threshold vanish.
    """
    W = _check_matrix(W, "prox_group")
    tau = _check_tau(tau, "prox_group")
    m = W.shape[0]
    p = _split_lags(W, lag_count, "prox_group")
    if math.isinf(tau):
        return np.zeros_like(W)
    if tau == 0.0:
        return W.copy()
    blocks = W.reshape(m, lag_count, p)
    norms = np.sqrt((blocks * blocks).sum(axis=1))
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(1.0 - tau / norms[nz], 0.0)
    return (blocks * scale[:, None, :]).reshape(m, lag_count * p)


def prox_nuclear(W, tau):
    """Singular value thresholding: U * max(S - tau, 0) * Vt.

    Uses a dense full SVD; singular values at or below tau are zeroed
    exactly, so the output rank never exceeds the input rank.
    """
    W = _check_matrix(W, "prox_nuclear")
    tau = _check_tau(tau, "prox_nuclear")
    if math.isinf(tau):
        return np.zeros_like(W)
    try:
        U, s, Vt = np.linalg.svd(W, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD failed to converge on a {W.shape[0]}x{W.shape[1]} matrix"
        ) from exc
    s = np.maximum(s - tau, 0.0)
    return (U * s) @ Vt


def prox_sparse(W, tau, config):
    """Prox of the configured sparse penalty (used by the fit loop)."""
    if config.sparse_structure == "group":
        return prox_group(W, tau, config.lag_count)
    return prox_l1(W, tau)


def prox_lowrank(W, tau, lag_count):
    """Per-lag singular value thresholding of the low-rank part."""
    W = _check_matrix(W, "prox_lowrank")
    p = _split_lags(W, lag_count, "prox_lowrank")
    out = np.empty_like(W)
    for l in range(lag_count):
        out[:, l * p : (l + 1) * p] = prox_nuclear(W[:, l * p : (l + 1) * p], tau)
    return out


def _nuclear_norm(W):
    return float(np.linalg.svd(W, compute_uv=False).sum())


def penalty_value(A, L, config):
    """h1(A) + h2(L) under the configured structures.

    h2 sums nuclear norms per lag block; infinite weights contribute zero
    when the corresponding part is exactly zero (the clamped case) and
    infinity otherwise.
    """
    A = _check_matrix(A, "penalty_value")
    L = _check_matrix(L, "penalty_value")
    if A.shape != L.shape:
        raise InvalidInputError(
            f"penalty_value: A shape {A.shape} != L shape {L.shape}"
        )
    m = A.shape[0]
    p = _split_lags(A, config.lag_count, "penalty_value")

    if config.sparse_structure == "group":
        blocks = A.reshape(m, config.lag_count, p)
        sparse_raw = float(np.sqrt((blocks * blocks).sum(axis=1)).sum())
    else:
        sparse_raw = float(np.abs(A).sum())
    lowrank_raw = sum(
        _nuclear_norm(L[:, l * p : (l + 1) * p]) for l in range(config.lag_count)
    )

    total = 0.0
    for lam, raw in ((config.lambda_sparse, sparse_raw), (config.lambda_lowrank, lowrank_raw)):
        if math.isinf(lam):
            if raw > 0.0:
                return math.inf
        else:
            total += lam * raw
    return total


def numerical_rank(W):
    """Number of singular values above RANK_RTOL times the largest one."""
    s = np.linalg.svd(np.asarray(W, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))
