"""Experiment harness: splits, hyperparameter grids, error metrics,
latent-factor embedding, and seeded synthetic ground truth."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, NumericalError
from .link import LinkFunction
from .prox import RegularizerConfig
from .solver import Dataset, fit, predict

SYNTHETIC_LINK_KINDS = ("identity", "clipped_linear", "scaled_softplus")


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous train/validation/test split, optionally shuffled.

    ``shuffle_seed`` None keeps the sample order (the right choice for
    lag-stacked autoregressive data, where shuffling would leak across
    overlapping windows); an integer seed permutes samples first.
    """

    train_count: int
    validation_count: int
    test_count: int
    shuffle_seed: int = None

    def __post_init__(self):
        for name in ("train_count", "validation_count", "test_count"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be positive")

    def indices(self, n):
        total = self.train_count + self.validation_count + self.test_count
        if total > n:
            raise InvalidInputError(f"split needs {total} samples, dataset has {n}")
        order = np.arange(n)
        if self.shuffle_seed is not None:
            order = np.random.default_rng(self.shuffle_seed).permutation(n)
        a = self.train_count
        b = a + self.validation_count
        c = b + self.test_count
        return order[:a], order[a:b], order[b:c]


@dataclass(frozen=True)
class GridSpec:
    """Penalty grid lambda = 10^(i/4) over the given exponents, applied to
    both axes as a Cartesian product."""

    exponents: tuple = tuple(range(-8, 13))

    def __post_init__(self):
        exps = tuple(int(i) for i in self.exponents)
        object.__setattr__(self, "exponents", exps)
        if len(exps) == 0:
            raise InvalidInputError("grid needs at least one exponent")

    def values(self):
        return np.power(10.0, np.asarray(self.exponents, dtype=float) / 4.0)


@dataclass(frozen=True)
class SyntheticSpec:
    """Seeded ground-truth generator settings."""

    m: int
    p: int
    n: int
    sparsity: float = 0.1
    rank: int = 2
    link_kind: str = "clipped_linear"
    noise_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.p, self.n) < 1:
            raise InvalidInputError("dimensions must be positive")
        if not (0.0 < self.sparsity <= 1.0):
            raise InvalidInputError(f"sparsity must lie in (0, 1], got {self.sparsity}")
        if self.rank < 0 or self.rank > min(self.m, self.p):
            raise InvalidInputError(
                f"rank must lie in [0, min(m, p)], got {self.rank}"
            )
        if math.isnan(self.noise_std) or self.noise_std < 0:
            raise InvalidInputError("noise_std must be non-negative")
        if self.link_kind not in SYNTHETIC_LINK_KINDS:
            raise InvalidInputError(
                f"link_kind must be one of {SYNTHETIC_LINK_KINDS}, got {self.link_kind!r}"
            )


@dataclass(frozen=True)
class GridCell:
    lambda_sparse: float
    lambda_lowrank: float
    val_rmse: float
    test_rmse: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class GridSearchResult:
    best_lambda_sparse: float
    best_lambda_lowrank: float
    table: tuple
    model: object
    report: object
    test_rmse: float


def rmse(Yhat, Y):
    """Root mean squared entrywise difference."""
    Yhat = np.asarray(Yhat, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Yhat.shape != Y.shape:
        raise InvalidInputError(f"rmse shapes differ: {Yhat.shape} vs {Y.shape}")
    diff = Yhat - Y
    return float(np.sqrt(np.mean(diff * diff)))


def support_metrics(A_hat, A_true, threshold):
    """Precision, recall and F1 of the recovered support.

    Entries with magnitude above ``threshold`` count as edges.  Precision
    is 1 when nothing is predicted, recall is 1 when the truth is empty.
    """
    A_hat = np.asarray(A_hat, dtype=float)
    A_true = np.asarray(A_true, dtype=float)
    if A_hat.shape != A_true.shape:
        raise InvalidInputError(
            f"support_metrics shapes differ: {A_hat.shape} vs {A_true.shape}"
        )
    if threshold < 0:
        raise InvalidInputError("threshold must be non-negative")
    pred = np.abs(A_hat) > threshold
    true = np.abs(A_true) > threshold
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def embed(model, X, r):
    """Project inputs onto the top latent directions of the low-rank part.

    Computes the SVD of L (lag blocks side by side, as stored) and returns
    S_r V_r' X with shape (r, n); the stored input standardization is
    applied first so the projection lives in the coordinates the model was
    fitted in.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.p_total:
        raise InvalidInputError(
            f"embed expects {model.p_total} feature rows, got {X.shape}"
        )
    if r < 1 or r > min(model.L.shape):
        raise InvalidInputError(
            f"rank {r} outside [1, {min(model.L.shape)}] for L of shape {model.L.shape}"
        )
    Xs = model.standardization.apply(X) if model.standardization is not None else X
    _, s, Vt = np.linalg.svd(model.L, full_matrices=False)
    return (s[:r, None] * Vt[:r]) @ Xs


@dataclass(frozen=True)
class ScaledSoftplus:
    """Smooth 1-Lipschitz data-generating link: scale * log(1 + e^(x/scale))."""

    scale: float = 2.0

    kind = "scaled_softplus"

    def evaluate(self, theta):
        t = np.asarray(theta, dtype=float)
        out = self.scale * np.logaddexp(0.0, t / self.scale)
        if np.ndim(theta) == 0:
            return float(out)
        return out

    __call__ = evaluate


def synthetic_link(kind):
    """Ground-truth link for data generation; identity and clipped-linear
    are exact piecewise-linear links."""
    if kind == "identity":
        return LinkFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 1.0, 1.0)
    if kind == "clipped_linear":
        return LinkFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.0, 1.0)
    if kind == "scaled_softplus":
        return ScaledSoftplus()
    raise InvalidInputError(f"unknown synthetic link kind {kind!r}")


def synthesize(spec):
    """Draw a seeded synthetic instance.

    A0 gets ceil(sparsity * m * p) nonzeros uniform on +-[0.25, 1]; L0 is a
    rank-r matrix with orthonormal factors scaled so its Frobenius norm is
    half of A0's; X is standard normal and Y = link((A0 + L0) X) plus
    Gaussian noise.

    Returns (Dataset, A0, L0, link).
    """
    if not isinstance(spec, SyntheticSpec):
        raise InvalidInputError("synthesize needs a SyntheticSpec")
    rng = np.random.default_rng(spec.seed)
    m, p, n, r = spec.m, spec.p, spec.n, spec.rank

    count = math.ceil(spec.sparsity * m * p)
    positions = rng.choice(m * p, size=count, replace=False)
    magnitudes = rng.uniform(0.25, 1.0, size=count)
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    A0 = np.zeros(m * p)
    A0[positions] = signs * magnitudes
    A0 = A0.reshape(m, p)

    if r > 0:
        U0, _ = np.linalg.qr(rng.standard_normal((m, r)))
        V0, _ = np.linalg.qr(rng.standard_normal((p, r)))
        c = 0.5 * float(np.linalg.norm(A0))
        L0 = (c / math.sqrt(r)) * (U0 @ V0.T)
    else:
        L0 = np.zeros((m, p))

    X = rng.standard_normal((p, n))
    link = synthetic_link(spec.link_kind)
    Y = link.evaluate((A0 + L0) @ X)
    if spec.noise_std > 0:
        Y = Y + spec.noise_std * rng.standard_normal((m, n))
    return Dataset(X, Y), A0, L0, link


def _grid_cell(args):
    train, val, lam1, lam2, reg_template, solver, fixed_link, clamp_lowrank = args
    reg = replace(reg_template, lambda_sparse=lam1, lambda_lowrank=lam2)
    try:
        model, report = fit(
            train, reg, solver, fixed_link=fixed_link, clamp_lowrank=clamp_lowrank
        )
        score = rmse(predict(model, val.X), val.Y)
        if not np.isfinite(score):
            score = math.inf
        return score, report.iterations, report.converged
    except NumericalError:
        return math.inf, 0, False


def grid_search(
    data,
    split,
    grid,
    reg_template,
    solver=None,
    *,
    workers=1,
    fixed_link=None,
    clamp_lowrank=False,
):
    """Sweep the penalty grid, score validation RMSE, refit the winner.

    One fit per (lambda_sparse, lambda_lowrank) pair on the training split,
    row-major with lambda_sparse outermost.  The winning pair minimizes
    validation RMSE with ties broken toward stronger regularization
    (larger lambda_sparse, then larger lambda_lowrank); its model is refit
    and scored on the test split.  Cells whose fit diverges score infinity
    without aborting the sweep.
    """
    if not isinstance(reg_template, RegularizerConfig):
        raise InvalidInputError("reg_template must be a RegularizerConfig")
    if workers < 1:
        raise InvalidInputError("workers must be positive")
    idx_train, idx_val, idx_test = split.indices(data.n)
    train = data.subset(idx_train)
    val = data.subset(idx_val)
    test = data.subset(idx_test)

    lams = grid.values()
    pairs = [(l1, l2) for l1 in lams for l2 in lams]
    tasks = [
        (train, val, l1, l2, reg_template, solver, fixed_link, clamp_lowrank)
        for l1, l2 in pairs
    ]
    if workers == 1:
        scored = [_grid_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(_grid_cell, tasks, chunksize=1))

    best_idx = None
    for i, ((l1, l2), (score, _, _)) in enumerate(zip(pairs, scored)):
        if best_idx is None:
            best_idx = i
            continue
        b_score = scored[best_idx][0]
        b_l1, b_l2 = pairs[best_idx]
        if score < b_score or (score == b_score and (l1, l2) > (b_l1, b_l2)):
            best_idx = i

    best_l1, best_l2 = pairs[best_idx]
    reg = replace(reg_template, lambda_sparse=best_l1, lambda_lowrank=best_l2)
    model, report = fit(
        train, reg, solver, fixed_link=fixed_link, clamp_lowrank=clamp_lowrank
    )
    test_score = rmse(predict(model, test.X), test.Y)

    table = []
    for i, ((l1, l2), (score, iters, conv)) in enumerate(zip(pairs, scored)):
        table.append(
            GridCell(
                lambda_sparse=float(l1),
                lambda_lowrank=float(l2),
                val_rmse=score,
                test_rmse=test_score if i == best_idx else math.nan,
                iterations=iters,
                converged=conv,
            )
        )
    return GridSearchResult(
        best_lambda_sparse=float(best_l1),
        best_lambda_lowrank=float(best_l2),
        table=tuple(table),
        model=model,
        report=report,
        test_rmse=test_score,
    )
