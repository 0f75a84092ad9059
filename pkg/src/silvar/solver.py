"""Joint estimation of the link and the sparse plus low-rank coefficients.

The fit alternates, per outer iteration: (i) form the linear responses
Theta = (A+L)X; (ii) re-estimate the link by Lipschitz monotone regression
over all (Theta, Y) pairs; (iii) take one accelerated proximal-gradient
step on (A, L).  For a fixed link the minimized surrogate is

    (1/n) * sum_i [ sum_j G(b_j' x_i) - y_i' B x_i ] + h1(A) + h2(L),

with B = A + L and G the antiderivative of the link; it is jointly convex
in (A, L) and its gradient with respect to either part is
(1/n) (g(Theta) - Y) X'.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericalError
from .link import lmr
from .prox import RegularizerConfig, penalty_value, prox_lowrank, prox_sparse

STEP_RULES = ("backtracking", "fixed_spectral")


@dataclass(frozen=True)
class Dataset:
    """Paired observation matrices, one column per sample.

    X holds p-dimensional inputs (p x n), Y the m-dimensional responses
    (m x n).  Note the column-per-sample orientation: a CSV row is a
    variable, not a sample.
    """

    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple = None
    response_names: tuple = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if X.ndim != 2 or Y.ndim != 2:
            raise InvalidInputError("Dataset matrices must be 2-d")
        if X.shape[1] != Y.shape[1]:
            raise InvalidInputError(
                f"X has {X.shape[1]} samples but Y has {Y.shape[1]}"
            )
        if X.shape[1] < 1:
            raise InvalidInputError("Dataset needs at least one sample")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidInputError("Dataset entries must be finite")
        for name, labels, count in (
            ("feature_names", self.feature_names, X.shape[0]),
            ("response_names", self.response_names, Y.shape[0]),
        ):
            if labels is not None:
                labels = tuple(str(s) for s in labels)
                object.__setattr__(self, name, labels)
                if len(labels) != count:
                    raise InvalidInputError(f"{name} has {len(labels)} labels for {count} rows")

    @property
    def n(self):
        return self.X.shape[1]

    def subset(self, indices):
        """New Dataset restricted to the given sample columns."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.X[:, idx], self.Y[:, idx], self.feature_names, self.response_names)


@dataclass(frozen=True)
class Standardization:
    """Per-feature shift and scale applied to inputs before the linear map."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        scale = np.asarray(self.scale, dtype=float).ravel()
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)
        if mean.shape != scale.shape:
            raise InvalidInputError("standardization mean/scale length mismatch")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(scale))):
            raise InvalidInputError("standardization must be finite")
        if np.any(scale <= 0):
            raise InvalidInputError("standardization scales must be positive")

    @classmethod
    def from_data(cls, X):
        mean = X.mean(axis=1)
        sd = X.std(axis=1)
        scale = np.where(sd > 1e-12, sd, 1.0)
        return cls(mean, scale)

    @classmethod
    def identity(cls, p):
        return cls(np.zeros(p), np.ones(p))

    def apply(self, X):
        if X.shape[0] != self.mean.shape[0]:
            raise InvalidInputError(
                f"standardization expects {self.mean.shape[0]} features, got {X.shape[0]}"
            )
        return (X - self.mean[:, None]) / self.scale[:, None]


@dataclass(frozen=True)
class SilvarModel:
    """Fitted link plus coefficient pair; A carries the sparse structure,
    L the low-rank structure, both m x (p * lag_count) with lag blocks side
    by side.  Coefficients live in standardized input units."""

    link: object
    A: np.ndarray
    L: np.ndarray
    lag_count: int = 1
    standardization: Standardization = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        L = np.asarray(self.L, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "L", L)
        if A.ndim != 2 or A.shape != L.shape:
            raise InvalidInputError(f"A shape {A.shape} and L shape {L.shape} must match")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(L))):
            raise InvalidInputError("model coefficients must be finite")
        if self.lag_count < 1 or A.shape[1] % self.lag_count != 0:
            raise InvalidInputError(
                f"{A.shape[1]} coefficient columns do not split into {self.lag_count} lags"
            )
        if self.link is None:
            raise InvalidInputError("model needs a link")

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def p_total(self):
        return self.A.shape[1]

    @property
    def p(self):
        return self.A.shape[1] // self.lag_count


@dataclass
class SolverConfig:
    max_iters: int = 1000
    rel_tol: float = 1e-6
    acceleration: bool = True
    step_rule: str = "backtracking"
    backtracking_shrink: float = 0.5
    standardize_inputs: bool = True
    link_update_every: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be positive")
        if not (self.rel_tol > 0):
            raise InvalidInputError("rel_tol must be positive")
        if self.step_rule not in STEP_RULES:
            raise InvalidInputError(f"step_rule must be one of {STEP_RULES}")
        if not (0.0 < self.backtracking_shrink < 1.0):
            raise InvalidInputError("backtracking_shrink must lie in (0, 1)")
        if self.link_update_every < 1:
            raise InvalidInputError("link_update_every must be positive")


@dataclass
class FitReport:
    """Objective trace and convergence diagnostics of one fit.

    ``descent_margins[k]`` is the fixed-link objective drop achieved by
    prox step k (pre-step minus post-step value under that iteration's
    link); with backtracking every margin is non-negative.
    """

    surrogate_objective_trace: list
    iterations: int
    converged: bool
    final_step_size: float
    wall_time: float
    descent_margins: list = field(default_factory=list)

    def to_dict(self):
        return {
            "surrogate_objective_trace": [float(v) for v in self.surrogate_objective_trace],
            "iterations": self.iterations,
            "converged": self.converged,
            "final_step_size": float(self.final_step_size),
            "wall_time": float(self.wall_time),
            "descent_margins": [float(v) for v in self.descent_margins],
        }


def linear_response(model, X):
    """Theta = (A + L) X, without any input standardization."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.p_total:
        raise InvalidInputError(
            f"linear_response expects {model.p_total} feature rows, got {X.shape}"
        )
    return (model.A + model.L) @ X


def predict(model, X):
    """Apply the stored standardization, the linear map, then the link."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.p_total:
        raise InvalidInputError(
            f"predict expects {model.p_total} feature rows, got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("predict requires finite inputs")
    Xs = model.standardization.apply(X) if model.standardization is not None else X
    return model.link.evaluate(linear_response(model, Xs))


def _data_term(Theta, Y, link, n):
    return (float(link.antiderivative(Theta).sum()) - float(np.vdot(Y, Theta))) / n


def surrogate_objective(model, data, config):
    """Penalized surrogate value at the model's coefficients.

    The dataset is used as given (fit standardizes its inputs before
    calling this); the G*(y) terms of the pseudo-likelihood are constant in
    (A, L) at fixed link and are omitted.
    """
    if data.X.shape[0] != model.p_total or data.Y.shape[0] != model.m:
        raise InvalidInputError(
            f"surrogate_objective: model is {model.m}x{model.p_total}, "
            f"data is {data.Y.shape[0]}x{data.X.shape[0]}"
        )
    Theta = (model.A + model.L) @ data.X
    return _data_term(Theta, data.Y, model.link, data.n) + penalty_value(
        model.A, model.L, config
    )


def gradient(model, data):
    """(1/n) (g(Theta) - Y) X'; the same matrix is the gradient with
    respect to A and to L."""
    if data.X.shape[0] != model.p_total or data.Y.shape[0] != model.m:
        raise InvalidInputError(
            f"gradient: model is {model.m}x{model.p_total}, "
            f"data is {data.Y.shape[0]}x{data.X.shape[0]}"
        )
    Theta = (model.A + model.L) @ data.X
    return (model.link.evaluate(Theta) - data.Y) @ data.X.T / data.n


def _prox_step(Pa, Pl, X, Y, link, reg, step, n, clamp_A, clamp_L, backtrack, shrink):
    """One proximal-gradient step from the point (Pa, Pl).

    With backtracking the step is halved until the quadratic upper bound of
    the smooth part holds at the candidate, which guarantees the penalized
    objective does not increase relative to (Pa, Pl).
    """
    Theta_p = (Pa + Pl) @ X
    f_p = _data_term(Theta_p, Y, link, n)
    G = (link.evaluate(Theta_p) - Y) @ X.T / n
    halvings = 0
    while True:
        if clamp_A:
            A_c = np.zeros_like(Pa)
        else:
            A_c = prox_sparse(Pa - step * G, step * reg.lambda_sparse, reg)
        if clamp_L:
            L_c = np.zeros_like(Pl)
        else:
            L_c = prox_lowrank(Pl - step * G, step * reg.lambda_lowrank, reg.lag_count)
        f_c = _data_term((A_c + L_c) @ X, Y, link, n)
        if not backtrack:
            break
        dA = A_c - Pa
        dL = L_c - Pl
        quad = (
            f_p
            + float(np.vdot(G, dA))
            + float(np.vdot(G, dL))
            + (float(np.vdot(dA, dA)) + float(np.vdot(dL, dL))) / (2.0 * step)
        )
        if f_c <= quad + 1e-12 * max(1.0, abs(f_c)) or halvings >= 60:
            break
        step *= shrink
        halvings += 1
    v_post = f_c + penalty_value(A_c, L_c, reg)
    return A_c, L_c, step, v_post


def fit(data, reg, solver=None, *, fixed_link=None, clamp_lowrank=False):
    """Estimate (link, A, L) from zero initialization.

    Parameters
    ----------
    data : Dataset
    reg : RegularizerConfig
    solver : SolverConfig, optional
    fixed_link : optional
        Freeze the link to this object (needs ``evaluate`` and
        ``antiderivative``); monotone regression is never invoked.
    clamp_lowrank : bool
        Treat the low-rank weight as infinite, keeping L identically zero.

    Returns
    -------
    (SilvarModel, FitReport)
    """
    t_start = time.perf_counter()
    cfg = solver if solver is not None else SolverConfig()
    if not isinstance(reg, RegularizerConfig):
        raise InvalidInputError("reg must be a RegularizerConfig")
    Y = data.Y
    m, n = Y.shape
    P = data.X.shape[0]
    if P % reg.lag_count != 0:
        raise InvalidInputError(
            f"{P} feature rows do not split into {reg.lag_count} lags"
        )
    std = (
        Standardization.from_data(data.X)
        if cfg.standardize_inputs
        else Standardization.identity(P)
    )
    X = std.apply(data.X)

    clamp_A = math.isinf(reg.lambda_sparse)
    clamp_L = clamp_lowrank or math.isinf(reg.lambda_lowrank)

    # the link is 1-Lipschitz, so the data-term gradient in B = A + L is
    # (1/n) sigma_max(X X')-Lipschitz; the spectral step is its inverse
    sv = np.linalg.svd(X, compute_uv=False)
    lip = float(sv[0] ** 2) / n if sv.size else 0.0
    step = 1.0 / lip if lip > 0 else 1.0

    backtrack = cfg.step_rule == "backtracking"
    A = np.zeros((m, P))
    L = np.zeros((m, P))
    A_prev, L_prev = A, L
    tk = 1.0
    link = fixed_link
    trace = []
    margins = []
    converged = False
    iterations = 0

    for it in range(1, cfg.max_iters + 1):
        iterations = it
        Theta = (A + L) @ X
        if fixed_link is None and (it == 1 or (it - 1) % cfg.link_update_every == 0):
            link = lmr(Theta.ravel(), Y.ravel())
        v_pre = _data_term(Theta, Y, link, n) + penalty_value(A, L, reg)
        if not np.isfinite(v_pre):
            raise NumericalError(f"objective diverged at iteration {it}")
        if it == 1:
            trace.append(v_pre)

        if cfg.acceleration:
            tk_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            beta = (tk - 1.0) / tk_next
        else:
            tk_next, beta = 1.0, 0.0
        if beta != 0.0:
            Pa = A + beta * (A - A_prev)
            Pl = L + beta * (L - L_prev)
        else:
            Pa, Pl = A, L

        A_new, L_new, step, v_post = _prox_step(
            Pa, Pl, X, Y, link, reg, step, n, clamp_A, clamp_L,
            backtrack, cfg.backtracking_shrink,
        )
        if v_post > v_pre and beta != 0.0:
            # momentum overshot: restart and take a plain step
            tk_next = 1.0
            A_new, L_new, step, v_post = _prox_step(
                A, L, X, Y, link, reg, step, n, clamp_A, clamp_L,
                backtrack, cfg.backtracking_shrink,
            )
        if backtrack and v_post > v_pre:
            # stationary up to float dust: keep the current point
            A_new, L_new, v_post = A, L, v_pre
            tk_next = 1.0
        if not np.isfinite(v_post):
            raise NumericalError(f"objective diverged at iteration {it}")

        margins.append(v_pre - v_post)
        trace.append(v_post)
        A_prev, L_prev = A, L
        A, L, tk = A_new, L_new, tk_next
        if abs(trace[-1] - trace[-2]) <= cfg.rel_tol * max(1.0, abs(trace[-2])):
            converged = True
            break

    model = SilvarModel(link=link, A=A, L=L, lag_count=reg.lag_count, standardization=std)
    report = FitReport(
        surrogate_objective_trace=trace,
        iterations=iterations,
        converged=converged,
        final_step_size=step,
        wall_time=time.perf_counter() - t_start,
        descent_margins=margins,
    )
    return model, report
