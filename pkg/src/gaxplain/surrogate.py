"""epsilon-SVR with an RBF kernel, trained by sequential minimal optimisation.

The dual is solved in the usual 2l-variable form: for each training point
``i`` there is a pair ``(a_i, a*_i)`` in ``[0, C]`` and the model coefficient
is ``beta_i = a_i - a*_i``.  Working pairs are chosen deterministically from
the maximal KKT violator, so training is reproducible for a given input.

Defaults mirror the common library defaults for SVR: ``C=1``, ``epsilon=0.1``,
``gamma = 1 / (d * Var(X))`` and a stopping tolerance of ``1e-3``.
"""
from __future__ import annotations

import io
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "ConvergenceWarning",
    "DegenerateDataError",
    "SvrModel",
    "SvrParams",
    "gamma_scale",
    "load_model",
    "predict",
    "rbf_kernel",
    "save_model",
    "train_svr",
]

TAU = 1e-12
MAX_ITER_CAP = 200_000


class DegenerateDataError(ValueError):
    """Training data cannot support a model (empty, constant features, ...)."""


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SvrParams:
    """Hyperparameters.

    ``gamma`` is either the string ``"scale"`` or a positive float.
    ``max_iter=None`` means ``10 * n_rows`` pair updates, capped at 200000.
    ``working_set`` selects the second member of each pair: ``"second_order"``
    maximises the guaranteed objective decrease, ``"max_violating"`` takes
    the maximal violator.
    """

    C: float = 1.0
    epsilon: float = 0.1
    gamma: Union[str, float] = "scale"
    tol: float = 1e-3
    max_iter: int | None = None
    working_set: str = "second_order"
    cache_mb: float = 512.0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if isinstance(self.gamma, str):
            if self.gamma != "scale":
                raise ValueError(f"gamma must be 'scale' or a positive number, got {self.gamma!r}")
        elif not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.working_set not in ("second_order", "max_violating"):
            raise ValueError(f"unknown working_set {self.working_set!r}")

    def resolve_max_iter(self, n_rows: int) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return min(10 * n_rows, MAX_ITER_CAP)


@dataclass
class SvrModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    intercept: float
    gamma: float
    converged: bool = True
    n_iter: int = 0
    n_features: int = field(init=False)

    def __post_init__(self):
        self.support_vectors = np.atleast_2d(np.asarray(self.support_vectors, dtype=np.float64))
        self.dual_coef = np.asarray(self.dual_coef, dtype=np.float64).ravel()
        if self.support_vectors.shape[0] != self.dual_coef.size:
            raise ValueError("one dual coefficient per support vector required")
        self.n_features = self.support_vectors.shape[1]
        self._sv_sq = np.einsum("ij,ij->i", self.support_vectors, self.support_vectors)

    @property
    def n_support(self) -> int:
        return self.dual_coef.size

    def predict(self, X) -> Union[float, np.ndarray]:
        """Surrogate value for one bitstring (returns float) or a batch of rows."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X2.shape[1]}")
        if self.n_support == 0:
            out = np.full(X2.shape[0], self.intercept)
        else:
            sq = (
                np.einsum("ij,ij->i", X2, X2)[:, None]
                + self._sv_sq[None, :]
                - 2.0 * X2 @ self.support_vectors.T
            )
            np.maximum(sq, 0.0, out=sq)
            out = np.exp(-self.gamma * sq) @ self.dual_coef + self.intercept
        return float(out[0]) if single else out

    __call__ = predict


def gamma_scale(X) -> float:
    """``1 / (n_features * Var(X))`` with the population variance of all entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise DegenerateDataError("gamma_scale needs a non-empty 2-D matrix")
    var = X.var()
    if var == 0.0:
        raise DegenerateDataError("all training entries are identical; gamma='scale' undefined")
    return 1.0 / (X.shape[1] * var)


def rbf_kernel(u, v, gamma: float) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"kernel arguments differ in shape: {u.shape} vs {v.shape}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d = u - v
    return float(np.exp(-gamma * (d @ d)))


class _KernelRows:
    """LRU cache of RBF kernel rows over the training matrix."""

    def __init__(self, X: np.ndarray, gamma: float, cache_mb: float):
        self.X = X
        self.gamma = gamma
        self.sq = np.einsum("ij,ij->i", X, X)
        self.capacity = max(2, int(cache_mb * 2**20 // (8 * X.shape[0])))
        self.rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def __getitem__(self, i: int) -> np.ndarray:
        row = self.rows.get(i)
        if row is not None:
            self.rows.move_to_end(i)
            return row
        d = self.sq + self.sq[i] - 2.0 * (self.X @ self.X[i])
        np.maximum(d, 0.0, out=d)
        row = np.exp(-self.gamma * d)
        row[i] = 1.0
        self.rows[i] = row
        if len(self.rows) > self.capacity:
            self.rows.popitem(last=False)
        return row


def train_svr(X, y, params: SvrParams | None = None) -> SvrModel:
    """Fit an epsilon-SVR with RBF kernel by SMO.

    Stops when the maximal KKT violation (``m(a) - M(a)``) falls below
    ``params.tol``. If the iteration budget runs out first, the current
    iterate is returned with ``converged=False`` and a ConvergenceWarning.
    """
    params = params or SvrParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise DegenerateDataError("X must be a 2-D matrix")
    l = X.shape[0]
    if l < 2:
        raise DegenerateDataError(f"need at least 2 training rows, got {l}")
    if y.size != l:
        raise ValueError(f"X has {l} rows but y has {y.size} entries")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DegenerateDataError("training data contains non-finite values")

    gamma = gamma_scale(X) if params.gamma == "scale" else float(params.gamma)
    C, eps = float(params.C), float(params.epsilon)
    K = _KernelRows(X, gamma, params.cache_mb)
    max_iter = params.resolve_max_iter(l)
    second_order = params.working_set == "second_order"

    # Variables t < l carry sign +1 (a_t), t >= l carry sign -1 (a*_t).
    # Gradients of 1/2 a'Qa + p'a, with p = eps - y (upper) and eps + y (lower).
    a_up = np.zeros(l)
    a_lo = np.zeros(l)
    g_up = eps - y
    g_lo = eps + y

    n_iter = 0
    converged = False
    while True:
        # i: maximal -y_t G_t over I_up = {a_t < C, y=+1} u {a*_t > 0, y=-1}
        cand_up = np.where(a_up < C, -g_up, -np.inf)
        cand_lo = np.where(a_lo > 0, g_lo, -np.inf)
        iu, il = int(np.argmax(cand_up)), int(np.argmax(cand_lo))
        if cand_up[iu] >= cand_lo[il]:
            i, yi, gmax = iu, 1.0, cand_up[iu]
        else:
            i, yi, gmax = l + il, -1.0, cand_lo[il]
        # I_low = {a_t > 0, y=+1} u {a*_t < C, y=-1}; violation values y_t G_t
        low_up = a_up > 0
        low_lo = a_lo < C
        v_up = np.where(low_up, g_up, -np.inf)
        v_lo = np.where(low_lo, -g_lo, -np.inf)
        gmax2 = max(v_up.max(), v_lo.max())
        if gmax == -np.inf or gmax + gmax2 < params.tol:
            converged = True
            break
        if n_iter >= max_iter:
            break

        pi = i % l
        Ki = K[pi]
        if second_order:
            quad = np.maximum(2.0 - 2.0 * Ki, TAU)
            gd_up = gmax + g_up
            gd_lo = gmax - g_lo
            obj_up = np.where(low_up & (gd_up > 0), -(gd_up * gd_up) / quad, np.inf)
            obj_lo = np.where(low_lo & (gd_lo > 0), -(gd_lo * gd_lo) / quad, np.inf)
            ju, jl = int(np.argmin(obj_up)), int(np.argmin(obj_lo))
            if obj_up[ju] <= obj_lo[jl]:
                if obj_up[ju] == np.inf:
                    converged = True
                    break
                j, yj = ju, 1.0
            else:
                j, yj = l + jl, -1.0
        else:
            ju, jl = int(np.argmax(v_up)), int(np.argmax(v_lo))
            if v_up[ju] >= v_lo[jl]:
                j, yj = ju, 1.0
            else:
                j, yj = l + jl, -1.0
        pj = j % l
        Kj = K[pj]

        ai_old = a_up[pi] if i < l else a_lo[pi]
        aj_old = a_up[pj] if j < l else a_lo[pj]
        Gi = g_up[pi] if i < l else g_lo[pi]
        Gj = g_up[pj] if j < l else g_lo[pj]
        Qij = yi * yj * Ki[pj]
        ai, aj = _update_pair(ai_old, aj_old, Gi, Gj, yi, yj, Qij, C)

        if i < l:
            a_up[pi] = ai
        else:
            a_lo[pi] = ai
        if j < l:
            a_up[pj] = aj
        else:
            a_lo[pj] = aj

        # G_up += Q_{up,i} da_i + ..., with Q_{up,t} = y_t K and Q_{lo,t} = -y_t K
        d = (yi * (ai - ai_old)) * Ki + (yj * (aj - aj_old)) * Kj
        g_up += d
        g_lo -= d
        n_iter += 1

    b = -_rho(a_up, a_lo, g_up, g_lo, C)
    beta = a_up - a_lo
    sv = np.flatnonzero(beta != 0.0)
    if not converged:
        warnings.warn(
            f"SMO stopped after {n_iter} iterations without reaching tol={params.tol}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return SvrModel(X[sv].copy(), beta[sv], b, gamma, converged=converged, n_iter=n_iter)


def _update_pair(ai, aj, Gi, Gj, yi, yj, Qij, C):
    # Analytic two-variable update under 0 <= a <= C and y_i a_i + y_j a_j fixed.
    # Q_ii = Q_jj = 1 for the RBF kernel.
    if yi != yj:
        quad = 2.0 + 2.0 * Qij
        if quad <= 0:
            quad = TAU
        delta = (-Gi - Gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        else:
            if ai < 0:
                ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        else:
            if aj > C:
                aj, ai = C, C + diff
    else:
        quad = 2.0 - 2.0 * Qij
        if quad <= 0:
            quad = TAU
        delta = (Gi - Gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        else:
            if aj < 0:
                aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        else:
            if ai < 0:
                ai, aj = 0.0, total
    return ai, aj


def _rho(a_up, a_lo, g_up, g_lo, C) -> float:
    # y_t G_t per variable; free variables pin rho, otherwise take the midpoint
    # of the feasible interval left by bounded ones.
    yg_up, yg_lo = g_up, -g_lo
    free_up = (a_up > 0) & (a_up < C)
    free_lo = (a_lo > 0) & (a_lo < C)
    n_free = int(free_up.sum() + free_lo.sum())
    if n_free:
        return float((yg_up[free_up].sum() + yg_lo[free_lo].sum()) / n_free)
    ub_vals = np.concatenate([yg_up[a_up <= 0], yg_lo[a_lo >= C]])
    lb_vals = np.concatenate([yg_up[a_up >= C], yg_lo[a_lo <= 0]])
    ub = ub_vals.min() if ub_vals.size else np.inf
    lb = lb_vals.max() if lb_vals.size else -np.inf
    return float((ub + lb) / 2)


def predict(model: SvrModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single bitstring; use model.predict for batches")
    return model.predict(x)


# -- text format -------------------------------------------------------------
#
#   gamma <float>
#   intercept <float>
#   <beta> <bits>        one line per support vector, bits as a 0/1 string
#
# Floats are written with repr(), which round-trips binary64 exactly.

def save_model(model: SvrModel, path_or_stream) -> None:
    sv = model.support_vectors
    if sv.size and not np.all((sv == 0) | (sv == 1)):
        raise ValueError("text format stores binary support vectors only")
    lines = [f"gamma {float(model.gamma)!r}", f"intercept {float(model.intercept)!r}"]
    for beta, row in zip(model.dual_coef, sv):
        lines.append(f"{float(beta)!r} {''.join('1' if v else '0' for v in row)}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        with open(path_or_stream, "w", newline="\n") as fh:
            fh.write(text)


def load_model(path_or_stream, n_features: int | None = None) -> SvrModel:
    if hasattr(path_or_stream, "read"):
        text = path_or_stream.read()
    else:
        with open(path_or_stream) as fh:
            text = fh.read()
    lines = io.StringIO(text).read().splitlines()
    if len(lines) < 2:
        raise ValueError("model file truncated")
    key, val = lines[0].split()
    if key != "gamma":
        raise ValueError(f"expected 'gamma' on line 1, got {key!r}")
    gamma = float(val)
    key, val = lines[1].split()
    if key != "intercept":
        raise ValueError(f"expected 'intercept' on line 2, got {key!r}")
    intercept = float(val)
    betas, rows = [], []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        beta, bits = line.split()
        betas.append(float(beta))
        rows.append([int(c) for c in bits])
        if rows[-1] and set(bits) - {"0", "1"}:
            raise ValueError(f"line {lineno}: support vector must be a 0/1 string")
    if rows:
        sv = np.array(rows, dtype=np.float64)
    else:
        sv = np.zeros((0, n_features or 0))
    return SvrModel(sv, np.array(betas), intercept, gamma)
