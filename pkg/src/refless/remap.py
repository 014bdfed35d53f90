"""Weakly-supervised linear re-mappings between embedding spaces.

Two post-hoc alignment steps are provided as sklearn-style estimators:

* :class:`CLPProjection`: orthogonal Procrustes projection of the source
  space onto the target space, fitted on a bilingual lexicon.
* :class:`UMDProjection`: removal of the dominant direction of the stacked
  translation-pair difference vectors, applied to both spaces.

Steps compose into a :class:`RemapPipeline`; a spec string like
``"clp.umd"`` denotes the composition clp∘umd (rightmost applied first).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_matrix, check_paired_matrices
from .exceptions import ConvergenceError, FormatError, NoMisalignmentError
from .vectors import EmbeddingSpace, pool_sentence, tokenize

STEP_NAMES = ("clp", "umd")

JACOBI_SWEEP_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60


def jacobi_svd(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided Jacobi SVD of a square matrix.

    Returns ``(U, s, V)`` with ``M = U @ diag(s) @ V.T``, singular values
    descending, and U, V orthogonal. Plane rotations are applied on the
    right until every column pair is orthogonal relative to the sweep
    tolerance; raises :class:`ConvergenceError` after 60 sweeps.
    """
    M = check_matrix(M, "M")
    d0, d1 = M.shape
    if d0 != d1:
        raise ValueError(f"jacobi_svd requires a square matrix, got {M.shape}")
    d = d0
    A = M.astype(np.float64, copy=True)
    V = np.eye(d)
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                ap = A[:, p]
                aq = A[:, q]
                alpha = float(ap @ ap)
                beta = float(aq @ aq)
                gamma = float(ap @ aq)
                scale = math.sqrt(alpha * beta)
                if scale == 0.0 or abs(gamma) <= JACOBI_SWEEP_TOL * scale:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * ap - s * aq
                new_q = s * ap + c * aq
                A[:, p] = new_p
                A[:, q] = new_q
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
        if not rotated:
            break
    else:
        raise ConvergenceError(
            f"one-sided Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )

    norms = np.sqrt((A * A).sum(axis=0))
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    A = A[:, order]
    V = V[:, order]

    U = np.zeros((d, d))
    cutoff = d * np.finfo(np.float64).eps * (norms[0] if norms.size else 0.0)
    rank = int((norms > cutoff).sum())
    for j in range(rank):
        U[:, j] = A[:, j] / norms[j]
    norms[rank:] = 0.0
    # complete U to a full orthonormal basis for rank-deficient inputs
    for j in range(rank, d):
        residuals = np.eye(d) - U[:, :j] @ U[:, :j].T
        lengths = np.sqrt((residuals * residuals).sum(axis=0))
        best = int(np.argmax(lengths))
        U[:, j] = residuals[:, best] / lengths[best]
    return U, norms, V


def dominant_right_singular_vector(Q, tol: float = 1e-12, max_iter: int = 20000) -> np.ndarray:
    """Dominant right singular vector of Q by power iteration on QᵀQ.

    The returned vector has unit norm; its sign is fixed so that the
    largest-magnitude component is positive.
    """
    Q = check_matrix(Q, "Q")
    G = Q.T @ Q
    col_norms = np.sqrt((G * G).sum(axis=0))
    start = int(np.argmax(col_norms))
    if col_norms[start] == 0.0:
        raise NoMisalignmentError("difference matrix is numerically zero")
    v = G[:, start] / np.linalg.norm(G[:, start])
    for _ in range(max_iter):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break  # started in the null space; keep current direction
        w /= norm
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            v = w
            break
        v = w
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations"
        )
    v = v / np.linalg.norm(v)
    peak = int(np.argmax(np.abs(v)))
    if v[peak] < 0:
        v = -v
    return v


@dataclass(frozen=True)
class BilingualLexicon:
    """Matched source/target keys used to fit re-mappings.

    ``kind`` selects how keys resolve to vectors: ``"word"`` looks tokens up
    directly, ``"sentence"`` pools whitespace-tokenized text.
    """

    pairs: tuple[tuple[str, str], ...]
    kind: str = "word"

    def __post_init__(self):
        if self.kind not in ("word", "sentence"):
            raise ValueError(f"kind must be 'word' or 'sentence', got {self.kind!r}")

    def __len__(self) -> int:
        return len(self.pairs)


def resolve_lexicon(
    lexicon: BilingualLexicon,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Stack resolvable lexicon pairs into row matrices.

    Unresolvable pairs (OOV words, degenerate sentences) are skipped; the
    skip count is returned so callers can report it.
    """
    if src_space.dimension != tgt_space.dimension:
        raise ValueError(
            f"space dimensions differ: {src_space.dimension} vs {tgt_space.dimension}"
        )
    xs, ys = [], []
    skipped = 0
    for src_key, tgt_key in lexicon.pairs:
        if lexicon.kind == "word":
            xv = src_space.get(src_key)
            yv = tgt_space.get(tgt_key)
            if xv is None or yv is None:
                skipped += 1
                continue
        else:
            xe = pool_sentence(tokenize(src_key), src_space)
            ye = pool_sentence(tokenize(tgt_key), tgt_space)
            if xe.degenerate or ye.degenerate:
                skipped += 1
                continue
            xv, yv = xe.vector, ye.vector
        xs.append(xv)
        ys.append(yv)
    d = src_space.dimension
    if not xs:
        return np.zeros((0, d)), np.zeros((0, d)), skipped
    return np.stack(xs), np.stack(ys), skipped


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return X / safe


class CLPProjection(BaseEstimator, TransformerMixin):
    """Orthogonal Procrustes projection of source vectors onto the target space.

    ``fit(X, Y)`` takes row-aligned matrices of source/target vectors and
    computes the orthogonal W minimizing ``||X W - Y||_F`` from the SVD of
    the cross-covariance XᵀY. Applies to the source side only.

    Parameters
    ----------
    normalize : bool
        L2-normalize the dictionary rows before fitting. Off by default.
    """

    applies_to_target = False

    def __init__(self, normalize: bool = False):
        self.normalize = normalize

    def fit(self, X, Y):
        X, Y = check_paired_matrices(X, Y)
        if X.shape[0] == 0:
            raise ValueError("cannot fit CLP on zero pairs")
        if X.shape[0] < X.shape[1]:
            warnings.warn(
                f"fitting CLP on {X.shape[0]} pairs in dimension {X.shape[1]}; "
                "at least d pairs are recommended",
                stacklevel=2,
            )
        if self.normalize:
            X, Y = _unit_rows(X), _unit_rows(Y)
        M = X.T @ Y
        U, _, V = jacobi_svd(M)
        self.matrix_ = U @ V.T
        self.n_pairs_ = X.shape[0]
        self.dimension_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "matrix_"):
            raise NotFittedError("CLPProjection is not fitted")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.dimension_:
            raise ValueError(
                f"dimension mismatch: vectors have {X2.shape[1]}, transform has {self.dimension_}"
            )
        out = X2 @ self.matrix_
        return out[0] if single else out


class UMDProjection(BaseEstimator, TransformerMixin):
    """Removal of the dominant translation-pair mismatch direction.

    ``fit(X, Y)`` stacks the difference vectors X − Y and extracts their
    dominant right singular vector v; ``transform`` subtracts
    ``cos(v_row, v) * v`` from every row (scale-sensitive cosine form, zero
    rows pass through). Applies to both sides.
    """

    applies_to_target = True

    def __init__(self):
        pass

    def fit(self, X, Y):
        X, Y = check_paired_matrices(X, Y)
        if X.shape[0] < 2:
            raise ValueError(f"cannot fit UMD on {X.shape[0]} pair(s); need at least 2")
        Q = X - Y
        if np.abs(Q).max(initial=0.0) < 1e-12:
            raise NoMisalignmentError(
                "all pairs have numerically identical vectors; no misalignment direction"
            )
        self.direction_ = dominant_right_singular_vector(Q)
        self.n_pairs_ = X.shape[0]
        self.dimension_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "direction_"):
            raise NotFittedError("UMDProjection is not fitted")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.dimension_:
            raise ValueError(
                f"dimension mismatch: vectors have {X2.shape[1]}, transform has {self.dimension_}"
            )
        v = self.direction_
        norms = np.linalg.norm(X2, axis=1)
        cos = np.zeros_like(norms)
        nonzero = norms > 0
        cos[nonzero] = (X2[nonzero] @ v) / norms[nonzero]
        out = X2 - cos[:, None] * v[None, :]
        return out[0] if single else out


class RemapPipeline(BaseEstimator):
    """An ordered sequence of re-mapping steps.

    ``steps`` lists step names in application order (first applied first),
    so the composition clp∘umd is ``RemapPipeline(steps=["umd", "clp"])``.
    Each step is fitted on vectors already transformed by the earlier steps.
    """

    def __init__(self, steps: Sequence[str] = ("clp",), clp_normalize: bool = False):
        self.steps = list(steps)
        self.clp_normalize = clp_normalize

    def _make_step(self, name: str):
        if name == "clp":
            return CLPProjection(normalize=self.clp_normalize)
        if name == "umd":
            return UMDProjection()
        raise ValueError(f"unknown re-mapping step {name!r}; expected one of {STEP_NAMES}")

    def fit(self, X, Y):
        if not self.steps:
            raise ValueError("pipeline needs at least one step")
        X, Y = check_paired_matrices(X, Y)
        self.residual_before_ = float(np.linalg.norm(X - Y))
        fitted = []
        for name in self.steps:
            step = self._make_step(name).fit(X, Y)
            X = step.transform(X)
            if step.applies_to_target:
                Y = step.transform(Y)
            fitted.append(step)
        self.fitted_steps_ = fitted
        self.residual_after_ = float(np.linalg.norm(X - Y))
        self.dimension_ = fitted[0].dimension_
        self.n_pairs_ = fitted[0].n_pairs_
        return self

    @classmethod
    def from_fitted(cls, fitted_steps, clp_normalize: bool = False) -> "RemapPipeline":
        """Wrap already-fitted steps (e.g. loaded from a transform file)."""
        fitted = list(fitted_steps)
        if not fitted:
            raise ValueError("pipeline needs at least one step")
        names = ["clp" if isinstance(s, CLPProjection) else "umd" for s in fitted]
        pipe = cls(steps=names, clp_normalize=clp_normalize)
        pipe.fitted_steps_ = fitted
        pipe.dimension_ = fitted[0].dimension_
        pipe.n_pairs_ = fitted[0].n_pairs_
        return pipe

    def _check_fitted(self):
        if not hasattr(self, "fitted_steps_"):
            raise NotFittedError("RemapPipeline is not fitted")

    def transform(self, X):
        """Source-side mapping: every step applies."""
        self._check_fitted()
        for step in self.fitted_steps_:
            X = step.transform(X)
        return X

    def transform_target(self, Y):
        """Target-side mapping: only both-sided steps (UMD) apply."""
        self._check_fitted()
        for step in self.fitted_steps_:
            if step.applies_to_target:
                Y = step.transform(Y)
        return Y

    def residual(self, X, Y) -> float:
        """Frobenius distance between mapped source and mapped target rows."""
        self._check_fitted()
        X, Y = check_paired_matrices(X, Y)
        return float(np.linalg.norm(self.transform(X) - self.transform_target(Y)))

    def spec_string(self) -> str:
        """Composition notation: leftmost step is applied last."""
        return ".".join(reversed(self.steps))


def parse_pipeline_spec(spec: str) -> list[str]:
    """Parse ``"step[.step]"`` into application order (rightmost first).

    ``"clp.umd"`` denotes clp∘umd and parses to ``["umd", "clp"]``.
    """
    names = [part.strip().lower() for part in spec.split(".")]
    if not names or any(not n for n in names):
        raise ValueError(f"malformed pipeline spec {spec!r}")
    for name in names:
        if name not in STEP_NAMES:
            raise ValueError(
                f"unknown re-mapping step {name!r} in spec {spec!r}; expected one of {STEP_NAMES}"
            )
    return list(reversed(names))


def fit_clp(
    lexicon: BilingualLexicon,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
    normalize: bool = False,
) -> CLPProjection:
    """Fit a CLP step on the resolvable pairs of a lexicon."""
    X, Y, skipped = resolve_lexicon(lexicon, src_space, tgt_space)
    if X.shape[0] == 0:
        raise ValueError(f"no resolvable pairs in lexicon ({skipped} skipped)")
    _warn_skipped(skipped)
    return CLPProjection(normalize=normalize).fit(X, Y)


def fit_umd(
    lexicon: BilingualLexicon,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
) -> UMDProjection:
    """Fit a UMD step on the resolvable pairs of a lexicon."""
    X, Y, skipped = resolve_lexicon(lexicon, src_space, tgt_space)
    if X.shape[0] < 2:
        raise ValueError(
            f"need at least 2 resolvable pairs to fit UMD, got {X.shape[0]} ({skipped} skipped)"
        )
    _warn_skipped(skipped)
    return UMDProjection().fit(X, Y)


def fit_pipeline(
    steps: Sequence[str],
    lexicon: BilingualLexicon,
    src_space: EmbeddingSpace,
    tgt_space: EmbeddingSpace,
    clp_normalize: bool = False,
) -> RemapPipeline:
    """Fit a pipeline of steps (application order) on a lexicon."""
    X, Y, skipped = resolve_lexicon(lexicon, src_space, tgt_space)
    if X.shape[0] == 0:
        raise ValueError(f"no resolvable pairs in lexicon ({skipped} skipped)")
    _warn_skipped(skipped)
    return RemapPipeline(steps=steps, clp_normalize=clp_normalize).fit(X, Y)


def _warn_skipped(skipped: int) -> None:
    if skipped:
        warnings.warn(f"{skipped} lexicon pair(s) were unresolvable and skipped", stacklevel=3)


TRANSFORM_FORMAT_TAG = "# refless-transform v1"


def _format_float(x: float) -> str:
    return repr(float(x))


def save_transform(pipeline: RemapPipeline, path) -> None:
    """Serialize a fitted pipeline as structured text, full precision."""
    pipeline._check_fitted()
    lines = [TRANSFORM_FORMAT_TAG, f"steps {len(pipeline.fitted_steps_)}"]
    for step in pipeline.fitted_steps_:
        if isinstance(step, CLPProjection):
            lines.append("step clp")
            lines.append(f"dimension {step.dimension_}")
            lines.append(f"pairs {step.n_pairs_}")
            lines.append("matrix")
            for row in step.matrix_:
                lines.append(" ".join(_format_float(v) for v in row))
        else:
            lines.append("step umd")
            lines.append(f"dimension {step.dimension_}")
            lines.append(f"pairs {step.n_pairs_}")
            lines.append("vector " + " ".join(_format_float(v) for v in step.direction_))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_transform(path) -> RemapPipeline:
    """Load a pipeline saved by :func:`save_transform`."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != TRANSFORM_FORMAT_TAG:
        raise FormatError(f"{path}: missing transform format tag")
    idx = 1

    def expect(prefix: str) -> str:
        nonlocal idx
        if idx >= len(lines) or not lines[idx].startswith(prefix):
            raise FormatError(f"{path}: expected {prefix!r} at line {idx + 1}")
        value = lines[idx][len(prefix):].strip()
        idx += 1
        return value

    try:
        n_steps = int(expect("steps"))
    except ValueError:
        raise FormatError(f"{path}: malformed step count") from None
    fitted = []
    for _ in range(n_steps):
        kind = expect("step")
        dim = int(expect("dimension"))
        pairs = int(expect("pairs"))
        if kind == "clp":
            expect("matrix")
            rows = []
            for _ in range(dim):
                if idx >= len(lines):
                    raise FormatError(f"{path}: truncated matrix payload")
                rows.append([float(v) for v in lines[idx].split()])
                idx += 1
            matrix = np.array(rows, dtype=np.float64)
            if matrix.shape != (dim, dim):
                raise FormatError(f"{path}: matrix payload is not {dim}x{dim}")
            step = CLPProjection()
            step.matrix_ = matrix
        elif kind == "umd":
            payload = expect("vector")
            vec = np.array([float(v) for v in payload.split()], dtype=np.float64)
            if vec.size != dim:
                raise FormatError(f"{path}: vector payload is not length {dim}")
            step = UMDProjection()
            step.direction_ = vec
        else:
            raise FormatError(f"{path}: unknown step kind {kind!r}")
        step.dimension_ = dim
        step.n_pairs_ = pairs
        fitted.append(step)
    return RemapPipeline.from_fitted(fitted)
