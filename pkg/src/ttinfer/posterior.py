"""Model-agnostic log-posterior pipeline in the TT format.

The unnormalized log-APP metric of a discrete-input additive noise model is
assembled exactly in TT form (rank-2 prior plus summed log-likelihood terms),
exponentiated with a Taylor-initialized TT-cross, and marginalized mode by
mode to produce symbol-wise posteriors and MAP hard decisions.  Additive
constants of the log-posterior are never represented; normalization of the
marginals restores proper probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cross import CrossConfig, tt_cross, tt_exp_taylor
from .tt import (
    TensorTrain,
    constant_tt,
    tt_add,
    tt_eval_many,
    tt_marginalize_except,
    tt_truncate,
)

__all__ = [
    "InferenceFailureError",
    "LogPosterior",
    "MarginalTable",
    "build_prior_tt",
    "infer_marginals",
    "map_decision",
    "sum_loglikelihood_tts",
]

# Clamp window for the exponential handed to the cross: values are shifted so
# the estimated maximum sits at 0, the lower clip keeps the aggregate mass of
# the clipped region below e^-40 of the peak, and the upper clip guards
# against an underestimated shift.
_EXP_CLIP_HI = 46.0
_EXP_CLIP_MARGIN = 46.0


class InferenceFailureError(RuntimeError):
    """Marginalization produced no usable mass; retry with larger ranks."""


@dataclass(frozen=True)
class LogPosterior:
    """Unnormalized log-APP metric over ``n_modes`` symbols.

    ``tt`` holds the metric up to an additive constant; every physical
    dimension equals the alphabet size.
    """

    tt: TensorTrain
    alphabet: np.ndarray

    def __post_init__(self):
        alphabet = np.asarray(self.alphabet, dtype=np.float64)
        object.__setattr__(self, "alphabet", alphabet)
        if alphabet.ndim != 1 or alphabet.size < 1:
            raise ValueError("alphabet must be a nonempty vector")
        if any(n != alphabet.size for n in self.tt.dims):
            raise ValueError(
                f"every TT dimension must equal the alphabet size {alphabet.size}, got {self.tt.dims}"
            )

    @property
    def n_modes(self) -> int:
        return self.tt.order


@dataclass(frozen=True)
class MarginalTable:
    """Per-symbol posterior vectors; row i is the distribution of symbol i."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 2:
            raise ValueError("marginal table must be (n_modes, alphabet) shaped")
        if np.any(probs < 0):
            raise ValueError("marginal probabilities must be nonnegative")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("marginal rows must sum to 1")


def build_prior_tt(v, n_modes: int) -> TensorTrain:
    """Exact rank-2 TT of the separable log-prior sum_i v[k_i].

    First core (1, v), interior slices [[1, v_k], [0, 1]], last core
    stacking (v^T; 1^T); all interior ranks are exactly 2.  A single mode
    degenerates to the rank-1 TT holding v itself.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("log-prior must be a nonempty vector")
    if n_modes < 1:
        raise ValueError("need at least one mode")
    length = v.size
    if n_modes == 1:
        return TensorTrain([v.reshape(1, length, 1)])
    first = np.empty((1, length, 2))
    first[0, :, 0] = 1.0
    first[0, :, 1] = v
    last = np.empty((2, length, 1))
    last[0, :, 0] = v
    last[1, :, 0] = 1.0
    cores = [first]
    for _ in range(n_modes - 2):
        mid = np.zeros((2, length, 2))
        mid[0, :, 0] = 1.0
        mid[0, :, 1] = v
        mid[1, :, 1] = 1.0
        cores.append(mid)
    cores.append(last)
    return TensorTrain(cores, copy=False)


def sum_loglikelihood_tts(terms, tol: float) -> TensorTrain:
    """Sum log-likelihood TTs by pairwise-tree accumulation.

    Each pairwise sum adds the ranks; truncating with ``tol`` after every
    combine keeps intermediate ranks balanced.  A single term is returned
    unchanged.
    """
    items = list(terms)
    if not items:
        raise ValueError("need at least one log-likelihood term")
    dims = items[0].dims
    for t in items[1:]:
        if t.dims != dims:
            raise ValueError(f"shape mismatch among terms: {t.dims} vs {dims}")
    while len(items) > 1:
        merged = []
        for i in range(0, len(items) - 1, 2):
            merged.append(tt_truncate(tt_add(items[i], items[i + 1]), tol))
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return items[0]


def _estimate_log_shift(
    tt: TensorTrain, rng: np.random.Generator, n_probe: int = 256
) -> tuple[float, np.ndarray]:
    """Estimate the maximizer of the log-posterior: random probes refined by
    coordinate ascent.  Returns (max estimate, argmax estimate); the value
    centers the exponential near [-range, 0] and the index seeds the cross
    pivots at the posterior mode."""
    dims = tt.dims
    idx = np.column_stack([rng.integers(0, d, size=n_probe) for d in dims])
    vals = tt_eval_many(tt, idx)
    best = idx[int(np.argmax(vals))].copy()
    best_val = float(np.max(vals))
    for _ in range(2):
        improved = False
        for mode, dim in enumerate(dims):
            cand = np.tile(best, (dim, 1))
            cand[:, mode] = np.arange(dim)
            cvals = tt_eval_many(tt, cand)
            j = int(np.argmax(cvals))
            if cvals[j] > best_val:
                best_val = float(cvals[j])
                best = cand[j].copy()
                improved = True
        if not improved:
            break
    return best_val, best


def infer_marginals(
    lp: LogPosterior,
    cfg: CrossConfig,
    taylor_p: int,
    taylor_max_rank: int,
    variant: str = "sample",
    taylor_tol: float = 1e-12,
) -> tuple[MarginalTable, int]:
    """Symbol-wise posteriors of a log-posterior TT.

    Exponentiates the metric with a TT-cross (initialized by the truncated
    Taylor series at rank ``taylor_max_rank``), marginalizes every mode, and
    normalizes.  Negative marginal entries (cross artifacts) are clamped to
    zero before normalization.  Returns the table together with the maximum
    interior TT rank of the exponentiated tensor.

    Raises :class:`InferenceFailureError` when a marginal carries no usable
    mass; callers may retry with larger ranks.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, 0x5F17]))
    shift, mode_idx = _estimate_log_shift(lp.tt, rng)
    shifted = tt_truncate(
        tt_add(lp.tt, constant_tt(lp.tt.dims, -shift)), taylor_tol
    )
    init = tt_exp_taylor(shifted, taylor_p, taylor_max_rank, taylor_tol)
    lo = -(_EXP_CLIP_MARGIN + float(np.sum(np.log(lp.tt.dims))))

    def f(values):
        return np.exp(np.clip(values, lo, _EXP_CLIP_HI))

    result = tt_cross(f, shifted, init, cfg, variant=variant, seed_indices=mode_idx[None, :])
    table = np.empty((lp.n_modes, lp.alphabet.size))
    for mode in range(lp.n_modes):
        vec = tt_marginalize_except(result.tt, mode)
        vec = np.clip(vec, 0.0, None)
        total = vec.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise InferenceFailureError(
                f"marginal of mode {mode} has no usable mass (sum={total})"
            )
        table[mode] = vec / total
    return MarginalTable(table), max(result.tt.ranks)


def map_decision(marginals: MarginalTable, alphabet) -> np.ndarray:
    """Per-mode argmax over the alphabet; ties break toward the lowest
    alphabet index."""
    alphabet = np.asarray(alphabet)
    if alphabet.ndim != 1 or alphabet.size != marginals.probs.shape[1]:
        raise ValueError("alphabet does not match the marginal table width")
    return alphabet[np.argmax(marginals.probs, axis=1)]
