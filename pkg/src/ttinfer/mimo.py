"""MIMO detection pieces: Rayleigh channel sampling, complex-to-real model
decomposition, QAM alphabets, exact rank-3 TT construction of h^T x, exact
Gaussian log-likelihood terms, and the TT detector.

The complex model y~ = H~ x~ + n~ with M-QAM symbols is rewritten as the real
model y = H x + n with H = [[Re, -Im], [Im, Re]], stacked (Re; Im) vectors,
and the real alphabet {+-1, +-3, ...} of size sqrt(M) per real component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cross import CrossConfig
from .posterior import (
    LogPosterior,
    MarginalTable,
    infer_marginals,
    map_decision,
    sum_loglikelihood_tts,
)
from .tt import TensorTrain, constant_tt, tt_add, tt_hadamard, tt_scale, tt_truncate

__all__ = [
    "ChannelRealization",
    "DegenerateChannelError",
    "DetectionTrial",
    "QamConstellation",
    "build_hx_tt",
    "build_loglik_term",
    "complexify_vec",
    "noise_variance_for_snr",
    "realify_channel",
    "realify_model",
    "realify_vec",
    "sample_channel",
    "ttdet",
]


class DegenerateChannelError(ValueError):
    """The channel matrix is (numerically) zero; SNR is undefined."""


@dataclass(frozen=True)
class QamConstellation:
    """Square M-QAM described by its real per-component alphabet.

    The alphabet is the unnormalized odd grid {+-1, +-3, ...} of size
    L = sqrt(M); average-energy normalization enters only the SNR
    accounting, never the symbols themselves.
    """

    m: int
    alphabet: np.ndarray

    @classmethod
    def from_order(cls, m: int) -> "QamConstellation":
        side = math.isqrt(m)
        if side * side != m or side < 2:
            raise ValueError(f"{m}-QAM is not square")
        alphabet = np.arange(-side + 1, side + 1, 2, dtype=np.float64)
        return cls(m=m, alphabet=alphabet)

    @property
    def size_real(self) -> int:
        return self.alphabet.size

    @property
    def energy_real(self) -> float:
        """Mean energy of one real component."""
        return float(np.mean(self.alphabet**2))

    @property
    def energy_complex(self) -> float:
        """Mean energy of one complex M-QAM symbol."""
        return 2.0 * self.energy_real


@dataclass(frozen=True)
class ChannelRealization:
    """Real-valued observation model y = H x + n with AWGN variance sigma2.

    ``h`` carries the block structure [[Re, -Im], [Im, Re]] of the complex
    channel; ``nt_complex``/``nr_complex`` are the antenna counts, so the
    real dimensions are twice as large.
    """

    h: np.ndarray
    sigma2: float
    nt_complex: int
    nr_complex: int

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        object.__setattr__(self, "h", h)
        if h.shape != (2 * self.nr_complex, 2 * self.nt_complex):
            raise ValueError(f"real channel must be {2*self.nr_complex}x{2*self.nt_complex}")
        if not self.sigma2 > 0:
            raise ValueError("noise variance must be positive")

    @classmethod
    def from_complex(cls, h_complex: np.ndarray, sigma2: float) -> "ChannelRealization":
        nr, nt = h_complex.shape
        return cls(h=realify_channel(h_complex), sigma2=sigma2, nt_complex=nt, nr_complex=nr)

    @property
    def nt(self) -> int:
        return 2 * self.nt_complex

    @property
    def nr(self) -> int:
        return 2 * self.nr_complex


@dataclass
class DetectionTrial:
    """Outcome of one detected transmission."""

    x_hat: np.ndarray
    marginals: MarginalTable
    max_rank_observed: int
    x_true: np.ndarray | None = None
    n_symbol_errors: int | None = None

    def score(self, x_true: np.ndarray) -> "DetectionTrial":
        self.x_true = np.asarray(x_true, dtype=np.float64)
        self.n_symbol_errors = int(np.count_nonzero(self.x_hat != self.x_true))
        return self


def sample_channel(nt_complex: int, nr_complex: int, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh-fading channel: i.i.d. circular complex standard Gaussian
    entries (real and imaginary parts each N(0, 1/2))."""
    if nt_complex < 1 or nr_complex < 1:
        raise ValueError("antenna counts must be >= 1")
    scale = 1.0 / np.sqrt(2.0)
    return scale * (
        rng.standard_normal((nr_complex, nt_complex))
        + 1j * rng.standard_normal((nr_complex, nt_complex))
    )


def realify_channel(h_complex: np.ndarray) -> np.ndarray:
    """Real block representation [[Re, -Im], [Im, Re]] of a complex matrix."""
    re, im = h_complex.real, h_complex.imag
    return np.block([[re, -im], [im, re]])


def realify_vec(z: np.ndarray) -> np.ndarray:
    """Stack (Re; Im) of a complex vector."""
    return np.concatenate([np.real(z), np.imag(z)])


def complexify_vec(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify_vec`."""
    half = x.size // 2
    if 2 * half != x.size:
        raise ValueError("real vector must have even length")
    return x[:half] + 1j * x[half:]


def realify_model(h_complex, x_complex, y_complex, n_complex):
    """Decompose a complex linear model into its equivalent real form.

    Returns (H, x, y, n) such that y = H x + n holds in the reals iff
    y~ = H~ x~ + n~ holds in the complex model.
    """
    return (
        realify_channel(h_complex),
        realify_vec(x_complex),
        realify_vec(y_complex),
        realify_vec(n_complex),
    )


def noise_variance_for_snr(h_complex: np.ndarray, symbol_energy: float, snr_db: float) -> float:
    """Per-real-component noise variance matching the expected receiver SNR.

    The receiver SNR is the ratio ||H~ x~||^2 / ||n~||^2; matching it in
    expectation over symbols and noise for the given channel yields
    sigma^2 = ||H~||_F^2 * E_s / (2 * N_R * 10^(snr/10)) with E_s the mean
    complex symbol energy.
    """
    if not np.isfinite(snr_db):
        raise ValueError("SNR must be finite")
    fro2 = float(np.sum(np.abs(h_complex) ** 2))
    if fro2 <= 0.0:
        raise DegenerateChannelError("zero channel has no SNR scaling")
    nr = h_complex.shape[0]
    return fro2 * symbol_energy / (2.0 * nr * 10.0 ** (snr_db / 10.0))


def build_hx_tt(h: np.ndarray, alphabet) -> TensorTrain:
    """Exact rank-3 TT of the linear form h^T x over the symbol grid.

    Entry (k_1, ..., k_N) equals sum_i h_i * a_{k_i}.  The construction
    threads the coefficients in reversed order (h_N first); the bond carries
    the basis (1, partial sum, spent), and interior ranks are exactly 3.
    """
    h = np.asarray(h, dtype=np.float64)
    alphabet = np.asarray(alphabet, dtype=np.float64)
    n_modes = h.size
    length = alphabet.size
    if n_modes < 1:
        raise ValueError("need at least one coefficient")
    if n_modes == 1:
        return TensorTrain([(h[0] * alphabet).reshape(1, length, 1)])
    # The core layout threads the coefficient sequence in reversed order
    # (last entry first); feeding the reversed vector keeps entry = h^T x.
    coeffs = h[::-1]
    first = np.zeros((1, length, 3))
    first[0, :, 0] = 1.0
    first[0, :, 1] = coeffs[n_modes - 1] * alphabet
    last = np.zeros((3, length, 1))
    last[0, :, 0] = coeffs[0] * alphabet
    last[1, :, 0] = 1.0
    cores = [first]
    for i in range(1, n_modes - 1):
        coeff = coeffs[n_modes - 1 - i]
        lin = np.zeros((3, 3))
        lin[0, 1] = coeff
        lin[1, 2] = coeff
        lin[2, 2] = coeff
        core = alphabet[None, :, None] * lin[:, None, :] + np.eye(3)[:, None, :]
        cores.append(core)
    cores.append(last)
    return TensorTrain(cores, copy=False)


def build_loglik_term(
    y_j: float,
    h_j: np.ndarray,
    sigma2: float,
    alphabet,
    tol: float = 1e-12,
) -> TensorTrain:
    """Exact TT of the Gaussian log-likelihood -(y_j - h_j^T x)^2 / (2 sigma^2).

    Built as the scaled Hadamard square of the rank-4 difference between the
    rank-1 observation tensor and the rank-3 h^T x tensor, so the
    pre-truncation ranks are at most 16; a truncation with ``tol`` (when
    positive) recompresses the result.
    """
    if not sigma2 > 0:
        raise ValueError("noise variance must be positive")
    h_j = np.asarray(h_j, dtype=np.float64)
    dims = (np.asarray(alphabet).size,) * h_j.size
    diff = tt_add(constant_tt(dims, float(y_j)), tt_scale(build_hx_tt(h_j, alphabet), -1.0))
    term = tt_scale(tt_hadamard(diff, diff), -0.5 / sigma2)
    if tol > 0:
        term = tt_truncate(term, tol)
    return term


def ttdet(
    y: np.ndarray,
    ch: ChannelRealization,
    alphabet,
    cfg: CrossConfig,
    taylor_p: int = 10,
    taylor_max_rank: int = 10,
    variant: str = "sample",
    trunc_tol: float = 1e-12,
) -> DetectionTrial:
    """TT-based symbol-wise MAP detection of one transmission.

    Builds all N_R log-likelihood TTs, sums them (the uniform prior is
    omitted), exponentiates and marginalizes via the selected cross variant,
    and takes per-symbol MAP decisions.  The maximum interior TT rank of the
    exponentiated posterior is recorded.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.size != ch.nr:
        raise ValueError(f"observation length {y.size} does not match N_R {ch.nr}")
    terms = [
        build_loglik_term(y[j], ch.h[j], ch.sigma2, alphabet, trunc_tol)
        for j in range(ch.nr)
    ]
    metric = sum_loglikelihood_tts(terms, trunc_tol)
    lp = LogPosterior(metric, np.asarray(alphabet, dtype=np.float64))
    marginals, max_rank = infer_marginals(lp, cfg, taylor_p, taylor_max_rank, variant)
    x_hat = map_decision(marginals, alphabet)
    return DetectionTrial(x_hat=x_hat, marginals=marginals, max_rank_observed=max_rank)
