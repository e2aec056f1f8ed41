"""Symbol posterior computation for the ICI read channel.

Three detectors over one wordline of observations:

  cell_by_cell_detect   marginalises each cell's aggressor triple
                        independently (the classical benchmark)
  sum_product_detect    exact posteriors via a forward/backward sweep over
                        the aggressor-triple Markov chain, O(n * q^4)
  brute_force_posteriors  exponential enumeration, kept as the oracle for
                        small instances

plus the Gray-map / LLR conversions that connect detection to binary
decoding.  All three accept either raw voltages or quantized bin indices
(pass the quantizer that produced the bins).

Boundary convention: the aggressor wordline is padded with virtual erased
cells, so the first state's left component and the last state's right
component are pinned to level 0.  The simulator, the chain sweep and the
brute-force oracle all share this convention.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, ndtr

from . import backend
from .channel import DeviceParams, state_stats

LLR_CLAMP = 30.0
_LOG_2PI = float(np.log(2.0 * np.pi))
_BRUTE_FORCE_LIMIT = 10**7


# --- bit mapping -----------------------------------------------------------

def default_gray_map(q: int) -> np.ndarray:
    """Level -> bit rows (LSB first).  Erased cells store all-ones.

    For q=4 the map is 0:(1,1) 1:(0,1) 2:(0,0) 3:(1,0); adjacent levels
    differ in exactly one bit so a one-level slip costs one bit error.
    """
    if q == 2:
        return np.array([[1], [0]], dtype=np.uint8)
    if q == 4:
        return np.array([[1, 1], [0, 1], [0, 0], [1, 0]], dtype=np.uint8)
    raise ValueError(f"no built-in Gray map for q={q}")


def validate_gray_map(gray: np.ndarray, q: int) -> None:
    gray = np.asarray(gray)
    bits = int(q).bit_length() - 1
    if gray.shape != (q, bits):
        raise ValueError(f"gray map must be ({q}, {bits}), got {gray.shape}")
    codes = {tuple(row) for row in gray.tolist()}
    if len(codes) != q:
        raise ValueError("gray map rows must be distinct bit patterns")


def levels_to_bits(levels: np.ndarray, gray: np.ndarray) -> np.ndarray:
    """Map levels (n,) to bits (n, bits_per_cell), LSB in column 0."""
    return np.asarray(gray, dtype=np.uint8)[np.asarray(levels)]


def bits_to_levels(bits: np.ndarray, gray: np.ndarray) -> np.ndarray:
    """Inverse of levels_to_bits."""
    gray = np.asarray(gray)
    q, b = gray.shape
    weights = 1 << np.arange(b)
    lut = np.full(1 << b, -1, dtype=np.int64)
    lut[(gray * weights).sum(axis=1)] = np.arange(q)
    idx = (np.asarray(bits, dtype=np.int64) * weights).sum(axis=1)
    levels = lut[idx]
    if np.any(levels < 0):
        raise ValueError("bit pattern not present in gray map")
    return levels


# --- likelihood tensors ----------------------------------------------------

def _log_density_tensor(params: DeviceParams, y: np.ndarray) -> np.ndarray:
    """log p(y_i | x, s) for every cell, level and state; shape (n, q, q^3)."""
    means, variances = state_stats(params)
    y = np.asarray(y, dtype=np.float64)
    return -0.5 * (
        (y[:, None, None] - means[None]) ** 2 / variances[None]
        + np.log(variances)[None]
        + _LOG_2PI
    )


def bin_likelihood_table(params: DeviceParams, quantizer) -> np.ndarray:
    """P(bin | x, s) for every output bin of a scalar quantizer; (k, q, q^3)."""
    thr = np.asarray(quantizer.thresholds, dtype=np.float64)
    means, variances = state_stats(params)
    edges = np.concatenate(([-np.inf], thr, [np.inf]))
    z = (edges[:, None, None] - means[None]) / np.sqrt(variances)[None]
    return np.diff(ndtr(z), axis=0)


def quantized_conditional_likelihood(
    params: DeviceParams, quantizer, bin_idx: int, x: int, s: tuple[int, int, int]
) -> float:
    """P(quantizer outputs bin_idx | victim level x, aggressor triple s)."""
    from .channel import state_index

    table = bin_likelihood_table(params, quantizer)
    return float(table[bin_idx, x, state_index(s, params.q)])


def _likelihoods(params: DeviceParams, y: np.ndarray, quantizer) -> np.ndarray:
    """Per-cell likelihood tensor (n, q, q^3), scaled per cell for stability.

    The per-cell scale cancels in every posterior normalization.
    """
    if quantizer is None:
        logp = _log_density_tensor(params, y)
        logp -= logp.max(axis=(1, 2), keepdims=True)
        return np.exp(logp)
    bins = np.asarray(y)
    if not np.issubdtype(bins.dtype, np.integer):
        raise ValueError("quantized detection expects integer bin indices")
    table = bin_likelihood_table(params, quantizer)
    if bins.min() < 0 or bins.max() >= table.shape[0]:
        raise ValueError("bin index out of range for quantizer")
    p = table[bins]
    bad = p.max(axis=(1, 2)) <= 0.0
    if np.any(bad):
        raise ValueError(
            f"observed bin impossible under every state at cells {np.nonzero(bad)[0][:5]}; "
            "quantizer inconsistent with the operating point"
        )
    return p / p.max(axis=(1, 2), keepdims=True)


def _checked_priors(priors, n: int, q: int) -> np.ndarray:
    if priors is None:
        return np.full((n, q), 1.0 / q)
    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (n, q):
        raise ValueError(f"priors must be ({n}, {q}), got {priors.shape}")
    if np.any(priors < 0) or not np.all(np.isfinite(priors)):
        raise ValueError("priors must be finite and non-negative")
    tot = priors.sum(axis=1)
    if np.any(tot <= 0):
        raise ValueError("each prior row needs positive mass")
    return priors / tot[:, None]


def _normalize_posterior(num: np.ndarray) -> np.ndarray:
    tot = num.sum(axis=1)
    if np.any(tot <= 0) or not np.all(np.isfinite(tot)):
        raise FloatingPointError("posterior mass vanished; observation inconsistent with model")
    return num / tot[:, None]


# --- detectors -------------------------------------------------------------

def cell_by_cell_detect(params: DeviceParams, y, priors=None, quantizer=None) -> np.ndarray:
    """Per-cell level posteriors ignoring aggressor memory; (n, q)."""
    y = np.atleast_1d(y)
    lik = _likelihoods(params, y, quantizer)
    priors = _checked_priors(priors, y.shape[0], params.q)
    return _normalize_posterior(priors * lik.mean(axis=2))


def sum_product_detect(params: DeviceParams, y, priors=None, quantizer=None) -> np.ndarray:
    """Exact per-cell level posteriors via the aggressor-chain sweep; (n, q).

    Evidence per state is the prior-weighted likelihood; the backend kernel
    runs the normalized forward/backward recursion and returns state beliefs
    excluding each cell's own evidence, which are then recombined with the
    local likelihood.
    """
    y = np.atleast_1d(y)
    lik = _likelihoods(params, y, quantizer)
    priors = _checked_priors(priors, y.shape[0], params.q)
    evidence = np.einsum("nqs,nq->ns", lik, priors)
    belief = backend.forward_backward(
        np.ascontiguousarray(evidence), params.q, True, True
    )
    num = priors * np.einsum("nqs,ns->nq", lik, belief)
    return _normalize_posterior(num)


def brute_force_posteriors(params: DeviceParams, y, priors=None, quantizer=None) -> np.ndarray:
    """Exact posteriors by enumerating every aggressor wordline; oracle only.

    Enumerates all q^n aggressor patterns (padded with erased cells), so it
    refuses instances beyond q^(n+2) = 1e7 state combinations.
    """
    y = np.atleast_1d(y)
    n = y.shape[0]
    q = params.q
    if q ** (n + 2) > _BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to q**(n+2) <= {_BRUTE_FORCE_LIMIT}")
    lik = _likelihoods(params, y, quantizer)
    priors = _checked_priors(priors, n, q)

    vecs = np.indices((q,) * n).reshape(n, -1).T  # every aggressor wordline
    padded = np.zeros((vecs.shape[0], n + 2), dtype=np.int64)
    padded[:, 1:-1] = vecs
    states = (padded[:, :-2] * q + padded[:, 1:-1]) * q + padded[:, 2:]

    evidence = np.einsum("nqs,nq->ns", lik, priors)
    ev = evidence[np.arange(n)[None, :], states]  # (patterns, n)
    ones = np.ones((ev.shape[0], 1))
    pre = np.cumprod(np.concatenate([ones, ev[:, :-1]], axis=1), axis=1)
    suf = np.cumprod(np.concatenate([ones, ev[:, :0:-1]], axis=1), axis=1)[:, ::-1]
    excl = pre * suf  # product of evidence at all cells except i

    num = np.empty((n, q))
    for i in range(n):
        w_state = np.bincount(states[:, i], weights=excl[:, i], minlength=q**3)
        num[i] = priors[i] * (lik[i] @ w_state)
    return _normalize_posterior(num)


def hard_decision(posteriors: np.ndarray) -> np.ndarray:
    """Most probable level per cell; ties break to the lowest level index."""
    return np.argmax(posteriors, axis=1)


# --- LLR glue --------------------------------------------------------------

def posteriors_to_llrs(posteriors: np.ndarray, gray: np.ndarray, clamp: float = LLR_CLAMP) -> np.ndarray:
    """Per-bit LLRs log(P(bit=0)/P(bit=1)) from level posteriors; (n, bits).

    Column j follows gray column j (LSB in column 0).  Degenerate posteriors
    saturate at +-clamp instead of +-inf.
    """
    gray = np.asarray(gray)
    p0 = posteriors @ (gray == 0).astype(np.float64)
    p1 = posteriors @ (gray == 1).astype(np.float64)
    with np.errstate(divide="ignore"):
        llr = np.log(p0) - np.log(p1)
    return np.clip(llr, -clamp, clamp)


def llrs_to_prior(llrs: np.ndarray, gray: np.ndarray) -> np.ndarray:
    """Level priors from per-bit LLRs, treating bits as independent; (n, q).

    Inverse of posteriors_to_llrs for product-form posteriors.
    """
    gray = np.asarray(gray)
    llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    p0 = expit(llrs)  # llr = log(p0/p1)  =>  p0 = sigmoid(llr)
    per_bit = np.where(gray.T[None, :, :] == 0, p0[:, :, None], 1.0 - p0[:, :, None])
    prior = per_bit.prod(axis=1)
    return prior / prior.sum(axis=1, keepdims=True)
