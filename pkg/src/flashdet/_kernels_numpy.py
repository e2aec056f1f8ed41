"""Pure-NumPy reference implementations of the hot kernels.

Same contracts as _kernels_numba; selected via FLASHDET_BACKEND=numpy or
used automatically when numba is unavailable.
"""

from __future__ import annotations

import numpy as np

_TANH_CAP = 1.0 - 2e-16


def forward_backward(evidence: np.ndarray, q: int, pin_first: bool, pin_last: bool) -> np.ndarray:
    """State beliefs of the aggressor-triple Markov chain.

    evidence[i, s] is the per-cell observation factor aggregated over victim
    levels.  The transition keeps the (s2, s3) overlap and draws the new
    component uniformly; constant 1/q factors are dropped because every
    message is L1-normalized per step.  Returns alpha*beta normalized per
    cell, i.e. the state posterior with the local evidence included.
    """
    n, n_states = evidence.shape
    q2 = q * q
    alpha = np.empty_like(evidence)
    beta = np.empty_like(evidence)

    a0 = np.ones(n_states)
    if pin_first:
        a0[q2:] = 0.0
    alpha[0] = a0 / a0.sum()
    for i in range(n - 1):
        w = alpha[i] * evidence[i]
        nxt = np.repeat(w.reshape(q, q2).sum(axis=0), q)
        tot = nxt.sum()
        if tot <= 0.0 or not np.isfinite(tot):
            raise FloatingPointError("forward message vanished despite normalization")
        alpha[i + 1] = nxt / tot

    b_end = np.ones(n_states)
    if pin_last:
        b_end[np.arange(n_states) % q != 0] = 0.0
    beta[n - 1] = b_end / b_end.sum()
    for i in range(n - 2, -1, -1):
        w = beta[i + 1] * evidence[i + 1]
        prv = np.tile(w.reshape(q2, q).sum(axis=1), q)
        tot = prv.sum()
        if tot <= 0.0 or not np.isfinite(tot):
            raise FloatingPointError("backward message vanished despite normalization")
        beta[i] = prv / tot

    belief = alpha * beta
    tot = belief.sum(axis=1)
    if np.any(tot <= 0.0) or not np.all(np.isfinite(tot)):
        raise FloatingPointError("state belief vanished; evidence inconsistent with chain")
    return belief / tot[:, None]


def _check_messages(vc, ptr, rows, min_sum, clamp):
    if min_sum:
        a = np.abs(vc)
        neg = vc < 0.0
        m1 = np.minimum.reduceat(a, ptr[:-1])
        idx = np.arange(a.size)
        cand = np.where(a == m1[rows], idx, a.size)
        first = np.minimum.reduceat(cand, ptr[:-1])
        a2 = a.copy()
        a2[first[first < a.size]] = np.inf
        m2 = np.minimum.reduceat(a2, ptr[:-1])
        mag = np.where(idx == first[rows], m2[rows], m1[rows])
        row_neg = np.add.reduceat(neg.astype(np.int64), ptr[:-1])
        excl_odd = (row_neg[rows] - neg) % 2 == 1
        out = np.where(excl_odd, -mag, mag)
    else:
        t = np.tanh(0.5 * vc)
        neg = t < 0.0
        loga = np.log(np.maximum(np.abs(t), 1e-300))
        row_log = np.add.reduceat(loga, ptr[:-1])
        row_neg = np.add.reduceat(neg.astype(np.int64), ptr[:-1])
        prod = np.exp(row_log[rows] - loga)
        prod[(row_neg[rows] - neg) % 2 == 1] *= -1.0
        out = 2.0 * np.arctanh(np.clip(prod, -_TANH_CAP, _TANH_CAP))
    return np.clip(out, -clamp, clamp)


def bp_decode(
    llr: np.ndarray,
    check_ptr: np.ndarray,
    check_var: np.ndarray,
    max_iter: int,
    clamp: float,
    min_sum: bool,
):
    """Flooding belief propagation on a parity-check code.

    Returns (posterior_llrs, iterations, syndrome_ok).  Messages are
    saturated at +-clamp; the returned posterior is the raw channel LLR plus
    the sum of incoming check messages, so posterior - llr is exactly the
    extrinsic part.
    """
    n = llr.shape[0]
    rows = np.repeat(np.arange(check_ptr.size - 1), np.diff(check_ptr))

    def syndrome_ok(marg):
        odd = np.add.reduceat((marg[check_var] < 0.0).astype(np.int64), check_ptr[:-1]) % 2
        return not odd.any()

    posterior = llr.copy()
    if syndrome_ok(posterior):
        return posterior, 0, True

    vc = np.clip(llr[check_var], -clamp, clamp)
    it = 0
    ok = False
    for it in range(1, max_iter + 1):
        cv = _check_messages(vc, check_ptr, rows, min_sum, clamp)
        posterior = llr + np.bincount(check_var, weights=cv, minlength=n)
        if syndrome_ok(posterior):
            ok = True
            break
        vc = np.clip(posterior[check_var] - cv, -clamp, clamp)
    return posterior, it, ok
