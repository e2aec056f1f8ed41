"""Numba-compiled hot kernels: chain sweep and BP decoding.

Contracts match _kernels_numpy exactly (up to float accumulation order).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_TANH_CAP = 1.0 - 2e-16


@njit(cache=True)
def forward_backward(evidence, q, pin_first, pin_last):
    n, n_states = evidence.shape
    q2 = q * q
    alpha = np.empty_like(evidence)
    beta = np.empty_like(evidence)
    buf = np.empty(q2)

    tot = 0.0
    for s in range(n_states):
        a = 1.0 if (not pin_first or s < q2) else 0.0
        alpha[0, s] = a
        tot += a
    for s in range(n_states):
        alpha[0, s] /= tot

    for i in range(n - 1):
        # forward: collapse s1, successor keyed by the (s2, s3) overlap
        for b in range(q2):
            buf[b] = 0.0
        for s in range(n_states):
            buf[s % q2] += alpha[i, s] * evidence[i, s]
        tot = 0.0
        for s in range(n_states):
            a = buf[s // q]
            alpha[i + 1, s] = a
            tot += a
        if tot <= 0.0 or not math.isfinite(tot):
            raise FloatingPointError("forward message vanished despite normalization")
        for s in range(n_states):
            alpha[i + 1, s] /= tot

    tot = 0.0
    for s in range(n_states):
        b = 1.0 if (not pin_last or s % q == 0) else 0.0
        beta[n - 1, s] = b
        tot += b
    for s in range(n_states):
        beta[n - 1, s] /= tot

    for i in range(n - 2, -1, -1):
        for b in range(q2):
            buf[b] = 0.0
        for s in range(n_states):
            buf[s // q] += beta[i + 1, s] * evidence[i + 1, s]
        tot = 0.0
        for s in range(n_states):
            b = buf[s % q2]
            beta[i, s] = b
            tot += b
        if tot <= 0.0 or not math.isfinite(tot):
            raise FloatingPointError("backward message vanished despite normalization")
        for s in range(n_states):
            beta[i, s] /= tot

    belief = alpha * beta
    for i in range(n):
        tot = 0.0
        for s in range(n_states):
            tot += belief[i, s]
        if tot <= 0.0 or not math.isfinite(tot):
            raise FloatingPointError("state belief vanished; evidence inconsistent with chain")
        for s in range(n_states):
            belief[i, s] /= tot
    return belief


@njit(cache=True)
def _syndrome_ok(marg, check_ptr, check_var):
    m = check_ptr.shape[0] - 1
    for r in range(m):
        parity = 0
        for e in range(check_ptr[r], check_ptr[r + 1]):
            if marg[check_var[e]] < 0.0:
                parity ^= 1
        if parity:
            return False
    return True


@njit(cache=True)
def bp_decode(llr, check_ptr, check_var, max_iter, clamp, min_sum):
    n = llr.shape[0]
    ne = check_var.shape[0]
    m = check_ptr.shape[0] - 1

    posterior = llr.copy()
    if _syndrome_ok(posterior, check_ptr, check_var):
        return posterior, 0, True

    max_deg = 0
    for r in range(m):
        d = check_ptr[r + 1] - check_ptr[r]
        if d > max_deg:
            max_deg = d
    pre = np.empty(max_deg)

    vc = np.empty(ne)
    cv = np.zeros(ne)
    for e in range(ne):
        x = llr[check_var[e]]
        vc[e] = min(max(x, -clamp), clamp)

    it = 0
    ok = False
    for it in range(1, max_iter + 1):
        for r in range(m):
            lo, hi = check_ptr[r], check_ptr[r + 1]
            if min_sum:
                sgn = 1.0
                m1 = np.inf
                m2 = np.inf
                i1 = -1
                for e in range(lo, hi):
                    x = vc[e]
                    if x < 0.0:
                        sgn = -sgn
                        x = -x
                    if x < m1:
                        m2 = m1
                        m1 = x
                        i1 = e
                    elif x < m2:
                        m2 = x
                for e in range(lo, hi):
                    mag = m2 if e == i1 else m1
                    se = -sgn if vc[e] < 0.0 else sgn
                    cv[e] = min(max(se * mag, -clamp), clamp)
            else:
                acc = 1.0
                for e in range(lo, hi):
                    pre[e - lo] = acc
                    acc *= math.tanh(0.5 * vc[e])
                acc = 1.0
                for e in range(hi - 1, lo - 1, -1):
                    prod = pre[e - lo] * acc
                    acc *= math.tanh(0.5 * vc[e])
                    prod = min(max(prod, -_TANH_CAP), _TANH_CAP)
                    cv[e] = min(max(2.0 * math.atanh(prod), -clamp), clamp)

        posterior = llr.copy()
        for e in range(ne):
            posterior[check_var[e]] += cv[e]
        if _syndrome_ok(posterior, check_ptr, check_var):
            ok = True
            break
        for e in range(ne):
            x = posterior[check_var[e]] - cv[e]
            vc[e] = min(max(x, -clamp), clamp)
    return posterior, it, ok
