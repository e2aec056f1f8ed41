"""LDPC code construction, encoding and belief-propagation decoding.

Codes are built by progressive edge growth: variables join one edge at a
time, each new edge landing on the check that is farthest from the variable
in the current Tanner graph (ties broken by lowest degree, then by a
seed-pinned random priority).  Column weight is constant; check degrees
stay within one of each other.  Two rate-0.89 codes are shipped as alist
artifacts, a length-9216 wordline code and a length-2304 short variant for
desk-scale runs, so every run uses the same fixed matrices.

Encoding is systematic: GF(2) Gauss-Jordan on H picks m pivot (parity)
columns, and parity = A @ info over GF(2).  Decoding is flooding BP with
the tanh rule (min-sum optional) and stops early on a zero syndrome.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend

DECODER_LLR_CLAMP = 30.0
_CHECK_ADJ_CAP = 64


@dataclass
class LdpcCode:
    """Parity-check structure plus the derived systematic encoder.

    check_ptr/check_var hold H in CSR-over-checks form; info_cols and
    pivot_cols partition the codeword positions; parity = A @ info (GF(2)).
    """

    n: int
    m: int
    check_ptr: np.ndarray
    check_var: np.ndarray
    info_cols: np.ndarray
    pivot_cols: np.ndarray
    A: np.ndarray

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def rate(self) -> float:
        return self.k / self.n

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        rows = np.repeat(np.arange(self.m), np.diff(self.check_ptr))
        H[rows, self.check_var] = 1
        return H


@dataclass
class DecodeResult:
    hard_bits: np.ndarray
    posterior_llrs: np.ndarray
    extrinsic_llrs: np.ndarray
    iterations: int
    syndrome_ok: bool


# --- construction ------------------------------------------------------------

def _peg_edges(n: int, m: int, col_weight: int, rng: np.random.Generator) -> np.ndarray:
    """Check index for each of the n*col_weight edges, PEG order."""
    if m <= col_weight:
        raise ValueError("need more checks than the column weight")
    var_chk = np.full((n, col_weight), -1, dtype=np.int64)
    var_deg = np.zeros(n, dtype=np.int64)
    chk_var = np.full((m, _CHECK_ADJ_CAP), -1, dtype=np.int64)
    chk_deg = np.zeros(m, dtype=np.int64)
    prio = rng.permutation(m).astype(np.int64)  # seed-pinned tie-break
    col_range = np.arange(_CHECK_ADJ_CAP)

    def neighbors_of_checks(cs):
        rows = chk_var[cs]
        return rows[col_range[None, :] < chk_deg[cs][:, None]]

    for v in range(n):
        for _ in range(col_weight):
            reached_c = np.zeros(m, dtype=bool)
            reached_v = np.zeros(n, dtype=bool)
            reached_v[v] = True
            frontier = var_chk[v, : var_deg[v]]
            last_level = frontier
            while frontier.size:
                reached_c[frontier] = True
                last_level = frontier
                vs = neighbors_of_checks(frontier)
                vs = np.unique(vs[~reached_v[vs]])
                if vs.size == 0:
                    break
                reached_v[vs] = True
                cs = np.unique(var_chk[vs, :].ravel())
                cs = cs[cs >= 0]
                frontier = cs[~reached_c[cs]]
            if not reached_c.all():
                cand = np.nonzero(~reached_c)[0]
            else:
                cand = last_level  # every check reachable: take the deepest level
            own = var_chk[v, : var_deg[v]]
            cand = cand[~np.isin(cand, own)]
            if cand.size == 0:
                raise RuntimeError("PEG found no admissible check; graph too small")
            c = cand[np.argmin(chk_deg[cand] * (m + 1) + prio[cand])]
            var_chk[v, var_deg[v]] = c
            var_deg[v] += 1
            if chk_deg[c] >= _CHECK_ADJ_CAP:
                raise RuntimeError("check degree cap exceeded; raise _CHECK_ADJ_CAP")
            chk_var[c, chk_deg[c]] = v
            chk_deg[c] += 1
    return var_chk


def _edges_to_csr(var_chk: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    n, col_weight = var_chk.shape
    vars_flat = np.repeat(np.arange(n, dtype=np.int64), col_weight)
    chks_flat = var_chk.ravel()
    order = np.lexsort((vars_flat, chks_flat))
    check_var = vars_flat[order]
    counts = np.bincount(chks_flat, minlength=m)
    check_ptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=check_ptr[1:])
    return check_ptr, check_var


def _gf2_systematize(H: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """Gauss-Jordan over GF(2).  Returns (pivot_cols, info_cols, A) or None
    if H is row-rank deficient.  A satisfies c[pivot] = A @ c[info] for every
    codeword c."""
    Hw = H.copy()
    m, n = Hw.shape
    pivots = []
    r = 0
    for c in range(n):
        hit = np.nonzero(Hw[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            Hw[[r, p]] = Hw[[p, r]]
        others = np.nonzero(Hw[:, c])[0]
        others = others[others != r]
        if others.size:
            Hw[others] ^= Hw[r]
        pivots.append(c)
        r += 1
        if r == m:
            break
    if r < m:
        return None
    pivot_cols = np.asarray(pivots, dtype=np.int64)
    info_cols = np.setdiff1d(np.arange(n, dtype=np.int64), pivot_cols)
    # row r of the RREF reads: c[pivot_r] + sum_j Hw[r, info_j] * c[info_j] = 0
    A = Hw[:, info_cols].copy()
    return pivot_cols, info_cols, A


def _finalize(check_ptr: np.ndarray, check_var: np.ndarray, n: int, m: int) -> LdpcCode | None:
    H = np.zeros((m, n), dtype=np.uint8)
    rows = np.repeat(np.arange(m), np.diff(check_ptr))
    H[rows, check_var] = 1
    sys = _gf2_systematize(H)
    if sys is None:
        return None
    pivot_cols, info_cols, A = sys
    return LdpcCode(
        n=n,
        m=m,
        check_ptr=check_ptr.astype(np.int64),
        check_var=check_var.astype(np.int64),
        info_cols=info_cols,
        pivot_cols=pivot_cols,
        A=A,
    )


def generate_code(
    n_code: int,
    rate: float,
    seed: int,
    col_weight: int = 3,
    max_retries: int = 5,
) -> LdpcCode:
    """Seed-pinned PEG code of the requested length and design rate.

    The check count is round(n_code * (1 - rate)); the realised rate is
    reported by code.rate.  Retries with a derived seed if the parity
    matrix comes out rank deficient, which PEG essentially never does at
    these parameters.
    """
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must be in (0, 1)")
    m = int(round(n_code * (1.0 - rate)))
    if m < col_weight + 1:
        raise ValueError("rate too high for this length")
    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        var_chk = _peg_edges(n_code, m, col_weight, rng)
        check_ptr, check_var = _edges_to_csr(var_chk, m)
        code = _finalize(check_ptr, check_var, n_code, m)
        if code is not None:
            return code
    raise RuntimeError(f"PEG produced rank-deficient H {max_retries} times in a row")


# --- encode / decode ---------------------------------------------------------

def encode(code: LdpcCode, info_bits: np.ndarray) -> np.ndarray:
    """Systematic codeword: info bits land verbatim on code.info_cols."""
    u = np.asarray(info_bits, dtype=np.uint8)
    if u.shape != (code.k,):
        raise ValueError(f"expected {code.k} info bits, got {u.shape}")
    if u.max(initial=0) > 1:
        raise ValueError("info bits must be 0/1")
    c = np.empty(code.n, dtype=np.uint8)
    c[code.info_cols] = u
    # uint8 matmul wraps mod 256, which preserves parity
    c[code.pivot_cols] = (code.A @ u) & 1
    return c


def syndrome(code: LdpcCode, bits: np.ndarray) -> np.ndarray:
    """Parity of each check for a candidate word; all-zero means codeword."""
    b = np.asarray(bits, dtype=np.int64)
    return (np.add.reduceat(b[code.check_var], code.check_ptr[:-1]) % 2).astype(np.uint8)


def decode(
    code: LdpcCode,
    channel_llrs: np.ndarray,
    max_iter: int = 50,
    min_sum: bool = False,
) -> DecodeResult:
    """Flooding BP decode; early-stops once the hard decisions satisfy H.

    posterior = channel input + extrinsic holds exactly by construction.
    Messages saturate at +-30 internally; the channel input is used as given.
    """
    llr = np.ascontiguousarray(channel_llrs, dtype=np.float64)
    if llr.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {llr.shape}")
    if not np.all(np.isfinite(llr)):
        raise ValueError("channel LLRs must be finite (clamp before decoding)")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    post, iters, ok = backend.bp_decode(
        llr, code.check_ptr, code.check_var, max_iter, DECODER_LLR_CLAMP, min_sum
    )
    ext = post - llr
    # re-associate so input + extrinsic reproduces the posterior exactly
    post = llr + ext
    return DecodeResult(
        hard_bits=(post < 0).astype(np.uint8),
        posterior_llrs=post,
        extrinsic_llrs=ext,
        iterations=int(iters),
        syndrome_ok=bool(ok),
    )


# --- alist I/O ----------------------------------------------------------------

def write_alist(path, code: LdpcCode) -> None:
    """Standard alist text format (1-based indices, no zero padding)."""
    var_lists: list[list[int]] = [[] for _ in range(code.n)]
    chk_lists: list[list[int]] = []
    for r in range(code.m):
        row = code.check_var[code.check_ptr[r] : code.check_ptr[r + 1]]
        chk_lists.append([int(v) + 1 for v in row])
        for v in row:
            var_lists[int(v)].append(r + 1)
    col_deg = [len(l) for l in var_lists]
    row_deg = [len(l) for l in chk_lists]
    lines = [
        f"{code.n} {code.m}",
        f"{max(col_deg)} {max(row_deg)}",
        " ".join(map(str, col_deg)),
        " ".join(map(str, row_deg)),
    ]
    lines += [" ".join(map(str, l)) for l in var_lists]
    lines += [" ".join(map(str, l)) for l in chk_lists]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_alist(path_or_text) -> LdpcCode:
    """Parse an alist file (tolerates the zero-padded variant) and rebuild
    the encoder structure."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    tok = text.split()
    pos = 0

    def take(count):
        nonlocal pos
        out = [int(t) for t in tok[pos : pos + count]]
        pos += count
        return out

    n, m = take(2)
    max_col, max_row = take(2)
    col_deg = take(n)
    row_deg = take(m)
    # the padded variant lists max_deg entries per node (zeros filling the
    # tail); the compact variant lists exactly deg entries.  The total token
    # count tells them apart.
    remaining = len(tok) - pos
    if remaining == n * max_col + m * max_row:
        col_counts = [max_col] * n
        row_counts = [max_row] * m
    elif remaining == sum(col_deg) + sum(row_deg):
        col_counts = col_deg
        row_counts = row_deg
    else:
        raise ValueError("alist adjacency sections have unexpected length")
    col_lists = [[v for v in take(col_counts[i]) if v != 0] for i in range(n)]
    flat = []
    for r in range(m):
        flat.append([v for v in take(row_counts[r]) if v != 0])
    if [len(l) for l in col_lists] != col_deg or [len(l) for l in flat] != row_deg:
        raise ValueError("alist degree lists disagree with adjacency sections")
    check_ptr = np.zeros(m + 1, dtype=np.int64)
    check_ptr[1:] = np.cumsum([len(l) for l in flat])
    check_var = np.array([v - 1 for l in flat for v in sorted(l)], dtype=np.int64)

    # consistency between the two redundant adjacency sections
    edges_cols = sorted((v, c + 1) for c, l in enumerate(col_lists) for v in l)
    edges_rows = sorted((r + 1, v) for r, l in enumerate(flat) for v in l)
    if edges_cols != edges_rows:
        raise ValueError("alist column and row sections disagree")

    code = _finalize(check_ptr, check_var, n, m)
    if code is None:
        raise ValueError("alist parity matrix is rank deficient")
    return code


@lru_cache(maxsize=4)
def load_bundled_code(n_code: int = 9216) -> LdpcCode:
    """One of the shipped rate-0.89 PEG codes (lengths 9216 and 2304)."""
    names = {9216: "peg_n9216_r89.alist", 2304: "peg_n2304_r89.alist"}
    if n_code not in names:
        raise ValueError(f"no bundled code of length {n_code}; have {sorted(names)}")
    ref = importlib.resources.files("flashdet").joinpath("data", names[n_code])
    return read_alist(ref.read_text())
