"""Mutual-information-optimal read thresholds.

A page read through k-1 voltage thresholds turns the (binary page bit) ->
(continuous voltage) channel into a binary-input DMC with k outputs.  The
design pipeline is: discretize the page channel onto a fine voltage grid,
then pick the contiguous grouping of fine bins that maximises I(bit; region)
by dynamic programming over cut positions.  Contiguity in voltage is what
hardware read references implement, and for this objective the DP search is
exhaustive-equivalent over that family.

The LSB page uses 4 output regions (3 read references) and the MSB page 7
regions (6 references); `design_page_quantizers` bundles both.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .channel import DeviceParams, state_stats
from .detector import default_gray_map

LSB_REGIONS = 4
MSB_REGIONS = 7
DEFAULT_GRID_BINS = 1000
_GRID_SIGMA_SPAN = 6.0
_TAIL_TOL = 1e-6


@dataclass(frozen=True)
class ScalarQuantizer:
    """Voltage thresholds of one page read; k thresholds give k+1 regions."""

    thresholds: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=np.float64)
        if t.size == 0:
            raise ValueError("quantizer needs at least one threshold")
        if not np.all(np.diff(t) > 0):
            raise ValueError("thresholds must be strictly increasing")

    @property
    def n_regions(self) -> int:
        return len(self.thresholds) + 1


@dataclass(frozen=True)
class BinaryDmc:
    """Binary-input channel over the fine grid: transition[b, j] = P(bin j | bit b)."""

    transition: np.ndarray  # (2, m)
    bin_edges: np.ndarray  # (m + 1,)

    def __post_init__(self):
        t = np.asarray(self.transition)
        e = np.asarray(self.bin_edges)
        if t.ndim != 2 or t.shape[0] != 2 or t.shape[1] != e.size - 1:
            raise ValueError("transition must be (2, m) with m+1 bin edges")
        if np.any(t < 0):
            raise ValueError("transition probabilities must be non-negative")


def quantize(y, quantizer: ScalarQuantizer) -> np.ndarray:
    """Region index per sample: left-closed/right-open, a threshold hit goes right."""
    thr = np.asarray(quantizer.thresholds, dtype=np.float64)
    return np.searchsorted(thr, np.asarray(y, dtype=np.float64), side="right")


def merge_quantizers(a: ScalarQuantizer, b: ScalarQuantizer) -> ScalarQuantizer:
    """Common refinement of two threshold sets (the joint two-page read)."""
    thr = np.union1d(np.asarray(a.thresholds), np.asarray(b.thresholds))
    return ScalarQuantizer(thresholds=tuple(thr.tolist()))


def voltage_grid(params: DeviceParams, n_bins: int = DEFAULT_GRID_BINS) -> np.ndarray:
    """Uniform fine-grid edges covering every mixture component +- 6 sigma."""
    means, variances = state_stats(params)
    sd = np.sqrt(variances)
    lo = float((means - _GRID_SIGMA_SPAN * sd).min())
    hi = float((means + _GRID_SIGMA_SPAN * sd).max())
    return np.linspace(lo, hi, n_bins + 1)


def discretize_page_channel(
    params: DeviceParams,
    page: str,
    grid: np.ndarray | None = None,
    gray: np.ndarray | None = None,
) -> BinaryDmc:
    """Fine-grained DMC seen by one page bit through the read channel.

    P(bin | bit=b) averages the level-conditional bin mass over the levels
    whose page bit equals b (levels are i.u.d.).  Raises if more than
    _TAIL_TOL of either conditional's mass falls outside the grid.
    """
    if page not in ("lsb", "msb"):
        raise ValueError("page must be 'lsb' or 'msb'")
    if gray is None:
        gray = default_gray_map(params.q)
    col = 0 if page == "lsb" else 1
    if col >= gray.shape[1]:
        raise ValueError(f"device has no {page} page")
    if grid is None:
        grid = voltage_grid(params)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ValueError("grid edges must be strictly increasing")

    means, variances = state_stats(params)  # (q, S)
    sd = np.sqrt(variances)
    cdf = ndtr((grid[:, None, None] - means[None]) / sd[None])  # (m+1, q, S)
    level_mass = np.diff(cdf, axis=0).mean(axis=2)  # (m, q), states marginalised

    transition = np.empty((2, grid.size - 1))
    for b in (0, 1):
        levels = np.nonzero(np.asarray(gray)[:, col] == b)[0]
        if levels.size == 0:
            raise ValueError(f"gray map assigns no level to {page} bit {b}")
        transition[b] = level_mass[:, levels].mean(axis=1)
        if transition[b].sum() < 1.0 - _TAIL_TOL:
            raise ValueError(
                f"grid misses {1.0 - transition[b].sum():.2e} of the {page} bit-{b} mass; widen it"
            )
    return BinaryDmc(transition=transition, bin_edges=grid)


def mutual_information(dmc, input_prior=None) -> float:
    """I(bit; output) in bits; argument may be a BinaryDmc or a (2, m) matrix."""
    t = np.asarray(dmc.transition if isinstance(dmc, BinaryDmc) else dmc, dtype=np.float64)
    prior = np.array([0.5, 0.5]) if input_prior is None else np.asarray(input_prior, dtype=np.float64)
    joint = prior[:, None] * t
    out = joint.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log2(joint / (prior[:, None] * out[None, :]))
        terms = np.where(joint > 0, joint * ratio, 0.0)
    return float(terms.sum())


def _region_mi_table(transition: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """w[a, b] = MI contribution of merging fine bins [a, b) into one region.

    Total MI of a contiguous partition is the sum of its regions' w terms,
    which is what makes the cut-placement DP exact.
    """
    m = transition.shape[1]
    cum = np.zeros((2, m + 1))
    cum[:, 1:] = np.cumsum(prior[:, None] * transition, axis=1)
    both = cum[0] + cum[1]
    tot = both[None, :] - both[:, None]  # total mass of region [a, b)
    w = np.zeros((m + 1, m + 1))
    for b in (0, 1):
        pj = cum[b][None, :] - cum[b][:, None]  # joint mass of [a, b) with bit b
        with np.errstate(divide="ignore", invalid="ignore"):
            term = pj * np.log2(pj / (prior[b] * tot))
        w += np.where(pj > 0, term, 0.0)
    return w


def optimize_quantizer(dmc: BinaryDmc, k: int, input_prior=None) -> ScalarQuantizer:
    """MI-maximising grouping of the fine bins into k contiguous regions.

    Dynamic program over cut positions; every region keeps at least one fine
    bin, and the returned thresholds are fine-grid edges.
    """
    t = np.asarray(dmc.transition, dtype=np.float64)
    m = t.shape[1]
    if not 2 <= k <= m:
        raise ValueError(f"need 2 <= regions <= {m}, got {k}")
    prior = np.array([0.5, 0.5]) if input_prior is None else np.asarray(input_prior, dtype=np.float64)
    w = _region_mi_table(t, prior)

    neg = -np.inf
    dp = np.full((k + 1, m + 1), neg)
    cut = np.zeros((k + 1, m + 1), dtype=np.int64)
    dp[1] = w[0]
    dp[1, 0] = neg  # a region must keep at least one fine bin
    for r in range(2, k + 1):
        # dp[r, j] = max over a of dp[r-1, a] + w[a, j]
        cand = dp[r - 1][:, None] + w
        cand[np.arange(m + 1)[:, None] >= np.arange(m + 1)[None, :]] = neg
        cut[r] = np.argmax(cand, axis=0)
        dp[r] = cand[cut[r], np.arange(m + 1)]

    cuts = []
    j = m
    for r in range(k, 1, -1):
        j = int(cut[r, j])
        cuts.append(j)
    cuts.reverse()
    edges = np.asarray(dmc.bin_edges)
    return ScalarQuantizer(thresholds=tuple(float(edges[c]) for c in cuts))


def partition_mi(dmc: BinaryDmc, cuts: np.ndarray, input_prior=None) -> float:
    """MI of an explicit contiguous partition given by interior cut indices."""
    t = np.asarray(dmc.transition, dtype=np.float64)
    prior = np.array([0.5, 0.5]) if input_prior is None else np.asarray(input_prior, dtype=np.float64)
    w = _region_mi_table(t, prior)
    bounds = [0, *sorted(int(c) for c in cuts), t.shape[1]]
    return float(sum(w[a, b] for a, b in zip(bounds[:-1], bounds[1:])))


def design_page_quantizers(
    params: DeviceParams,
    n_bins: int = DEFAULT_GRID_BINS,
    gray: np.ndarray | None = None,
) -> dict[str, ScalarQuantizer]:
    """MI-optimal LSB (4-region) and MSB (7-region) quantizers for one operating point."""
    grid = voltage_grid(params, n_bins)
    out = {}
    for page, k in (("lsb", LSB_REGIONS), ("msb", MSB_REGIONS)):
        dmc = discretize_page_channel(params, page, grid, gray)
        out[page] = optimize_quantizer(dmc, k)
    return out


# --- text records ------------------------------------------------------------

def write_quantizer_records(path, records: list[dict]) -> None:
    """Append-style text serialization: one block per record.

    Each record needs beta, gamma_v, alpha, page and a quantizer (or raw
    thresholds).  Blank line separates blocks.
    """
    lines = ["# flashdet quantizer records v1"]
    for rec in records:
        thr = rec["quantizer"].thresholds if "quantizer" in rec else rec["thresholds"]
        lines.append("")
        lines.append(f"beta = {rec['beta']!r}")
        lines.append(f"gamma_v = {rec['gamma_v']!r}")
        lines.append(f"alpha = {rec['alpha']!r}")
        lines.append(f"page = {rec['page']}")
        lines.append("thresholds = " + ", ".join(repr(float(t)) for t in thr))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_quantizer_records(path) -> list[dict]:
    """Parse records written by write_quantizer_records."""
    with open(path) as fh:
        text = fh.read()
    records = []
    current: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            if current:
                records.append(current)
                current = {}
            continue
        m = re.match(r"(\w+)\s*=\s*(.*)", line)
        if not m:
            raise ValueError(f"bad quantizer record line: {raw!r}")
        key, val = m.group(1), m.group(2)
        if key == "page":
            current[key] = val
        elif key == "thresholds":
            current["quantizer"] = ScalarQuantizer(
                thresholds=tuple(float(v) for v in val.split(","))
            )
        elif key in ("beta", "gamma_v", "alpha"):
            current[key] = float(val)
        else:
            raise ValueError(f"unknown quantizer record key {key!r}")
    if current:
        records.append(current)
    return records
