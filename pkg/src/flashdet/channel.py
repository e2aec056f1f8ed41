"""Cell-level read model for an ICI-impaired NAND wordline.

A victim cell programmed to level x reads back

    y = v_x + z + w,      z ~ N(0, sigma_x^2)

where w is the inter-cell interference from the three facing cells on the
adjacent (aggressor) wordline: the cell directly above with coupling
gamma_v and its two diagonal neighbours with coupling gamma_d.  Each
programmed aggressor contributes gamma * (its read value minus its erased
read value); an erased aggressor contributes exactly zero.

Conditioned on the aggressor triple s = (s1, s2, s3) the observation is
Gaussian with

    mean(x, s) = v_x + gamma_d*(v_s1 - v_0) + gamma_v*(v_s2 - v_0)
                     + gamma_d*(v_s3 - v_0)
    var(x, s)  = sigma_x^2 + sum over programmed s_i of
                     gamma_i^2 * (sigma_si^2 + sigma_0^2)

and marginalising the i.u.d. triple gives a q^3-component Gaussian mixture
per level.  All level indices are 0-based; level 0 is the erased state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, ndtr

_LOG_2PI = float(np.log(2.0 * np.pi))

# Reference MLC operating point: 4 levels, erased-state sigma dominated by
# the wide erase distribution, programmed levels tightly placed.
_MLC_VOLTAGES = (1.1, 2.7, 3.3, 3.9)
_MLC_SIGMAS = (0.35, 0.09, 0.09, 0.09)


@dataclass(frozen=True)
class DeviceParams:
    """Static description of one operating point of the read channel.

    nominal_voltage and noise_std are indexed by level.  gamma_v couples
    the directly facing aggressor, gamma_d the two diagonal ones.
    """

    q: int
    nominal_voltage: tuple[float, ...]
    noise_std: tuple[float, ...]
    gamma_v: float
    gamma_d: float

    def __post_init__(self):
        if self.q < 2 or (self.q & (self.q - 1)) != 0:
            raise ValueError(f"q must be a power of two >= 2, got {self.q}")
        if len(self.nominal_voltage) != self.q or len(self.noise_std) != self.q:
            raise ValueError("nominal_voltage and noise_std must have q entries")
        v = np.asarray(self.nominal_voltage, dtype=np.float64)
        if not np.all(np.diff(v) > 0):
            raise ValueError("nominal voltages must be strictly increasing")
        if min(self.noise_std) <= 0:
            raise ValueError("noise_std entries must be positive")
        if self.gamma_v < 0 or self.gamma_d < 0:
            raise ValueError("coupling ratios must be non-negative")

    @property
    def bits_per_cell(self) -> int:
        return int(self.q).bit_length() - 1

    @property
    def n_states(self) -> int:
        return self.q**3

    def voltages(self) -> np.ndarray:
        return np.asarray(self.nominal_voltage, dtype=np.float64)

    def sigmas(self) -> np.ndarray:
        return np.asarray(self.noise_std, dtype=np.float64)


def mlc_device(beta: float = 1.0, gamma_v: float = 0.1, alpha: float = 0.25) -> DeviceParams:
    """Reference 2-bit MLC device with all noise widths scaled by beta.

    alpha is the diagonal-to-vertical coupling ratio, gamma_d = alpha * gamma_v.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    return DeviceParams(
        q=4,
        nominal_voltage=_MLC_VOLTAGES,
        noise_std=tuple(beta * s for s in _MLC_SIGMAS),
        gamma_v=float(gamma_v),
        gamma_d=float(alpha) * float(gamma_v),
    )


def state_index(s: tuple[int, int, int], q: int) -> int:
    """Pack an aggressor triple (s1, s2, s3) into a flat index."""
    s1, s2, s3 = s
    return (s1 * q + s2) * q + s3


def state_triple(idx: int, q: int) -> tuple[int, int, int]:
    """Unpack a flat state index into (s1, s2, s3)."""
    return (idx // (q * q), (idx // q) % q, idx % q)


def state_mean(params: DeviceParams, x: int, s: tuple[int, int, int]) -> float:
    """Conditional read mean of a level-x victim given aggressor triple s."""
    v = params.voltages()
    g = (params.gamma_d, params.gamma_v, params.gamma_d)
    return float(v[x] + sum(gi * (v[si] - v[0]) for gi, si in zip(g, s)))


def state_var(params: DeviceParams, x: int, s: tuple[int, int, int]) -> float:
    """Conditional read variance; erased aggressors add nothing."""
    var = params.sigmas() ** 2
    g = (params.gamma_d, params.gamma_v, params.gamma_d)
    return float(var[x] + sum(gi**2 * (var[si] + var[0]) for gi, si in zip(g, s) if si != 0))


def state_stats(params: DeviceParams) -> tuple[np.ndarray, np.ndarray]:
    """Conditional means and variances for every (level, state) pair.

    Returns (means, variances), both shaped (q, q**3) with states in
    state_index order.
    """
    q = params.q
    v = params.voltages()
    var = params.sigmas() ** 2
    lev = np.arange(q)
    s1, s2, s3 = np.meshgrid(lev, lev, lev, indexing="ij")
    s1, s2, s3 = s1.ravel(), s2.ravel(), s3.ravel()
    gd, gv = params.gamma_d, params.gamma_v
    shift = gd * (v[s1] - v[0]) + gv * (v[s2] - v[0]) + gd * (v[s3] - v[0])
    extra = (
        gd**2 * (var[s1] + var[0]) * (s1 != 0)
        + gv**2 * (var[s2] + var[0]) * (s2 != 0)
        + gd**2 * (var[s3] + var[0]) * (s3 != 0)
    )
    means = v[:, None] + shift[None, :]
    variances = var[:, None] + extra[None, :]
    return means, variances


def log_conditional_likelihood(params: DeviceParams, y, x: int, s: tuple[int, int, int]):
    """log p(y | victim level x, aggressor triple s).  y may be an array."""
    mu = state_mean(params, x, s)
    var = state_var(params, x, s)
    y = np.asarray(y, dtype=np.float64)
    return -0.5 * ((y - mu) ** 2 / var + np.log(var) + _LOG_2PI)


def conditional_likelihood(params: DeviceParams, y, x: int, s: tuple[int, int, int]):
    return np.exp(log_conditional_likelihood(params, y, x, s))


def mixture_components(params: DeviceParams, x: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Means, variances and weights of the q^3-component read mixture for level x."""
    means, variances = state_stats(params)
    w = np.full(params.n_states, 1.0 / params.n_states)
    return means[x].copy(), variances[x].copy(), w


def log_single_cell_likelihood(params: DeviceParams, y, x: int):
    """log p(y | x) with the aggressor triple marginalised out (i.u.d. levels)."""
    means, variances = state_stats(params)
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    z = -0.5 * (
        (y[:, None] - means[x][None, :]) ** 2 / variances[x][None, :]
        + np.log(variances[x])[None, :]
        + _LOG_2PI
    )
    out = logsumexp(z, axis=1) - np.log(params.n_states)
    return out if out.size > 1 else float(out[0])


def single_cell_likelihood(params: DeviceParams, y, x: int):
    return np.exp(log_single_cell_likelihood(params, y, x))


def single_cell_cdf(params: DeviceParams, y, x: int):
    """CDF of the marginal read distribution for level x (for GoF checks)."""
    means, variances = state_stats(params)
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    z = (y[:, None] - means[x][None, :]) / np.sqrt(variances[x])[None, :]
    out = ndtr(z).mean(axis=1)
    return out if out.size > 1 else float(out[0])


def simulate_wordline(
    params: DeviceParams,
    victim_levels: np.ndarray,
    aggressor_levels: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Read back one victim wordline under ICI from the facing aggressor wordline.

    Aggressor cell j contributes the shift (v_{a_j} + z_prog) - (v_0 + z_er)
    if programmed and exactly zero if erased; the shared shift sample is what
    correlates neighbouring victims.  The wordline is padded with virtual
    erased cells, so edge victims simply see fewer aggressors.

    RNG stream order (fixed, so one seed reproduces one wordline): n victim
    noise draws first, then one (erased, programmed) standard-normal pair per
    aggressor in index order.  Draws happen for erased aggressors too, which
    keeps the stream alignment independent of the data pattern.
    """
    victims = np.asarray(victim_levels)
    aggr = np.asarray(aggressor_levels)
    n = victims.size
    if n == 0:
        raise ValueError("empty wordline")
    if aggr.size != n:
        raise ValueError(f"aggressor wordline length {aggr.size} != victim length {n}")
    if victims.min() < 0 or victims.max() >= params.q or aggr.min() < 0 or aggr.max() >= params.q:
        raise ValueError("levels out of range")

    v = params.voltages()
    sd = params.sigmas()

    z_victim = rng.standard_normal(n) * sd[victims]
    pair = rng.standard_normal((n, 2))
    z_erased = pair[:, 0] * sd[0]
    z_prog = pair[:, 1] * sd[aggr]
    shift = np.where(aggr != 0, (v[aggr] + z_prog) - (v[0] + z_erased), 0.0)

    w = params.gamma_v * shift
    w[:-1] += params.gamma_d * shift[1:]
    w[1:] += params.gamma_d * shift[:-1]
    return v[victims] + z_victim + w
