"""Monte Carlo BER harness: configs, sweeps, CSV records and plots.

One trial is one wordline: draw info bits, encode, map bit pairs onto cells
(bit 2i is the LSB of cell i, bit 2i+1 its MSB), read the wordline through
the ICI channel, detect, decode, count errors.  With max_out > 1 the decoder
extrinsic feeds back as the detector's level prior and the pair iterates.

Every trial draws from numpy's default generator seeded with
(master seed, point index, trial index), so results do not depend on
execution order and a sweep is reproducible end to end.  The wall-time
column is the one thing two identical runs will not share.
"""

from __future__ import annotations

import csv
import io
import itertools
import time
import warnings
from dataclasses import dataclass, field, fields

import numpy as np

from .channel import DeviceParams, mlc_device, simulate_wordline
from .detector import (
    bits_to_levels,
    cell_by_cell_detect,
    default_gray_map,
    hard_decision,
    levels_to_bits,
    llrs_to_prior,
    posteriors_to_llrs,
    sum_product_detect,
)
from .ldpc import LdpcCode, decode, encode, load_bundled_code, read_alist
from .quantizer import design_page_quantizers, merge_quantizers, quantize

DETECTORS = ("cell_by_cell", "sum_product")

CSV_COLUMNS = (
    "gamma_v",
    "alpha",
    "beta",
    "detector",
    "quantized",
    "max_in",
    "max_out",
    "uncoded_ber",
    "coded_ber",
    "wl_errors",
    "trials",
    "censored",
    "seconds",
)


@dataclass
class SimConfig:
    """One sweep: the cross product of gamma_v and alpha at fixed beta."""

    seed: int = 1
    beta: float = 1.0
    gamma_v: tuple[float, ...] = field(default_factory=tuple)
    alpha: tuple[float, ...] = field(default_factory=tuple)
    detector: str = "sum_product"
    quantized: bool = False
    max_in: int = 50
    max_out: int = 1
    damping: float = 0.75
    min_wl_errors: int = 100
    max_trials: int = 1_000_000
    n_code: int = 9216
    code_file: str = ""
    output: str = "results.csv"

    def validate(self) -> None:
        if self.detector not in DETECTORS:
            raise ValueError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        if not self.gamma_v or not self.alpha:
            raise ValueError("sweep needs at least one gamma_v and one alpha value")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if min(self.max_in, self.max_out, self.min_wl_errors, self.max_trials) < 1:
            raise ValueError("iteration caps and trial budget must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")
        if not self.code_file and self.n_code not in (2304, 9216):
            raise ValueError("n_code must be a bundled length (2304 or 9216) unless code_file is set")


_LIST_KEYS = {"gamma_v", "alpha"}
_BOOL_KEYS = {"quantized"}
_INT_KEYS = {"seed", "max_in", "max_out", "min_wl_errors", "max_trials", "n_code"}
_FLOAT_KEYS = {"beta", "damping"}
_STR_KEYS = {"detector", "output", "code_file"}


def parse_config(text: str) -> SimConfig:
    """Parse 'key = value' lines; '#' comments; unknown keys are rejected."""
    known = {f.name for f in fields(SimConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        try:
            if key in _LIST_KEYS:
                values[key] = tuple(float(v) for v in val.split(","))
            elif key in _BOOL_KEYS:
                if val.lower() not in ("true", "false"):
                    raise ValueError("expected true/false")
                values[key] = val.lower() == "true"
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for {key}: {exc}") from exc
    cfg = SimConfig(**values)
    cfg.validate()
    return cfg


def load_config(path) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read())


@dataclass
class BerRecord:
    gamma_v: float
    alpha: float
    beta: float
    detector: str
    quantized: bool
    max_in: int
    max_out: int
    uncoded_ber: float
    coded_ber: float
    wl_errors: int
    trials: int
    censored: bool
    seconds: float


def _detect_fn(name: str):
    return sum_product_detect if name == "sum_product" else cell_by_cell_detect


def run_trial(
    params: DeviceParams,
    code: LdpcCode,
    detector: str,
    rng: np.random.Generator,
    quantizer=None,
    max_in: int = 50,
    max_out: int = 1,
    gray: np.ndarray | None = None,
    damping: float = 0.75,
) -> tuple[int, int, bool]:
    """One wordline through the full pipeline.

    Returns (uncoded bit errors over the codeword, coded bit errors over the
    info positions, wordline-error flag).  Draw order: info bits, aggressor
    levels, then the wordline noise stream.  damping scales the decoder
    extrinsic before it re-enters the detector (max_out > 1 only); values
    below 1 suppress the ping-pong oscillation the raw exchange exhibits on
    near-uncorrectable wordlines.
    """
    if gray is None:
        gray = default_gray_map(params.q)
    bits_per_cell = params.bits_per_cell
    if code.n % bits_per_cell:
        raise ValueError("codeword length must be a whole number of cells")
    n_cells = code.n // bits_per_cell
    detect = _detect_fn(detector)

    info = rng.integers(0, 2, code.k).astype(np.uint8)
    cw = encode(code, info)
    sent_bits = cw.reshape(n_cells, bits_per_cell)
    victims = bits_to_levels(sent_bits, gray)
    aggressors = rng.integers(0, params.q, n_cells)
    y = simulate_wordline(params, victims, aggressors, rng)
    obs = quantize(y, quantizer) if quantizer is not None else y

    # Extrinsic exchange: the decoder's extrinsic becomes the detector's level
    # prior, and what goes back to the decoder is the detector's posterior
    # minus that prior's bit LLRs, so neither side is fed its own beliefs.
    # Round 0 has a uniform prior, making max_out=1 the plain pipeline.
    prior_llrs = None
    uncoded_errors = 0
    result = None
    for outer in range(max_out):
        priors = None if prior_llrs is None else llrs_to_prior(prior_llrs, gray)
        post = detect(params, obs, priors=priors, quantizer=quantizer)
        if outer == 0:
            est = levels_to_bits(hard_decision(post), gray)
            uncoded_errors = int((est != sent_bits).sum())
        bit_llrs = posteriors_to_llrs(post, gray)
        if prior_llrs is not None:
            bit_llrs = bit_llrs - prior_llrs
        result = decode(code, bit_llrs.ravel(), max_iter=max_in)
        if result.syndrome_ok:
            break
        if outer < max_out - 1:
            prior_llrs = damping * result.extrinsic_llrs.reshape(n_cells, bits_per_cell)
    coded_errors = int((result.hard_bits[code.info_cols] != info).sum())
    return uncoded_errors, coded_errors, coded_errors > 0


def run_point(
    params: DeviceParams,
    code: LdpcCode,
    detector: str,
    seed: int,
    point_index: int,
    quantized: bool = False,
    max_in: int = 50,
    max_out: int = 1,
    min_wl_errors: int = 100,
    max_trials: int = 1_000_000,
    gray: np.ndarray | None = None,
    beta: float | None = None,
    damping: float = 0.75,
) -> BerRecord:
    """Monte Carlo at one operating point until enough wordline errors accrue.

    Stops at min_wl_errors wordline errors or at the trial cap, whichever
    comes first; the censored flag marks runs that hit the cap.  beta is
    recorded in the output row; when omitted it is inferred from the
    programmed-level sigma of the reference device.
    """
    quantizer = None
    if quantized:
        pages = design_page_quantizers(params)
        quantizer = merge_quantizers(pages["lsb"], pages["msb"])

    t0 = time.perf_counter()
    uncoded = coded = wl_errors = trials = 0
    while trials < max_trials and wl_errors < min_wl_errors:
        rng = np.random.default_rng([seed, point_index, trials])
        u_err, c_err, wl_err = run_trial(
            params, code, detector, rng,
            quantizer=quantizer, max_in=max_in, max_out=max_out, gray=gray,
            damping=damping,
        )
        uncoded += u_err
        coded += c_err
        wl_errors += int(wl_err)
        trials += 1
    seconds = time.perf_counter() - t0

    alpha = params.gamma_d / params.gamma_v if params.gamma_v else 0.0
    if beta is None:
        beta = params.noise_std[1] / 0.09
    return BerRecord(
        gamma_v=params.gamma_v,
        alpha=alpha,
        beta=beta,
        detector=detector,
        quantized=quantized,
        max_in=max_in,
        max_out=max_out,
        uncoded_ber=uncoded / (trials * code.n),
        coded_ber=coded / (trials * code.k),
        wl_errors=wl_errors,
        trials=trials,
        censored=wl_errors < min_wl_errors,
        seconds=seconds,
    )


def run_sweep(cfg: SimConfig, verbose: bool = True) -> list[BerRecord]:
    """Run every (gamma_v, alpha) point of the config and write the CSV."""
    cfg.validate()
    code = read_alist(cfg.code_file) if cfg.code_file else load_bundled_code(cfg.n_code)
    records = []
    for point_index, (gv, al) in enumerate(itertools.product(cfg.gamma_v, cfg.alpha)):
        params = mlc_device(beta=cfg.beta, gamma_v=gv, alpha=al)
        rec = run_point(
            params, code, cfg.detector,
            seed=cfg.seed, point_index=point_index,
            quantized=cfg.quantized, max_in=cfg.max_in, max_out=cfg.max_out,
            min_wl_errors=cfg.min_wl_errors, max_trials=cfg.max_trials,
            beta=cfg.beta, damping=cfg.damping,
        )
        records.append(rec)
        if verbose:
            print(
                f"[point {point_index}] gamma_v={gv:g} alpha={al:g} "
                f"uncoded={rec.uncoded_ber:.3e} coded={rec.coded_ber:.3e} "
                f"wl_errors={rec.wl_errors} trials={rec.trials}"
                + (" (censored)" if rec.censored else "")
            )
    if cfg.output:
        write_csv(cfg.output, records)
    return records


# --- CSV and plot -------------------------------------------------------------

def write_csv(path, records: list[BerRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# flashdet ber sweep v1\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    repr(r.gamma_v),
                    repr(r.alpha),
                    repr(r.beta),
                    r.detector,
                    str(r.quantized).lower(),
                    r.max_in,
                    r.max_out,
                    repr(r.uncoded_ber),
                    repr(r.coded_ber),
                    r.wl_errors,
                    r.trials,
                    str(r.censored).lower(),
                    f"{r.seconds:.3f}",
                ]
            )


def read_csv(path) -> list[BerRecord]:
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(io.StringIO("".join(rows)))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
    out = []
    for row in reader:
        out.append(
            BerRecord(
                gamma_v=float(row["gamma_v"]),
                alpha=float(row["alpha"]),
                beta=float(row["beta"]),
                detector=row["detector"],
                quantized=row["quantized"] == "true",
                max_in=int(row["max_in"]),
                max_out=int(row["max_out"]),
                uncoded_ber=float(row["uncoded_ber"]),
                coded_ber=float(row["coded_ber"]),
                wl_errors=int(row["wl_errors"]),
                trials=int(row["trials"]),
                censored=row["censored"] == "true",
                seconds=float(row["seconds"]),
            )
        )
    return out


def emit_plot(csv_path, out_path) -> None:
    """BER vs gamma_v curves, one per (detector flavour, coded/uncoded), as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    records = read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7, 5))
    flavours = sorted({(r.detector, r.quantized, r.max_out) for r in records})
    plotted = 0
    for det, qz, mo in flavours:
        group = sorted(
            (r for r in records if (r.detector, r.quantized, r.max_out) == (det, qz, mo)),
            key=lambda r: r.gamma_v,
        )
        label = det + (" quantized" if qz else "") + (f" it{mo}" if mo > 1 else "")
        for kind in ("uncoded", "coded"):
            xs = [r.gamma_v for r in group]
            ys = [getattr(r, f"{kind}_ber") for r in group]
            pos = [(x, y) for x, y in zip(xs, ys) if y > 0]
            if not pos:
                warnings.warn(f"series {label} {kind}: no positive BER values, skipped")
                continue
            style = "--" if kind == "uncoded" else "-"
            ax.semilogy(*zip(*pos), style, marker="o", label=f"{label} {kind}")
            plotted += 1
    ax.set_xlabel("gamma_v")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    if plotted:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
