"""Read-channel simulation and soft detection for ICI-impaired NAND flash.

The wordline read channel is y = v_x + z + w, where w collects capacitive
coupling from the three nearest aggressor cells on the adjacent wordline.
Conditioned on those aggressor levels the observation is Gaussian, and the
aggressor triples form a Markov chain along the wordline, so the exact
symbol posteriors are computable by a forward/backward sweep.

Subpackage map:
  channel   cell-level signal model and wordline simulator
  detector  cell-by-cell and sum-product posterior computation, LLR glue
  quantizer mutual-information-optimal read thresholds
  ldpc      PEG code construction and belief-propagation decoding
  harness   Monte Carlo BER sweeps, CSV/plot emission
"""

from .backend import active_backend
from .channel import DeviceParams, mlc_device, simulate_wordline
from .detector import (
    cell_by_cell_detect,
    sum_product_detect,
    brute_force_posteriors,
    hard_decision,
    posteriors_to_llrs,
    llrs_to_prior,
)
from .ldpc import LdpcCode, generate_code, encode, decode, load_bundled_code
from .quantizer import (
    ScalarQuantizer,
    BinaryDmc,
    discretize_page_channel,
    mutual_information,
    optimize_quantizer,
    quantize,
)

__version__ = "0.1.0"

__all__ = [
    "DeviceParams",
    "mlc_device",
    "simulate_wordline",
    "cell_by_cell_detect",
    "sum_product_detect",
    "brute_force_posteriors",
    "hard_decision",
    "posteriors_to_llrs",
    "llrs_to_prior",
    "LdpcCode",
    "generate_code",
    "encode",
    "decode",
    "load_bundled_code",
    "ScalarQuantizer",
    "BinaryDmc",
    "discretize_page_channel",
    "mutual_information",
    "optimize_quantizer",
    "quantize",
    "active_backend",
    "__version__",
]
