"""Command line front end.

  flashdet sweep CONFIG            run a BER sweep, write CSV
  flashdet plot CSV -o OUT.svg     render BER curves from a sweep CSV
  flashdet design-quantizer ...    MI-optimal page read thresholds
  flashdet gen-code ...            build a PEG code, write alist
"""

from __future__ import annotations

import argparse
import sys

from .channel import mlc_device
from .harness import emit_plot, load_config, run_sweep
from .ldpc import generate_code, write_alist
from .quantizer import design_page_quantizers, write_quantizer_records


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg.output = args.output
    records = run_sweep(cfg)
    print(f"wrote {len(records)} rows to {cfg.output}")
    return 0


def _cmd_plot(args) -> int:
    emit_plot(args.csv, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_design_quantizer(args) -> int:
    params = mlc_device(beta=args.beta, gamma_v=args.gamma_v, alpha=args.alpha)
    designed = design_page_quantizers(params, n_bins=args.bins)
    pages = ("lsb", "msb") if args.page == "both" else (args.page,)
    records = [
        {
            "beta": args.beta,
            "gamma_v": args.gamma_v,
            "alpha": args.alpha,
            "page": page,
            "quantizer": designed[page],
        }
        for page in pages
    ]
    if args.output:
        write_quantizer_records(args.output, records)
        print(f"wrote {len(records)} record(s) to {args.output}")
    else:
        for rec in records:
            thr = ", ".join(f"{t:.6f}" for t in rec["quantizer"].thresholds)
            print(f"{rec['page']}: {thr}")
    return 0


def _cmd_gen_code(args) -> int:
    code = generate_code(args.length, args.rate, args.seed)
    write_alist(args.output, code)
    print(
        f"wrote {args.output}: n={code.n} checks={code.m} "
        f"k={code.k} rate={code.rate:.4f}"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flashdet",
        description="ICI read-channel simulation, soft detection and coding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a Monte Carlo BER sweep from a config file")
    p.add_argument("config", help="key = value config file")
    p.add_argument("-o", "--output", help="override the config's output CSV path")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("plot", help="render BER curves from a sweep CSV")
    p.add_argument("csv")
    p.add_argument("-o", "--output", default="ber.svg", help="output SVG path")
    p.set_defaults(fn=_cmd_plot)

    p = sub.add_parser("design-quantizer", help="MI-optimal read thresholds for one operating point")
    p.add_argument("--gamma-v", type=float, required=True, dest="gamma_v")
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=1000, help="fine grid resolution")
    p.add_argument("--page", choices=("lsb", "msb", "both"), default="both")
    p.add_argument("-o", "--output", help="write a quantizer record file instead of printing")
    p.set_defaults(fn=_cmd_design_quantizer)

    p = sub.add_parser("gen-code", help="construct a PEG LDPC code and write it as alist")
    p.add_argument("--length", type=int, required=True, help="codeword length in bits")
    p.add_argument("--rate", type=float, default=0.89)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="output alist path")
    p.set_defaults(fn=_cmd_gen_code)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
