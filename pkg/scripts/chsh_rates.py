"""Success rate of the protocol against N for honest and classical devices.

    python scripts/chsh_rates.py --trials 200 > rates.csv

Columns: preset, N, delta, success, ci_lo, ci_hi, trials.
"""

import argparse
import csv
import sys

from mirrorrng.games import make_chsh_bell_game
from mirrorrng.presets import PRESETS
from mirrorrng.protocol import DeviceModel, ProtocolConfig, run_protocol, wilson


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--delta", type=float, nargs="+", default=[0.05, 0.1])
    ap.add_argument("--N", type=int, nargs="+", default=[100, 300, 1000, 3000, 10000])
    args = ap.parse_args()

    game = make_chsh_bell_game()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["preset", "N", "delta", "success", "ci_lo", "ci_hi", "trials"])
    for name in ("tsirelson-chsh", "classical-best"):
        dev = DeviceModel.iid(PRESETS[name]())
        for delta in args.delta:
            for N in args.N:
                cfg = ProtocolConfig(game, delta, N, 1, args.seed)
                hits = sum(run_protocol(cfg, dev, i).succ for i in range(args.trials))
                e = wilson(hits, args.trials)
                w.writerow([name, N, delta, e.estimate, e.ci_lo, e.ci_hi, args.trials])


if __name__ == "__main__":
    main()
