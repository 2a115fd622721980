"""Guessing statistics of the mirror adversary against the closed-form bound.

    python scripts/mirror_stats.py --trials 20000 > mirror.csv

For each N: Monte-Carlo P(S=S' & succ & succ'), P(V=V' & succ & succ') and
P(succ & succ'), the decomposition check, and the guessing-event bound.
"""

import argparse
import csv
import sys

from mirrorrng import bounds
from mirrorrng.games import make_chsh_bell_game
from mirrorrng.presets import PRESETS
from mirrorrng.protocol import DeviceModel, ProtocolConfig, guessing_statistics


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="tsirelson-chsh", choices=sorted(PRESETS))
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--J", type=int, default=5)
    ap.add_argument("--N", type=int, nargs="+", default=[5, 10, 20, 50, 100])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    dev = DeviceModel.iid(PRESETS[args.preset]())
    game = make_chsh_bell_game()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["N", "J", "p_sss", "p_vvs", "p_ss", "decomposition_holds", "bound", "verdict"])
    for N in args.N:
        J = min(args.J, N)
        cfg = ProtocolConfig(game, args.delta, N, J, args.seed)
        gs = guessing_statistics(cfg, dev, args.trials)
        bound = bounds.guessing_event_bound(N, args.delta, game.n)
        rep = bounds.compare("guessing_event", gs.p_sss.estimate, bound, sigma=gs.p_sss.sigma)
        w.writerow([N, J, gs.p_sss.estimate, gs.p_vvs.estimate, gs.p_ss.estimate, gs.decomposition_holds, bound, rep.verdict])


if __name__ == "__main__":
    main()
