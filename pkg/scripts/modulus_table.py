"""Print (or check) the pinned table of smallest irreducible moduli.

    python scripts/modulus_table.py              # check the pinned table, v <= 64
    python scripts/modulus_table.py --print      # emit the table as Python source
    python scripts/modulus_table.py --degree 2000  # search one degree (slow for large v)
"""

import argparse
import time

from mirrorrng.extract import LARGE_MODULI, MODULUS_TABLE
from mirrorrng.gf2 import is_irreducible, search_smallest_irreducible


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--print", action="store_true", dest="emit")
    ap.add_argument("--degree", type=int)
    args = ap.parse_args()

    if args.degree:
        t0 = time.perf_counter()
        m = search_smallest_irreducible(args.degree)
        tail = m ^ (1 << args.degree)
        print(f"{args.degree}: (1 << {args.degree}) | {hex(tail)}  # {time.perf_counter() - t0:.1f} s")
        return

    table = {v: search_smallest_irreducible(v) for v in range(1, 65)}
    if args.emit:
        print("MODULUS_TABLE: dict[int, int] = {")
        for v, m in table.items():
            print(f"    {v}: {hex(m)},")
        print("}")
        return
    bad = [v for v in table if table[v] != MODULUS_TABLE[v]]
    bad += [v for v, m in LARGE_MODULI.items() if not is_irreducible(m)]
    print("pinned moduli OK" if not bad else f"mismatch at degrees {bad}")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
