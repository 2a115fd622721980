"""Regenerate the hash golden files from the bit-serial reference path.

    python scripts/make_golden.py

Writes src/mirrorrng/data/golden_hash.json (1000 apply_hash cases) and the
extraction CLI fixture under tests/data/. Only rerun when deliberately
changing the pinned field representation.
"""

import json
import random
from pathlib import Path

from mirrorrng.extract import LARGE_MODULI, MODULUS_TABLE, apply_hash_reference
from mirrorrng.protocol import trial_rng

ROOT = Path(__file__).resolve().parents[1]


def golden_cases(count=1000, seed=20260416):
    rnd = random.Random(seed)
    degrees = list(MODULUS_TABLE) + [100, 1000]
    cases = []
    for i in range(count):
        v = degrees[i % len(degrees)] if i < 2 * len(degrees) else rnd.choice(degrees)
        mod = MODULUS_TABLE.get(v) or LARGE_MODULI[v]
        u = rnd.randint(0, v)
        a, b, p = (rnd.getrandbits(v) for _ in range(3))
        out = apply_hash_reference(v, mod, u, (a, b), p)
        cases.append({"v": v, "u": u, "modulus": hex(mod), "a": hex(a), "b": hex(b), "p": hex(p), "out": hex(out)})
    return cases


def extract_fixture(lines=1000, length=12, p_size=4096, u=8, seed=2026):
    rnd = random.Random(seed)
    inputs = ["".join(rnd.choice("01") for _ in range(length)) for _ in range(lines)]
    v = (p_size - 1).bit_length()
    mod = MODULUS_TABLE[v]
    # same index derivation as the CLI: 2v bits from trial stream 0
    rng = trial_rng(seed, 0)
    nbytes = (v + 7) // 8
    a = int.from_bytes(rng.bytes(nbytes), "little") & ((1 << v) - 1)
    b = int.from_bytes(rng.bytes(nbytes), "little") & ((1 << v) - 1)
    header = {"index": [hex(a), hex(b)], "modulus": hex(mod), "n": 2, "p_size": p_size, "u": u, "v": v}
    out = [json.dumps(header, sort_keys=True)]
    for line in inputs:
        out.append(f"0x{apply_hash_reference(v, mod, u, (a, b), int(line, 2)):02x}")
    return "\n".join(inputs) + "\n", "\n".join(out) + "\n", {"p_size": p_size, "u": u, "seed": seed}


if __name__ == "__main__":
    path = ROOT / "src/mirrorrng/data/golden_hash.json"
    path.write_text(json.dumps({"generator": "bit-serial reference", "cases": golden_cases()}, indent=0) + "\n")
    inp, out, params = extract_fixture()
    (ROOT / "tests/data/extract_input.txt").write_text(inp)
    (ROOT / "tests/data/extract_golden.txt").write_text(out)
    (ROOT / "tests/data/extract_params.json").write_text(json.dumps(params) + "\n")
    print("wrote", path)
