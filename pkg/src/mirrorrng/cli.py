"""Command-line experiment runner.

Exit codes: 0 success, 1 configuration error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds
from .extract import apply_hash, build_hash_family, encode_outputs
from .games import (
    BellGame,
    GuessingGame,
    classical_value,
    load_game,
    make_chsh_bell_game,
    make_guessing_game,
    seesaw_lower_bound,
    strategy_from_json,
)
from .presets import PRESETS
from .protocol import (
    DeviceModel,
    ProtocolConfig,
    exact_guessing_statistics,
    guessing_statistics,
    run_protocol,
    run_trials,
    trial_rng,
    wilson,
)
from .verify import run_suite

CSV_VERSION = "# mirrorrng-stats v1"
STATS_FIELDS = ("quantity", "estimate", "ci_lo", "ci_hi", "trials")


class ConfigError(Exception):
    pass


def _read_json(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc


def _resolve(args) -> tuple[ProtocolConfig, DeviceModel, int]:
    raw = _read_json(args.config)
    for key in ("N", "delta", "J", "seed", "trials"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if getattr(args, "preset", None):
        raw["device"] = args.preset
    device = raw.get("device", "tsirelson-chsh")
    try:
        if isinstance(device, str):
            if device not in PRESETS:
                raise ConfigError(f"unknown preset {device!r}; choose from {sorted(PRESETS)}")
            strategy = PRESETS[device]()
        else:
            src = device.get("strategy")
            if isinstance(src, str):
                src = _read_json(src)
            if src is None:
                raise ConfigError("device needs a preset name or a strategy")
            strategy = strategy_from_json(src)
        game = raw.get("game")
        if isinstance(game, str):
            game = _read_json(game)
        game = BellGame.from_json(game) if game else make_chsh_bell_game()
        cfg = ProtocolConfig(game, float(raw.get("delta", 0.1)), int(raw.get("N", 1000)), int(raw.get("J", 1)), int(raw.get("seed", 0)))
        trials = int(raw.get("trials", 1))
        if trials < 0:
            raise ConfigError("trials must be >= 0")
        return cfg, DeviceModel.iid(strategy), trials
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_stats(path: Path, rows: list[tuple]) -> None:
    with path.open("w", newline="") as fh:
        fh.write(CSV_VERSION + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_FIELDS)
        for r in rows:
            w.writerow(r)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg, dev, trials = _resolve(args)
    out = _out_dir(args)
    transcripts = run_trials(lambda i: run_protocol(cfg, dev, i), trials, args.threads)
    with (out / "transcripts.jsonl").open("w") as fh:
        for tr in transcripts:
            fh.write(tr.to_json() + "\n")
    rows = []
    if trials:
        succ = sum(tr.succ for tr in transcripts)
        est = wilson(succ, trials)
        rows.append(("success_rate", repr(est.estimate), repr(est.ci_lo), repr(est.ci_hi), trials))
        scores = np.array([tr.avg_score for tr in transcripts])
        half = 1.96 * scores.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
        m = float(scores.mean())
        rows.append(("mean_score", repr(m), repr(m - half), repr(m + half), trials))
    _write_stats(out / "stats.csv", rows)
    if rows:
        print(f"success rate {rows[0][1]} over {trials} trials")
    return 0


def cmd_mirror(args) -> int:
    cfg, dev, trials = _resolve(args)
    out = _out_dir(args)
    n = cfg.game.n
    exact = cfg.N == 1
    rows = []
    if exact:
        ex = exact_guessing_statistics(cfg, dev)
        est = {"p_sss": ex.p_sss, "p_vvs": ex.p_vvs, "p_ss": ex.p_ss}
        for k, v in est.items():
            rows.append((k, repr(float(v)), repr(float(v)), repr(float(v)), 0))
        sss, sigma, ci = float(ex.p_sss), 0.0, None
        decomposition = ex.p_vvs <= ex.p_sss + 2.0**-cfg.J * ex.p_ss + 1e-12
    else:
        if trials < 1:
            raise ConfigError("mirror needs trials >= 1")
        gs = guessing_statistics(cfg, dev, trials, args.threads)
        for k in ("p_sss", "p_vvs", "p_ss"):
            e = getattr(gs, k)
            rows.append((k, repr(e.estimate), repr(e.ci_lo), repr(e.ci_hi), trials))
        sss, sigma, ci = gs.p_sss.estimate, gs.p_sss.sigma, (gs.p_sss.ci_lo, gs.p_sss.ci_hi)
        decomposition = gs.decomposition_holds
    _write_stats(out / "guessing.csv", rows)
    report = bounds.compare(
        "guessing_event",
        sss,
        bounds.guessing_event_bound(cfg.N, cfg.delta, n),
        {"N": cfg.N, "delta": cfg.delta, "n": n, "K": bounds.optimal_k(n, cfg.delta)},
        sigma=sigma,
        ci=ci,
    )
    (out / "bounds.csv").write_text(bounds.reports_to_csv([report]))
    (out / "bounds.jsonl").write_text(report.to_json() + "\n")
    print(f"P(S=S' & succ & succ') = {sss:.6g}; bound {report.bound:.6g} ({report.verdict})")
    if report.verdict == "violated" or not decomposition:
        return 2
    return 0


def cmd_verify(args) -> int:
    try:
        results = run_suite(args.suite)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} ({r.seconds:.1f} s)")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def cmd_extract(args) -> int:
    try:
        fam = build_hash_family(args.p_size, args.u)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.index:
        try:
            a, b = (int(tok, 0) for tok in args.index.split(","))
        except ValueError as exc:
            raise ConfigError(f"--index expects 'a,b', got {args.index!r}") from exc
        index = (a, b)
    else:
        index = fam.sample_index(trial_rng(args.seed, 0))
    lines = Path(args.input).read_text().split() if args.input != "-" else sys.stdin.read().split()
    width = (args.u + 3) // 4
    header = {
        "v": fam.v,
        "u": fam.u,
        "modulus": hex(fam.field.modulus),
        "index": [hex(index[0]), hex(index[1])],
        "p_size": args.p_size,
        "n": args.n,
    }
    out = [json.dumps(header, sort_keys=True)]
    for line in lines:
        try:
            p = encode_outputs([int(ch, args.n) for ch in line], args.n)
        except ValueError as exc:
            raise ConfigError(f"bad input line {line!r}: {exc}") from exc
        if args.n ** len(line) > args.p_size:
            raise ConfigError(f"input {line!r}: {args.n}^{len(line)} strings exceed the declared set of size {args.p_size}")
        out.append(f"0x{apply_hash(fam, index, p):0{max(width, 1)}x}")
    text = "\n".join(out) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_game_value(args) -> int:
    game = load_game(_read_json(args.game)) if args.game else make_chsh_bell_game()
    if args.K is not None:
        if isinstance(game, GuessingGame):
            raise ConfigError("--K applies to a Bell game, not a guessing game")
        try:
            game = make_guessing_game(game, args.K)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    players = 3 if isinstance(game, GuessingGame) else 2
    dims = [int(d) for d in args.dims.split(",")] if args.dims else ([2, 2, 4] if players == 3 else [2, 2])
    if len(dims) != players:
        raise ConfigError(f"--dims needs {players} entries")
    cv = classical_value(game)
    sw = seesaw_lower_bound(game, dims, iters=args.iters, seed=args.seed if args.seed is not None else 0)
    print(json.dumps({"classical_value": str(cv), "seesaw_lower_bound": sw, "dims": dims}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirrorrng", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--config", help="JSON with ProtocolConfig fields and a device")
        p.add_argument("--seed", type=int)
        if trials:
            p.add_argument("--trials", type=int)
        p.add_argument("--out", default="out")
        p.add_argument("--threads", type=int, default=1)

    for name, fn in (("simulate", cmd_simulate), ("mirror", cmd_mirror)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--N", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--J", type=int)
        p.set_defaults(fn=fn)

    p = sub.add_parser("verify")
    p.add_argument("suite", nargs="?", default="all", choices=["all", "linalg", "games", "hash", "bounds"])
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("extract")
    p.add_argument("input", help="file of base-n output strings, one per line ('-' for stdin)")
    p.add_argument("--p-size", type=int, required=True)
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", help="force the hash index, e.g. '1,0' (testing)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("game-value")
    p.add_argument("--game", help="game JSON file (default: CHSH)")
    p.add_argument("--K", type=float)
    p.add_argument("--dims")
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_game_value)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
