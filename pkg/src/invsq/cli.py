"""Command line: ``invsq <subcommand> [--config PATH] [--out DIR] [--seed N]``.

Exit status: 0 when every declared check passes, 1 when a check fails,
2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import EXPERIMENTS, Result, Table


def _fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.16e" % x


def write_table(table: Table, out: Path, command: str, config_hash: str, seed: int) -> list[Path]:
    """CSV with a provenance comment and a units header, plus a whitespace .dat twin."""
    out.mkdir(parents=True, exist_ok=True)
    stem = table.name.replace("-", "_")
    head = f"# invsq {command} table={table.name} config_hash={config_hash} seed={seed}\n"
    csv = out / f"{stem}.csv"
    dat = out / f"{stem}.dat"
    lines = [",".join(table.columns)] + [",".join(_fmt(v) for v in row) for row in table.rows]
    csv.write_text(head + "\n".join(lines) + "\n")
    dlines = ["# " + " ".join(table.columns)] + [" ".join(_fmt(v) for v in row) for row in table.rows]
    dat.write_text(head + "\n".join(dlines) + "\n")
    return [csv, dat]


def run(command: str, config_path=None, out_dir="invsq-out", seed: int | None = None,
        stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    if command not in EXPERIMENTS:
        print(f"unknown subcommand {command!r}; choose from {', '.join(EXPERIMENTS)}",
              file=sys.stderr)
        return 2
    try:
        cfg = load_config(config_path, seed=seed, command=command)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return 2
    res: Result = EXPERIMENTS[command](cfg)
    out = Path(out_dir)
    for t in res.tables:
        write_table(t, out, command, cfg.hash, cfg.seed)
    for c in res.checks:
        tail = f" ({c.detail})" if c.detail else ""
        print(f"{'PASS' if c.passed else 'FAIL'} {command}: {c.name}{tail}", file=stream)
    return 0 if res.ok else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="invsq", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", help=", ".join(EXPERIMENTS))
    ap.add_argument("--config", default=None, help="INI file (defaults to the packaged config)")
    ap.add_argument("--out", default="invsq-out", help="output directory for CSV/.dat files")
    ap.add_argument("--seed", type=int, default=None, help="override [run] seed")
    args = ap.parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
