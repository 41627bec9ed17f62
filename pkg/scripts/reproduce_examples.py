"""Certify and solve the two bundled examples; write everything under --out.

    python3 scripts/reproduce_examples.py --out runs/examples
"""
import argparse
import json
from pathlib import Path

from hamloc.cli import main as cli


def run(args) -> dict:
    out = Path(args.out)
    codes = {}
    for name in ("numex", "ex2"):
        flags = ["--out", str(out / name), "--grid", str(args.grid)]
        if args.no_timestamp:
            flags.append("--no-timestamp")
        codes[name] = {
            "certify": cli(["certify", name, "--out", str(out / name)] + (["--no-timestamp"] if args.no_timestamp else [])),
            "solve": cli(["solve", name] + flags),
        }
    return codes


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/examples")
    ap.add_argument("--grid", type=int, default=1025)
    ap.add_argument("--no-timestamp", action="store_true")
    codes = run(ap.parse_args())
    print(json.dumps(codes, indent=2))
    raise SystemExit(max(c for v in codes.values() for c in v.values()))
