"""Rebuild data/20ng/*.jsonl.gz from the 20NG copy bundled with orange3-text.

    python scripts/fetch_20ng.py [--wheel path/to/orange3_text-*.whl]

Without --wheel the wheel is fetched with ``pip download`` (no install).
"""

import argparse
import glob
import subprocess
import sys
import tempfile
from pathlib import Path

from lpatd.datasets import SUBSETS, records_from_wheel, write_jsonl

ORANGE_PIN = "orange3-text==1.16.3"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel")
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "20ng"))
    args = ap.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, ORANGE_PIN],
                check=True,
            )
            wheel = glob.glob(f"{tmp}/orange3_text-*.whl")[0]
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, groups in SUBSETS.items():
            records = records_from_wheel(wheel, groups)
            path = out / f"{name.replace('-', '_')}.jsonl.gz"
            write_jsonl(records, path)
            print(f"{path}: {len(records)} documents")


if __name__ == "__main__":
    main()
