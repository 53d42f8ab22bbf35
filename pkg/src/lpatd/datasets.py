"""20 Newsgroups (bydate) subsets as JSONL corpora.

The source is the tab-separated copy of 20NG bydate distributed inside the
``orange3-text`` wheel (``orangecontrib/text/datasets/20newsgroups-{train,test}.tab``).
Its messages are already lowercased with punctuation and digits stripped.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
import os
import zipfile
from pathlib import Path
from typing import Iterable, Iterator

SUBSETS = {
    "med-space": ("sci.med", "sci.space"),
    "pc-mac": ("comp.sys.ibm.pc.hardware", "comp.sys.mac.hardware"),
}

_MEMBER = "orangecontrib/text/datasets/20newsgroups-{split}.tab"


def read_orange_tab(stream: Iterable[str]) -> Iterator[tuple[str, str]]:
    """Yield (newsgroup, text) rows, skipping Orange's three header lines."""
    csv.field_size_limit(1 << 30)
    for i, row in enumerate(csv.reader(stream, delimiter="\t")):
        if i < 3 or len(row) < 2:
            continue
        yield row[0], row[1]


def records_from_wheel(wheel: str | os.PathLike, groups: Iterable[str]) -> list[dict]:
    groups = set(groups)
    out = []
    with zipfile.ZipFile(wheel) as zf:
        for split in ("train", "test"):
            counters: dict[str, int] = {}
            with zf.open(_MEMBER.format(split=split)) as raw:
                for group, text in read_orange_tab(io.TextIOWrapper(raw, encoding="utf-8")):
                    if group not in groups:
                        continue
                    n = counters[group] = counters.get(group, 0) + 1
                    out.append({"id": f"{split}/{group}/{n:05d}", "text": text, "split": split, "label": group})
    return out


def write_jsonl(records: Iterable[dict], path: str | os.PathLike) -> None:
    path = Path(path)
    lines = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records).encode("utf-8")
    if path.suffix == ".gz":
        # mtime=0 keeps the file byte-identical across rebuilds
        with open(path, "wb") as fh, gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
            gz.write(lines)
    else:
        path.write_bytes(lines)
