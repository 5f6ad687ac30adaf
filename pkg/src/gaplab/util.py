"""Small shared helpers: deterministic parallel map and table writers.

Output formatting is pinned down (repr floats, LF endings, sorted JSON
keys) so that rerunning an experiment with the same seed produces
byte-identical artifacts at any parallelism level.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor


def pmap(fn, items, threads=1):
    """Map fn over items, preserving input order in the result.

    Work items must be independent; with threads > 1 they run on a thread
    pool (the numeric kernels release the GIL), and results are reordered
    so the output never depends on scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def write_csv(path, rows, fieldnames=None):
    """CSV with header row, UTF-8, LF line endings; floats via repr."""
    rows = list(rows)
    if fieldnames is None:
        if not rows:
            raise ValueError("need fieldnames for an empty table")
        fieldnames = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))  # plain-float repr even for numpy scalars
    return v


def write_jsonl(path, records):
    """One JSON object per line, keys sorted."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
