"""Deterministic CSV output.

Every file starts with one comment line
``# tool=polypin version=... command=... config_hash=... seed=...`` followed
by a header row.  Floats are written with ``repr`` so that identical runs
produce byte-identical files on any locale.
"""

import csv
import os

from . import __version__


def _cell(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def header_line(command, config_hash, seed):
    return (f"# tool=polypin version={__version__} command={command} "
            f"config_hash={config_hash} seed={seed}")


def write_csv(path, columns, rows, *, command, config_hash, seed):
    """Write ``rows`` under ``columns`` to ``path`` and return the path."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header_line(command, config_hash, seed) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """Return ``(header_comment, columns, rows)`` with rows as lists of strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        reader = csv.reader(fh)
        columns = next(reader)
        return first, columns, list(reader)
