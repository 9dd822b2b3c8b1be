"""Deterministic emission of run artifacts.

Everything here routes through fixed formatting rules so that identical
inputs produce byte-identical files: shortest round-trip decimals inside
the binary64 range, 20-digit scientific beyond it, sorted JSON keys, LF
line endings, and PNG metadata stripped down to a constant tag.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless, file-only rendering

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
from mpmath import mp  # noqa: E402

__all__ = [
    "fmt_num",
    "write_csv",
    "write_json",
    "write_plot_dat",
    "write_gnuplot_stub",
    "new_figure",
    "save_figure",
    "sha256_file",
    "file_inventory",
]

# floats outside this band round-trip poorly or not at all through binary64
_FLOAT_LO = 1e-290
_FLOAT_HI = 1e290


def fmt_num(v) -> str:
    """Shortest round-trip decimal where binary64 can hold the value.

    mpmath quantities beyond the double range (deep collapse constants go
    below 1e-300 squared) fall back to 20 significant digits.
    """
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    x = mp.mpf(v) if not isinstance(v, float) else v
    a = abs(x)
    if a == 0 or (_FLOAT_LO <= a <= _FLOAT_HI):
        return repr(float(x))
    return mp.nstr(mp.mpf(x), 20)


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def write_csv(path, header, rows) -> Path:
    """UTF-8, comma-separated, header row, LF endings, pre-formatted cells."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_num(c) for c in row])
    return _write_text(Path(path), buf.getvalue())


def write_json(path, obj) -> Path:
    return _write_text(
        Path(path), json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=True) + "\n"
    )


def write_plot_dat(path, columns, rows) -> Path:
    """gnuplot-ready: '# col ...' comment header, whitespace-separated rows."""
    lines = ["# " + " ".join(columns)]
    for row in rows:
        lines.append(" ".join(fmt_num(c) for c in row))
    return _write_text(Path(path), "\n".join(lines) + "\n")


def write_gnuplot_stub(path, dat_name: str, title: str, xlabel: str, ylabel: str,
                       logscale: bool = True) -> Path:
    lines = [
        "# generated plotting stub; run: gnuplot %s" % Path(path).name,
        'set terminal pngcairo size 900,600',
        'set output "%s.png"' % Path(path).stem,
        'set title "%s"' % title,
        'set xlabel "%s"' % xlabel,
        'set ylabel "%s"' % ylabel,
    ]
    if logscale:
        lines.append("set logscale xy")
    lines.append('plot "%s" using 1:2 with linespoints title "%s"' % (dat_name, ylabel))
    return _write_text(Path(path), "\n".join(lines) + "\n")


def new_figure(width: float = 7.5, height: float = 5.0):
    return plt.figure(figsize=(width, height))


def save_figure(fig, path) -> Path:
    """Fixed dpi and constant PNG metadata keep renders reproducible."""
    path = Path(path)
    fig.savefig(path, dpi=120, format="png", metadata={"Software": "heatpoint"})
    plt.close(fig)
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def file_inventory(outdir, skip=("manifest.json",)) -> dict:
    """sha256 of every regular file under outdir, keyed by POSIX relpath.

    The manifest cannot contain its own hash, hence the default skip.
    """
    outdir = Path(outdir)
    inv = {}
    for p in sorted(outdir.rglob("*")):
        if p.is_file():
            rel = p.relative_to(outdir).as_posix()
            if rel in skip:
                continue
            inv[rel] = sha256_file(p)
    return inv
