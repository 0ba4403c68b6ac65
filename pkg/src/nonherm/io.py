"""On-disk formats for spectra, kernel tables and histograms.

Binary spectra file::

    b"NHSPEC01"                       8-byte magic
    uint64 LE  m                      length of the metadata JSON
    m bytes                           UTF-8 JSON metadata
    repeated per draw:
        uint64 LE  n                  number of eigenvalues
        n x (float64 LE re, float64 LE im)

CSV files start with one ``# key=value`` comment line per metadata item,
followed by a header row and the data rows.
"""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from importlib import metadata as importlib_metadata
from pathlib import Path

import numpy as np

MAGIC = b"NHSPEC01"


def code_version():
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        return "0+unknown"


def config_hash(config):
    """sha256 of the canonical JSON form of ``config``."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def provenance(config, seed):
    return {"config_sha256": config_hash(config), "seed": int(seed), "version": code_version()}


def write_spectra_bin(path, spectra, meta):
    spectra = np.asarray(spectra, dtype=np.complex128)
    if spectra.ndim == 1:
        spectra = spectra[None, :]
    blob = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for row in spectra:
            fh.write(struct.pack("<Q", len(row)))
            fh.write(np.ascontiguousarray(row).view("<f8").astype("<f8").tobytes())


def read_spectra_bin(path):
    """Return ``(metadata, list of complex arrays)``."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path} is not a spectra file")
    (m,) = struct.unpack_from("<Q", data, 8)
    meta = json.loads(data[16:16 + m].decode())
    pos = 16 + m
    rows = []
    while pos < len(data):
        (n,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        vals = np.frombuffer(data, dtype="<f8", count=2 * n, offset=pos)
        rows.append(vals[0::2] + 1j * vals[1::2])
        pos += 16 * n
    return meta, rows


def _fmt(x):
    return repr(float(x))


def write_csv(path, meta, header, rows):
    with open(path, "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, (int, np.integer)) else int(v) for v in row])


def write_spectra_csv(path, spectra, meta):
    spectra = np.asarray(spectra, dtype=np.complex128)
    if spectra.ndim == 1:
        spectra = spectra[None, :]
    rows = ((i, z.real, z.imag) for i, row in enumerate(spectra) for z in row)
    write_csv(path, meta, ["draw", "re", "im"], rows)


def read_csv_body(path):
    """Header row and data rows of a CSV written here, metadata lines skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_kernel_csv(path, profile, meta):
    write_csv(path, meta, ["re1", "im1", "re2", "im2", "re_val", "im_val", "log_scale"], profile.rows())


def write_marginal_csv(path, marginal, meta):
    rows = zip(marginal.edges[:-1], marginal.edges[1:], marginal.counts, marginal.density, marginal.se)
    write_csv(path, meta, ["bin_lo", "bin_hi", "count", "density", "se"], rows)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")
