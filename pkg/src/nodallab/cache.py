"""Binary eigenpair cache with a bit-exact layout.

Layout (all integers and floats little-endian):

    bytes 0..3   magic "NBL1"
    uint32       dim
    uint32       n
    int32        m
    uint32       k (number of eigenpairs)
    uint64       seed
    int32 * dim*dim   flux matrix, row-major
    32 bytes     sha256 digest of the canonical normalized config JSON
    float64 * k  eigenvalues, ascending
    complex sections: for each of the k sections, n^dim (re, im) float64
                 pairs in row-major grid order

Writes go through a temp file in the destination directory followed by an
atomic rename; reads verify the magic and, when a config hash is supplied,
require it to match the header.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"NBL1"


class CacheError(ValueError):
    pass


def atomic_write_bytes(path, data: bytes):
    """Write bytes through a sibling temp file and rename into place."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class CacheFile:
    dim: int
    n: int
    m: int
    seed: int
    flux: np.ndarray
    config_hash: str
    eigenvalues: np.ndarray = field(repr=False)
    sections: np.ndarray = field(repr=False)  # shape (k, n^dim), complex

    @property
    def k(self) -> int:
        return len(self.eigenvalues)


def write_cache(path, dim: int, n: int, m: int, seed: int, flux, config_hash: str,
                eigenvalues, sections) -> None:
    """Serialize eigenpairs; ``sections`` is (k, n^dim) complex row-major."""
    flux = np.asarray(flux, dtype=np.int32)
    eigenvalues = np.asarray(eigenvalues, dtype="<f8")
    sections = np.asarray(sections, dtype=complex)
    k = len(eigenvalues)
    if sections.shape != (k, n ** dim):
        raise CacheError(f"sections must have shape ({k}, {n ** dim}), got {sections.shape}")
    digest = bytes.fromhex(config_hash)
    if len(digest) != 32:
        raise CacheError("config hash must be a sha256 hex digest")

    parts = [MAGIC]
    parts.append(struct.pack("<IIiIQ", dim, n, m, k, seed))
    parts.append(flux.astype("<i4").tobytes())
    parts.append(digest)
    parts.append(eigenvalues.tobytes())
    inter = np.empty((k, n ** dim, 2), dtype="<f8")
    inter[:, :, 0] = np.real(sections)
    inter[:, :, 1] = np.imag(sections)
    parts.append(inter.tobytes())
    atomic_write_bytes(path, b"".join(parts))


def read_cache(path, expected_hash: str | None = None) -> CacheFile:
    """Read a cache file; verifies magic and (optionally) the config hash."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CacheError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    off = 4
    dim, n, m, k, seed = struct.unpack_from("<IIiIQ", blob, off)
    off += struct.calcsize("<IIiIQ")
    flux = np.frombuffer(blob, dtype="<i4", count=dim * dim, offset=off).reshape(dim, dim)
    off += 4 * dim * dim
    digest = blob[off:off + 32].hex()
    off += 32
    if expected_hash is not None and digest != expected_hash:
        raise CacheError(
            f"cache was produced by config {digest[:12]}..., expected {expected_hash[:12]}..."
        )
    size = n ** dim
    eigenvalues = np.frombuffer(blob, dtype="<f8", count=k, offset=off).copy()
    off += 8 * k
    inter = np.frombuffer(blob, dtype="<f8", count=2 * k * size, offset=off).reshape(k, size, 2)
    sections = inter[:, :, 0] + 1j * inter[:, :, 1]
    return CacheFile(dim=dim, n=n, m=m, seed=seed, flux=flux.copy(),
                     config_hash=digest, eigenvalues=eigenvalues, sections=sections)
