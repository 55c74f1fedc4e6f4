"""Seeded generation of Gaussian dictionaries and isotropic Gaussian signals.

Streams are Philox generators keyed by ``(master_seed, stream_id)`` through
:class:`numpy.random.SeedSequence`, so any stream can be rebuilt without
touching any other one. That is what makes Monte Carlo results independent
of the number of worker threads.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "DICT_STREAM",
    "Dictionary",
    "ProblemInstance",
    "Signal",
    "derive_stream",
    "gen_blockdiag_dict",
    "gen_gaussian_dict",
    "load_dictionary",
    "sample_isotropic_signal",
    "save_dictionary",
]

MASK64 = (1 << 64) - 1
# stream id reserved for the fixed per-configuration dictionary
DICT_STREAM = MASK64

DUMP_MAGIC = int.from_bytes(b"USRDICT1", "little")
_STRUCT_TAGS = {"dense": 0, "block_diagonal": 1}


def derive_stream(master_seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for ``stream_id`` under ``master_seed``."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & MASK64, spawn_key=(int(stream_id) & MASK64,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ProblemInstance:
    """Dimension ``d``, sparsity ``k`` and number of atoms ``n``."""

    d: int
    k: int
    n: int

    def __post_init__(self):
        for name in ("d", "k", "n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if not self.k < self.d:
            raise DomainError(f"need k < d, got k={self.k}, d={self.d}")
        if not self.n >= self.k:
            raise DomainError(f"need n >= k, got n={self.n}, k={self.k}")

    @classmethod
    def from_ratios(cls, d: int, s: float, o: float) -> "ProblemInstance":
        k, n = s * d, o * d
        if abs(k - round(k)) > 1e-9 * d:
            raise ConfigurationError(f"s*d = {k!r} is not an integer")
        if abs(n - round(n)) > 1e-9 * d:
            raise ConfigurationError(f"o*d = {n!r} is not an integer")
        return cls(d, int(round(k)), int(round(n)))

    @property
    def s(self) -> float:
        return self.k / self.d

    @property
    def o(self) -> float:
        return self.n / self.d

    @property
    def m(self) -> float:
        return self.n / self.k

    def check_blocks(self):
        if self.d % self.k:
            raise ConfigurationError(f"k does not divide d (k={self.k}, d={self.d}, n={self.n})")
        if self.n % self.k:
            raise ConfigurationError(f"k does not divide n (k={self.k}, d={self.d}, n={self.n})")


@dataclass(frozen=True, eq=False)
class Dictionary:
    """A d x n dictionary whose columns are atoms.

    Block-diagonal dictionaries keep only their ``k`` diagonal blocks, as an
    array of shape ``(k, d/k, n/k)``; :attr:`entries` materializes the full
    matrix on demand.
    """

    data: np.ndarray
    structure: str = "dense"
    seed_provenance: tuple | None = None

    def __post_init__(self):
        if self.structure not in _STRUCT_TAGS:
            raise DomainError(f"unknown dictionary structure {self.structure!r}")
        want = 2 if self.structure == "dense" else 3
        if self.data.ndim != want:
            raise DomainError(f"{self.structure} dictionary data must be {want}-D")
        arr = np.array(self.data, dtype=np.float64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        if np.any(self.atom_norms == 0):
            raise DomainError("dictionary contains an all-zero atom")

    @property
    def is_block(self) -> bool:
        return self.structure == "block_diagonal"

    @property
    def d(self) -> int:
        if self.is_block:
            return self.data.shape[0] * self.data.shape[1]
        return self.data.shape[0]

    @property
    def n(self) -> int:
        if self.is_block:
            return self.data.shape[0] * self.data.shape[2]
        return self.data.shape[1]

    @property
    def n_blocks(self) -> int:
        return self.data.shape[0] if self.is_block else 1

    @property
    def blocks(self) -> np.ndarray:
        if not self.is_block:
            raise ConfigurationError("dictionary is not block-diagonal")
        return self.data

    @cached_property
    def entries(self) -> np.ndarray:
        if not self.is_block:
            return self.data
        k, rows, cols = self.data.shape
        full = np.zeros((k * rows, k * cols))
        for i in range(k):
            full[i * rows:(i + 1) * rows, i * cols:(i + 1) * cols] = self.data[i]
        full.flags.writeable = False
        return full

    @cached_property
    def atom_norms(self) -> np.ndarray:
        if self.is_block:
            return np.sqrt(np.einsum("irj,irj->ij", self.data, self.data)).ravel()
        return np.sqrt(np.einsum("ij,ij->j", self.data, self.data))


@dataclass(frozen=True, eq=False)
class Signal:
    values: np.ndarray
    norm: float

    @classmethod
    def from_values(cls, values) -> "Signal":
        v = np.array(values, dtype=np.float64, copy=True).ravel()
        v.flags.writeable = False
        norm = float(np.linalg.norm(v))
        if not norm > 0:
            raise DomainError("signal must have positive norm")
        return cls(v, norm)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    def blocks(self, k: int) -> np.ndarray:
        """View as ``k`` consecutive blocks of length d/k."""
        if self.d % k:
            raise ConfigurationError(f"k={k} does not divide d={self.d}")
        return self.values.reshape(k, self.d // k)


def gen_gaussian_dict(inst: ProblemInstance, gen: np.random.Generator, provenance=None) -> Dictionary:
    """Dense d x n dictionary with i.i.d. N(0, 1) entries."""
    return Dictionary(gen.standard_normal((inst.d, inst.n)), "dense", provenance)


def gen_blockdiag_dict(inst: ProblemInstance, gen: np.random.Generator, provenance=None) -> Dictionary:
    """Block-diagonal dictionary: k blocks of size (d/k) x (n/k), i.i.d. N(0, 1)."""
    inst.check_blocks()
    k = inst.k
    return Dictionary(gen.standard_normal((k, inst.d // k, inst.n // k)), "block_diagonal", provenance)


def sample_isotropic_signal(d: int, gen: np.random.Generator) -> Signal:
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    while True:
        v = gen.standard_normal(d)
        if np.any(v):
            return Signal.from_values(v)


def save_dictionary(dic: Dictionary, path, k: int = 0) -> None:
    """Write a little-endian dump: 7 uint64 header words then row-major float64 entries.

    Header: magic, d, k, n, structure tag, master seed, stream id. ``k`` is
    taken from the block count for block-diagonal dictionaries.
    """
    seed, stream = dic.seed_provenance or (0, 0)
    if dic.is_block:
        k = dic.n_blocks
    header = struct.pack(
        "<7Q", DUMP_MAGIC, dic.d, k, dic.n, _STRUCT_TAGS[dic.structure], seed & MASK64, stream & MASK64
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(dic.entries, dtype="<f8").tobytes())


def load_dictionary(path) -> Dictionary:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, d, k, n, tag, seed, stream = struct.unpack_from("<7Q", raw)
    if magic != DUMP_MAGIC:
        raise ValueError(f"{path}: not a dictionary dump (bad magic)")
    body = np.frombuffer(raw, dtype="<f8", offset=56)
    if body.size != d * n:
        raise ValueError(f"{path}: expected {d * n} entries, found {body.size}")
    full = body.reshape(d, n).astype(np.float64)
    structure = {v: s for s, v in _STRUCT_TAGS.items()}[tag]
    if structure == "block_diagonal":
        rows, cols = d // k, n // k
        data = np.stack([full[i * rows:(i + 1) * rows, i * cols:(i + 1) * cols] for i in range(k)])
        return Dictionary(data, structure, (seed, stream))
    return Dictionary(full, structure, (seed, stream))


def block_sizes(inst: ProblemInstance) -> tuple:
    inst.check_blocks()
    return inst.d // inst.k, inst.n // inst.k
