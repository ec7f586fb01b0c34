"""Bit-packed {-1, +1} matrices.

Rows are packed eight entries per byte (``numpy.packbits`` order), with bit 1
meaning +1 and bit 0 meaning -1. Padding bits in the last byte of a row are
always zero, so the XOR of two packed rows has popcount equal to the number of
disagreeing positions and the inner product of two rows of length L is
``L - 2 * popcount(x ^ y)``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np

# rows per block when forming M @ N.T; bounds the (block, rows, bytes) temporary
_GRAM_BLOCK = 64


class SignMatrix:
    """Immutable dense matrix with entries in {-1, +1}."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: np.ndarray):
        if rows < 1 or cols < 1:
            raise ValueError(f"shape must be positive, got {rows}x{cols}")
        data = np.asarray(data, dtype=np.uint8)
        if data.shape != (rows, (cols + 7) // 8):
            raise ValueError(f"packed data has shape {data.shape}, expected {(rows, (cols + 7) // 8)}")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("SignMatrix is immutable")

    @classmethod
    def from_array(cls, a) -> "SignMatrix":
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        if not np.all((a == 1) | (a == -1)):
            raise ValueError("entries must be +1 or -1")
        return cls(a.shape[0], a.shape[1], np.packbits(a > 0, axis=1))

    @classmethod
    def ones(cls, rows: int, cols: int) -> "SignMatrix":
        return cls.from_array(np.ones((rows, cols), dtype=np.int8))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def to_array(self, dtype=np.int64) -> np.ndarray:
        bits = np.unpackbits(self.data, axis=1, count=self.cols)
        return (2 * bits.astype(dtype) - 1).astype(dtype)

    def to_lists(self) -> list[list[int]]:
        return self.to_array().tolist()

    @property
    def T(self) -> "SignMatrix":
        return SignMatrix.from_array(self.to_array(np.int8).T)

    def __getitem__(self, ij):
        i, j = ij
        byte = int(self.data[i, j >> 3])
        return 1 if (byte >> (7 - (j & 7))) & 1 else -1

    def __eq__(self, other):
        if not isinstance(other, SignMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self):
        return f"SignMatrix({self.rows}x{self.cols})"

    def gram(self, other: "SignMatrix | None" = None) -> np.ndarray:
        """Integer matrix ``self @ other.T`` computed with XOR and popcount."""
        other = self if other is None else other
        if self.cols != other.cols:
            raise ValueError(f"row lengths differ: {self.cols} vs {other.cols}")
        out = np.empty((self.rows, other.rows), dtype=np.int64)
        for start in range(0, self.rows, _GRAM_BLOCK):
            block = self.data[start:start + _GRAM_BLOCK]
            x = np.bitwise_xor(block[:, None, :], other.data[None, :, :])
            disagree = np.bitwise_count(x).sum(axis=2, dtype=np.int64)
            out[start:start + len(block)] = self.cols - 2 * disagree
        return out

    def matmul(self, other: "SignMatrix") -> np.ndarray:
        """Integer product ``self @ other``."""
        return self.gram(other.T)

    def row_dot(self, i: int, other: "SignMatrix", j: int) -> int:
        if self.cols != other.cols:
            raise ValueError("row lengths differ")
        x = np.bitwise_xor(self.data[i], other.data[j])
        return self.cols - 2 * int(np.bitwise_count(x).sum())

    def to_text(self) -> str:
        lines = [f"{self.rows} {self.cols}"]
        for row in self.to_array(np.int8):
            lines.append("".join("+" if v > 0 else "-" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SignMatrix":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix text")
        try:
            rows, cols = (int(t) for t in lines[0].split())
        except ValueError:
            raise ValueError(f"bad header line {lines[0]!r}") from None
        body = lines[1:]
        if len(body) != rows:
            raise ValueError(f"expected {rows} rows, found {len(body)}")
        a = np.empty((rows, cols), dtype=np.int8)
        for i, line in enumerate(body):
            if len(line) != cols or set(line) - {"+", "-"}:
                raise ValueError(f"row {i + 1} is not {cols} characters of '+'/'-'")
            a[i] = [1 if ch == "+" else -1 for ch in line]
        return cls.from_array(a)


def read_matrix(path: str | Path) -> SignMatrix:
    return SignMatrix.from_text(Path(path).read_text(encoding="ascii"))


def write_matrix(path: str | Path, m: SignMatrix) -> None:
    Path(path).write_text(m.to_text(), encoding="ascii", newline="\n")


def stack(blocks: Iterable[Iterable[SignMatrix]]) -> SignMatrix:
    """Assemble a block matrix from rows of SignMatrix blocks."""
    return SignMatrix.from_array(np.block([[b.to_array(np.int8) for b in row] for row in blocks]))
