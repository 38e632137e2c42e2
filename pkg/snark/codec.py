"""
Canonical byte encodings.

G1 points use the 48-byte compressed form, G2 points the 96-byte form,
scalars 32 bytes little-endian, GT elements twelve 48-byte big-endian
coefficients. The same bytes feed transcripts and proof files.
"""

import struct
from typing import List, Sequence

from py_ecc.bls.point_compression import (
    compress_G1,
    compress_G2,
    decompress_G1,
    decompress_G2,
)
from py_ecc.optimized_bls12_381 import FQ12, curve_order, field_modulus, is_inf, multiply

from utils.errors import ArtifactError

G1_BYTES = 48
G2_BYTES = 96
SCALAR_BYTES = 32
GT_BYTES = 12 * 48
FORMAT_VERSION = 1


def encode_scalar(s: int) -> bytes:
    return (s % curve_order).to_bytes(SCALAR_BYTES, "little")


def decode_scalar(data: bytes) -> int:
    value = int.from_bytes(data, "little")
    if value >= curve_order:
        raise ArtifactError("scalar encoding out of range")
    return value


def encode_g1(pt) -> bytes:
    return compress_G1(pt).to_bytes(G1_BYTES, "big")


def encode_g2(pt) -> bytes:
    z1, z2 = compress_G2(pt)
    return z1.to_bytes(G1_BYTES, "big") + z2.to_bytes(G1_BYTES, "big")


def encode_point(pt) -> bytes:
    """Encode a point of either group."""
    if hasattr(pt[0], "coeffs"):
        return encode_g2(pt)
    return encode_g1(pt)


def _in_subgroup(pt) -> bool:
    return is_inf(pt) or is_inf(multiply(pt, curve_order))


def decode_g1(data: bytes, check_subgroup: bool = True):
    if len(data) != G1_BYTES:
        raise ArtifactError(f"G1 encoding must be {G1_BYTES} bytes")
    try:
        pt = decompress_G1(int.from_bytes(data, "big"))
    except (ValueError, AssertionError) as e:
        raise ArtifactError(f"invalid G1 point: {e}") from e
    if check_subgroup and not _in_subgroup(pt):
        raise ArtifactError("G1 point outside the prime-order subgroup")
    return pt


def decode_g2(data: bytes, check_subgroup: bool = True):
    if len(data) != G2_BYTES:
        raise ArtifactError(f"G2 encoding must be {G2_BYTES} bytes")
    z1 = int.from_bytes(data[:G1_BYTES], "big")
    z2 = int.from_bytes(data[G1_BYTES:], "big")
    try:
        pt = decompress_G2((z1, z2))
    except (ValueError, AssertionError) as e:
        raise ArtifactError(f"invalid G2 point: {e}") from e
    if check_subgroup and not _in_subgroup(pt):
        raise ArtifactError("G2 point outside the prime-order subgroup")
    return pt


def _coeff(c) -> int:
    return getattr(c, "n", c) % field_modulus


def encode_gt(x: FQ12) -> bytes:
    return b"".join(_coeff(c).to_bytes(48, "big") for c in x.coeffs)


def decode_gt(data: bytes) -> FQ12:
    if len(data) != GT_BYTES:
        raise ArtifactError(f"GT encoding must be {GT_BYTES} bytes")
    coeffs = [int.from_bytes(data[i:i + 48], "big") for i in range(0, GT_BYTES, 48)]
    if any(c >= field_modulus for c in coeffs):
        raise ArtifactError("GT coefficient out of range")
    return FQ12(coeffs)


def g1_hex(pt) -> str:
    return encode_g1(pt).hex()


def g1_from_hex(text: str):
    try:
        return decode_g1(bytes.fromhex(text))
    except ValueError as e:
        raise ArtifactError(f"invalid hex point: {e}") from e


class Writer:
    """Sequential binary writer for proof and key files."""

    def __init__(self):
        self._parts: List[bytes] = []

    def header(self, magic: bytes, version: int = FORMAT_VERSION) -> "Writer":
        if len(magic) != 4:
            raise ValueError("magic must be 4 bytes")
        self._parts.append(magic + struct.pack("<H", version))
        return self

    def u32(self, n: int) -> "Writer":
        self._parts.append(struct.pack("<I", n))
        return self

    def raw(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._parts.append(data)
        return self

    def scalar(self, s: int) -> "Writer":
        self._parts.append(encode_scalar(s))
        return self

    def scalars(self, values: Sequence[int]) -> "Writer":
        self.u32(len(values))
        for s in values:
            self.scalar(s)
        return self

    def g1(self, pt) -> "Writer":
        self._parts.append(encode_g1(pt))
        return self

    def g2(self, pt) -> "Writer":
        self._parts.append(encode_g2(pt))
        return self

    def gt(self, x: FQ12) -> "Writer":
        self._parts.append(encode_gt(x))
        return self

    def g1_list(self, points: Sequence) -> "Writer":
        self.u32(len(points))
        for pt in points:
            self.g1(pt)
        return self

    def g2_list(self, points: Sequence) -> "Writer":
        self.u32(len(points))
        for pt in points:
            self.g2(pt)
        return self

    def gt_list(self, values: Sequence[FQ12]) -> "Writer":
        self.u32(len(values))
        for x in values:
            self.gt(x)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """
    Sequential binary reader; every malformed input raises ArtifactError.

    Args:
        data: File contents
        check_subgroup: Reject points outside the prime-order subgroup
    """

    def __init__(self, data: bytes, check_subgroup: bool = True):
        self._data = data
        self._pos = 0
        self.check_subgroup = check_subgroup

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ArtifactError("unexpected end of data")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def header(self, magic: bytes) -> int:
        found = self._take(4)
        if found != magic:
            raise ArtifactError(f"bad magic {found!r}, expected {magic!r}")
        (version,) = struct.unpack("<H", self._take(2))
        if version != FORMAT_VERSION:
            raise ArtifactError(f"unsupported format version {version}")
        return version

    def u32(self) -> int:
        (n,) = struct.unpack("<I", self._take(4))
        return n

    def raw(self) -> bytes:
        return self._take(self.u32())

    def scalar(self) -> int:
        return decode_scalar(self._take(SCALAR_BYTES))

    def scalars(self) -> List[int]:
        return [self.scalar() for _ in range(self.u32())]

    def g1(self):
        return decode_g1(self._take(G1_BYTES), self.check_subgroup)

    def g2(self):
        return decode_g2(self._take(G2_BYTES), self.check_subgroup)

    def gt(self) -> FQ12:
        return decode_gt(self._take(GT_BYTES))

    def g1_list(self) -> list:
        return [self.g1() for _ in range(self.u32())]

    def g2_list(self) -> list:
        return [self.g2() for _ in range(self.u32())]

    def gt_list(self) -> List[FQ12]:
        return [self.gt() for _ in range(self.u32())]

    def done(self) -> None:
        if self._pos != len(self._data):
            raise ArtifactError(f"{len(self._data) - self._pos} trailing bytes")
