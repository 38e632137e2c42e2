"""Fiat–Shamir transcript over SHAKE-256 with per-step domain labels."""

import hashlib
from typing import Iterable, List

from snark.algebra import P, G1Point, G2Point, GtElem, Scalar
from snark import codec

_CHALLENGE_BYTES = 64


class Transcript:
    """
    Append-only transcript.

    Every message is framed as (len(label), label, len(data), data) before it
    enters the sponge, so two different message sequences never hash the same
    way. Challenges are squeezed from a copy of the running state and then
    absorbed back, which makes successive challenges depend on each other.

    Args:
        label: Protocol-level domain label (e.g. b"zkcnn/qmp")
    """

    def __init__(self, label: bytes):
        self.label = label
        self.absorbed: List[bytes] = []
        self._state = hashlib.shake_256()
        self._frame(b"transcript", label)

    def _frame(self, label: bytes, data: bytes) -> None:
        self._state.update(len(label).to_bytes(4, "little") + label)
        self._state.update(len(data).to_bytes(8, "little") + data)

    def absorb(self, label: bytes, data: bytes) -> None:
        self._frame(label, data)
        self.absorbed.append(data)

    def absorb_scalar(self, label: bytes, s: Scalar) -> None:
        self.absorb(label, codec.encode_scalar(s))

    def absorb_scalars(self, label: bytes, scalars: Iterable[Scalar]) -> None:
        self.absorb(label, b"".join(codec.encode_scalar(s) for s in scalars))

    def absorb_int(self, label: bytes, n: int) -> None:
        self.absorb(label, n.to_bytes(8, "little", signed=False))

    def absorb_g1(self, label: bytes, pt: G1Point) -> None:
        self.absorb(label, codec.encode_g1(pt))

    def absorb_g2(self, label: bytes, pt: G2Point) -> None:
        self.absorb(label, codec.encode_g2(pt))

    def absorb_points(self, label: bytes, points: Iterable[tuple]) -> None:
        self.absorb(label, b"".join(codec.encode_point(pt) for pt in points))

    def absorb_gt(self, label: bytes, x: GtElem) -> None:
        self.absorb(label, codec.encode_gt(x))

    def challenge(self, label: bytes) -> Scalar:
        """Squeeze a scalar bound to everything absorbed so far and to `label`."""
        sponge = self._state.copy()
        sponge.update(len(label).to_bytes(4, "little") + b"challenge/" + label)
        out = sponge.digest(_CHALLENGE_BYTES)
        self.absorb(b"challenge/" + label, out)
        return int.from_bytes(out, "little") % P

    def challenge_nonzero(self, label: bytes) -> Scalar:
        """Like challenge() but never zero (used where the value is inverted)."""
        counter = 0
        while True:
            c = self.challenge(label if counter == 0 else label + b"/retry")
            if c:
                return c
            counter += 1

    def clone(self) -> "Transcript":
        twin = Transcript.__new__(Transcript)
        twin.label = self.label
        twin.absorbed = list(self.absorbed)
        twin._state = self._state.copy()
        return twin


def challenge(t: Transcript, label: bytes) -> Scalar:
    """Module-level form of Transcript.challenge."""
    return t.challenge(label)
