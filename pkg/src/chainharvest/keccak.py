"""Keccak-256, the hash used by Ethereum for block/tx hashes and selectors.

This is the original Keccak submission with multi-rate padding (domain
byte 0x01), not the finalized SHA-3 standard (0x06) - hashlib.sha3_256
produces different digests and cannot be substituted.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A,
    0x8000000080008000, 0x000000000000808B, 0x0000000080000001,
    0x8000000080008081, 0x8000000000008009, 0x000000000000008A,
    0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089,
    0x8000000000008003, 0x8000000000008002, 0x8000000000000080,
    0x000000000000800A, 0x800000008000000A, 0x8000000080008081,
    0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# Rotation offsets and lane permutation for the combined rho+pi step,
# in the order the state is walked (starting from lane 1).
_ROTATIONS = (1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14,
              27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44)
_PI_LANES = (10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4,
             15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1)

_RATE_BYTES = 136  # 1088-bit rate / 512-bit capacity


def _keccak_f(lanes: list[int]) -> None:
    """Apply keccak-f[1600] in place; lanes is 25 little-endian 64-bit words."""
    for rc in _ROUND_CONSTANTS:
        # theta
        bc = [lanes[x] ^ lanes[x + 5] ^ lanes[x + 10] ^ lanes[x + 15] ^ lanes[x + 20]
              for x in range(5)]
        for x in range(5):
            d = bc[(x + 4) % 5] ^ (((bc[(x + 1) % 5] << 1) | (bc[(x + 1) % 5] >> 63)) & _MASK64)
            for y in range(0, 25, 5):
                lanes[y + x] ^= d
        # rho + pi
        t = lanes[1]
        for i in range(24):
            j = _PI_LANES[i]
            r = _ROTATIONS[i]
            lanes[j], t = ((t << r) | (t >> (64 - r))) & _MASK64, lanes[j]
        # chi
        for y in range(0, 25, 5):
            row = lanes[y:y + 5]
            for x in range(5):
                lanes[y + x] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5])
        # iota
        lanes[0] ^= rc


def keccak_256(data: bytes) -> bytes:
    """Return the 32-byte Keccak-256 digest of ``data``."""
    lanes = [0] * 25
    offset = 0
    length = len(data)
    while length - offset >= _RATE_BYTES:
        for i in range(17):
            lanes[i] ^= int.from_bytes(data[offset + 8 * i:offset + 8 * i + 8], "little")
        _keccak_f(lanes)
        offset += _RATE_BYTES
    # Final block: pad10*1 with the Keccak domain byte 0x01.
    block = bytearray(data[offset:])
    block.append(0x01)
    block.extend(b"\x00" * (_RATE_BYTES - len(block)))
    block[-1] ^= 0x80
    for i in range(17):
        lanes[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
    _keccak_f(lanes)
    return b"".join(lanes[i].to_bytes(8, "little") for i in range(4))
