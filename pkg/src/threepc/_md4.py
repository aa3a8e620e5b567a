"""MD4 (RFC 1320), needed for NTLM; OpenSSL 3 no longer ships it."""

from __future__ import annotations

import struct

_MASK = 0xFFFFFFFF
_S1 = (3, 7, 11, 19)
_S2 = (3, 5, 9, 13)
_S3 = (3, 9, 11, 15)
_K2 = (0, 4, 8, 12, 1, 5, 9, 13, 2, 6, 10, 14, 3, 7, 11, 15)
_K3 = (0, 8, 4, 12, 2, 10, 6, 14, 1, 9, 5, 13, 3, 11, 7, 15)


def md4(message: bytes) -> bytes:
    a, b, c, d = 0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476
    bit_len = len(message) * 8
    message += b"\x80" + b"\x00" * (-(len(message) + 9) % 64)
    message += struct.pack("<Q", bit_len)

    for off in range(0, len(message), 64):
        x = struct.unpack_from("<16I", message, off)
        aa, bb, cc, dd = a, b, c, d

        for n in range(16):
            s = _S1[n & 3]
            if n & 3 == 0:
                t = (a + ((b & c) | (~b & d)) + x[n]) & _MASK
                a = ((t << s) | (t >> (32 - s))) & _MASK
            elif n & 3 == 1:
                t = (d + ((a & b) | (~a & c)) + x[n]) & _MASK
                d = ((t << s) | (t >> (32 - s))) & _MASK
            elif n & 3 == 2:
                t = (c + ((d & a) | (~d & b)) + x[n]) & _MASK
                c = ((t << s) | (t >> (32 - s))) & _MASK
            else:
                t = (b + ((c & d) | (~c & a)) + x[n]) & _MASK
                b = ((t << s) | (t >> (32 - s))) & _MASK

        for n in range(16):
            k, s = _K2[n], _S2[n & 3]
            if n & 3 == 0:
                t = (a + ((b & c) | (b & d) | (c & d)) + x[k] + 0x5A827999) & _MASK
                a = ((t << s) | (t >> (32 - s))) & _MASK
            elif n & 3 == 1:
                t = (d + ((a & b) | (a & c) | (b & c)) + x[k] + 0x5A827999) & _MASK
                d = ((t << s) | (t >> (32 - s))) & _MASK
            elif n & 3 == 2:
                t = (c + ((d & a) | (d & b) | (a & b)) + x[k] + 0x5A827999) & _MASK
                c = ((t << s) | (t >> (32 - s))) & _MASK
            else:
                t = (b + ((c & d) | (c & a) | (d & a)) + x[k] + 0x5A827999) & _MASK
                b = ((t << s) | (t >> (32 - s))) & _MASK

        for n in range(16):
            k, s = _K3[n], _S3[n & 3]
            if n & 3 == 0:
                t = (a + (b ^ c ^ d) + x[k] + 0x6ED9EBA1) & _MASK
                a = ((t << s) | (t >> (32 - s))) & _MASK
            elif n & 3 == 1:
                t = (d + (a ^ b ^ c) + x[k] + 0x6ED9EBA1) & _MASK
                d = ((t << s) | (t >> (32 - s))) & _MASK
            elif n & 3 == 2:
                t = (c + (d ^ a ^ b) + x[k] + 0x6ED9EBA1) & _MASK
                c = ((t << s) | (t >> (32 - s))) & _MASK
            else:
                t = (b + (c ^ d ^ a) + x[k] + 0x6ED9EBA1) & _MASK
                b = ((t << s) | (t >> (32 - s))) & _MASK

        a = (a + aa) & _MASK
        b = (b + bb) & _MASK
        c = (c + cc) & _MASK
        d = (d + dd) & _MASK

    return struct.pack("<4I", a, b, c, d)
