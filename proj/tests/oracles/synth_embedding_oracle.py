"""Independent reference for the synthetic hash embedding.

Prints vectors with 17 significant digits so the C++ tests can freeze them.
"""
import math
import struct
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def embed(text: str, d: int, seed: int):
    acc = [0.0] * d
    for tok in text.split():  # str.split() splits on Unicode whitespace
        for j in range(d):
            h = fnv1a64(tok.encode("utf-8") + struct.pack("<Q", j) + struct.pack("<Q", seed))
            acc[j] += (h % (1 << 53)) / float(1 << 53) * 2.0 - 1.0
    norm = math.sqrt(sum(x * x for x in acc))
    if norm == 0.0:
        out = [0.0] * d
        out[0] = 1.0
        return out
    return [x / norm for x in acc]


if __name__ == "__main__":
    d = int(sys.argv[1]); seed = int(sys.argv[2]); text = sys.argv[3]
    print(",".join(f"{x:.17g}" for x in embed(text, d, seed)))
