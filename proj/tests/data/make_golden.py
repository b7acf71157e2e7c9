# Writes golden.erp1 with struct (independent of the C++ writer) and prints
# the FNV-1a 64 checksum the tests compare against.
import struct

H, W, B = 3, 5, 2
CELL, T = 0x0102030405060708, 12.5


def sample(b, y, x):
    return ((y * W + x) * 7 + b * 3) % 17 / 16.0


data = b"ERP1" + struct.pack("<IIIQd", H, W, B, CELL, T)
for b in range(B):
    for y in range(H):
        for x in range(W):
            data += struct.pack("<f", sample(b, y, x))

with open("golden.erp1", "wb") as f:
    f.write(data)

h = 0xCBF29CE484222325
for byte in data:
    h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
print(len(data), hex(h))
