"""Brute-force evaluation of the trivial pirate-game win probability for the
skewed three-circuit test spec: enumerate every circuit, every challenge pair
and every candidate answer b, and take the best freeloader marginal."""
from fractions import Fraction as F
from itertools import product


def c1(x):
    return (int(x == 0x5A), int(x == 0xA5))


def c2(x):
    return (int(x == 0x0F), 0)


def c3(x):
    return ((x >> 1) & 1, x & 1)


spec = [
    (F(1, 2), c1, [((0x5A, 0xA5), F(2, 5)), ((0xA5, 0x00), F(3, 10)), ((0x00, 0x00), F(3, 10))]),
    (F(3, 10), c2, [((0x0F, 0x0F), F(1, 2)), ((0x0F, 0x10), F(1, 4)), ((0x11, 0x0F), F(1, 4))]),
    (F(1, 5), c3, [((0x01, 0x02), F(1, 2)), ((0x03, 0x03), F(1, 2))]),
]

best = F(0)
for i in (0, 1):
    for b in product((0, 1), repeat=2):
        mass = F(0)
        for weight, circuit, pairs in spec:
            for xs, pw in pairs:
                if circuit(xs[i]) == b:
                    mass += weight * pw
        print(f"freeloader {i + 1} answer {b}: {mass} = {float(mass)}")
        best = max(best, mass)
print("p_triv =", best, float(best))
