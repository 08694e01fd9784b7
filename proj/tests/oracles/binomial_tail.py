"""Exact binomial-tail oracle for the repetition calculator.

tail(w, delta) = Pr[Bin(w, 1/2 + delta) <= floor(w/2)], evaluated with
exact rational arithmetic. Prints the minimal odd w per (delta, eps).
"""
from fractions import Fraction
from math import comb, log
import sys


def tail(w, delta):
    p = Fraction(1, 2) + Fraction(delta)
    q = 1 - p
    return sum(comb(w, k) * p**k * q**(w - k) for k in range(w // 2 + 1))


def minimal_w(delta, eps):
    eps = Fraction(eps)
    w = 1
    while tail(w, delta) > eps:
        w += 2
    return w


if __name__ == "__main__":
    cases = [(Fraction(1, 10), Fraction(1, 1000)), (Fraction(1, 4), Fraction(1, 20)),
             (Fraction(1, 2), Fraction(1, 1000)), (Fraction(3, 10), Fraction(1, 100)),
             (Fraction(1, 10), Fraction(1, 8000))]
    for d, e in cases:
        w = minimal_w(d, e)
        print(f"delta={float(d)} eps={float(e)} w={w} tail(w)={float(tail(w, d)):.6e}"
              f" tail(w-2)={float(tail(w - 2, d)) if w > 1 else 1.0:.6e}")
    if len(sys.argv) > 1 and sys.argv[1] == "grid":
        worst = 0.0
        for d in [Fraction(k, 100) for k in (5, 10, 15, 20, 25, 30, 35, 40, 45, 50)]:
            row = []
            for ex in range(1, 7):
                e = Fraction(1, 10**ex)
                w = minimal_w(d, e)
                row.append(w)
                worst = max(worst, w * float(d)**2 / log(10**ex))
            print(float(d), row)
        print("max w*delta^2/ln(1/eps) =", worst)
