#!/usr/bin/env python3
"""O(n^2) Gini from the pairwise definition, on pinned inputs.

G = sum_i sum_j |x_i - x_j| / (2 n^2 mean).  Random inputs come from a
hand-rolled LCG so the oracle shares no code (and no RNG) with the package.
Printed values are frozen into tests/test_analysis.py.
"""


def gini_pairwise(values):
    n = len(values)
    total = sum(values)
    diff = sum(abs(a - b) for a in values for b in values)
    return diff / (2.0 * n * n * (total / n))


def lcg(seed):
    state = seed
    while True:
        state = (6364136223846793005 * state + 1442695040888963407) % 2**64
        yield state >> 11


def sample(seed, n, span):
    gen = lcg(seed)
    return [next(gen) % span for _ in range(n)]


def main():
    print("gini([1,2,3,4,5]) =", gini_pairwise([1, 2, 3, 4, 5]))
    for seed, n, span in [(1, 40, 1000), (2, 100, 50), (3, 257, 10**6)]:
        values = [v + 1 for v in sample(seed, n, span)]   # keep positive
        print("gini(lcg seed=%d n=%d span=%d) = %.15f"
              % (seed, n, span, gini_pairwise(values)))


if __name__ == "__main__":
    main()
