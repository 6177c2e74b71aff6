import sys

from sieve import sieve

CASES = {
    'upto_0': ((0,), []),
    'upto_1': ((1,), []),
    'upto_2': ((2,), [2]),
    'upto_3': ((3,), [2, 3]),
    'upto_4': ((4,), [2, 3]),
    'upto_5': ((5,), [2, 3, 5]),
    'upto_10': ((10,), [2, 3, 5, 7]),
    'upto_13': ((13,), [2, 3, 5, 7, 11, 13]),
    'upto_20': ((20,), [2, 3, 5, 7, 11, 13, 17, 19]),
    'upto_30': ((30,), [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]),
    'upto_50': ((50,), [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]),
    'upto_100': ((100,), [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = sieve(*args)
    if got != expected:
        print(f"sieve{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
