import sys

from gcd import gcd

CASES = {
    'coprime': ((17, 5), 1),
    'common': ((35, 21), 7),
    'zero': ((13, 0), 13),
    'equal': ((9, 9), 9),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = gcd(*args)
    if got != expected:
        print(f"gcd{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
