import sys

from to_base import to_base

CASES = {
    'hex': ((31, 16), '1F'),
    'binary': ((8, 2), '1000'),
    'palindrome': ((5, 2), '101'),
    'decimal': ((10, 10), '10'),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = to_base(*args)
    if got != expected:
        print(f"to_base{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
