import sys

from bucketsort import bucketsort

CASES = {
    'small': (([3, 1, 2], 4), [1, 2, 3]),
    'dupes': (([2, 0, 2, 1], 3), [0, 1, 2, 2]),
    'empty': (([], 2), []),
    'single': (([1], 2), [1]),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = bucketsort(*args)
    if got != expected:
        print(f"bucketsort{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
