import sys

from get_factors import get_factors

CASES = {
    'one': ((1,), []),
    'prime': ((13,), [13]),
    'composite': ((12,), [2, 2, 3]),
    'square': ((49,), [7, 7]),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = get_factors(*args)
    if got != expected:
        print(f"get_factors{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
