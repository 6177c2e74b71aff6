import sys

from max_sublist_sum import max_sublist_sum

CASES = {
    'all_positive': (([1, 2, 3],), 6),
    'negative_prefix': (([-5, 4, 6],), 10),
    'dip': (([4, -10, 3, 4],), 7),
    'all_negative': (([-1, -2],), 0),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = max_sublist_sum(*args)
    if got != expected:
        print(f"max_sublist_sum{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
