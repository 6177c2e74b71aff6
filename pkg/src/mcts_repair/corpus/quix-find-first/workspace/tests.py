import sys

from find_first_in_sorted import find_first_in_sorted

CASES = {
    'present_first': (([1, 2, 2, 3], 2), 1),
    'absent_high': (([1, 2, 3], 5), -1),
    'present_last': (([1, 2, 3], 3), 2),
    'empty': (([], 1), -1),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = find_first_in_sorted(*args)
    if got != expected:
        print(f"find_first_in_sorted{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
