import sys

from pascal import pascal

CASES = {
    'rows_1': ((1,), [[1]]),
    'rows_2': ((2,), [[1], [1, 1]]),
    'rows_3': ((3,), [[1], [1, 1], [1, 2, 1]]),
    'rows_4': ((4,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]),
    'rows_5': ((5,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1]]),
    'rows_6': ((6,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1], [1, 5, 10, 10, 5, 1]]),
    'rows_7': ((7,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1], [1, 5, 10, 10, 5, 1], [1, 6, 15, 20, 15, 6, 1]]),
    'rows_8': ((8,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1], [1, 5, 10, 10, 5, 1], [1, 6, 15, 20, 15, 6, 1], [1, 7, 21, 35, 35, 21, 7, 1]]),
    'rows_9': ((9,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1], [1, 5, 10, 10, 5, 1], [1, 6, 15, 20, 15, 6, 1], [1, 7, 21, 35, 35, 21, 7, 1], [1, 8, 28, 56, 70, 56, 28, 8, 1]]),
    'rows_10': ((10,), [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1], [1, 5, 10, 10, 5, 1], [1, 6, 15, 20, 15, 6, 1], [1, 7, 21, 35, 35, 21, 7, 1], [1, 8, 28, 56, 70, 56, 28, 8, 1], [1, 9, 36, 84, 126, 126, 84, 36, 9, 1]]),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = pascal(*args)
    if got != expected:
        print(f"pascal{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
