import sys

from is_valid_parenthesization import is_valid_parenthesization

CASES = {
    'flat': (('()()',), True),
    'nested': (('(())',), True),
    'unclosed': (('((',), False),
    'unopened': (('())',), False),
    'open_one': (('(()',), False),
}

if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = is_valid_parenthesization(*args)
    if got != expected:
        print(f"is_valid_parenthesization{args!r}: expected {expected!r}, got {got!r}")
        sys.exit(1)
