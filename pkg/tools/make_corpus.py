"""Regenerate the bundled corpus under src/mcts_repair/corpus.

Each entry is a small buggy program, per-test runner, scripted model fixture
and expected outcome. Run from anywhere: ``python3 tools/make_corpus.py``.
"""

import json
import textwrap
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "src" / "mcts_repair" / "corpus"

def entry(name, prog_name, prog, tests_src, region, reference, test_ids, fixture, expected, timeout=5):
    d = ROOT / name
    ws = d / "workspace"
    ws.mkdir(parents=True, exist_ok=True)
    (ws / f"{prog_name}.py").write_text(textwrap.dedent(prog).lstrip("\n"))
    (ws / "tests.py").write_text(textwrap.dedent(tests_src).lstrip("\n"))
    bugspec = {
        "bug_id": name,
        "workspace_root": "workspace",
        "buggy_file": f"{prog_name}.py",
        "buggy_region": list(region),
        "build_command": {"command": f"{{python}} -S -m py_compile {prog_name}.py", "timeout": 10},
        "test_command": {"command": "{python} -S tests.py {test}", "timeout": timeout},
        "test_cases": [{"test_id": t, "invocation": t} for t in test_ids],
        "reference_patch": reference,
    }
    (d / "bugspec.json").write_text(json.dumps(bugspec, indent=2) + "\n")
    (d / "fixture.json").write_text(json.dumps(fixture, indent=2) + "\n")
    (d / "expected.json").write_text(json.dumps(expected, indent=2) + "\n")

RUNNER = '''
if __name__ == "__main__":
    name = sys.argv[1]
    args, expected = CASES[name]
    got = {fn}(*args)
    if got != expected:
        print(f"{fn}{{args!r}}: expected {{expected!r}}, got {{got!r}}")
        sys.exit(1)
'''

def tests(fn, cases):
    body = f"import sys\n\nfrom {fn} import {fn}\n\nCASES = {{\n"
    for k, (args, exp) in cases.items():
        body += f"    {k!r}: ({args!r}, {exp!r}),\n"
    body += "}\n" + RUNNER.format(fn=fn)
    return body

def gen(cot, draft, reflection="The patch handles the failing cases.", final=None):
    return {"cot": cot, "draft": draft, "reflection": reflection, "final": final}

# 1. gcd: fixed on the first expansion of the root
entry(
    "quix-gcd", "gcd",
    """
    def gcd(a, b):
        if b == 0:
            return a
        else:
            return gcd(a % b, b)
    """,
    tests("gcd", {"coprime": ((17, 5), 1), "common": ((35, 21), 7), "zero": ((13, 0), 13), "equal": ((9, 9), 9)}),
    (5, 5), "        return gcd(b, a % b)", ["coprime", "common", "zero", "equal"],
    {"generations": {"quix-gcd/0/0": gen(
        "The recursion keeps b fixed, so it never reaches the base case. Euclid's step swaps the arguments: gcd(b, a % b).",
        "        return gcd(b, a % b)")},
     "judge": {"        return gcd(b, a % b)": [95, 90, 100, 95, 90]}},
    {"plausible_within": 16, "exact_match": True},
)

# 2. parenthesization: partial patch first, refined on the next expansion
entry(
    "quix-paren", "is_valid_parenthesization",
    """
    def is_valid_parenthesization(parens):
        depth = 0
        for paren in parens:
            if paren == '(':
                depth += 1
            else:
                depth -= 1
                if depth < 0:
                    return False

        return True
    """,
    tests("is_valid_parenthesization", {
        "flat": (("()()",), True), "nested": (("(())",), True), "unclosed": (("((",), False),
        "unopened": (("())",), False), "open_one": (("(()",), False)}),
    (11, 11), "    return depth == 0", ["flat", "nested", "unclosed", "unopened", "open_one"],
    {"generations": {
        "quix-paren/0/0": gen("Unclosed parentheses leave depth at one, so reject that case.", "    return depth != 1"),
        "quix-paren/1/0": gen("The partial patch still accepts '((' because depth is 2. Every opened parenthesis must be closed, so depth must be zero.", "    return depth == 0"),
     },
     "judge": {"    return depth != 1": [60, 55, 65, 60, 60], "    return depth == 0": [95, 95, 90, 100, 95]}},
    {"plausible_within": 16, "exact_match": True},
)

# 3. max sublist sum: reflection repairs a wrong draft; fix differs textually from the reference
entry(
    "quix-max-sublist-sum", "max_sublist_sum",
    """
    def max_sublist_sum(arr):
        max_ending_here = 0
        max_so_far = 0

        for x in arr:
            max_ending_here = max_ending_here + x
            max_so_far = max(max_so_far, max_ending_here)

        return max_so_far
    """,
    tests("max_sublist_sum", {
        "all_positive": (([1, 2, 3],), 6), "negative_prefix": (([-5, 4, 6],), 10),
        "dip": (([4, -10, 3, 4],), 7), "all_negative": (([-1, -2],), 0)}),
    (6, 6), "        max_ending_here = max(0, max_ending_here + x)", ["all_positive", "negative_prefix", "dip", "all_negative"],
    {"generations": {"quix-max-sublist-sum/0/0": gen(
        "A running sum that went negative must be dropped.",
        "        max_ending_here = max(x, max_ending_here)",
        "The draft never accumulates the sum. The running sum should restart at zero once it becomes negative.",
        "        max_ending_here = max(max_ending_here + x, 0)")},
     "judge": {"        max_ending_here = max(max_ending_here + x, 0)": [90, 85, 95, 90, 90]}},
    {"plausible_within": 16, "exact_match": False},
)

# 4. sieve: twelve tests, so the pass rate is the reward
sieve_cases = {f"upto_{n}": ((n,), [p for p in range(2, n + 1) if all(p % q for q in range(2, p))])
               for n in (0, 1, 2, 3, 4, 5, 10, 13, 20, 30, 50, 100)}
entry(
    "quix-sieve", "sieve",
    """
    def sieve(max):
        primes = []
        for n in range(2, max + 1):
            if any(n % p > 0 for p in primes):
                primes.append(n)
        return primes
    """,
    tests("sieve", sieve_cases),
    (4, 4), "        if all(n % p > 0 for p in primes):", list(sieve_cases),
    {"generations": {
        "quix-sieve/0/0": gen("With no primes yet any() is false, so nothing is ever added. Seed the list when it is empty.",
                              "        if not primes or any(n % p > 0 for p in primes):"),
        "quix-sieve/1/0": gen("Composites still pass because any() only needs one non-divisor. A prime has no divisor among all earlier primes.",
                              "        if all(n % p > 0 for p in primes):"),
    }},
    {"plausible_within": 16, "exact_match": True},
)

# 5. pascal: first candidate repeats the buggy line (halved reward), fix follows
pascal_rows = [[1]]
for r in range(1, 10):
    pascal_rows.append([(pascal_rows[r-1][c-1] if c > 0 else 0) + (pascal_rows[r-1][c] if c < r else 0) for c in range(r + 1)])
pascal_cases = {f"rows_{n}": ((n,), pascal_rows[:n]) for n in range(1, 11)}
entry(
    "quix-pascal", "pascal",
    """
    def pascal(n):
        rows = [[1]]
        for r in range(1, n):
            row = []
            for c in range(0, r):
                upleft = rows[r - 1][c - 1] if c > 0 else 0
                upright = rows[r - 1][c] if c < r else 0
                row.append(upleft + upright)
            rows.append(row)
        return rows
    """,
    tests("pascal", pascal_cases),
    (5, 5), "        for c in range(0, r + 1):", list(pascal_cases),
    {"generations": {
        "quix-pascal/0/0": gen("The loop bounds look right to me.", "        for c in range(0, r):"),
        "quix-pascal/1/0": gen("Row r has r + 1 entries, but the loop builds only r of them.", "        for c in range(0, r + 1):"),
    }},
    {"plausible_within": 16, "exact_match": True},
)

# 6. find_first_in_sorted: a high-scoring lure corridor next to the true fix
LURE = "    while lo < hi - 1:"
FIX_FIRST = "    while lo < hi:"
by_parent = {"    while lo <= hi:": [
    gen("hi starts one past the end, so mid can run off the array. Stop one step earlier.", LURE),
    gen("hi is exclusive, so the search interval is empty once lo reaches hi.", FIX_FIRST),
]}
judge = {LURE: [90, 90, 85, 95, 90], FIX_FIRST: [95, 90, 95, 95, 90]}
def lure(text, depth):
    if depth == 3:
        by_parent[text] = [gen("Drop the colon to make the bound explicit.", text.replace(":", "", 1) + f" and {k}") for k in range(3)]
        return
    kids = [f"{text.split('  #')[0]}  # bound {depth}.{k}" if depth == 1 else f"{text}.{k}" for k in range(3)]
    by_parent[text] = [gen("The bound is still slightly off; adjust it.", kid) for kid in kids]
    for kid in kids:
        judge[kid] = [90 - 2 * depth] * 5
        lure(kid, depth + 1)
lure(LURE, 1)
entry(
    "quix-find-first", "find_first_in_sorted",
    """
    def find_first_in_sorted(arr, x):
        lo = 0
        hi = len(arr)

        while lo <= hi:
            mid = (lo + hi) // 2

            if x == arr[mid] and (mid == 0 or x != arr[mid - 1]):
                return mid

            elif x <= arr[mid]:
                hi = mid

            else:
                lo = mid + 1

        return -1
    """,
    tests("find_first_in_sorted", {
        "present_first": (([1, 2, 2, 3], 2), 1), "absent_high": (([1, 2, 3], 5), -1),
        "present_last": (([1, 2, 3], 3), 2), "empty": (([], 1), -1)}),
    (5, 5), FIX_FIRST, ["present_first", "absent_high", "present_last", "empty"],
    {"by_parent": by_parent, "judge": judge},
    {"plausible_within": 16, "exact_match": True},
)

# 7. to_base: first candidate does not compile
entry(
    "quix-to-base", "to_base",
    """
    import string


    def to_base(num, b):
        result = ''
        alphabet = string.digits + string.ascii_uppercase
        while num > 0:
            i = num % b
            num = num // b
            result = result + alphabet[i]
        return result
    """,
    tests("to_base", {"hex": ((31, 16), "1F"), "binary": ((8, 2), "1000"), "palindrome": ((5, 2), "101"), "decimal": ((10, 10), "10")}),
    (10, 10), "        result = alphabet[i] + result", ["hex", "binary", "palindrome", "decimal"],
    {"generations": {
        "quix-to-base/0/0": gen("Digits come out least significant first; prepend them.", "        result = alphabet[i] +"),
        "quix-to-base/0/1": gen("Digits come out least significant first, so each new digit goes in front.", "        result = alphabet[i] + result"),
     },
     "judge": {"        result = alphabet[i] + result": [95, 95, 95, 95, 95]}},
    {"plausible_within": 16, "exact_match": True},
)

# 8. bucketsort: only reachable after sixteen candidates
WRONG_BUCKET = "    for i, count in enumerate(sorted(arr)):"
FIX_BUCKET = "    for i, count in enumerate(counts):"
late = {f"quix-bucketsort/{p}/{e}": gen("The second loop must walk the histogram, not the input.", FIX_BUCKET)
        for p in range(16, 40) for e in range(3)}
late["quix-bucketsort/*"] = gen("Maybe the input has to be sorted first.", WRONG_BUCKET)
entry(
    "quix-bucketsort", "bucketsort",
    """
    def bucketsort(arr, k):
        counts = [0] * k
        for x in arr:
            counts[x] += 1

        sorted_arr = []
        for i, count in enumerate(arr):
            sorted_arr.extend([i] * count)

        return sorted_arr
    """,
    tests("bucketsort", {"small": (([3, 1, 2], 4), [1, 2, 3]), "dupes": (([2, 0, 2, 1], 3), [0, 1, 2, 2]),
                         "empty": (([], 2), []), "single": (([1], 2), [1])}),
    (7, 7), FIX_BUCKET, ["small", "dupes", "empty", "single"],
    {"generations": late, "judge": {WRONG_BUCKET: [35, 30, 30, 35, 30], FIX_BUCKET: [90, 90, 90, 90, 90]}},
    {"plausible_within": 32, "exact_match": True},
)

# 9. get_factors: the scripted model never finds the fix
entry(
    "quix-get-factors", "get_factors",
    """
    def get_factors(n):
        if n == 1:
            return []

        for i in range(2, int(n ** 0.5) + 1):
            if n % i == 0:
                return [i] + get_factors(n // i)

        return []
    """,
    tests("get_factors", {"one": ((1,), []), "prime": ((13,), [13]), "composite": ((12,), [2, 2, 3]), "square": ((49,), [7, 7])}),
    (9, 9), "    return [n]", ["one", "prime", "composite", "square"],
    {"generations": {
        "quix-get-factors/0/0": gen("The remaining n is prime.", "    return n"),
        "quix-get-factors/*": gen("Return a factor list for the remainder.", "    return [1]"),
     },
     "judge": {"    return n": [30, 30, 30, 30, 30], "    return [1]": [40, 40, 40, 40, 40]}},
    {"plausible_within": None, "exact_match": False},
)
print("ok")
