#!/usr/bin/env python3
"""Reference fuzzy pipeline, kept independent of the C++ implementation.

Pipeline pinned here and mirrored by the library:
  * three input variables (reliability, relevance, engagement), each with a
    Ruspini triangular partition Low=tri(0,0,.5) Med=tri(0,.5,1) High=tri(.5,1,1)
  * output variable "decision" with the same shapes, terms
    Deny-leaning / Cautious / Grant-leaning
  * 27-rule table generated by level sum (Low=0, Med=1, High=2):
      sum <= 2 -> Deny-leaning, 3..4 -> Cautious, >= 5 -> Grant-leaning
  * rule strength = PRODUCT of antecedent memberships
  * implication scales the consequent term by the rule strength; aggregation
    adds the scaled terms across all rules (additive inference)
  * centroid on the grid x_i = i/1000: DS = sum(x*mu) / sum(mu)

Why product/scale/sum instead of min/clip/max: with Ruspini partitions the
product weights of the 27 rules sum to exactly 1 for any input, so raising a
factor moves consequent mass monotonically from Deny-leaning toward
Grant-leaning and the centroid can only rise.  min/clip/max is not monotone
with these partitions -- e.g. DS(0.25,0,0) ~ 0.1944 > DS(0.30,0,0) ~ 0.1857
because the max of the two active Deny-leaning clips dips mid-cell -- and
min with bounded-sum accumulation fails too (DS drops ~0.022 stepping
engagement 0.95 -> 1.00 at reliability=relevance=0.05).  The additive form
keeps the aggregate a genuine membership curve: sum_t Q_t * mu_t(x) <= 1.

Emits golden files under tests/golden/ when run directly.
"""

import os


def tri(a, b, c):
    def mu(x):
        if x < a or x > c:
            return 0.0
        if x == b:
            return 1.0
        if x < b:
            return (x - a) / (b - a)
        return (c - x) / (c - b)
    return mu


TERMS = {"Low": tri(0.0, 0.0, 0.5), "Medium": tri(0.0, 0.5, 1.0), "High": tri(0.5, 1.0, 1.0)}
OUT_TERMS = {
    "Deny-leaning": tri(0.0, 0.0, 0.5),
    "Cautious": tri(0.0, 0.5, 1.0),
    "Grant-leaning": tri(0.5, 1.0, 1.0),
}
LEVEL = {"Low": 0, "Medium": 1, "High": 2}
TERM_NAMES = ["Low", "Medium", "High"]
OUT_NAMES = ["Deny-leaning", "Cautious", "Grant-leaning"]


def consequent(levels_sum):
    if levels_sum <= 2:
        return "Deny-leaning"
    if levels_sum <= 4:
        return "Cautious"
    return "Grant-leaning"


RULES = [
    ((t1, t2, t3), consequent(LEVEL[t1] + LEVEL[t2] + LEVEL[t3]))
    for t1 in TERM_NAMES for t2 in TERM_NAMES for t3 in TERM_NAMES
]


def fuzzify(x):
    if x < 0.0 or x > 1.0:
        raise ValueError("out of domain")
    return {name: TERMS[name](x) for name in TERM_NAMES}


def infer(reliability, relevance, engagement):
    """Aggregated output curve on the 1e-3 grid (additive, product AND)."""
    m = [fuzzify(reliability), fuzzify(relevance), fuzzify(engagement)]
    mass = {name: 0.0 for name in OUT_NAMES}
    for (t1, t2, t3), cons in RULES:
        mass[cons] += m[0][t1] * m[1][t2] * m[2][t3]
    curve = []
    for i in range(1001):
        x = i / 1000.0
        curve.append(sum(mass[t] * OUT_TERMS[t](x) for t in OUT_NAMES))
    return curve


def centroid_grid(curve, n=1000):
    num = 0.0
    den = 0.0
    for i, mu in enumerate(curve):
        num += (i / float(n)) * mu
        den += mu
    if den == 0.0:
        raise ValueError("empty aggregate")
    return num / den


def compute_ds(reliability, relevance, engagement):
    return centroid_grid(infer(reliability, relevance, engagement))


def centroid_trapezoid(fn, n):
    """Trapezoidal integration centroid of an analytic curve at grid 1/n."""
    num = 0.0
    den = 0.0
    for i in range(n + 1):
        x = i / float(n)
        w = 0.5 if i in (0, n) else 1.0
        mu = fn(x)
        num += w * x * mu
        den += w * mu
    return num / den


# splitmix64, the same generator the benchmark harness uses, so a seed listed
# in a golden file pins an identical triple sequence in both languages.
class SplitMix64:
    MASK = (1 << 64) - 1

    def __init__(self, seed):
        self.state = seed & self.MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def next_unit(self):
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)


FIXTURE_CURVES = [
    # (name, [(scale, a, b, c), ...]); breakpoints are multiples of 1e-3 and
    # every curve vanishes at x=0 and x=1, so the grid-sum centroid and a
    # trapezoidal integral agree to rounding error.
    ("lone_triangle", [(0.8, 0.1, 0.4, 0.7)]),
    ("twin_peaks", [(0.5, 0.05, 0.25, 0.45), (0.45, 0.5, 0.75, 0.95)]),
    ("right_lean", [(0.3, 0.0, 0.3, 0.6), (0.6, 0.4, 0.8, 1.0)]),
    ("narrow_spike", [(1.0, 0.49, 0.5, 0.51)]),
    ("broad_plus_spike", [(0.2, 0.02, 0.5, 0.98), (0.7, 0.6, 0.62, 0.64)]),
]


def fixture_fn(parts):
    def fn(x):
        return sum(s * tri(a, b, c)(x) for s, a, b, c in parts)
    return fn


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    golden = os.path.join(here, "..", "golden")
    os.makedirs(golden, exist_ok=True)

    triples = [
        (0.5, 0.0, 0.0),     # empty-history factors
        (0.0, 0.0, 0.0),
        (1.0, 1.0, 1.0),
        (0.25, 0.25, 0.25),
        (0.5, 0.5, 0.5),
        (0.9167, 0.6, 0.1813),
        (0.25, 0.0, 0.0),
        (0.75, 0.75, 0.75),
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.5),
    ]
    rng = SplitMix64(0x1BAC5EED)
    for _ in range(15):
        triples.append((rng.next_unit(), rng.next_unit(), rng.next_unit()))

    with open(os.path.join(golden, "fuzzy_ds.txt"), "w") as f:
        f.write("# reliability relevance engagement ds (grid 1e-3)\n")
        for r, c, e in triples:
            f.write("%.17g %.17g %.17g %.17g\n" % (r, c, e, compute_ds(r, c, e)))

    with open(os.path.join(golden, "centroid_fixtures.txt"), "w") as f:
        f.write("# name num_parts {scale a b c}* grid_ds trapezoid_1e-5_ds\n")
        for name, parts in FIXTURE_CURVES:
            fn = fixture_fn(parts)
            grid_ds = centroid_grid([fn(i / 1000.0) for i in range(1001)])
            trap_ds = centroid_trapezoid(fn, 100000)
            cols = [name, str(len(parts))]
            for s, a, b, c in parts:
                cols += ["%.17g" % v for v in (s, a, b, c)]
            cols += ["%.17g" % grid_ds, "%.17g" % trap_ds]
            f.write(" ".join(cols) + "\n")

    print("empty-history ds = %.12f" % compute_ds(0.5, 0.0, 0.0))
    print("boundary ds(0.25,0.25,0.25) = %.12f" % compute_ds(0.25, 0.25, 0.25))
    print("ds(1,1,1) = %.12f" % compute_ds(1.0, 1.0, 1.0))


if __name__ == "__main__":
    main()
