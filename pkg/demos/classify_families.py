"""Predicted behaviour for a few speed families.

For each speed the classifier reports whether flat sides move at once,
whether a cylindrical region (one flat direction) persists, and whether a
ridge persists.  The Gauss-curvature powers show the sharp threshold
alpha = n for cylinders.
"""
from curvflow.classifier import classify
from curvflow.speed_algebra import parse_speed

CASES = [("E(1)", 2, 1.0), ("quot(2,1)", 2, 1.0), ("named(norm_A)", 2, 1.0),
         ("E(2)", 2, 1.75), ("E(2)", 2, 2.25), ("E(3)", 3, 2.75), ("E(3)", 3, 3.25),
         ("pmean(-2)", 3, 1.0), ("named(example1)", 3, 1.0)]

print(f"{'speed':16s} {'n':>2s} {'alpha':>6s}  {'flat side':10s} {'cylinder':10s} {'ridge':10s} singular")
for text, n, alpha in CASES:
    rep = classify(parse_speed(text, n, alpha), count=300)
    p = rep["predictions"]
    flags = [k for k, v in p["singularities"].items() if v["flag"]]
    print(f"{text:16s} {n:2d} {alpha:6.2f}  {p['flat_side']['verdict']:10s} "
          f"{p['cylinder']['1']['verdict']:10s} {p['ridge']['verdict']:10s} {','.join(flags) or '-'}")
