#!/usr/bin/env python3
"""Smoke test for the credal_py extension module.

Builds nothing itself: it locates the cdylib produced by
`cargo build -p credal-py` (release preferred), copies it next to a temp
directory under the importable name, and exercises the bound API against
hand-computed values.
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libcredal_py.so",
        ROOT / "target" / "debug" / "libcredal_py.so",
        ROOT / "target" / "release" / "libcredal_py.dylib",
        ROOT / "target" / "debug" / "libcredal_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "credal_py library not found; run `cargo build -p credal-py` first"
        )
    staging = pathlib.Path(tempfile.mkdtemp(prefix="credal_py_"))
    suffix = ".so" if built.suffix == ".so" else ".so"
    shutil.copy2(built, staging / f"credal_py{suffix}")
    sys.path.insert(0, str(staging))
    import credal_py

    return credal_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) < tol, f"{a} != {b} (tol {tol})"


def main():
    credal = load_module()

    # entropy and highest-density sets
    approx(credal.shannon_entropy([0.5, 0.25, 0.25]), 1.5)
    approx(credal.shannon_entropy([1.0, 0.0, 0.0]), 0.0)
    assert credal.highest_density_set([0.6, 0.3, 0.1], 0.1) == [0, 1]
    assert credal.highest_density_set([0.4, 0.4, 0.2], 0.5) == [0, 1]

    # plausibility score
    approx(credal.plausibility_score([0.7, 0.2, 0.1], [0.5, 0.3, 0.2]), 0.43)

    # calibration quantile: scores 0.1..0.9, alpha 0.1 -> smallest
    model = [[s, 1.0 - s] for s in (0.1 * i for i in range(1, 10))]
    lam = [[1.0, 0.0]] * 9
    cal = credal.calibrate(model, lam, 0.1)
    assert cal.n == 9
    assert cal.quantile_index == 1
    approx(cal.tau, 0.1)

    # underflow maps to the vacuous region
    vac = credal.calibrate(model, lam, 0.05)
    assert vac.tau == float("-inf")

    # the worked 3-class region
    region = credal.Region([0.7, 0.2, 0.1], 0.25)
    assert region.contains([0.5, 0.3, 0.2])
    assert not region.contains([0.0, 1.0, 0.0])
    lower, upper = region.envelope()
    for got, want in zip(lower, [0.1, 0.0, 0.0]):
        approx(got, want)
    for got, want in zip(upper, [1.0, 0.9, 0.75]):
        approx(got, want)

    vertices = sorted(tuple(round(x, 9) for x in v) for v in region.extreme_points())
    assert vertices == sorted(
        [(1.0, 0.0, 0.0), (0.1, 0.9, 0.0), (0.25, 0.0, 0.75)]
    ), vertices

    labels, p_lower = region.ihds(0.8)
    assert labels == [0, 1]
    approx(p_lower, 0.25)
    min_labels, _ = region.ihds_min_cardinality(0.8)
    assert len(min_labels) <= len(labels)
    assert region.prps(0.8, 50) == [0, 1, 2]
    approx(region.lower_probability([0, 1]), 0.25)
    approx(region.upper_probability([2]), 0.75)

    tu, au, eu = region.uncertainty()
    approx(tu, math.log2(3), 1e-6)
    approx(au, 0.0)
    approx(eu, tu)

    # lattice membership and SVG rendering
    assert len(region.discretize(2)) == 3
    svg = region.svg(marker=[0.5, 0.3, 0.2])
    assert svg.startswith("<svg") and "</svg>" in svg

    # the end-to-end path: calibrate then build a test region
    r = credal.region_for(cal, [0.6, 0.4])
    assert r.k == 2
    assert r.contains([1.0, 0.0])

    print("credal_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
