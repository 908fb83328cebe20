"""Smoke test for the pybaseset extension module."""

import itertools
import math
import random

import pybaseset as bs


def brute_force(points, weights):
    """Best criterion over hulls of every subset, by plain enumeration."""
    best = 0.0
    n = len(points)
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(n), k):
            hull = bs.convex_hull([points[i] for i in subset])
            value = bs.WeightedSample(points, weights).criterion(hull)
            best = min(best, value)
    return best


def main():
    rng = random.Random(4)
    for _ in range(20):
        n = rng.randint(3, 8)
        pts = [(rng.random(), rng.random()) for _ in range(n)]
        w = [rng.uniform(-1.0, 1.0) for _ in range(n)]
        dp = bs.estimate_set(bs.WeightedSample(pts, w))
        assert abs(dp.criterion - brute_force(pts, w)) < 1e-9, (pts, w)
        oracle = bs.brute_force_oracle(bs.WeightedSample(pts, w))
        assert abs(dp.criterion - oracle.criterion) < 1e-9

    failures, max_diff = bs.oracle_check(count=50, n_min=4, n_max=10, seed=1)
    assert failures == 0 and max_diff < 1e-9

    scene = bs.Scene.disc_preset()
    assert abs(scene.s0_area() - math.pi / 16) < 1e-4
    assert bs.Scene.from_text(scene.to_text()).digest() == scene.digest()

    data = bs.simulate_dose_response(scene, m=10, n=100, seed=7)
    assert len(data) == 100
    assert bs.DoseResponseData.from_csv(data.to_csv()).replicate_means == data.replicate_means

    report = bs.estimate(data, scene=scene, tau_mode=0.0, mc_points=1000, seed=1)
    again = bs.estimate(data, scene=scene, tau_mode=0.0, mc_points=1000, seed=1)
    report.pop("timing")
    again.pop("timing")
    assert report == again
    assert report["metrics"]["d"] >= 0.0

    quiet = bs.simulate_dose_response(scene.with_sigma0(0.0), m=2000, n=1500, seed=3)
    fit = bs.estimate(quiet, scene=scene, tau_mode="iterative", mc_points=0)
    assert fit["metrics"]["d"] <= 0.05, fit["metrics"]

    grid = bs.simulate_grid(scene, m=16, seed=2)
    assert len(grid.responses) == 256
    sample = bs.weights(grid, tau_hat=0.0)
    assert len(sample) > 0 and sample.normalizer == 256
    tau = bs.tau_fit(grid)
    assert math.isfinite(tau["tau_refined"])

    square = [(0.3, 0.3), (0.7, 0.3), (0.7, 0.7), (0.3, 0.7)]
    assert abs(bs.symmetric_difference_area(square, square)) < 1e-15
    assert abs(bs.hausdorff_distance(square, [(x + 0.1, y) for x, y in square]) - 0.1) < 1e-12
    m = bs.metrics(square, scene, mc_points=10)
    assert m["hausdorff"] is not None

    try:
        bs.Scene.from_text("shape = disc\ncx = nope\n")
    except ValueError as e:
        assert "cx" in str(e)
    else:
        raise AssertionError("malformed scene accepted")

    print("pybaseset smoke test passed")


if __name__ == "__main__":
    main()
