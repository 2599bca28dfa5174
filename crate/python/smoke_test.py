"""Smoke test for the arbfun extension module.

Build and install first:
    pip install --no-build-isolation ./crates/py
"""

import math

import arbfun


def main():
    ids = [e[0] for e in arbfun.list_experiments()]
    for needed in ("thm4-gamma", "thm5-oscillating", "thm9-chaos", "thm11-euler"):
        assert needed in ids, needed

    normal = arbfun.Distribution("normal")
    assert normal.dim == 1
    draws = normal.sample(1000, 3)
    assert len(draws) == 1000 and draws == normal.sample(1000, 3)

    errors = arbfun.scaled_error_samples(normal, 1000, 20000, 1)
    assert all(-0.5 <= e <= 0.5 for e in errors)
    mean_sq = sum(e * e for e in errors) / len(errors)
    assert abs(mean_sq - 1 / 12) < 0.004, mean_sq

    value, se = arbfun.gamma_estimate("identity", normal, 400, 20000, 2)
    assert abs(value - 1 / 12) <= 4 * se + 1e-3, (value, se)

    value, target = arbfun.chaos_defect(1, 32, 4096)
    assert abs(value - target) < 0.02 * target

    rows = arbfun.euler_error_law("linear", [8], 2000)
    n, err, lim = rows[0]
    assert n == 8 and len(err) == 3 and all(math.isfinite(v) for v, _ in lim)
    try:
        arbfun.euler_error_law("geometric", [8], 100)
    except ValueError as e:
        assert "supported class" in str(e)
    else:
        raise AssertionError("geometric system accepted")

    rows, csv = arbfun.run_experiment("thm4bis-general", seed=1, replicates=5000)
    assert csv.splitlines()[0] == arbfun.CSV_HEADER
    assert rows and all(r.passed for r in rows)
    again = arbfun.run_experiment("thm4bis-general", seed=1, replicates=5000)[1]
    assert again == csv

    print("python smoke test passed")


if __name__ == "__main__":
    main()
