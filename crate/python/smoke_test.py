"""Smoke test for the rde_lab_py extension module.

Build the extension first:

    cargo build --release -p rde-lab-py

then run `python3 python/smoke_test.py` from the repository root. The script
loads target/release/librde_lab_py.so (or .dylib) under the importable name
rde_lab_py, so no packaging step is needed.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    for name in ("librde_lab_py.so", "librde_lab_py.dylib", "rde_lab_py.dll"):
        path = ROOT / "target" / "release" / name
        if path.exists():
            loader = importlib.machinery.ExtensionFileLoader("rde_lab_py", str(path))
            spec = importlib.util.spec_from_file_location("rde_lab_py", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("extension not built: run `cargo build --release -p rde-lab-py` first")


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    m = load()
    checks = []

    checks.append(("cdf(0) = 1/2", m.cdf(0.0) == 0.5))
    checks.append(("tail(2) = cdf(-2)", m.tail(2.0) == m.cdf(-2.0)))
    checks.append(("density(0) = 1/4", m.density(0.0) == 0.25))
    checks.append(("quantile round trip", close(m.cdf(m.quantile(0.3)), 0.3, 1e-12)))
    checks.append(("tail integral at 0 is ln 2", close(m.tail_integral(0.0), math.log(2.0), 1e-15)))
    try:
        m.quantile(1.0)
        checks.append(("quantile(1) raises", False))
    except ValueError:
        checks.append(("quantile(1) raises", True))

    draws = m.sample_logistic(20000, 3)
    mean = sum(draws) / len(draws)
    checks.append(("sample mean near 0", abs(mean) < 4 * math.pi / math.sqrt(3 * len(draws))))
    checks.append(("samples reproducible", draws[:5] == m.sample_logistic(5, 3)))

    h = m.Tail.logistic()
    checks.append(("grid length", len(h) == 8001 and h.x[0] == -40.0))
    checks.append(("T fixes the logistic tail", h.apply_t().sup_distance_to_logistic_tail() <= 1e-5))
    checks.append(("A fixes the logistic tail", h.apply_a().sup_distance_to_logistic_tail() <= 1e-5))
    checks.append(("identity residual", h.identity_residual() <= 1e-6))

    f1 = m.Tail.logistic_squared().apply_t()
    checks.append(("f_1(0) = e^{-1/2}/2", close(f1.evaluate(0.0), 0.5 * math.exp(-0.5), 1e-6)))

    traj = m.iterate_t(max_iters=20)
    d = traj["sup_distance_to_logistic_tail"]
    checks.append(("iterates approach the tail", all(b <= a + 1e-12 for a, b in zip(d, d[1:]))))

    beta = m.beta_recursion(n_max=5)
    b0 = beta["beta_n_at_zero"]
    checks.append(("beta_1(0)", close(b0[1], 0.796600, 1e-4)))
    checks.append(("beta_n(0) decreasing", all(b < a for a, b in zip(b0, b0[1:]))))

    rows = m.coupling(depths=[0, 2], replicates=400, seed=5)
    checks.append(("coupling rows", [r["depth"] for r in rows] == [0, 2]))
    checks.append(("coupling gap shrinks", rows[1]["mean_abs_root_gap"] < rows[0]["mean_abs_root_gap"]))

    perm, raw, obj = m.solve_assignment([[1.0, 2.0], [3.0, 1.0]])
    checks.append(("2x2 assignment", perm == [0, 1] and raw == 2.0 and obj == 2.0))
    mean2, se2 = m.estimate_mean_objective(2, replicates=4000, seed=11)
    checks.append(("n = 2 mean near 5/4", abs(mean2 - 1.25) <= 3 * se2))
    checks.append(("parisi(3)", close(m.parisi_partial_sum(3), 1 + 1 / 4 + 1 / 9, 1e-15)))

    failed = 0
    for name, ok in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
        failed += not ok
    print(f"rde_lab_py {m.__version__}: {len(checks) - failed}/{len(checks)} checks passed")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
