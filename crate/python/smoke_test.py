#!/usr/bin/env python3
"""Smoke test for the asymwave_py extension module.

Builds nothing itself: run `cargo build --release -p asymwave-py` first (or
pass --debug to use the debug artifact). The script stages the cdylib under a
temporary directory with the importable module name and exercises the main
entry points.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]


def stage_module(profile: str) -> Path:
    lib = REPO / "target" / profile / "libasymwave_py.so"
    if not lib.exists():
        sys.exit(
            f"missing {lib}; build it with `cargo build --{profile} -p asymwave-py`"
            if profile == "release"
            else f"missing {lib}; build it with `cargo build -p asymwave-py`"
        )
    staging = Path(tempfile.mkdtemp(prefix="asymwave-py-"))
    shutil.copy2(lib, staging / "asymwave_py.so")
    return staging


def approx(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main() -> None:
    profile = "debug" if "--debug" in sys.argv[1:] else "release"
    staging = stage_module(profile)
    sys.path.insert(0, str(staging))
    import asymwave_py as aw

    assert set(aw.model_names()) == {
        "whitham-fin",
        "whitham-inf",
        "babenko-inf",
        "babenko-fin",
    }
    assert aw.param_names("babenko-inf") == ["nu", "beta"]

    # series coefficients of the inverse square root
    assert aw.b_coeff(2, 0) == 1.0
    assert aw.b_coeff(0, 1) == -0.5
    assert aw.b_coeff(1, 1) == 1.5

    # closed-form kernel parameters
    spec = aw.solve_kernel_params("babenko-inf", 2, 3)
    assert approx(spec["mu0"]["nu"], math.sqrt(5.0 / 6.0), 1e-12)
    assert approx(spec["mu0"]["beta"], 1.0 / 6.0, 1e-12)
    assert spec["coprime"] and spec["certificate"]["simple"]

    wspec = aw.solve_kernel_params("whitham-inf", 2, 3, {"T": 1.0})
    mu0 = wspec["mu0"]
    assert abs(aw.linear_symbol("whitham-inf", mu0, 2)) < 1e-10
    assert abs(aw.linear_symbol("whitham-inf", mu0, 3)) < 1e-10
    assert aw.linear_symbol("whitham-inf", mu0, 5) == aw.linear_symbol(
        "whitham-inf", mu0, -5
    )

    # quadratic symbol of the zero-mean Whitham model
    assert aw.nonlinear_symbol("whitham-inf", mu0, [1, -1]) == 0.0
    assert aw.nonlinear_symbol("whitham-inf", mu0, [3, 4]) == 1.0

    # classification end to end
    report = aw.classify("whitham-inf", 2, 3, {"T": 1.0})
    assert report["verdict"] == "no-asymmetric"
    assert report["transversality"]["kind"] == "jacobian"
    breport = aw.classify("babenko-inf", 2, 3)
    assert breport["verdict"] == "no-asymmetric"
    assert breport["transversality"]["kind"] == "degenerate-parameters"

    rows = aw.scan("whitham-inf", 5, {"T": 1.0})
    assert len(rows) == 9
    assert all(r["verdict"] == "no-asymmetric" for r in rows)

    # exact tension scaling
    c_value, spread = aw.scaled_constant(2, 3, [0.5, 1.0, 2.0])
    assert spread <= 1e-8
    assert approx(c_value, report["resonance_nhat"], 1e-8)

    # expansion table base case and kernel-mode annihilation
    table = aw.expansion_table("whitham-inf", 2, 3, 3, {"T": 1.0})
    assert table[(1, 0, 0, 0)] == 0.5
    assert (2, 0, 0, 0) not in table or table[(2, 0, 0, 0)] != 0.0
    assert (3, 0, 2, 0) not in table  # wavenumber k1, annihilated

    # pseudo-spectral cross-check: psi3 near the resonance coefficient
    nhat = aw.resonance_coefficient("whitham-inf", 2, 3, {"T": 1.0})
    est = aw.psi_estimates(
        "whitham-inf", 2, 3, (2.0**-7, 2.0**-7), (0.0, 0.2), {"T": 1.0}
    )
    assert approx(est["psi3"], nhat, 5e-2), (est["psi3"], nhat)
    assert approx(2.0 * est["psi3"], 3.0 * est["psi4"], 1e-6)

    sol = aw.ls_solve("whitham-inf", 2, 3, (1e-3, 5e-4), (0.0, 0.2), {"T": 1.0})
    assert sol["residual_norm"] < 1e-12
    assert approx(sol["modes"][2][0], 0.5e-3, 1e-9)

    # solver and truncated expansion agree on the complement modes
    coeffs = aw.evaluate_expansion(
        "whitham-inf", 2, 3, 3, (1e-3, 5e-4), (0.0, 0.2), {"T": 1.0}
    )
    for k in (1, 4, 5):
        got = sol["modes"].get(k, (0.0, 0.0))
        want = coeffs.get(k, (0.0, 0.0))
        assert math.hypot(got[0] - want[0], got[1] - want[1]) < 1e-9, (k, got, want)

    print("smoke test passed")


if __name__ == "__main__":
    main()
