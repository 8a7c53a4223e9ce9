"""Smoke test for the Python bindings.

Build and run from the repository root:

    cargo build -p nshyd-py --release
    cp target/release/libnshyd_py.so python/nshyd.so
    python3 python/smoke_test.py
"""

import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import nshyd  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    act = nshyd.Actuator()
    lo, hi = act.force_limits()
    assert (lo, hi) == (-480000.0, 1008000.0), (lo, hi)
    assert act.gamma(0.0, 0.2, 0.0) == (lo, hi)

    # resolvent lands on the graph
    beta, fbar = 2.5e6, -1.0e5
    v = act.resolve(0.5, 0.2, beta, fbar)
    f_lo, f_hi = act.gamma(0.5, 0.2, v)
    assert f_lo - 1e-6 <= beta * v + fbar <= f_hi + 1e-6, (v, f_lo, f_hi)

    # closed regeneration valve is the plain map
    assert act.gamma_regen(0.5, 0.2, 0.0, 0.3)[:2] == act.gamma(0.5, 0.2, 0.3)
    _, _, v_a = act.gamma_regen(0.5, 0.2, 1.0, 0.3)
    assert 0.0 <= v_a <= 0.3

    x = nshyd.phi_a(1.0, -2.0, 1.0)
    assert abs(x - 1.0) < 1e-15
    assert math.isclose(nshyd.phi_b(1.0, -2.0, 1e12, 1e12, 0.0), 2.0, rel_tol=1e-9)

    try:
        nshyd.Actuator(area_rod=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative area accepted")

    text = (ROOT / "scenarios" / "lever_sweep.toml").read_text()
    cols = nshyd.validate_scenario(text)
    header, rows = nshyd.run_scenario(text)
    assert header == cols and header[-2:] == ["f_lo", "f_hi"]
    assert len(rows) == 9 * 401

    try:
        nshyd.validate_scenario('mode = "sweep"\n')
    except ValueError as e:
        assert "sweep" in str(e), e
    else:
        raise AssertionError("incomplete scenario accepted")

    print(f"ok: {len(rows)} sweep rows, Λ = {v:.6f} m/s")


if __name__ == "__main__":
    main()
