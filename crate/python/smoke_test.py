"""Smoke test for the rfsliding Python module.

Uses an installed module if there is one (``maturin develop`` in
crates/python), otherwise loads the library built by
``cargo build -p rfsliding-py``.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import rfsliding

        return rfsliding
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for suffix in ("so", "dylib", "dll"):
            lib = ROOT / "target" / profile / f"librfsliding_py.{suffix}"
            if not lib.exists():
                lib = ROOT / "target" / profile / f"rfsliding_py.{suffix}"
            if lib.exists():
                loader = importlib.machinery.ExtensionFileLoader("rfsliding", str(lib))
                spec = importlib.util.spec_from_loader("rfsliding", loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                return module
    sys.exit("rfsliding not found; run `cargo build -p rfsliding-py` first")


def main():
    rf = load()

    p = rf.SgsParams(4.0, 1.0)
    assert math.isclose(p.c, 2 / 3) and math.isclose(p.beta, 4 / 3)
    assert (p.inner_count(1), p.inner_count(2)) == (5, 6)

    a = rf.AsgsParams(1.0, 1.0, 100.0)
    assert a.t == 14 and math.isclose(a.gamma, 0.5)

    assert rf.simplex_project([2.0, 0.0]) == [1.0, 0.0]
    assert rf.compute_bound_n(1e4, 1.0, 2 / 3) == 46

    try:
        rf.SgsParams(-1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative L accepted")

    trace = rf.run_qp_sgs(10, 25)
    gaps = trace["objective_gap"]
    assert len(gaps) == 25 and gaps[-1] < gaps[0]
    assert abs(sum(trace["x"]) - 1.0) < 1e-10

    tv = rf.run_tv_asgs(8, 8, 10, eta=0.01)
    assert tv["objective_gap"][-1] < 1e-6
    assert len(tv["x"]) == 64

    failed = [c for c in rf.check() if not c[1]]
    assert not failed, failed

    print("python smoke test passed")


if __name__ == "__main__":
    main()
