"""Quick check of the Python bindings: python python/smoke_test.py"""

import math

import pradial


def main():
    assert pradial.classify(3, 2, 1, 2, 0, 0) == {"tag": "BothBlowup", "global_exists": False}

    params = pradial.SystemParams(3, 10, 2, 4, 1, 1)
    assert params.delta == 56.0, params

    d = pradial.derive(params)
    assert d["sigma"] == 0.75 and d["nu_u"] == 1.5, d

    eq = pradial.equilibrium(params)
    assert (eq["Y_inf"], eq["Z_inf"], eq["W_inf"]) == (1.5, 6.5, 6.5), eq
    assert abs(eq["A"] - 0.41893) < 1e-5 and abs(eq["B"] - 0.39756) < 1e-5, eq

    st = pradial.stability(params)
    assert st["stable"] and max(st["eigen_real_parts"]) < 0, st

    traj = pradial.integrate(params, 1.0, 1.0, r_max=1e3)
    assert traj["stop"] == "ReachedRMax" and traj["r"][-1] == 1e3
    assert all(b > a for a, b in zip(traj["u"], traj["u"][1:]))

    growth = pradial.verify_growth(params)
    assert growth["rel_err_A"] < 0.01 and growth["rel_err_B"] < 0.01, growth

    pc = pradial.picard(params)
    assert pc["comparison"]["sup_norm"] < 1e-5, pc["comparison"]

    blow = pradial.integrate(pradial.SystemParams(3, 2, 1, 2, 0, 0))
    assert blow["stop"] == "BlowUp" and 7.0 < blow["r_est"] < 7.5, blow["r_est"]

    se = pradial.single_eq(3, 3, 0.5, 1)
    assert se["exponent"] == 4.0 and math.isclose(se["constant"], 1 / 1024), se

    try:
        pradial.SystemParams(3, 2, 1, 2, 0, 5)
    except pradial.PradialError as e:
        assert e.args[0] == "DomainViolation", e.args
    else:
        raise AssertionError("beta > m accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
