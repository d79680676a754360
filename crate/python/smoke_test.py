"""Quick end-to-end check of the pywavedecay extension."""

import math
import pathlib
import tempfile

import pywavedecay as wd

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    p = wd.Profile("line-1d", "radial_bump", 1.0, 0.1)
    assert abs(p.eta - 0.34346) < 1e-4, p
    assert p.eta_applicable
    assert not wd.Profile("line-1d", "radial_bump", 1.0, 0.6).eta_applicable

    w = wd.weights(3.0, [2.0], 1.0)
    assert w["psi"] > 0 and w["psi_t"] < 0 and w["phi_t"] < 0

    data = wd.InitialData(u1_amplitude=0.5)
    norms = wd.data_norms(p, data)
    assert norms["i0_sq"] > 0

    s = wd.simulate(p, data, [2.0], h=0.02, t_final=10.0)
    e = s["E_u"]
    drift = max(abs(x - e[0]) for x in e) / e[0]
    assert drift < 1e-3, drift
    assert all(math.isfinite(x) for x in s["morawetz_residual"])

    t = [float(k) for k in range(1, 41)]
    fit = wd.fit_decay(t, [2.0 / x for x in t], (5.0, 40.0))
    assert abs(fit["exponent"] - 1.0) < 1e-9
    print(wd.bounded_check(t, [1.0 / x for x in t], 0.0, 2.0, 1.0, (10.0, 40.0)))

    with tempfile.TemporaryDirectory() as out:
        ok, run_dir = wd.run_config(str(ROOT / "configs" / "eta034-radial3d.toml"), out)
        assert ok, run_dir
    print("smoke test passed")


if __name__ == "__main__":
    main()
