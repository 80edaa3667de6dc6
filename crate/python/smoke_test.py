"""Smoke test for the pyrevpath extension module.

Build and install first:
    pip install -e crates/py --no-build-isolation
then run:
    python python/smoke_test.py
"""

import math
import sys

import pyrevpath as rp


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    mono = rp.Network.monostable()
    results = []

    nop = rp.shoot_nop(mono, 1.0, 2.0, 1.0)
    a0 = nop.alpha0[0]
    results.append(check("nop momentum", abs(a0 - 0.382) <= 0.005, f"alpha0={a0:.6f}"))

    s, _ = rp.quasipotential(mono, 1.0, [2.0])
    results.append(check("quasipotential", abs(s[0] - (2 * math.log(2) - 1)) <= 1e-6, f"S(2)={s[0]:.8f}"))

    dom = rp.Domain(0.05, 3.0, 30.0)
    pi = rp.stationary_distribution(mono, dom)
    results.append(check("stationary law sums to one", abs(sum(pi) - 1.0) <= 1e-12))

    path = rp.ssa_simulate(mono, [1.0], 50.0, 1.0, 3)
    again = rp.ssa_simulate(mono, [1.0], 50.0, 1.0, 3)
    results.append(check("ssa is seed-deterministic", path.times == again.times and path.states == again.states))

    dom = rp.Domain.suggest(mono, 30.0, 1.0, 1.0, 2.0, nop.total_action)
    field = rp.prehistory(mono, dom, "npp", 2.0, 1.0, nt=200, x0=1.0)
    peaks = field.peak_trajectory()
    results.append(check("prehistory normalized", field.max_defect <= 1e-9, f"defect={field.max_defect:.1e}"))
    results.append(check("prehistory anchored", peaks[0][1] == dom.cells()[dom.nearest(1.0)] and peaks[-1][1] == dom.cells()[dom.nearest(2.0)]))

    paths = rp.sample_reversed(mono, dom, "spp", 2.0, 1.0, seed=1, count=200)
    mean = sum(p.states[-1][0] for p in paths) / len(paths)
    results.append(check("reversed paths relax", abs(mean - (1 + math.exp(-1))) <= 0.1, f"mean={mean:.3f}"))

    times, _, kappa = rp.spp_covariance(mono, 2.0, 2.0)
    exact = 1 + math.exp(-times[-1]) - 2 * math.exp(-2 * times[-1])
    results.append(check("reversed covariance", abs(kappa[-1] - exact) <= 1e-7))

    results.append(check("equilibrium curvature", abs(rp.riccati_equilibrium(rp.Network.bistable(), 1.0) - 1 / 6) <= 1e-12))

    try:
        rp.Network("species S\nreaction S <=> @ kf=1")
        results.append(check("parse errors raise ValueError", False))
    except ValueError:
        results.append(check("parse errors raise ValueError", True))

    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
