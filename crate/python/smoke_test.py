#!/usr/bin/env python3
"""Smoke test for the driftfem Python bindings.

Build the extension first: ./python/build.sh
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import driftfem_py as df


def close(a, b, rel):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def main():
    # Exact constants.
    c = df.constants(d=3, q=2.0, lam=1.0, volume=1.0)
    assert c["N"] == 4.0, c
    assert c["sigma"] == 3.0, c
    assert close(c["K1"], 27.0 / 256.0, 1e-14), c
    assert c["C1"] == 17.0, c
    print("constants: N = %g, sigma = %g, K1 = %.10g, C1 = %g" % (c["N"], c["sigma"], c["K1"], c["C1"]))

    # Eigenfunction solve: -Delta u + u = (2 pi^2 + 1) sin(pi x) sin(pi y).
    mesh = df.Mesh(64)
    assert mesh.n_vertices == 65 * 65
    assert mesh.n_triangles == 2 * 64 * 64
    prob = df.Problem(f="(2*pi^2 + 1) * sin(pi*x) * sin(pi*y)", alpha=1.0)
    u = prob.solve(mesh)
    l2 = u.lp(2.0)
    assert close(l2, 0.5, 1e-3), l2
    print("eigenfunction solve: ||u||_2 = %.6f (expected 0.5)" % l2)

    # Bound checks pass with the default slack.
    for row in prob.verify(mesh, rs=[1.0, 2.0, math.inf], slack=0.02):
        assert row["pass"], row
    print("verify: energy, sup and L^r bounds hold")

    # Duality identity at solver precision.
    import random

    rng = random.Random(7)
    psi = [rng.uniform(-1.0, 1.0) for _ in range(mesh.n_vertices)]
    resid = prob.duality_residual(mesh, psi)
    assert resid <= 1e-9, resid
    print("duality residual: %.3e" % resid)

    # Sub-Markov range of the resolvent, strict tier without drift.
    res = df.Resolvent(df.Problem(alpha=0.0), mesh)
    assert res.strict_tier
    ok, lo, hi, tol = res.check_submarkov(1.0, [1.0] * mesh.n_vertices)
    assert ok and lo >= -1e-12 and hi <= 1.0 + 1e-12, (ok, lo, hi, tol)
    print("sub-Markov range: [%.3e, %.3e] with tol %.1e" % (lo, hi, tol))

    # Resolvent identity for one shift pair.
    f = [rng.uniform(-1.0, 1.0) for _ in range(mesh.n_vertices)]
    a, b = 0.5, 2.0
    gaf = res.apply(a, f)
    gbf = res.apply(b, f)
    gbgaf = res.apply(b, gaf)
    worst = max(
        abs(gaf[i] - gbf[i] - (b - a) * gbgaf[i]) for i in range(len(f))
    )
    assert worst <= 1e-10, worst
    print("resolvent identity residual (sup): %.3e" % worst)

    # Strong continuity trend.
    table = res.strong_continuity(
        [math.sin(math.pi * x) * math.sin(math.pi * y) for (x, y) in mesh.vertices()],
        [10.0, 100.0, 1000.0],
    )
    assert table[0][1] > table[1][1] > table[2][1], table
    print("strong continuity errors: " + ", ".join("%.4f" % e for (_, e) in table))

    # Convergence orders.
    rows = df.mms_study(case="drift", levels=[8, 16, 32])
    n, h, l2e, h1e, l2o, h1o = rows[-1]
    assert l2o >= 1.8 and h1o >= 0.9, rows
    print("mms drift case: L2 order %.3f, H1 order %.3f" % (l2o, h1o))

    # Norm of an expression field.
    val = df.lp_norm_expr("sin(pi*x)*sin(pi*y)", 2.0, mesh)
    assert close(val, 0.5, 1e-5), val

    # Singular drift keeps the sub-Markov range at the relaxed tolerance.
    rough = df.Problem(
        b=("-x / norm(x,y)^1.5", "-y / norm(x,y)^1.5"),
        b_singular=(0.0, 0.0),
        alpha=0.0,
    )
    res = df.Resolvent(rough, mesh)
    assert not res.strict_tier
    ok, lo, hi, tol = res.check_submarkov(1.0, [1.0] * mesh.n_vertices)
    assert ok, (lo, hi, tol)
    print("singular drift sub-Markov range: [%.3e, %.3e]" % (lo, hi))

    print("smoke test passed")


if __name__ == "__main__":
    main()
