"""Independent numerical oracles used by the tests.

Everything here avoids the symbolic differentiation path on purpose:
derivatives come from central finite differences (with one Richardson
step where accuracy matters), so agreement with the symbolic engine is
meaningful evidence.
"""

import numpy as np

from metalliclab import chart as ch
from metalliclab import expr as ex


def fd_partial(f, x, k, h=1e-5, richardson=True):
    """Central-difference d f / d x^k at x; f maps arrays to scalars/arrays."""
    x = np.asarray(x, dtype=float)

    def diff(step):
        xp = x.copy()
        xm = x.copy()
        xp[k] += step
        xm[k] -= step
        return (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * step)

    if not richardson:
        return diff(h)
    d1 = diff(h)
    d2 = diff(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def fd_gradient(e: ex.Expr, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    return np.array(
        [fd_partial(lambda p: ex.evaluate(e, p), x, k, h) for k in range(len(x))]
    )


def fd_christoffel(g: ch.MetricField, x, h=1e-5):
    """Koszul formula evaluated with finite-difference metric derivatives."""
    x = np.asarray(x, dtype=float)
    n = g.chart.dim

    def g_at(p):
        return ch.eval_exprs(g.comps, p.reshape(1, -1))[0]

    gv = g_at(x)
    ginv = np.linalg.inv(gv)
    dg = np.array([fd_partial(g_at, x, k, h) for k in range(n)])  # dg[k, i, j]
    gamma = np.zeros((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                gamma[k, i, j] = 0.5 * sum(
                    ginv[k, l] * (dg[i][j, l] + dg[j][i, l] - dg[l][i, j])
                    for l in range(n)
                )
    return gamma


def fd_riemann(conn: ch.ConnectionField, x, h=1e-5):
    """House curvature formula with finite-difference Gamma derivatives."""
    x = np.asarray(x, dtype=float)
    n = conn.chart.dim

    def gamma_at(p):
        return ch.eval_exprs(conn.comps, p.reshape(1, -1))[0]

    gv = gamma_at(x)
    dgamma = np.array([fd_partial(gamma_at, x, a, h) for a in range(n)])
    R = np.zeros((n, n, n, n))
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    R[l, i, j, k] = (
                        dgamma[i][l, j, k]
                        - dgamma[j][l, i, k]
                        + sum(gv[l, i, s] * gv[s, j, k] for s in range(n))
                        - sum(gv[l, j, s] * gv[s, i, k] for s in range(n))
                    )
    return R


def fd_nijenhuis(J: ch.EndoField, x, h=1e-5):
    """Bracket-based Nijenhuis via finite differences of the column fields."""
    x = np.asarray(x, dtype=float)
    n = J.chart.dim

    def J_at(p):
        return ch.eval_exprs(J.comps, p.reshape(1, -1))[0]

    Jv = J_at(x)
    # dcols[k][:, i] = d_k (J column i)
    dcols = [fd_partial(J_at, x, k, h) for k in range(n)]
    N = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            b1 = sum(Jv[s, i] * dcols[s][:, j] - Jv[s, j] * dcols[s][:, i] for s in range(n))
            b2 = -dcols[j][:, i]  # [J d_i, d_j]
            b3 = dcols[i][:, j]   # [d_i, J d_j]
            N[:, i, j] = b1 - Jv @ b2 - Jv @ b3
    return N


def random_expr(rng, names, depth=3):
    """A random expression over the coordinates, safe on positive domains."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return repr(round(rng.uniform(0.2, 2.5), 3))
        return names[rng.integers(0, len(names))]
    kind = rng.integers(0, 6)
    a = random_expr(rng, names, depth - 1)
    b = random_expr(rng, names, depth - 1)
    if kind == 0:
        return f"({a} + {b})"
    if kind == 1:
        return f"({a} - {b})"
    if kind == 2:
        return f"({a})*({b})"
    if kind == 3:
        return f"({a})/(3.5 + ({b})^2)"
    if kind == 4:
        fn = ("sin", "cos", "tanh", "exp")[rng.integers(0, 4)]
        if fn == "exp":
            return f"exp(-(({a}))^2)"
        return f"{fn}({a})"
    return f"(3.1 + ({a})^2)^0.5"
