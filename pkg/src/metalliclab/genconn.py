"""Connection-level machinery on the generalized tangent bundle.

Covers the bracket [X+a, Y+b] = [X,Y] + nabla_X b - nabla_Y a, the
generalized Nijenhuis tensor built from it, the torsion correction
Phi(T), the semi-symmetric metric connection D = nabla^g + F built from a
1-form, the induced derivative Dhat on TM + T*M, and numeric evaluators
for the integrability-condition lists of the product/complex structures.

Pointwise contractions (conditions, Phi, closed torsion forms) work on
evaluated arrays with a leading sample axis; anything that differentiates
(brackets, Dhat) stays symbolic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import chart as ch
from . import expr as ex
from .errors import ZeroQ
from .metallic import MetallicParams

__all__ = [
    "GenSectionField",
    "basis_sections",
    "gen_metallic_field",
    "gen_product_field",
    "gen_complex_field",
    "ghat_field",
    "apply_gen_endo",
    "nabla_bracket",
    "gen_nijenhuis",
    "KaramanData",
    "karaman_connection",
    "torsion_formula_D",
    "torsion_closed_form_values",
    "phi_of_torsion",
    "covariant_nijenhuis_rhs",
    "gen_connection_matrix",
    "dhat_endo",
    "dhat_metric",
    "ConditionInputs",
    "jp_condition_residuals",
    "jc_condition_residuals",
    "jp_reduced_residuals",
    "jc_reduced_residuals",
]


@dataclass(frozen=True)
class GenSectionField:
    """Section X + alpha of TM + T*M with Expr components, stacked (2n,)."""

    chart: ch.Chart
    comps: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.chart.dim
        comps = np.asarray(self.comps, dtype=object)
        if comps.shape != (2 * n,):
            raise ValueError(f"expected {2 * n} components, got {comps.shape}")
        fixed = np.empty(2 * n, dtype=object)
        for i, entry in enumerate(comps):
            fixed[i] = entry if isinstance(entry, ex.Expr) else ex.const(entry)
        object.__setattr__(self, "comps", fixed)

    @property
    def vec(self) -> np.ndarray:
        return self.comps[: self.chart.dim]

    @property
    def cov(self) -> np.ndarray:
        return self.comps[self.chart.dim :]

    def eval(self, points, memo=None) -> np.ndarray:
        return ch.eval_exprs(self.comps, points, memo)


def basis_sections(chart: ch.Chart) -> list:
    """The 2n constant sections: d_1..d_n then dx^1..dx^n."""
    n = chart.dim
    out = []
    for a in range(2 * n):
        comps = np.zeros(2 * n)
        comps[a] = 1.0
        out.append(GenSectionField(chart, comps))
    return out


def _block(chart: ch.Chart, A, B, C, D) -> np.ndarray:
    n = chart.dim
    out = np.empty((2 * n, 2 * n), dtype=object)
    out[:n, :n] = A
    out[:n, n:] = B
    out[n:, :n] = C
    out[n:, n:] = D
    return out


def gen_metallic_field(J: ch.EndoField) -> np.ndarray:
    """blockdiag(J, J*) as an Expr matrix over the base chart."""
    n = J.chart.dim
    zero = ch.constant_matrix(np.zeros((n, n)))
    return _block(J.chart, J.comps, zero, zero, J.comps.T)


def gen_product_field(
    g: ch.MetricField, J: ch.EndoField, ginv: np.ndarray | None = None
) -> np.ndarray:
    n = J.chart.dim
    if ginv is None:
        ginv = ch.inverse_metric(g)
    J2 = ch.mat_mul(J.comps, J.comps)
    upper = ch.mat_mul(ch.identity_endo(n) - J2, ginv)
    minus_jstar = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            minus_jstar[i, j] = -J.comps[j, i]
    return _block(J.chart, J.comps, upper, g.comps, minus_jstar)


def gen_complex_field(
    g: ch.MetricField, J: ch.EndoField, ginv: np.ndarray | None = None
) -> np.ndarray:
    n = J.chart.dim
    if ginv is None:
        ginv = ch.inverse_metric(g)
    J2 = ch.mat_mul(J.comps, J.comps)
    upper_neg = ch.mat_mul(ch.identity_endo(n) + J2, ginv)
    upper = np.empty((n, n), dtype=object)
    minus_jstar = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            upper[i, j] = -upper_neg[i, j]
            minus_jstar[i, j] = -J.comps[j, i]
    return _block(J.chart, J.comps, upper, g.comps, minus_jstar)


def ghat_field(g: ch.MetricField, ginv: np.ndarray | None = None) -> np.ndarray:
    n = g.chart.dim
    if ginv is None:
        ginv = ch.inverse_metric(g)
    zero = ch.constant_matrix(np.zeros((n, n)))
    return _block(g.chart, g.comps, zero, zero, ginv)


def apply_gen_endo(jhat: np.ndarray, s: GenSectionField) -> GenSectionField:
    return GenSectionField(s.chart, ch.mat_vec(jhat, s.comps))


def nabla_bracket(
    conn: ch.ConnectionField, s1: GenSectionField, s2: GenSectionField
) -> GenSectionField:
    """[X+a, Y+b] = [X, Y] + nabla_X b - nabla_Y a."""
    chart = conn.chart
    n = chart.dim
    gamma = conn.comps
    X, alpha = s1.vec, s1.cov
    Y, beta = s2.vec, s2.cov
    vec = ch.lie_bracket(chart, X, Y)
    cov = np.empty(n, dtype=object)
    for i in range(n):
        terms = []
        for k in range(n):
            db = ex.differentiate(beta[i], k) - ex.balanced_sum(
                gamma[s, k, i] * beta[s] for s in range(n)
            )
            da = ex.differentiate(alpha[i], k) - ex.balanced_sum(
                gamma[s, k, i] * alpha[s] for s in range(n)
            )
            terms.append(X[k] * db)
            terms.append(-(Y[k] * da))
        cov[i] = ex.balanced_sum(terms)
    comps = np.empty(2 * n, dtype=object)
    comps[:n] = vec
    comps[n:] = cov
    return GenSectionField(chart, comps)


def gen_nijenhuis(
    conn: ch.ConnectionField,
    jhat: np.ndarray,
    s1: GenSectionField,
    s2: GenSectionField,
    jhat_squared: np.ndarray | None = None,
) -> GenSectionField:
    """N(s, t) = [Js, Jt] - J[Js, t] - J[s, Jt] + J^2 [s, t], all nabla-brackets."""
    if jhat_squared is None:
        jhat_squared = ch.mat_mul(jhat, jhat)
    js1 = apply_gen_endo(jhat, s1)
    js2 = apply_gen_endo(jhat, s2)
    b1 = nabla_bracket(conn, js1, js2)
    b2 = nabla_bracket(conn, js1, s2)
    b3 = nabla_bracket(conn, s1, js2)
    b4 = nabla_bracket(conn, s1, s2)
    comps = (
        b1.comps
        - ch.mat_vec(jhat, b2.comps)
        - ch.mat_vec(jhat, b3.comps)
        + ch.mat_vec(jhat_squared, b4.comps)
    )
    return GenSectionField(s1.chart, comps)


# ------------------------------------------------------------------
# The D = nabla^g + F system with the semi-symmetric metric F
# ------------------------------------------------------------------


@dataclass(frozen=True)
class KaramanData:
    """Connection D = Levi-Civita + F built from a 1-form omega."""

    omega: ch.OneFormField
    base: ch.ConnectionField  # Levi-Civita of g
    F: np.ndarray             # (1,2) tensor, [k, i, j]
    D: ch.ConnectionField


def karaman_connection(
    g: ch.MetricField,
    J: ch.EndoField,
    params: MetallicParams,
    omega: ch.OneFormField,
    base: ch.ConnectionField | None = None,
    ginv: np.ndarray | None = None,
) -> KaramanData:
    """Assemble F and D; F is the display

    F(X_i, X_j) = w(X_j) X_i - w(X_l) g^{lk} g_{ij} X_k
                  + (1/q) w(JX_j) JX_i - (1/q) w(JX_l) g^{lk} J^s_j g_{is} X_k.
    """
    if params.q == 0:
        raise ZeroQ("the semi-symmetric connection needs q != 0")
    chart = g.chart
    n = chart.dim
    if base is None:
        base = ch.christoffel(g)
    if ginv is None:
        ginv = ch.inverse_metric(g)
    w = omega.comps
    inv_q = ex.const(1.0 / params.q)
    sharp_w = ch.mat_vec(ginv, w)
    wj = np.empty(n, dtype=object)  # (w J)_j = w_s J^s_j
    for j in range(n):
        wj[j] = ex.balanced_sum(w[s] * J.comps[s, j] for s in range(n))
    sharp_wj = ch.mat_vec(ginv, wj)
    gj = ch.mat_mul(g.comps, J.comps)
    F = np.empty((n, n, n), dtype=object)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                terms = []
                if k == i:
                    terms.append(w[j])
                terms.append(-(sharp_w[k] * g.comps[i, j]))
                terms.append(inv_q * (wj[j] * J.comps[k, i]))
                terms.append(-(inv_q * (sharp_wj[k] * gj[i, j])))
                F[k, i, j] = ex.balanced_sum(terms)
    D = np.empty((n, n, n), dtype=object)
    for idx in np.ndindex(n, n, n):
        D[idx] = base.comps[idx] + F[idx]
    return KaramanData(omega, base, F, ch.ConnectionField(chart, D))


def torsion_formula_D(
    J_at: np.ndarray, params: MetallicParams, omega_at: np.ndarray, X, Y
) -> np.ndarray:
    """Closed form T^D(X,Y) = w(Y)X - w(X)Y + (w(JY)JX - w(JX)JY)/q at a point."""
    if params.q == 0:
        raise ZeroQ("the closed torsion form needs q != 0")
    J_at = np.asarray(J_at, dtype=float)
    w = np.asarray(omega_at, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    jx, jy = J_at @ X, J_at @ Y
    return (
        (w @ Y) * X
        - (w @ X) * Y
        + ((w @ jy) * jx - (w @ jx) * jy) / params.q
    )


def torsion_closed_form_values(
    J_at: np.ndarray, params: MetallicParams, omega_at: np.ndarray
) -> np.ndarray:
    """Closed-form torsion on coordinate fields, [m, k, i, j]."""
    if params.q == 0:
        raise ZeroQ("the closed torsion form needs q != 0")
    m, n, _ = J_at.shape
    eye = np.eye(n)
    wj = np.einsum("ms,msj->mj", omega_at, J_at)
    out = (
        np.einsum("mj,ki->mkij", omega_at, eye)
        - np.einsum("mi,kj->mkij", omega_at, eye)
        + (
            np.einsum("mj,mki->mkij", wj, J_at)
            - np.einsum("mi,mkj->mkij", wj, J_at)
        )
        / params.q
    )
    return out


def phi_of_torsion(T_at: np.ndarray, J_at: np.ndarray) -> np.ndarray:
    """Phi(T)(d_i, d_j) = -T(Jd_i,Jd_j) + JT(Jd_i,d_j) + JT(d_i,Jd_j) - J^2 T(d_i,d_j).

    Arrays carry a leading sample axis; output indexed [m, k, i, j].
    """
    K = np.einsum("mks,msj->mkj", J_at, J_at)
    return (
        -np.einsum("mkab,mai,mbj->mkij", T_at, J_at, J_at)
        + np.einsum("mks,msaj,mai->mkij", J_at, T_at, J_at)
        + np.einsum("mks,msib,mbj->mkij", J_at, T_at, J_at)
        - np.einsum("mks,msij->mkij", K, T_at)
    )


def covariant_nijenhuis_rhs(
    DJ_at: np.ndarray, T_at: np.ndarray, J_at: np.ndarray
) -> np.ndarray:
    """(nabla_{JX}J)Y - (nabla_{JY}J)X + J(nabla_Y J)X - J(nabla_X J)Y + Phi(T)."""
    return (
        np.einsum("mai,makj->mkij", J_at, DJ_at)
        - np.einsum("maj,maki->mkij", J_at, DJ_at)
        + np.einsum("mks,mjsi->mkij", J_at, DJ_at)
        - np.einsum("mks,misj->mkij", J_at, DJ_at)
        + phi_of_torsion(T_at, J_at)
    )


# ------------------------------------------------------------------
# Dhat on TM + T*M
# ------------------------------------------------------------------


def gen_connection_matrix(conn: ch.ConnectionField, direction: int) -> np.ndarray:
    """Omega_i = blockdiag(D_i, -D_i^T) with (D_i)^s_a = Gamma^s_{ia}."""
    n = conn.chart.dim
    gamma = conn.comps
    out = np.empty((2 * n, 2 * n), dtype=object)
    zero = ex.const(0.0)
    out[:, :] = zero
    for s in range(n):
        for a in range(n):
            out[s, a] = gamma[s, direction, a]
            out[n + s, n + a] = -gamma[a, direction, s]
    return out


def _partial_matrix(mat: np.ndarray, direction: int) -> np.ndarray:
    out = np.empty(mat.shape, dtype=object)
    for idx in np.ndindex(mat.shape):
        out[idx] = ex.differentiate(mat[idx], direction)
    return out


def dhat_endo(conn: ch.ConnectionField, jhat: np.ndarray, direction: int) -> np.ndarray:
    """(Dhat_i Jhat) = d_i Jhat + Omega_i Jhat - Jhat Omega_i, an Expr matrix."""
    omega = gen_connection_matrix(conn, direction)
    return (
        _partial_matrix(jhat, direction)
        + ch.mat_mul(omega, jhat)
        - ch.mat_mul(jhat, omega)
    )


def dhat_metric(conn: ch.ConnectionField, ghat: np.ndarray, direction: int) -> np.ndarray:
    """(Dhat_i ghat) = d_i ghat - Omega_i^T ghat - ghat Omega_i."""
    omega = gen_connection_matrix(conn, direction)
    return (
        _partial_matrix(ghat, direction)
        - ch.mat_mul(omega.T, ghat)
        - ch.mat_mul(ghat, omega)
    )


# ------------------------------------------------------------------
# Integrability conditions for the product / complex structures
# ------------------------------------------------------------------


@dataclass
class ConditionInputs:
    """Evaluated constituents at the samples; all arrays lead with m."""

    g: np.ndarray    # [m, i, j]
    ginv: np.ndarray
    J: np.ndarray    # [m, i, j] = J^i_j
    K: np.ndarray    # J^2
    Dg: np.ndarray   # [m, k, i, j] = (nabla_k g)_{ij}
    DJ: np.ndarray   # [m, k, i, j] = (nabla_k J)^i_j
    DK: np.ndarray   # [m, k, i, j] = (nabla_k J^2)^i_j
    T: np.ndarray    # [m, k, i, j]
    NJ: np.ndarray   # [m, k, i, j]

    @property
    def eye(self) -> np.ndarray:
        n = self.J.shape[-1]
        return np.broadcast_to(np.eye(n), self.J.shape)


def _ddg(ci: ConditionInputs) -> np.ndarray:
    """(d^nabla g)(d_i, d_j)_c = (nabla_i g)_{jc} - (nabla_j g)_{ic} + g_{cs} T^s_{ij}."""
    return (
        ci.Dg
        - ci.Dg.transpose(0, 2, 1, 3)
        + np.einsum("mcs,msij->mijc", ci.g, ci.T)
    )


def _conditions(ci: ConditionInputs, sign: float) -> list:
    """The six displayed conditions; sign=-1 uses A = I - J^2 (product case),
    sign=+1 uses A = I + J^2 (complex case), with the matching term signs."""
    A = ci.eye + sign * ci.K
    ddg = _ddg(ci)
    dgasym = ci.Dg - ci.Dg.transpose(0, 2, 1, 3)

    c1 = ci.NJ - (-sign) * np.einsum("mka,mac,mijc->mkij", A, ci.ginv, ddg)

    c2 = (
        np.einsum("mai,majc->mcij", ci.J, ci.Dg)
        - np.einsum("maj,maic->mcij", ci.J, ci.Dg)
        + np.einsum("mijs,msc->mcij", dgasym, ci.J)
        + np.einsum("mcs,mjsi->mcij", ci.g, ci.DJ)
        - np.einsum("mcs,misj->mcij", ci.g, ci.DJ)
        + np.einsum("mcs,msib,mbj->mcij", ci.g, ci.T, ci.J)
        + np.einsum("mcs,msaj,mai->mcij", ci.g, ci.T, ci.J)
    )

    ddg_u = (
        np.einsum("mbj,mbic->mcij", A, ci.Dg)
        - np.einsum("mibc,mbj->mcij", ci.Dg, A)
        + np.einsum("mcs,msbi,mbj->mcij", ci.g, ci.T, A)
    )
    t_jy = np.einsum("mst,mtj,misc->mcij", ci.g, ci.J, ci.DJ)
    t_jx = np.einsum("mai,msj,masc->mcij", ci.J, ci.g, ci.DJ)
    c3 = ddg_u + sign * t_jy - sign * t_jx

    c4 = np.einsum("mai,msj,masc->mcij", A, ci.g, ci.DJ) - np.einsum(
        "maj,msi,masc->mcij", A, ci.g, ci.DJ
    )

    inner5 = np.einsum("mai,majc->mcij", A, ci.Dg) - np.einsum(
        "maj,maic->mcij", A, ci.Dg
    )
    c5 = (
        np.einsum("mai,makj->mkij", A, ci.DK)
        - np.einsum("maj,maki->mkij", A, ci.DK)
        - sign * np.einsum("mkab,mai,mbj->mkij", ci.T, A, A)
        - np.einsum("mkb,mbc,mcij->mkij", A, ci.ginv, inner5)
    )

    inner6 = np.einsum("mai,majc->mcij", ci.J, ci.Dg) - np.einsum(
        "miac,maj->mcij", ci.Dg, ci.J
    )
    c6 = (
        -np.einsum("mai,makj->mkij", ci.J, ci.DK)
        + sign * np.einsum("maj,maki->mkij", A, ci.DJ)
        - sign * np.einsum("mikj->mkij", ci.DJ)
        + np.einsum("mks,misj->mkij", ci.J, ci.DK)
        - np.einsum("mks,misj->mkij", ci.K, ci.DJ)
        + sign * np.einsum("mkb,mbc,mcij->mkij", A, ci.ginv, inner6)
        + sign * np.einsum("mkab,mai,mbj->mkij", ci.T, ci.J, A)
        - sign * np.einsum("mks,msib,mbj->mkij", ci.J, ci.T, A)
    )
    return [c1, c2, c3, c4, c5, c6]


def jp_condition_residuals(ci: ConditionInputs) -> list:
    """Six conditions equivalent to nabla-integrability of the product structure."""
    return _conditions(ci, sign=-1.0)


def jc_condition_residuals(ci: ConditionInputs) -> list:
    """Six conditions equivalent to nabla-integrability of the complex structure."""
    return _conditions(ci, sign=+1.0)


def _reduced_common(ci: ConditionInputs) -> list:
    r1 = ci.NJ
    r2 = np.einsum("mjki->mkij", ci.DJ) - np.einsum("mikj->mkij", ci.DJ)
    # (nabla_X J*) J* - (nabla_{JX} J*), as a map on one-forms, [m, i, t, c]
    r3 = np.einsum("mts,misc->mitc", ci.J, ci.DJ) - np.einsum(
        "mai,matc->mitc", ci.J, ci.DJ
    )
    return [r1, r2, r3]


def _reduced_tail(ci: ConditionInputs, A: np.ndarray) -> list:
    r4 = np.einsum("mai,msj,masc->mcij", A, ci.g, ci.DJ) - np.einsum(
        "maj,msi,masc->mcij", A, ci.g, ci.DJ
    )
    r5 = np.einsum("mai,makj->mkij", A, ci.DK) - np.einsum(
        "maj,maki->mkij", A, ci.DK
    )
    return [r4, r5]


def _reduced_final(ci: ConditionInputs, A: np.ndarray, flip: float) -> np.ndarray:
    """-(nabla_{JX}J^2)Y ± (nabla_{A Y}J)X ∓ (nabla_X J)Y + J(nabla_X J^2)Y - J^2(nabla_X J)Y."""
    return (
        -np.einsum("mai,makj->mkij", ci.J, ci.DK)
        + flip * np.einsum("maj,maki->mkij", A, ci.DJ)
        - flip * np.einsum("mikj->mkij", ci.DJ)
        + np.einsum("mks,misj->mkij", ci.J, ci.DK)
        - np.einsum("mks,misj->mkij", ci.K, ci.DJ)
    )


def jp_reduced_residuals(ci: ConditionInputs) -> list:
    """The displayed torsion-free reduction for the product case (7 entries,
    the final two kept verbatim even though they nearly coincide)."""
    a_minus = ci.eye - ci.K
    a_plus = ci.eye + ci.K
    out = _reduced_common(ci) + _reduced_tail(ci, a_minus)
    out.append(_reduced_final(ci, a_minus, flip=-1.0))
    out.append(_reduced_final(ci, a_plus, flip=+1.0))
    return out


def jc_reduced_residuals(ci: ConditionInputs) -> list:
    """The displayed torsion-free reduction for the complex case (6 entries)."""
    a_plus = ci.eye + ci.K
    out = _reduced_common(ci) + _reduced_tail(ci, a_plus)
    out.append(_reduced_final(ci, a_plus, flip=+1.0))
    return out
