"""Pointwise algebra on TM + T*M: musical maps, block structures, pairings.

Everything here works on plain numpy matrices at a single point (or batches
with a leading sample axis); field-level statements are obtained by sampling.
Blocks of a 2n x 2n operator are laid out as

    [ A  B ]   A: TM -> TM,    B: T*M -> TM,
    [ C  D ]   C: TM -> T*M,   D: T*M -> T*M,

and the dual map J* is realised as the transpose of J in the coordinate
dual basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDiscriminant,
    DegenerateForm,
    DimensionMismatch,
    IncompatiblePair,
    SingularJacobian,
    SingularMetric,
)
from .metallic import MetallicParams
from .report import CheckResult

__all__ = [
    "GenVector",
    "musical_flat",
    "musical_sharp",
    "ghat_matrix",
    "pairing_matrix",
    "natural_pairing",
    "build_jm",
    "build_jp",
    "build_jc",
    "DerivedFamily",
    "derived_family",
    "neutral_metric_G",
    "signature_by_congruence",
    "check_anti_pseudo_calibrated",
    "EndoBlocks",
    "endo_blocks",
    "check_calibrated",
    "fhat_matrix",
    "fhat_conjugation",
]

_COMPAT_TOL = 1e-8


@dataclass(frozen=True)
class EndoBlocks:
    """Named blocks of a 2n x 2n operator on TM + T*M."""

    A: np.ndarray  # TM -> TM
    B: np.ndarray  # T*M -> TM
    C: np.ndarray  # TM -> T*M
    D: np.ndarray  # T*M -> T*M


def endo_blocks(mat: np.ndarray) -> EndoBlocks:
    mat = np.asarray(mat)
    if mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
        raise DimensionMismatch("generalized operators are 2n x 2n")
    n = mat.shape[0] // 2
    return EndoBlocks(mat[:n, :n], mat[:n, n:], mat[n:, :n], mat[n:, n:])


@dataclass(frozen=True)
class GenVector:
    """Element X + alpha of the generalized tangent space at a point."""

    X: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        alpha = np.asarray(self.alpha, dtype=float)
        if X.shape != alpha.shape or X.ndim != 1:
            raise DimensionMismatch("vector and covector parts must be n-vectors")
        if not (np.isfinite(X).all() and np.isfinite(alpha).all()):
            raise ValueError("GenVector entries must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "alpha", alpha)

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.X, self.alpha])


def _check_metric(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if abs(np.linalg.det(g)) < 1e-12:
        raise SingularMetric("metric is singular at this point")
    return g


def musical_flat(g: np.ndarray, X: np.ndarray) -> np.ndarray:
    """(flat X)_i = g_{ij} X^j."""
    return _check_metric(g) @ np.asarray(X, dtype=float)


def musical_sharp(g: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """(sharp alpha)^i = g^{ij} alpha_j."""
    return np.linalg.solve(_check_metric(g), np.asarray(alpha, dtype=float))


def ghat_matrix(g: np.ndarray) -> np.ndarray:
    """Block-diagonal (g, g^{-1}) metric on TM + T*M."""
    g = _check_metric(g)
    n = g.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = g
    out[n:, n:] = np.linalg.inv(g)
    return out


def pairing_matrix(n: int) -> np.ndarray:
    """Matrix of the natural symplectic pairing -(alpha(Y) - beta(X))/2."""
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = 0.5 * np.eye(n)
    out[n:, :n] = -0.5 * np.eye(n)
    return out


def natural_pairing(sigma: GenVector, tau: GenVector) -> float:
    return -0.5 * (float(sigma.alpha @ tau.X) - float(tau.alpha @ sigma.X))


def _require_compatible(g: np.ndarray, J: np.ndarray, tolerance: float):
    gj = g @ J
    gap = np.abs(gj - gj.T).max()
    if gap > tolerance:
        raise IncompatiblePair(f"gJ asymmetry {gap:.3e} exceeds {tolerance:g}")


def build_jm(J: np.ndarray, g: np.ndarray, tolerance: float = _COMPAT_TOL) -> np.ndarray:
    """Generalized metallic structure blockdiag(J, J*)."""
    J = np.asarray(J, dtype=float)
    g = _check_metric(g)
    _require_compatible(g, J, tolerance)
    n = J.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = J
    out[n:, n:] = J.T
    return out


def build_jp(J: np.ndarray, g: np.ndarray, tolerance: float = _COMPAT_TOL) -> np.ndarray:
    """Generalized product structure [[J, (I - J^2) sharp], [flat, -J*]]."""
    J = np.asarray(J, dtype=float)
    g = _check_metric(g)
    _require_compatible(g, J, tolerance)
    n = J.shape[0]
    ginv = np.linalg.inv(g)
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = J
    out[:n, n:] = (np.eye(n) - J @ J) @ ginv
    out[n:, :n] = g
    out[n:, n:] = -J.T
    return out


def build_jc(J: np.ndarray, g: np.ndarray, tolerance: float = _COMPAT_TOL) -> np.ndarray:
    """Generalized complex structure [[J, -(I + J^2) sharp], [flat, -J*]]."""
    J = np.asarray(J, dtype=float)
    g = _check_metric(g)
    _require_compatible(g, J, tolerance)
    n = J.shape[0]
    ginv = np.linalg.inv(g)
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = J
    out[:n, n:] = -(np.eye(n) + J @ J) @ ginv
    out[n:, :n] = g
    out[n:, n:] = -J.T
    return out


@dataclass(frozen=True)
class DerivedFamily:
    """Structures generated from one metallic pair via product conversions."""

    f_plus: np.ndarray
    f_minus: np.ndarray
    fhat_plus: np.ndarray
    fhat_minus: np.ndarray
    j_plus_of_fplus: np.ndarray   # +(2s-p)/2 Fhat^+ + p/2 I
    j_minus_of_fplus: np.ndarray  # -(2s-p)/2 Fhat^+ + p/2 I
    j_plus_of_fminus: np.ndarray
    j_minus_of_fminus: np.ndarray
    jm_plus: np.ndarray           # +(2s-p)/2 Jp + p/2 I
    jm_minus: np.ndarray


def derived_family(
    J: np.ndarray, g: np.ndarray, params: MetallicParams, tolerance: float = _COMPAT_TOL
) -> DerivedFamily:
    if params.discriminant <= 0:
        raise DegenerateDiscriminant(
            f"family needs p^2 + 4q > 0, got {params.discriminant}"
        )
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    gap = 2.0 * params.sigma - params.p
    f_plus = (2.0 * J - params.p * np.eye(n)) / gap
    f_minus = -f_plus
    eye2n = np.eye(2 * n)

    def blockdiag(F):
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = F
        out[n:, n:] = F.T
        return out

    fhat_plus = blockdiag(f_plus)
    fhat_minus = blockdiag(f_minus)
    half_gap = gap / 2.0
    shift = params.p / 2.0 * eye2n
    jp = build_jp(J, g, tolerance)
    return DerivedFamily(
        f_plus=f_plus,
        f_minus=f_minus,
        fhat_plus=fhat_plus,
        fhat_minus=fhat_minus,
        j_plus_of_fplus=half_gap * fhat_plus + shift,
        j_minus_of_fplus=-half_gap * fhat_plus + shift,
        j_plus_of_fminus=half_gap * fhat_minus + shift,
        j_minus_of_fminus=-half_gap * fhat_minus + shift,
        jm_plus=half_gap * jp + shift,
        jm_minus=-half_gap * jp + shift,
    )


def neutral_metric_G(jp: np.ndarray, threshold: float = 1e-10):
    """Symmetric form G(s, t) = (s, Jp t) and its signature (n_plus, n_minus)."""
    jp = np.asarray(jp, dtype=float)
    n2 = jp.shape[0]
    G = pairing_matrix(n2 // 2) @ jp
    G = 0.5 * (G + G.T)
    eigenvalues = np.linalg.eigvalsh(G)
    if np.abs(eigenvalues).min() < threshold:
        raise DegenerateForm(
            f"eigenvalue {np.abs(eigenvalues).min():.3e} below threshold {threshold:g}"
        )
    n_plus = int((eigenvalues > threshold).sum())
    n_minus = int((eigenvalues < -threshold).sum())
    return G, (n_plus, n_minus)


def signature_by_congruence(G: np.ndarray, threshold: float = 1e-10):
    """Signature via symmetric Gaussian reduction (congruence diagonalisation).

    Redundant cross-check for the eigensolve path; not used in production.
    """
    A = np.array(G, dtype=float)
    m = A.shape[0]
    order = []
    active = list(range(m))
    while active:
        k = max(active, key=lambda i: abs(A[i, i]))
        if abs(A[k, k]) < threshold:
            # try to create a non-zero diagonal entry from an off-diagonal one
            found = False
            for i in active:
                for j in active:
                    if i < j and abs(A[i, j]) >= threshold:
                        A[i, :] += A[j, :]
                        A[:, i] += A[:, j]
                        found = True
                        break
                if found:
                    break
            if not found:
                raise DegenerateForm("form is degenerate under congruence reduction")
            continue
        order.append(A[k, k])
        for i in active:
            if i == k:
                continue
            factor = A[i, k] / A[k, k]
            if factor != 0.0:
                A[i, :] -= factor * A[k, :]
                A[:, i] -= factor * A[:, k]
        active.remove(k)
    n_plus = sum(1 for d in order if d > 0)
    n_minus = sum(1 for d in order if d < 0)
    return n_plus, n_minus


def check_anti_pseudo_calibrated(jp: np.ndarray, tolerance: float = 1e-10) -> CheckResult:
    """(Jp s, Jp t) = -(s, t) and non-degeneracy of (., Jp .)."""
    jp = np.asarray(jp, dtype=float)
    n = jp.shape[0] // 2
    M = pairing_matrix(n)
    anti = np.abs(jp.T @ M @ jp + M).max()
    form = M @ jp
    form = 0.5 * (form + form.T)
    min_eig = np.abs(np.linalg.eigvalsh(form)).min()
    degenerate = 0.0 if min_eig > tolerance else tolerance * 2.0
    return CheckResult(
        "anti-pseudo-calibrated",
        "(Jp s, Jp t) = -(s, t); (., Jp .) non-degenerate",
        float(max(anti, degenerate)),
        tolerance,
        details={"anti_invariance": float(anti), "min_abs_eigenvalue": float(min_eig)},
    )


def check_calibrated(jc: np.ndarray, tolerance: float = 1e-10) -> CheckResult:
    """(Jc s, Jc t) = (s, t) and positive-definiteness of (., Jc .)."""
    jc = np.asarray(jc, dtype=float)
    n = jc.shape[0] // 2
    M = pairing_matrix(n)
    invariance = np.abs(jc.T @ M @ jc - M).max()
    form = M @ jc
    form = 0.5 * (form + form.T)
    min_eig = np.linalg.eigvalsh(form).min()
    not_pd = 0.0 if min_eig > tolerance else tolerance * 2.0
    return CheckResult(
        "calibrated",
        "(Jc s, Jc t) = (s, t); (., Jc .) positive definite",
        float(max(invariance, not_pd)),
        tolerance,
        details={"invariance": float(invariance), "min_eigenvalue": float(min_eig)},
    )


def fhat_matrix(df: np.ndarray) -> np.ndarray:
    """blockdiag(Df, (Df^T)^{-1}), the generalized push-forward of a map."""
    df = np.asarray(df, dtype=float)
    if df.ndim != 2 or df.shape[0] != df.shape[1]:
        raise DimensionMismatch("Df must be square for the generalized push-forward")
    if abs(np.linalg.det(df)) < 1e-12:
        raise SingularJacobian("Df is not invertible")
    n = df.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = df
    out[n:, n:] = np.linalg.inv(df.T)
    return out


def fhat_conjugation(
    df: np.ndarray, jm1: np.ndarray, jm2: np.ndarray, tolerance: float = 1e-10
) -> CheckResult:
    """Residual of fhat Jm1 = Jm2 fhat for fhat = blockdiag(Df, (Df^T)^{-1})."""
    fh = fhat_matrix(df)
    res = float(np.abs(fh @ np.asarray(jm1) - np.asarray(jm2) @ fh).max())
    return CheckResult(
        "fhat-conjugation",
        "fhat Jm1 = Jm2 fhat",
        res,
        tolerance,
    )
