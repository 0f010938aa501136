import math

import numpy as np
import pytest

from metalliclab import genbundle as gb
from metalliclab.errors import (
    DegenerateDiscriminant,
    DimensionMismatch,
    IncompatiblePair,
    SingularJacobian,
    SingularMetric,
)
from metalliclab.metallic import MetallicParams, random_compatible_pair

GOLDEN = (1 + math.sqrt(5)) / 2
PARAMS = MetallicParams(1.0, 1.0)

# frozen golden pointwise pair: g = I, J = diag(sigma, 1 - sigma)
G2 = np.eye(2)
J2 = np.diag([GOLDEN, 1 - GOLDEN])

# with sigma^2 = sigma + 1 the product-structure blocks collapse:
# (I - J^2) = -J and -J* = diag(-sigma, sigma - 1)
JP_GOLDEN = np.array(
    [
        [GOLDEN, 0.0, -GOLDEN, 0.0],
        [0.0, 1 - GOLDEN, 0.0, GOLDEN - 1],
        [1.0, 0.0, -GOLDEN, 0.0],
        [0.0, 1.0, 0.0, GOLDEN - 1],
    ]
)


def test_musical_isomorphisms():
    g = np.diag([1.0, 4.0])
    assert np.allclose(gb.musical_sharp(g, [0.0, 1.0]), [0.0, 0.25])
    assert np.allclose(gb.musical_flat(g, [1.0, 1.0]), [1.0, 4.0])
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.normal(size=(2, 2))
        gm = a.T @ a + 0.2 * np.eye(2)
        alpha = rng.normal(size=2)
        assert np.abs(gb.musical_flat(gm, gb.musical_sharp(gm, alpha)) - alpha).max() < 1e-12
    with pytest.raises(SingularMetric):
        gb.musical_sharp(np.zeros((2, 2)), [1.0, 0.0])


def test_ghat_matrix():
    assert np.allclose(gb.ghat_matrix(np.eye(2)), np.eye(4))
    got = gb.ghat_matrix(np.diag([1.0, 4.0]))
    assert np.allclose(np.diag(got), [1.0, 4.0, 1.0, 0.25])
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3))
    gm = a.T @ a + 0.2 * np.eye(3)
    ghat = gb.ghat_matrix(gm)
    for _ in range(100):
        v = rng.normal(size=6)
        if np.abs(v).max() > 1e-9:
            assert v @ ghat @ v > 0.0


def test_natural_pairing():
    rng = np.random.default_rng(2)
    for _ in range(20):
        sigma = gb.GenVector(rng.normal(size=2), rng.normal(size=2))
        assert gb.natural_pairing(sigma, sigma) == pytest.approx(0.0, abs=1e-15)

    x = gb.GenVector([1.0, 0.0], [0.0, 0.0])
    beta = gb.GenVector([0.0, 0.0], [1.0, 0.0])
    assert gb.natural_pairing(x, beta) == pytest.approx(0.5, abs=1e-15)

    # bilinearity on random triples
    for _ in range(20):
        s1 = gb.GenVector(rng.normal(size=2), rng.normal(size=2))
        s2 = gb.GenVector(rng.normal(size=2), rng.normal(size=2))
        t = gb.GenVector(rng.normal(size=2), rng.normal(size=2))
        a, b = rng.normal(size=2)
        combo = gb.GenVector(a * s1.X + b * s2.X, a * s1.alpha + b * s2.alpha)
        lhs = gb.natural_pairing(combo, t)
        rhs = a * gb.natural_pairing(s1, t) + b * gb.natural_pairing(s2, t)
        assert lhs == pytest.approx(rhs, abs=1e-12)
    # matrix form agrees
    M = gb.pairing_matrix(2)
    s1 = gb.GenVector([1.0, 2.0], [3.0, 4.0])
    s2 = gb.GenVector([-1.0, 0.5], [2.0, -3.0])
    assert gb.natural_pairing(s1, s2) == pytest.approx(s1.stacked @ M @ s2.stacked)


def test_block_structures_golden_case():
    jp = gb.build_jp(J2, G2)
    assert np.abs(jp - JP_GOLDEN).max() < 1e-12
    assert np.abs(jp @ jp - np.eye(4)).max() < 1e-12
    jc = gb.build_jc(J2, G2)
    assert np.abs(jc @ jc + np.eye(4)).max() < 1e-12
    assert np.abs(jc @ jp + jp @ jc).max() < 1e-12
    jm = gb.build_jm(J2, G2)
    assert np.abs(jm @ jm - PARAMS.p * jm - PARAMS.q * np.eye(4)).max() < 1e-12


def test_incompatible_pair_rejected():
    bad_J = np.array([[GOLDEN, 1.0], [0.0, 1 - GOLDEN]])
    g = np.diag([1.0, 3.0])
    with pytest.raises(IncompatiblePair):
        gb.build_jp(bad_J, g)


def test_structure_identities_on_random_pairs():
    rng = np.random.default_rng(7)
    for n in (2, 3, 4):
        for _ in range(100):
            g, J = random_compatible_pair(rng, n, PARAMS)
            eye = np.eye(2 * n)
            jm = gb.build_jm(J, g)
            jp = gb.build_jp(J, g)
            jc = gb.build_jc(J, g)
            ghat = gb.ghat_matrix(g)
            assert np.abs(jm @ jm - PARAMS.p * jm - PARAMS.q * eye).max() < 1e-10
            assert np.abs(jp @ jp - eye).max() < 1e-10
            assert np.abs(jc @ jc + eye).max() < 1e-10
            assert np.abs(jc @ jp + jp @ jc).max() < 1e-10
            sym = ghat @ jm
            assert np.abs(sym - sym.T).max() < 1e-10


def test_derived_family_identities():
    rng = np.random.default_rng(9)
    gap = 2 * PARAMS.sigma - PARAMS.p
    for n in (2, 3):
        for _ in range(25):
            g, J = random_compatible_pair(rng, n, PARAMS)
            fam = gb.derived_family(J, g, PARAMS)
            eye2n = np.eye(2 * n)
            jm = gb.build_jm(J, g)
            assert np.abs(fam.fhat_plus @ fam.fhat_plus - eye2n).max() < 1e-10
            assert np.abs(fam.fhat_minus @ fam.fhat_minus - eye2n).max() < 1e-10
            assert np.abs(fam.j_plus_of_fplus - jm).max() < 1e-10
            assert np.abs(fam.j_minus_of_fminus - jm).max() < 1e-10
            mirror = np.zeros((2 * n, 2 * n))
            mirror[:n, :n] = PARAMS.p * np.eye(n) - J
            mirror[n:, n:] = (PARAMS.p * np.eye(n) - J).T
            assert np.abs(fam.j_minus_of_fplus - mirror).max() < 1e-10
            assert np.abs(fam.j_plus_of_fminus - mirror).max() < 1e-10
            for cand in (fam.jm_plus, fam.jm_minus):
                res = cand @ cand - PARAMS.p * cand - PARAMS.q * eye2n
                assert np.abs(res).max() < 1e-11
            # corrected reading of the upper-right block: the printed form
            # -(pJ + (q-1)I) sharp misses the (2 sigma - p)/2 factor
            pjqi = PARAMS.p * J + (PARAMS.q - 1) * np.eye(n)
            ginv = np.linalg.inv(g)
            scale = max(1.0, np.abs(ginv).max())
            upper = fam.jm_plus[:n, n:]
            assert np.abs(upper + gap / 2.0 * pjqi @ ginv).max() < 1e-10 * scale
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = upper / (-(pjqi @ ginv))
            finite = ratio[np.isfinite(ratio)]
            if finite.size:
                assert np.allclose(finite, gap / 2.0, atol=1e-8)

    with pytest.raises(DegenerateDiscriminant):
        gb.derived_family(J2, G2, MetallicParams(2, -1))


def test_neutral_metric_block_form():
    # 2G = [[g, -J*], [-J, -(I - J^2) sharp]] for any compatible pair
    rng = np.random.default_rng(15)
    for n in (2, 3):
        g, J = random_compatible_pair(rng, n, PARAMS)
        G, _ = gb.neutral_metric_G(gb.build_jp(J, g))
        two_g = 2.0 * G
        assert np.abs(two_g[:n, :n] - g).max() < 1e-12
        assert np.abs(two_g[:n, n:] + J.T).max() < 1e-12
        assert np.abs(two_g[n:, :n] + J).max() < 1e-12
        expected = -(np.eye(n) - J @ J) @ np.linalg.inv(g)
        assert np.abs(two_g[n:, n:] - expected).max() < 1e-10


def test_neutral_metric_signature():
    jp = gb.build_jp(J2, G2)
    G, sig = gb.neutral_metric_G(jp)
    assert sig == (2, 2)
    assert np.abs(G - G.T).max() <= 1e-12
    # the proof device: congruence reduction gives the same signature
    assert gb.signature_by_congruence(G) == (2, 2)

    rng = np.random.default_rng(4)
    for n in (2, 3, 4):
        g, J = random_compatible_pair(rng, n, PARAMS)
        G, sig = gb.neutral_metric_G(gb.build_jp(J, g))
        assert sig == (n, n)
        assert gb.signature_by_congruence(G) == (n, n)


def test_calibration_checks():
    jp = gb.build_jp(J2, G2)
    jc = gb.build_jc(J2, G2)
    assert gb.check_anti_pseudo_calibrated(jp).residual < 1e-12
    calibrated = gb.check_calibrated(jc)
    assert calibrated.residual < 1e-12
    assert calibrated.details["min_eigenvalue"] > 0.0
    # the generalized metallic structure is NOT pairing-invariant
    jm = gb.build_jm(J2, G2)
    assert not gb.check_calibrated(jm).passed


def test_fhat_conjugation():
    jm = gb.build_jm(J2, G2)
    assert gb.fhat_conjugation(np.eye(2), jm, jm).passed
    # Df = J itself (invertible since q != 0)
    assert gb.fhat_conjugation(J2, jm, jm).passed
    # the push-forward form f(X + a) = f_* X + f_*^* a coincides with Jm
    fh2 = np.zeros((4, 4))
    fh2[:2, :2] = J2
    fh2[2:, 2:] = J2.T
    assert np.abs(fh2 - jm).max() < 1e-15

    theta = math.pi / 4
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    assert not gb.fhat_conjugation(rot, jm, jm).passed

    with pytest.raises(SingularJacobian):
        gb.fhat_matrix(np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        gb.fhat_matrix(np.zeros((2, 3)))


def test_degenerate_form_rejected():
    from metalliclab.errors import DegenerateForm

    with pytest.raises(DegenerateForm):
        gb.neutral_metric_G(np.zeros((4, 4)))


def test_endo_blocks():
    jp = gb.build_jp(J2, G2)
    blocks = gb.endo_blocks(jp)
    assert np.allclose(blocks.A, J2)
    assert np.allclose(blocks.C, G2)
    assert np.allclose(blocks.D, -J2.T)
    with pytest.raises(DimensionMismatch):
        gb.endo_blocks(np.zeros((3, 3)))


def test_gen_vector_validation():
    with pytest.raises(DimensionMismatch):
        gb.GenVector([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        gb.GenVector([np.inf, 0.0], [0.0, 0.0])
