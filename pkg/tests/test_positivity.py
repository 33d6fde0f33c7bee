import numpy as np
import pytest

from keb_lab.channels import (
    ChannelRep,
    compose,
    compose_transpose,
    identity_map,
    phi_lambda,
    random_cp_map,
    schur_map,
    trace_map,
    transpose_map,
    werner_holevo,
    ad_v,
)
from keb_lab.linalg import BipartiteOperator, ToleranceProfile, kron, random_psd
from keb_lab.positivity import (
    block_positivity,
    equivariance_spot_check,
    equivariant_k_positive,
    is_cp,
    is_k_positive,
    is_positive_map,
    is_ppt_map,
    principal_block,
    verify_block_witness,
    verify_positivity_witness,
)
from keb_lab.schmidt import schmidt_rank


def reduction(lam, d):
    """X -> tr(X) I - lam X, i.e. T o W_lam; equivariant with V = U."""
    return ChannelRep(d, d, choi=compose_transpose(werner_holevo(lam, d), "after").choi, equivariant=True)


def opaque(phi):
    """Same map with the family information stripped."""
    return ChannelRep(phi.dim_in, phi.dim_out, choi=phi.choi)


def test_is_positive_map_examples():
    cert = is_positive_map(werner_holevo(2, 2))
    assert cert.fails
    assert cert.evidence["value"] == pytest.approx(-1)
    assert verify_positivity_witness(werner_holevo(2, 2), cert)
    assert is_positive_map(identity_map(3)).holds
    cert = is_positive_map(phi_lambda(-0.6, 3))
    assert cert.fails
    assert cert.evidence["value"] == pytest.approx(1 + 2 * -0.6)


@pytest.mark.parametrize("lam", [2.0, 1.05])
def test_positivity_search_finds_witness_without_family(lam):
    phi = opaque(werner_holevo(lam, 3))
    cert = is_positive_map(phi)
    assert cert.fails
    assert cert.evidence["value"] == pytest.approx(1 - lam)
    assert verify_positivity_witness(phi, cert)


def test_positivity_search_unknown_when_positive():
    cert = is_positive_map(opaque(phi_lambda(-0.49, 3)))
    assert cert.unknown
    assert is_positive_map(phi_lambda(-0.49, 3)).holds


def test_transpose_is_positive_not_cp():
    assert is_positive_map(transpose_map(3)).holds
    assert is_cp(transpose_map(2)).fails
    assert is_cp(transpose_map(2)).evidence["eigenvalue"] == pytest.approx(-1)


def test_schur_positivity():
    a = np.array([[1, 2], [2, 1]], dtype=complex)
    cert = is_positive_map(schur_map(a))
    assert cert.fails and verify_positivity_witness(schur_map(a), cert)
    assert is_positive_map(schur_map(np.eye(2))).holds


def test_is_cp_examples():
    assert is_cp(identity_map(3)).holds
    cert = is_cp(werner_holevo(1.05, 3))
    assert cert.fails
    assert cert.evidence["eigenvalue"] == pytest.approx(-0.05)


def test_is_ppt_map_examples():
    assert is_ppt_map(trace_map(3)).holds
    cert = is_ppt_map(identity_map(2))
    assert cert.fails and cert.evidence["eigenvalue"] == pytest.approx(-1)
    for lam in np.linspace(-1.2, 0.6, 19):
        expected = -1 - 1e-9 <= lam <= 1 / 3 + 1e-9
        assert is_ppt_map(werner_holevo(lam, 3)).holds == expected, lam


def test_block_positivity_trivial():
    c = BipartiteOperator(np.eye(9), 3, 3)
    for k in (1, 2, 3):
        assert not block_positivity(c, k).fails
    assert block_positivity(c, 3).holds


@pytest.mark.parametrize("d", [3, 4])
def test_block_positivity_reduction_threshold(d):
    for k in range(1, d):
        lam = 1 / k + 0.05
        c = reduction(lam, d).choi
        cert = block_positivity(c, k)
        assert cert.fails
        assert cert.evidence["schmidt_rank"] <= k
        assert cert.evidence["value"] == pytest.approx(1 - lam * k, abs=1e-8)
        assert verify_block_witness(c, cert)
        assert not block_positivity(reduction(1 / k, d).choi, k).fails


def test_block_positivity_werner_is_cp_so_never_fails():
    # W_lam is CP for |lam| <= 1, so no Schmidt-rank-k witness exists
    for k in (2, 3):
        assert not block_positivity(werner_holevo(1 / k + 0.05, 4).choi, k).fails


def test_block_positivity_full_rank_agrees_with_is_cp(rng):
    for _ in range(100):
        g = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = g + g.conj().T + rng.uniform(0, 8) * np.eye(6)
        phi = ChannelRep(2, 3, choi=h)
        assert block_positivity(phi.choi, 2).holds == is_cp(phi).holds


def test_block_positivity_clamps_k():
    cert = block_positivity(BipartiteOperator(np.eye(6), 2, 3), 5)
    assert "k_clamped" in cert.flags and cert.holds


def test_block_positivity_monotone_with_hint():
    c = reduction(0.55, 4).choi
    cert = block_positivity(c, 2)
    assert cert.fails
    for k in (3, 4):
        again = block_positivity(c, k, hints=[cert.evidence["vector"]])
        assert again.fails


def test_block_search_deterministic():
    c = reduction(0.6, 4).choi
    a = block_positivity(c, 2, ToleranceProfile(seed=5))
    b = block_positivity(c, 2, ToleranceProfile(seed=5))
    np.testing.assert_array_equal(a.evidence["vector"], b.evidence["vector"])


def test_equivariant_k_positive_examples():
    cert = equivariant_k_positive(reduction(0.5, 4), 2)
    assert cert.holds and cert.evidence["eigenvalue"] == pytest.approx(0, abs=1e-12)
    cert = equivariant_k_positive(reduction(0.4, 4), 3)
    assert cert.fails and cert.evidence["eigenvalue"] == pytest.approx(1 - 0.4 * 3)
    phi = reduction(0.7, 3)
    k1 = equivariant_k_positive(phi, 1)
    e11 = phi.apply(np.diag([1, 0, 0]).astype(complex))
    assert k1.evidence["eigenvalue"] == pytest.approx(np.linalg.eigvalsh(e11).min())


def test_equivariance_spot_check():
    assert equivariance_spot_check(werner_holevo(0.3, 3))
    assert equivariance_spot_check(identity_map(3))
    assert equivariance_spot_check(transpose_map(3))
    assert equivariance_spot_check(trace_map(3))
    assert equivariance_spot_check(reduction(0.3, 3))
    # only orthogonally covariant
    assert not equivariance_spot_check(phi_lambda(0.3, 3))


def test_false_equivariance_claim_is_downgraded():
    phi = ChannelRep(3, 3, choi=phi_lambda(0.3, 3).choi, equivariant=True)
    cert = equivariant_k_positive(phi, 2)
    assert "equivariance_not_confirmed" in cert.flags


def test_principal_block_examples(rng):
    c = werner_holevo(0.3, 3).choi
    np.testing.assert_allclose(principal_block(c, [0, 1, 2]).matrix, c.matrix)
    p = np.eye(3)[:2]
    via_map = compose(werner_holevo(0.3, 3), ad_v(p)).choi.matrix
    np.testing.assert_allclose(principal_block(c, [0, 1]).matrix, via_map, atol=1e-12)
    phi = random_cp_map(3, 2, rng)
    blk = principal_block(phi.choi, [1])
    np.testing.assert_allclose(blk.matrix, phi.apply(np.diag([0, 1, 0]).astype(complex)), atol=1e-12)


def test_principal_block_rotated_basis(rng):
    u = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))[0]
    phi = random_cp_map(3, 2, rng)
    blk = principal_block(phi.choi, [2, 0], u)
    f = u[:, [2, 0]]
    expected = compose(phi, ad_v(f.conj().T)).choi.matrix
    np.testing.assert_allclose(blk.matrix, expected, atol=1e-12)


def test_principal_block_index_errors():
    with pytest.raises(ValueError):
        principal_block(identity_map(2).choi, [0, 0])
    with pytest.raises(ValueError):
        principal_block(identity_map(2).choi, [2])


def test_w_half_composed_with_2peb_is_cp(rng):
    w = werner_holevo(0.5, 3)
    for _ in range(50):
        psi = random_cp_map(3, 3, rng, kraus_rank=3, max_rank=2)
        assert is_cp(compose(w, psi)).holds


def test_is_k_positive_routes():
    assert is_k_positive(werner_holevo(0.9, 3), 2).holds
    assert is_k_positive(reduction(0.6, 3), 2).fails
    cert = is_k_positive(opaque(reduction(0.6, 3)), 2)
    assert cert.fails and schmidt_rank(cert.evidence["vector"], 3, 3) <= 2
