from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from keb_lab.channels import (
    ChannelRep,
    direct_sum,
    identity_map,
    phi_lambda,
    trace_map,
    werner_holevo,
)
from keb_lab.errors import InvalidParameterError
from keb_lab.keb import keb_certify
from keb_lab.linalg import BipartiteOperator, kron, omega_projector, random_psd
from keb_lab.majorization import (
    SpectrumVector,
    choi_majorization,
    conditional_majorization_check,
    doubly_substochastic_check,
    keb_majorization_check,
    majorizes,
    substochastic_matrix,
    support_compress,
    weakly_majorizes,
)

vec = st.lists(st.floats(0, 10), min_size=1, max_size=6)


def random_separable(rng, d, n=6):
    x = np.zeros((d * d, d * d), dtype=complex)
    for w in rng.dirichlet(np.ones(n)):
        x += w * kron(random_psd(d, rng, 1), random_psd(d, rng, 1))
    return BipartiteOperator(x, d, d)


def test_spectrum_vector_sorted_and_padded():
    s = SpectrumVector((0.1, 3, 2))
    assert s.values == (3.0, 2.0, 0.1)
    np.testing.assert_array_equal(s.padded(5), [3, 2, 0.1, 0, 0])


def test_weak_majorization_examples():
    assert weakly_majorizes((1, 0), (0.5, 0.5)).holds
    cert = weakly_majorizes((0.5, 0.5), (1, 0))
    assert cert.fails and cert.evidence["index"] == 1
    assert weakly_majorizes((3,), (1, 1, 1)).holds


def test_majorization_examples():
    d = 4
    for p in ([1, 0, 0, 0], [0.4, 0.3, 0.2, 0.1]):
        assert majorizes(p, [1 / d] * d).holds
    assert majorizes((0.7, 0.2), (0.6, 0.4)).fails


def test_doubly_substochastic_examples():
    assert doubly_substochastic_check(np.full((3, 3), 1 / 3)).holds
    assert doubly_substochastic_check(np.eye(4)[[2, 0, 3, 1]]).holds
    cert = doubly_substochastic_check(np.array([[0.6, 0.5], [0.1, 0.2]]))
    assert cert.fails and cert.evidence["kind"] == "row"
    assert doubly_substochastic_check(np.array([[0.5, -0.1], [0.1, 0.2]])).fails
    with pytest.raises(InvalidParameterError):
        doubly_substochastic_check(np.array([[0.5, 0.1j]]))


@given(vec, vec)
def test_weak_majorization_matches_loops(a, b):
    assert weakly_majorizes(b, a).holds == oracles.weakly_majorizes_loops(b, a)


@given(vec, vec, vec)
def test_reflexive_and_transitive(a, b, c):
    assert weakly_majorizes(a, a).holds
    if weakly_majorizes(b, a).holds and weakly_majorizes(c, b).holds:
        assert oracles.weakly_majorizes_loops(c, a)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=4), st.lists(st.integers(0, 8), min_size=1, max_size=4))
def test_substochastic_formulation(xs, ys):
    x = [float(Fraction(v, 4)) for v in xs]
    y = [float(Fraction(v, 3)) for v in ys]
    d = substochastic_matrix(y, x)
    if weakly_majorizes(y, x).holds:
        assert d is not None
        assert doubly_substochastic_check(d, 1e-9).holds
        n = d.shape[0]
        np.testing.assert_allclose(d @ SpectrumVector(tuple(y)).padded(n), SpectrumVector(tuple(x)).padded(n), atol=1e-9)
    else:
        assert d is None


def test_separable_states_majorized_by_marginals(rng):
    for _ in range(50):
        x = random_separable(rng, 3)
        sx = SpectrumVector.of_matrix(x.matrix)
        for side in ("first", "second"):
            m = np.einsum("iaja->ij", x.tensor4()) if side == "second" else np.einsum("iaib->ab", x.tensor4())
            assert majorizes(SpectrumVector.of_matrix(m), sx).holds


# ------------------------------------------------------------ conditional

def test_conditional_separable_k1(rng):
    for _ in range(20):
        cert = conditional_majorization_check(random_separable(rng, 3), 1)
        assert cert.holds
        assert cert.evidence["sides"]["second"]["hypothesis"]
        assert cert.evidence["sides"]["second"]["conclusion"] == "HOLDS"


def test_conditional_maximally_entangled():
    x = BipartiteOperator(omega_projector(3), 3, 3)
    cert = conditional_majorization_check(x, 1)
    assert cert.unknown
    # tr_2 = I, so the hypothesis eigenvalue is 1 - <Omega|Omega> = 1 - 3
    assert cert.evidence["sides"]["second"]["hypothesis_min_eig"] == pytest.approx(-2)
    # the conclusion indeed fails: (3, 0, ...) is not weakly below (1, 1, 1)
    assert cert.evidence["sides"]["second"]["conclusion"] == "FAILS"
    # with k = d the hypothesis holds and so does the conclusion
    assert conditional_majorization_check(x, 3).holds


def test_transposed_hypothesis_would_not_suffice():
    # tr_2(X) (x) I - (id (x) T)(X) = I - swap is PSD for X = |Omega><Omega| although the conclusion fails
    x = BipartiteOperator(omega_projector(3), 3, 3)
    side = conditional_majorization_check(x, 1).evidence["sides"]["second"]
    assert side["transposed_form_min_eig"] == pytest.approx(0, abs=1e-12)
    assert side["conclusion"] == "FAILS"


def test_conditional_random_psd_k_equals_d(rng):
    for _ in range(30):
        x = BipartiteOperator(random_psd(9, rng), 3, 3)
        cert = conditional_majorization_check(x, 3)
        assert not cert.fails


def test_support_compression():
    x = BipartiteOperator(kron(np.diag([1, 0, 2]).astype(complex), np.eye(3)), 3, 3)
    y = support_compress(x)
    assert y.dims == (2, 3)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(y.matrix)), [1, 1, 1, 2, 2, 2])


# ----------------------------------------------------------------- k-EB

def keb_fixtures():
    out = []
    for d in (3, 4):
        for k in range(1, d + 1):
            for lam in np.linspace(-1, 1 / k, 5):
                out.append((werner_holevo(lam, d), k))
            if k >= 2:
                for lam in (-1 / (2 * k), -1 / (d + 1), 0.0, 0.5, 1.0):
                    out.append((phi_lambda(lam, d), k))
    out.append((direct_sum(werner_holevo(0.5, 3), trace_map(3, 2)), 2))
    out.append((trace_map(3), 3))
    return out


def test_keb_majorization_battery():
    count = 0
    for phi, k in keb_fixtures():
        if not keb_certify(phi, k).holds:
            continue
        if not phi.is_square:
            cert = choi_majorization(phi.choi, phi.dim_in - k + 1)
        else:
            cert = keb_majorization_check(phi, k)
        assert cert.holds, (phi, k)
        count += 1
    assert count > 60


def test_keb_majorization_examples():
    cert = keb_majorization_check(werner_holevo(0.5, 3), 2)
    assert cert.holds and cert.evidence["factor"] == 2
    assert keb_majorization_check(trace_map(3), 3).holds
    # non-CP certified point
    phi = phi_lambda(-0.24, 4)
    assert keb_majorization_check(phi, 2).holds
    with pytest.raises(InvalidParameterError):
        keb_majorization_check(identity_map(3), 2)


def test_majorization_detects_non_2eb():
    # identity on M_3: Choi spectrum (3, 0, ...) against (d - k + 1) = 2 times the flat marginal
    cert = choi_majorization(identity_map(3).choi, 2)
    assert cert.fails and cert.evidence["prefix"]["index"] == 1
    assert choi_majorization(identity_map(3).choi, 3).holds


def test_eb_maps_classical_case(rng):
    for _ in range(50):
        # Holevo form Phi(X) = sum_i tr(F_i X) R_i with F_i, R_i PSD
        c = np.zeros((9, 9), dtype=complex)
        for _ in range(4):
            c += kron(random_psd(3, rng, 1).T, random_psd(3, rng))
        phi = ChannelRep(3, 3, choi=c)
        assert choi_majorization(phi.choi, 1).holds
