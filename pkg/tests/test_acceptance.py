"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal summary)
or ``python3 tests/test_acceptance.py``.
"""

import functools
import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from keb_lab.channels import (  # noqa: E402
    ChannelRep,
    ad_v,
    adjoint,
    compose,
    map_of_choi,
    phi_lambda,
    random_cp_map,
    werner_holevo,
)
from keb_lab.cli import run  # noqa: E402
from keb_lab.keb import (  # noqa: E402
    keb_certify,
    keb_refute,
    map_power,
    verify_keb_refutation,
)
from keb_lab.linalg import (  # noqa: E402
    DEFAULT_TOL,
    BipartiteOperator,
    eigvalsh,
    kron,
    matrix_unit,
    nuclear_norm,
    omega_projector,
    partial_transpose,
    random_psd,
    random_unit_vector,
    realignment,
)
from keb_lab.majorization import choi_majorization, keb_majorization_check  # noqa: E402
from keb_lab.positivity import is_positive_map, is_ppt_map  # noqa: E402
from keb_lab.schmidt import sn_lower_bound  # noqa: E402
from keb_lab.separability import reverify_refutation, sep_certify, sep_necessary_inequality, sep_refute  # noqa: E402
from keb_lab.serialization import dumps, fixture_path, load_state, state_to_dict  # noqa: E402
from keb_lab.twirl import (  # noqa: E402
    TwirlCoefficients,
    twirl_cone_membership,
    twirl_monte_carlo,
    twirl_product_coeffs,
    twirl_project,
)

RESULTS: dict[int, tuple[str, str]] = {}
SEED = 20240611


def criterion(n: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[n] = ("FAIL", f"{title}: {type(exc).__name__}: {exc}".splitlines()[0])
                print(f"criterion {n:2d} FAIL  {title}")
                raise
            RESULTS[n] = ("PASS", title)
            print(f"criterion {n:2d} PASS  {title}")

        return inner

    return wrap


def opaque(phi):
    return ChannelRep(phi.dim_in, phi.dim_out, choi=phi.choi)


@criterion(1, "Werner-Holevo k-EB thresholds")
def test_criterion_01_werner_holevo_thresholds():
    start = time.perf_counter()
    for d in (3, 4):
        for k in range(2, d + 1):
            bad = werner_holevo(1 / k + 0.05, d)
            rep = keb_refute(bad, k)
            assert rep.fails, (d, k)
            assert verify_keb_refutation(bad, rep)
            assert keb_certify(werner_holevo(1 / k, d), k).holds
            assert keb_certify(werner_holevo(-1.0, d), k).holds
        for lam in (-1.0, -0.5, 0.0, 0.5, 1.0):
            ev = eigvalsh(werner_holevo(lam, d).choi.matrix)
            # Choi is I - lam * swap: eigenvalues 1 - lam (symmetric) and 1 + lam (antisymmetric)
            np.testing.assert_allclose(np.unique(np.round(ev, 8)), np.unique(np.round([1 - lam, 1 + lam], 8)), atol=1e-10)
            assert np.isclose(ev.min(), 1 - abs(lam), atol=1e-10)
        assert eigvalsh(werner_holevo(1.01, d).choi.matrix).min() < 0
        assert eigvalsh(werner_holevo(-1.01, d).choi.matrix).min() < 0
    assert time.perf_counter() - start < 30


@criterion(2, "Phi_lambda classification")
def test_criterion_02_phi_lambda():
    start = time.perf_counter()
    for d in (3, 4):
        assert is_positive_map(phi_lambda(-0.51, d)).fails
        assert is_positive_map(opaque(phi_lambda(-0.51, d))).fails
        assert not is_positive_map(opaque(phi_lambda(-0.49, d))).fails
        assert is_positive_map(phi_lambda(-0.49, d)).holds
    for d in (3, 4, 5):
        lo = -1 / (d + 1)
        for lam in (lo - 0.02, lo, -0.1, 0.0, 0.5, 1.0, 1.02):
            ev = eigvalsh(phi_lambda(lam, d).choi.matrix)
            expected = {1 + lam * (d + 1), 1 + lam, 1 - lam}
            assert all(min(abs(e - x) for x in expected) < 1e-10 for e in ev)
            assert (ev.min() >= -1e-10) == (lo - 1e-12 <= lam <= 1 + 1e-12), (d, lam)
        for lam in (lo, 1.0):
            cert = sep_certify(phi_lambda(lam, d).choi)
            assert cert.holds and cert.method == "twirl cone LP", (d, lam)
    assert time.perf_counter() - start < 30


@criterion(3, "twirl closed form vs Monte Carlo")
def test_criterion_03_twirl_monte_carlo():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED)
    for d in (2, 3):
        for i in range(10):
            x, y = random_unit_vector(d, rng), random_unit_vector(d, rng)
            a = BipartiteOperator(kron(np.outer(x, x.conj()), np.outer(y, y.conj())), d, d)
            exact, coeffs = twirl_project(a)
            mc = twirl_monte_carlo(a, 100_000, seed=i)
            assert np.linalg.norm(mc.matrix - exact.matrix) <= 5e-3, (d, i)
            np.testing.assert_allclose(twirl_product_coeffs(x, y, d).as_tuple(), coeffs.as_tuple(), atol=1e-10)
    assert time.perf_counter() - start < 120


@criterion(4, "twirl cone membership")
def test_criterion_04_twirl_cone():
    for d in (2, 3, 4):
        for lam in (-1 / (d + 1), 0.0, 1.0):
            coeffs = TwirlCoefficients(1.0, lam, lam)
            cert = twirl_cone_membership(coeffs, d)
            assert cert.holds, (d, lam)
            combo = cert.decomposition
            assert np.all(combo.weights >= 0)
            assert np.linalg.norm(combo.operator(d) - coeffs.operator(d)) <= DEFAULT_TOL.eps_sep


@criterion(5, "separability necessary inequalities")
def test_criterion_05_necessary_inequalities():
    rng = np.random.default_rng(SEED)
    d = 3
    for _ in range(100):
        x = np.zeros((9, 9), dtype=complex)
        for w in rng.dirichlet(np.ones(5)):
            x += w * kron(random_psd(d, rng, 1), random_psd(d, rng, 1))
        op = BipartiteOperator(x, d, d)
        for lam in (-0.5, 0.0, 1.0, 10.0):
            for side in ("first", "second"):
                cert = sep_necessary_inequality(op, lam, side)
                assert cert.holds and cert.evidence["eigenvalue"] >= -1e-9, (lam, side)
    omega = BipartiteOperator(omega_projector(2), 2, 2)
    for side in ("first", "second"):
        assert sep_necessary_inequality(omega, -0.5, side).fails


@criterion(6, "Schmidt-number reduction by 2-EB maps")
def test_criterion_06_sn_reduction():
    start = time.perf_counter()
    rng = np.random.default_rng(SEED)
    phi = werner_holevo(0.5, 3)
    assert keb_certify(phi, 2).holds
    for _ in range(20):
        v = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        v = v @ (rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
        assert np.linalg.matrix_rank(v) == 2
        psi = ad_v(v)
        assert sep_refute(psi.choi).fails  # Psi itself is not EB
        assert sep_certify(compose(phi, psi).choi).holds
    assert sep_certify(map_power(phi, 2).choi).holds
    assert time.perf_counter() - start < 120


@criterion(7, "Schmidt number bound after a 2-EB map")
def test_criterion_07_sn_bound():
    rng = np.random.default_rng(SEED)
    phi = werner_holevo(0.5, 3)
    violations = 0
    for _ in range(50):
        x = random_psd(9, rng)
        y = BipartiteOperator(oracles.apply_blockwise(phi.apply, x, 3, 3), 3, 3)
        violations += sn_lower_bound(y)[0] > 2
    assert violations == 0


def certified_fixtures():
    out = []
    for d in (3, 4):
        for k in range(1, d + 1):
            for lam in np.linspace(-1, 1 / k, 5):
                out.append((werner_holevo(lam, d), k))
            if k >= 2:
                for lam in (-1 / (2 * k), 0.0, 0.5, 1.0):
                    out.append((phi_lambda(lam, d), k))
            out.append((phi_lambda(-1 / (d + 1), d), d))
    from keb_lab.channels import direct_sum, trace_map

    out.append((direct_sum(werner_holevo(0.5, 3), werner_holevo(0.25, 3)), 2))
    out.append((direct_sum(werner_holevo(0.2, 2), trace_map(2)), 2))
    return out


@criterion(8, "majorization for certified k-EB maps")
def test_criterion_08_majorization():
    checked = 0
    for phi, k in certified_fixtures():
        assert keb_certify(phi, k).holds, (phi, k)
        if phi.is_square:
            cert = keb_majorization_check(phi, k)
        else:
            # direct sums X -> Phi_1(X) + Phi_2(X) land in a larger output space
            cert = choi_majorization(phi.choi, phi.dim_in - k + 1)
        assert cert.holds and cert.evidence["factor"] == phi.dim_in - k + 1
        checked += 1
    assert checked >= 60
    rng = np.random.default_rng(SEED)
    for _ in range(50):
        c = np.zeros((9, 9), dtype=complex)
        for _ in range(4):
            c += kron(random_psd(3, rng, 1).T, random_psd(3, rng))
        phi = map_of_choi(BipartiteOperator(c, 3, 3))
        assert choi_majorization(phi.choi, 1).holds


@criterion(9, "PPT versus EB separation fixtures")
def test_criterion_09_ppt_fixtures():
    x, _ = load_state(fixture_path("horodecki_2x4.json"))
    assert eigvalsh(x.matrix).min() >= -1e-12
    assert eigvalsh(partial_transpose(x, "second").matrix).min() >= -1e-12
    cert = sep_refute(x)
    assert cert.fails and reverify_refutation(x, cert)
    # realignment does not detect this state (nuclear norm below the trace), so the
    # refutation comes from the edge witness
    assert nuclear_norm(realignment(x)) < np.trace(x.matrix).real
    assert cert.method == "edge witness"
    psi = ChannelRep(2, 4, choi=x.matrix)
    phi = compose(psi, ad_v(np.vstack([np.eye(2), np.zeros((2, 2))]).astype(complex)))
    assert phi.dim_in == phi.dim_out == 4
    assert is_ppt_map(phi).holds
    rep = keb_refute(phi, 2)
    assert rep.fails and verify_keb_refutation(phi, rep)


@criterion(10, "infrastructure properties")
def test_criterion_10_infrastructure(tmp_path):
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        da, db = rng.integers(1, 5, size=2)
        phi = random_cp_map(int(da), int(db), rng)
        c = oracles.choi_from_function(phi.apply, int(da), int(db))
        assert np.abs(c - phi.choi.matrix).max() <= 1e-9
        back = map_of_choi(phi.choi)
        x = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
        assert np.abs(back.apply(x) - phi.apply(x)).max() <= 1e-9
    for _ in range(20):
        psi, phi = random_cp_map(2, 3, rng), random_cp_map(3, 4, rng)
        comp = compose(phi, psi)
        ref = oracles.choi_from_function(lambda m: phi.apply(psi.apply(m)), 2, 4)
        assert np.abs(comp.choi.matrix - ref).max() <= 1e-9
    for _ in range(20):
        phi = random_cp_map(3, 2, rng)
        star = adjoint(phi)
        for i in range(3):
            for j in range(3):
                for a in range(2):
                    for b in range(2):
                        lhs = np.trace(phi.apply(matrix_unit(3, i, j)).conj().T @ matrix_unit(2, a, b))
                        rhs = np.trace(matrix_unit(3, i, j).conj().T @ star.apply(matrix_unit(2, a, b)))
                        assert abs(lhs - rhs) <= 1e-12
    spec = tmp_path / "w.json"
    spec.write_text(json.dumps({"body": {"family": {"name": "WernerHolevo", "params": {"lambda": 0.6, "d": 3}}}}))
    first = run(["analyze", str(spec), "--seed", "5"])[0]
    assert first == run(["analyze", str(spec), "--seed", "5"])[0]
    state = tmp_path / "s.json"
    state.write_text(dumps(state_to_dict(load_state(fixture_path("horodecki_2x4.json"))[0])))
    a = run(["sep", str(state), "--seed", "9"])[0]
    assert a == run(["sep", str(state), "--seed", "9"])[0]


if __name__ == "__main__":
    import inspect
    import tempfile

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for t in tests:
        try:
            if "tmp_path" in inspect.signature(t).parameters:
                with tempfile.TemporaryDirectory() as tmp:
                    t(Path(tmp))
            else:
                t()
        except Exception:
            pass
    sys.exit(0 if all(s == "PASS" for s, _ in RESULTS.values()) and len(RESULTS) == 10 else 1)
