import numpy as np
import pytest

from conftest import random_hermitian, spin_boson
from polaron_ccqme import generators as G
from polaron_ccqme import oracle
from polaron_ccqme.model import BathSpec, SuperOhmic, SystemSpec, gibbs_state


def _three_level():
    hop = np.array([[0, 0.5, 0.2j], [0.5, 0, 0.3], [-0.2j, 0.3, 0]])
    system = SystemSpec([0.0, 0.4, -0.3], hop, [1.0, 0.0, -0.5])
    return system, BathSpec(1.5, SuperOhmic(0.2))


@pytest.fixture(scope="module")
def models():
    out = {}
    for name, (system, bath) in {"sb": spin_boson(0.3, 1.0), "3lvl": _three_level()}.items():
        for frame in ("polaron", "original"):
            out[name, frame] = G.build_model(system, bath, frame)
    return out


def test_vectorization_is_column_stacking(rng):
    h = random_hermitian(rng, 3)
    x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.array_equal(G.vec(x), x.T.ravel())
    assert np.array_equal(G.unvec(G.vec(x)), x)
    assert np.allclose(G.commutator_superop(h) @ G.vec(x), G.vec(-1j * (h @ x - x @ h)))
    u = np.linalg.eigh(h)[1]
    assert np.allclose(G.basis_change(u) @ G.vec(x), G.vec(u.conj().T @ x @ u))


@pytest.mark.parametrize("kind", G.KINDS)
def test_zero_coupling_gives_unitary_generator(kind):
    system, bath = spin_boson(0.0, 1.0)
    L = G.liouvillian(kind, system=system, bath=bath)
    h = np.array([[1, 1], [1, -1]], dtype=complex)
    assert np.allclose(L.matrix, G.commutator_superop(h), atol=1e-14)


@pytest.mark.parametrize("name", ["sb", "3lvl"])
@pytest.mark.parametrize("kind", G.KINDS)
def test_trace_annihilation_and_hermiticity(models, rng, name, kind):
    frame = "polaron" if kind.startswith("pt-") else "original"
    L = G.liouvillian(kind, models[name, frame])
    n = L.dim
    samples = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(4)]
    assert L.trace_leakage() < 1e-10
    assert L.hermiticity_error(samples) < 1e-10


@pytest.mark.parametrize("name", ["sb", "3lvl"])
@pytest.mark.parametrize("frame", ["polaron", "original"])
def test_detailed_balance_of_real_rates(models, name, frame):
    assert G.detailed_balance_residual(models[name, frame]) < 1e-10


@pytest.mark.parametrize("gamma,beta", [(0.1, 2.8), (0.3, 2.0), (1.0, 0.5)])
def test_general_tensors_match_spin_boson_closed_forms(gamma, beta):
    model = G.build_model(*spin_boson(gamma, beta))
    r = G.redfield_eigen(model)
    r_closed = G.four_index_to_matrix(G.spin_boson_redfield_closed(model))
    assert np.max(np.abs(r - r_closed)) <= 1e-12 * np.max(np.abs(r))
    q = G.q_mfg_tensor(model, r)
    q_closed = G.four_index_to_matrix(G.spin_boson_q_closed(model))
    q_gen = q.coherent + q.lindblad
    assert np.max(np.abs(q_gen - q_closed)) <= 1e-12 * np.max(np.abs(q_gen))


@pytest.mark.parametrize("name", ["sb", "3lvl"])
@pytest.mark.parametrize("frame", ["polaron", "original"])
def test_q_on_gibbs_matches_imaginary_time_expansion(models, name, frame):
    model = models[name, frame]
    q = G.q_mfg_tensor(model)
    ge = gibbs_state(np.diag(model.eig.energies), model.beta)
    mine = G.unvec((q.coherent + q.lindblad) @ G.vec(ge))
    # Q is not trace preserving; compare the traceless-renormalized action
    mine = mine - ge * np.trace(mine)
    assert np.max(np.abs(mine - oracle.mfg_correction_imaginary_time(model))) < 1e-5


@pytest.mark.parametrize("kind", G.KINDS)
def test_no_tunnelling_conserves_populations(kind):
    system, bath = spin_boson(0.4, 1.5, h=0.0)
    L = G.liouvillian(kind, system=system, bath=bath)
    rho = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]])
    d = L.apply(rho)
    assert np.allclose(np.diag(d), 0, atol=1e-14)


def test_q_zero_reduces_to_redfield(models):
    for frame, (cc, rf) in (("polaron", ("pt-ccqme", "pt-redfield")), ("original", ("ccqme", "redfield"))):
        m = models["sb", frame]
        a = G.liouvillian(cc, m, q_zero=True).matrix
        assert np.array_equal(a, G.liouvillian(rf, m).matrix)


def test_anomalous_channels_contribute():
    system, bath = spin_boson(0.3, 1.0)
    full = G.redfield_eigen(G.build_model(system, bath))
    normal = G.redfield_eigen(G.build_model(system, bath, drop_anomalous=True))
    assert np.linalg.norm(full - normal) > 1e-3 * np.linalg.norm(full)


def test_kind_frame_mismatch_rejected(models):
    with pytest.raises(ValueError):
        G.liouvillian("pt-ccqme", models["sb", "original"])
    with pytest.raises(ValueError):
        G.liouvillian("lindblad", models["sb", "original"])


def test_generator_set_per_frame(models):
    assert set(G.generator_set(models["sb", "polaron"])) == {"pt-ccqme", "pt-redfield"}
    assert set(G.generator_set(models["sb", "original"])) == {"redfield", "ccqme"}
