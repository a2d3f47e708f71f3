import numpy as np
import pytest

from ququart.core import QuquartState, fidelity
from ququart.errors import QuquartError, UnsupportedBasisError
from ququart.qkd import (BASES, DETECTOR_PAIRS, OPERATIONAL_BASES, alice_prepare, alice_recipe, best_tilt,
                         bob_measure, dichroic_pair, dichroic_thickness, intercept_resend, mub_states,
                         outcome_diagonal, outcome_probabilities, prepare_from_recipe, run_session, symbol_bits,
                         tilt_rates, tilt_scan, write_transcript)

R2 = 1 / np.sqrt(2)


def test_basis_one_is_computational():
    assert np.allclose(mub_states("I").matrix(), np.eye(4))


def test_dd_state():
    assert np.allclose(mub_states("II").states[0].c, [0.5] * 4)


def test_full_mub_overlaps():
    for a in BASES:
        for b in BASES:
            if a == b:
                continue
            ov = np.abs(mub_states(a).matrix().conj().T @ mub_states(b).matrix()) ** 2
            assert np.allclose(ov, 0.25, atol=1e-12), (a, b)


def test_unknown_basis():
    with pytest.raises(UnsupportedBasisError):
        mub_states("VI")


@pytest.mark.parametrize("basis", OPERATIONAL_BASES)
@pytest.mark.parametrize("symbol", range(4))
def test_recipe_prepares_state(basis, symbol):
    st = prepare_from_recipe(alice_recipe(basis, symbol))
    assert fidelity(st, alice_prepare(basis, symbol)) >= 1 - 1e-9


def test_recipe_examples():
    r = alice_recipe("I", 3)
    assert r.dichroic is None and r.zero_order is None
    r = alice_recipe("I", 1)
    assert np.allclose(r.dichroic, (np.pi / 2, np.pi))
    assert "22.5" in alice_recipe("II", 0).describe()
    assert fidelity(prepare_from_recipe(alice_recipe("II", 0)), [0.5] * 4) >= 1 - 1e-9


@pytest.mark.parametrize("basis", ["IV", "V"])
def test_entangled_bases_not_operational(basis):
    with pytest.raises(UnsupportedBasisError):
        alice_prepare(basis, 0)
    with pytest.raises(UnsupportedBasisError):
        alice_recipe(basis, 0)


def test_symbol_bits():
    assert [symbol_bits(k) for k in range(4)] == ["11", "10", "01", "00"]
    with pytest.raises(QuquartError):
        symbol_bits(4)


def test_detector_map_basis_one():
    rng = np.random.default_rng(0)
    assert bob_measure(QuquartState.basis("HH"), "I", rng) == "D4D2"
    assert [bob_measure(QuquartState.basis(l), "I", rng) for l in ("HV", "VH", "VV")] == ["D4D1", "D3D2", "D3D1"]


def test_rl_in_circular_basis():
    rl = alice_prepare("III", 1)
    assert np.allclose(outcome_probabilities(rl, "III"), [0, 1, 0, 0], atol=1e-12)
    assert bob_measure(rl, "III", 3) == "D4D1"


@pytest.mark.parametrize("basis", OPERATIONAL_BASES)
def test_deterministic_in_correct_basis(basis):
    for k in range(4):
        p = outcome_probabilities(alice_prepare(basis, k), basis)
        assert abs(p[k] - 1) < 1e-12


def test_wrong_basis_is_uniform():
    rng = np.random.default_rng(1)
    for a, b in [("I", "II"), ("II", "III"), ("III", "I")]:
        st = alice_prepare(a, 2)
        assert np.allclose(outcome_probabilities(st, b), 0.25, atol=1e-12)
        draws = [DETECTOR_PAIRS.index(bob_measure(st, b, rng)) for _ in range(10_000)]
        counts = np.bincount(draws, minlength=4)
        assert np.all(np.abs(counts - 2500) < 3 * np.sqrt(10_000 * 0.25 * 0.75))


def test_outcome_diagonal():
    assert np.allclose(outcome_diagonal([0, 220, 6, 0]), [0, 220 / 226, 6 / 226, 0])
    with pytest.raises(QuquartError):
        outcome_diagonal([0, 0, 0, 0])


def test_noiseless_sessions():
    r = run_session(10_000, seed=2)
    assert r.qber == 0 and r.key_alice == r.key_bob
    assert abs(r.sifted / r.sent - 1 / 3) < 3 * np.sqrt((1 / 3) * (2 / 3) / 10_000)
    r = run_session(1000, bases=["I"], seed=3)
    assert r.sifted == 1000 and r.qber == 0
    assert len(r.key_bits()) == 2000


def test_noiseless_any_seed():
    for seed in range(5):
        r = run_session(300, seed=seed)
        assert r.key_alice == r.key_bob


def test_depolarizing_qber():
    r = run_session(20_000, p=0.1, seed=4)
    sigma = np.sqrt(0.075 * 0.925 / r.sifted)
    assert abs(r.qber - 0.075) < 3 * sigma


def test_dark_counts_raise_qber():
    assert run_session(5000, dark_rate=0.2, seed=5).qber > 0.1


def test_intercept_resend_is_visible():
    r = run_session(6000, eve=intercept_resend(), seed=6)
    assert r.qber > 0.3


def test_session_validation():
    with pytest.raises(QuquartError):
        run_session(0)
    with pytest.raises(QuquartError):
        run_session(10, bases=[])
    with pytest.raises(UnsupportedBasisError):
        run_session(10, bases=["IV"])
    with pytest.raises(QuquartError):
        run_session(10, p=2)


def test_session_deterministic_and_transcript(tmp_path):
    a = run_session(500, seed=7, transcript=True)
    b = run_session(500, seed=7)
    assert a.key_alice == b.key_alice and a.qber == b.qber
    assert len(a.transcript) == 500 and sum(r["sifted"] for r in a.transcript) == a.sifted
    path = tmp_path / "t.jsonl"
    write_transcript(a, path)
    assert len(path.read_text().splitlines()) == 500


def test_tilt_rates_examples():
    assert tilt_rates(np.pi / 2, 0) == (1, 1)
    assert tilt_rates(0, 0.3) == (0, 0)


def test_tilt_scan_has_maximum_in_range():
    scan = tilt_scan(dichroic_pair(), 702, 605, np.arange(0, 15.0001, 0.05))
    assert len(scan.theta_deg) == 301
    assert len(scan.coincidence_maxima()) >= 1
    t, c = best_tilt(dichroic_pair(), 702, 605)
    assert c >= scan.coincidence.max() - 1e-12


def test_dichroic_thickness_scan_near_design_value():
    h, mismatch = dichroic_thickness((np.pi / 2, np.pi), 702, 605)
    assert 3.3 < h < 3.5
    assert mismatch < 0.2
