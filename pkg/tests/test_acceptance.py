"""Acceptance gate: one marked group of checks per criterion.

Run ``pytest tests/test_acceptance.py -rA``; the terminal summary prints a
PASS/FAIL line per criterion.
"""

import numpy as np
import pytest

from ququart.core import (PHI_MINUS, PHI_PLUS, PSI_MINUS, PSI_PLUS, QuquartState, coherence_matrix, fidelity,
                          hermitian_eigvals_2x2, local_purity_invariant, polarization_degree_p4,
                          random_pure_state, random_product_state, reduced_density, separability_defect)
from ququart.optics import DICHROIC_SWAP, WavePlate, apply, prepare_psi_I, transform_from_retardances
from ququart.qkd import (OPERATIONAL_BASES, BASES, best_tilt, dichroic_pair, mub_states, outcome_diagonal,
                         run_session, tilt_scan)
from ququart.reconstruct import reconstruct
from ququart.reference_data import (CIRCULAR_BASIS_COUNTS, CIRCULAR_BASIS_DIAGONAL, THICK_PLATE,
                                    THICK_PLATE_SERIES, THIN_PLATE, THIN_PLATE_SERIES, plate_orientation)
from ququart.tomography import protocol1_amplitude, protocol1_settings, run_experiment

Re, Im = np.real, np.imag


# 1 --------------------------------------------------------------------------

def _listed_moments(k):
    A, B, C, D = k.A, k.B, k.C, k.D
    E, F, G, I, K, L = k.E, k.F, k.G, k.I, k.K, k.L
    S = A + B + C + D
    return [
        A / 4, B / 4, D / 4, C / 4,
        (A + C + 2 * Im(F)) / 8,
        (B + D + 2 * Im(K)) / 8,
        (B + D - 2 * Re(K)) / 8,
        (A + C - 2 * Re(F)) / 8,
        S / 16 - (Im(E) + Re(F) - Im(G) + Im(I) + Re(K) + Im(L)) / 8,
        S / 16 - (Re(F) - Re(E) + Re(G) + Re(I) + Re(K) - Re(L)) / 8,
        S / 16 + (Im(F) + Re(E) + Im(G) + Im(I) + Re(L) + Im(K)) / 8,
        (A + B + 2 * Re(E)) / 8,
        (C + D + 2 * Re(L)) / 8,
        (C + D + 2 * Im(L)) / 8,
        (A + B + 2 * Im(E)) / 8,
        S / 16 + (Im(F) + Im(E) - Re(G) + Re(I) + Im(L) + Im(K)) / 8,
    ]


@pytest.mark.criterion(1)
@pytest.mark.parametrize("row", range(16), ids=[f"row{k + 1}" for k in range(16)])
def test_moment_combinations(row, record_property):
    setting = protocol1_settings()[row]
    worst = 0.0
    for k in range(100):
        s = random_pure_state([101, row, k])
        rate = abs(protocol1_amplitude(setting, s)) ** 2
        worst = max(worst, abs(rate - _listed_moments(coherence_matrix(s))[row]))
    record_property("detail", f"max err {worst:.1e}")
    assert worst < 1e-10


# 2 --------------------------------------------------------------------------

_SERIES = [("thin", THIN_PLATE, r) for r in THIN_PLATE_SERIES] + \
          [("thick", THICK_PLATE, r) for r in THICK_PLATE_SERIES]


@pytest.mark.criterion(2)
@pytest.mark.parametrize("name,cfg,row", _SERIES, ids=[f"{n}-alpha{r.alpha_deg}" for n, _, r in _SERIES])
def test_predicted_vectors(name, cfg, row, record_property):
    plate = WavePlate(cfg["thickness_mm"], plate_orientation(row.alpha_deg))
    f = fidelity(prepare_psi_I(plate, *cfg["lambdas_nm"]), row.theory)
    record_property("detail", f"F={f:.4f}")
    assert f >= 0.99


# 3 --------------------------------------------------------------------------

@pytest.mark.criterion(3)
@pytest.mark.parametrize("name,cfg,row", _SERIES, ids=[f"{n}-alpha{r.alpha_deg}" for n, _, r in _SERIES])
def test_listed_fidelity_arithmetic(name, cfg, row, record_property):
    f = fidelity(row.theory, row.experiment)
    record_property("detail", f"F={f:.4f} vs {row.fidelity}")
    assert abs(f - row.fidelity) <= 0.005


# 4 --------------------------------------------------------------------------

_DICHROIC_BUILT = transform_from_retardances(np.pi / 2, np.pi, np.radians(45))


@pytest.mark.criterion(4)
@pytest.mark.parametrize("g", [DICHROIC_SWAP, _DICHROIC_BUILT], ids=["matrix", "from-plate"])
def test_bell_swap(g):
    pairs = [(PHI_PLUS, PSI_PLUS), (PHI_MINUS, PSI_MINUS), (PSI_PLUS, PHI_PLUS), (PSI_MINUS, PHI_MINUS)]
    for a, b in pairs:
        assert fidelity(apply(g, a), b) >= 1 - 1e-9
    assert fidelity(apply(g, QuquartState.basis("VV")), QuquartState.basis("HV")) >= 1 - 1e-9


@pytest.mark.criterion(4)
def test_plate_transform_matches_matrix_up_to_phase():
    ratio = _DICHROIC_BUILT[np.nonzero(DICHROIC_SWAP)] / DICHROIC_SWAP[np.nonzero(DICHROIC_SWAP)]
    assert np.allclose(ratio, ratio[0], atol=1e-12)
    assert np.allclose(_DICHROIC_BUILT[DICHROIC_SWAP == 0], 0, atol=1e-12)


# 5 --------------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_p4_not_invariant():
    vv = QuquartState.basis("VV")
    assert abs(polarization_degree_p4(vv) - 1) < 1e-10
    assert abs(polarization_degree_p4(apply(_DICHROIC_BUILT, vv))) < 1e-10


@pytest.mark.criterion(5)
def test_trace_and_local_purity_invariant(record_property):
    rng = np.random.default_rng(55)
    worst_tr = worst_inv = 0.0
    for k in range(1000):
        s = random_pure_state(rng)
        d1, d2 = rng.uniform(0, 2 * np.pi, 2)
        out = apply(transform_from_retardances(d1, d2, rng.uniform(0, np.pi)), s)
        worst_tr = max(worst_tr, abs(coherence_matrix(out).trace - 1))
        worst_inv = max(worst_inv, abs(local_purity_invariant(out) - local_purity_invariant(s)))
    record_property("detail", f"trace err {worst_tr:.1e}, invariant err {worst_inv:.1e}")
    assert worst_tr < 1e-10 and worst_inv < 1e-10


# 6 --------------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("protocol", ["P1", "P2"])
def test_noiseless_roundtrip(protocol, record_property):
    worst = 1.0
    for k in range(200):
        s = random_pure_state([606, k])
        res = reconstruct(run_experiment(s, protocol, noiseless=True), reference=s)
        worst = min(worst, res.fidelity)
    record_property("detail", f"min F={worst:.10f}")
    assert worst >= 1 - 1e-6


def _median_fidelity(protocol, total, trials=100, tag=0):
    fs = []
    for k in range(trials):
        s = random_pure_state([tag, k])
        rs = run_experiment(s, protocol, expected_total=total, seed=k)
        fs.append(reconstruct(rs, reference=s).fidelity)
    return float(np.median(fs))


@pytest.mark.criterion(6)
@pytest.mark.parametrize("protocol", ["P1", "P2"])
def test_poisson_median(protocol, record_property):
    med = _median_fidelity(protocol, 1e4, tag=607)
    record_property("detail", f"median F={med:.4f}")
    assert med >= 0.99


@pytest.mark.criterion(6)
def test_budget_ordering(record_property):
    meds = [_median_fidelity("P1", total, tag=608) for total in (1e5, 1e4, 1e3, 1e2)]
    record_property("detail", "medians " + ", ".join(f"{m:.4f}" for m in meds))
    assert all(a > b for a, b in zip(meds, meds[1:]))


# 7 --------------------------------------------------------------------------

def _eigs_are_pure(s):
    lo, hi = hermitian_eigvals_2x2(reduced_density(s, "second"))
    return abs(lo) < 1e-8 and abs(hi - 1) < 1e-8


@pytest.mark.criterion(7)
@pytest.mark.parametrize("kind", ["product", "entangled"])
def test_separability_equivalence(kind):
    rng = np.random.default_rng(77 if kind == "product" else 78)
    make = random_product_state if kind == "product" else random_pure_state
    for _ in range(1000):
        s = make(rng)
        assert (separability_defect(s) < 1e-10) == _eigs_are_pure(s)
        assert (separability_defect(s) < 1e-10) == (kind == "product")


# 8 --------------------------------------------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("index", BASES)
def test_mub_orthonormal(index):
    m = mub_states(index).matrix()
    assert np.max(np.abs(m.conj().T @ m - np.eye(4))) < 1e-12


@pytest.mark.criterion(8)
def test_mub_unbiased():
    for i, a in enumerate(OPERATIONAL_BASES):
        for b in OPERATIONAL_BASES[i + 1:]:
            ov = np.abs(mub_states(a).matrix().conj().T @ mub_states(b).matrix()) ** 2
            assert np.max(np.abs(ov - 0.25)) < 1e-12


# 9 --------------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_noiseless_discrimination(record_property):
    res = run_session(10_000, seed=909)
    record_property("detail", f"sifted {res.sifted}, errors {sum(a != b for a, b in zip(res.key_alice, res.key_bob))}")
    assert res.key_alice == res.key_bob and res.qber == 0.0


@pytest.mark.criterion(9)
def test_circular_basis_diagonal():
    assert np.allclose(outcome_diagonal(CIRCULAR_BASIS_COUNTS), CIRCULAR_BASIS_DIAGONAL, atol=1e-3)


# 10 -------------------------------------------------------------------------

THETA_STAR_DEG = 1.690928


@pytest.mark.criterion(10)
def test_tilt_scan(record_property):
    plates = dichroic_pair(3.716, 0.315)
    scan = tilt_scan(plates, 702.0, 605.0, np.arange(0, 15.0001, 0.05))
    expected = np.sin(scan.delta1) ** 2 * np.cos(scan.delta2) ** 2
    assert np.allclose(scan.coincidence, expected, atol=1e-15)
    assert np.allclose(scan.singles, np.sin(scan.delta1) ** 2, atol=1e-15)
    assert np.all(scan.coincidence <= scan.singles + 1e-15)
    maxima = scan.coincidence_maxima()
    assert len(maxima) >= 1
    t_star, c_star = best_tilt(plates, 702.0, 605.0)
    record_property("detail", f"theta*={t_star:.6f} deg, coincidence {c_star:.4f}")
    assert 0.0 < t_star < 15.0
    assert abs(t_star - THETA_STAR_DEG) < 1e-5
