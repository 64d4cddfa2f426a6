import math

import numpy as np
import pytest

from loqsim import circuits as circ
from loqsim.gates import Gate
from loqsim.simulator import ReferenceState

from oracles import dense_operator


def test_random_signs_are_deterministic_bits():
    assert circ.random_signs(5, 17) == circ.random_signs(5, 17)
    seen = {circ.random_signs(1, k) for k in range(200)}
    assert len(seen) == 8


def test_random_cycles_structure():
    c = circ.random_cycles(4, 7, seed=3)
    assert c.count("U3") == 28 and c.count("CNOT") == 28
    assert len(c) == 56
    # cycle order: U3 on r, then CNOT(r, r+1 mod q)
    assert c[0].kind == "U3" and c[0].targets == (0,)
    assert c[7].kind == "CNOT" and c[7].controls == (3,) and c[7].targets == (0,)
    for g in c:
        if g.kind == "U3":
            assert [abs(p) for p in g.params] == [math.pi / 2, math.pi / 4, math.pi / 4]


def test_random_cycles_seed_dependence():
    a = circ.random_cycles(3, 2, seed=0)
    assert a.gates == circ.random_cycles(3, 2, seed=0).gates
    assert a.gates != circ.random_cycles(3, 2, seed=1).gates


def test_random_cycles_needs_two_qubits():
    with pytest.raises(ValueError):
        circ.random_cycles(1, 2, seed=0)


@pytest.mark.parametrize("q", [2, 5, 10, 14])
def test_circuit_then_inverse_is_identity(q):
    c = circ.random_cycles(q, 4, seed=q)
    x0 = (1 << q) - 3
    ref = ReferenceState.basis(q, x0).run(c).run(circ.inverse(c))
    assert circ.true_error(ref.amplitudes, x0) < 1e-24


def test_qft_gate_counts():
    c = circ.qft(3)
    assert c.count("H") == 3 and c.count("CP") == 3 and c.count("SWAP") == 1
    assert len(circ.qft(1)) == 1


def test_qft_matches_dft_matrix():
    q = 4
    n = 1 << q
    U = dense_operator(circ.qft(q))
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    dft = np.exp(2j * math.pi * j * k / n) / math.sqrt(n)
    assert np.allclose(U, dft, atol=1e-13)


@pytest.mark.parametrize("q", [3, 8, 12])
def test_qft_maps_plane_wave_to_basis_state(q):
    x0 = 5 % (1 << q)
    ref = ReferenceState(circ.plane_wave_state(q, x0)).run(circ.qft(q))
    assert circ.true_error(ref.amplitudes, x0) < 1e-24


@pytest.mark.parametrize("q,m", [(50, 8), (8, 6), (12, 6), (14, 6), (16, 7), (64, 9)])
def test_aqft_cutoff(q, m):
    assert circ.aqft_cutoff(q) == m


def test_aqft_drops_small_rotations():
    q = 14
    c = circ.aqft(q)
    m = circ.aqft_cutoff(q)
    assert max(g.params[0] for g in c if g.kind == "CP") == m
    assert c.count("H") == q
    full = circ.qft(q)
    assert c.count("CP") < full.count("CP") == q * (q - 1) // 2


def test_aqft_is_close_to_qft():
    q = 10
    x0 = 333
    ref = ReferenceState(circ.plane_wave_state(q, x0)).run(circ.aqft(q))
    assert circ.true_error(ref.amplitudes, x0) < 1e-2


def test_root_z_chain_composes_to_z():
    c = circ.root_z_chain(1, 5, 5)
    assert len(c) == 5
    U = dense_operator(c)
    assert np.allclose(U, Gate.z(0).matrix(), atol=1e-14)
    with pytest.raises(ValueError):
        circ.root_z_chain(1, 5, 0)


def test_state_constructors():
    assert circ.basis_state(3, 6)[6] == 1
    with pytest.raises(ValueError):
        circ.basis_state(3, 8)
    pw = circ.plane_wave_state(10, 77)
    assert math.fsum(np.abs(pw) ** 2) == pytest.approx(1, abs=1e-14)
    assert np.allclose(np.abs(pw), 2**-5)
    sph = circ.random_sphere_state(10, 4)
    assert math.fsum(np.abs(sph) ** 2) == pytest.approx(1, abs=1e-14)
    assert np.array_equal(sph, circ.random_sphere_state(10, 4))


def test_true_error():
    amps = circ.basis_state(2, 1)
    assert circ.true_error(amps, 1) == 0
    assert circ.true_error(amps, 0) == 2
    with pytest.raises(ValueError):
        circ.true_error(amps, 4)
