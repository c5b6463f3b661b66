"""Engine checks: exact channel math, dense-oracle equivalence, determinism."""

import numpy as np
import pytest

import oracles
from drbench.clifford import Circuit, GateLabel, PauliOp, circuit_to_clifford
from drbench.device import all_to_all
from drbench.protocols import BenchmarkCircuit, ExperimentDesign, generate_drb_circuit, generate_experiment
from drbench.sampling import PCnotSampler
from drbench.simulate import (
    Dataset,
    ErrorModel,
    build_model_crosstalk5,
    build_model_from_calibration,
    build_model_layer_depolarizing,
    build_model_main_sim,
    layer_error_rate,
    run_experiment,
    simulate_circuit,
)
from drbench.streams import stream


def small_design(n=2, seed=5, **kw):
    base = dict(
        protocol="DRB",
        device=all_to_all(n, "HPI"),
        sampler=PCnotSampler(p_cnot=0.5, pool="HPI"),
        lengths=(0, 2, 4),
        circuits_per_length=2,
        shots=200,
        seed=seed,
    )
    base.update(kw)
    return ExperimentDesign(**base)


def trivial_circuit(n=1, m=1):
    """Hand-built benchmark circuit whose core is m identity layers."""
    layer = tuple(GateLabel("I", (q,)) for q in range(n))
    return BenchmarkCircuit(
        circuit_id="test_c000",
        protocol="DRB",
        n=n,
        length=m,
        prep=Circuit(n, ()),
        core=Circuit(n, (layer,) * m),
        meas=Circuit(n, ()),
        target=(0,) * n,
        seed=(0, m, 0),
    )


class TestErrorModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            ErrorModel(n=2, gate_errors={("3Q", (0,)): ()})
        with pytest.raises(ValueError):
            ErrorModel(n=2, gate_errors={("CNOT", (0,)): ()})
        with pytest.raises(ValueError):
            ErrorModel(n=2, gate_errors={("1Q", (0,)): ((0, 1.5),)})
        with pytest.raises(ValueError):
            ErrorModel(n=2, gate_errors={("1Q", (5,)): ()})
        with pytest.raises(ValueError):
            ErrorModel(n=2, meas_flip=(0.5,))
        with pytest.raises(ValueError):
            ErrorModel(n=2, layer_depol=1.5)

    def test_default_meas_flip(self):
        model = ErrorModel(n=3)
        assert model.meas_flip == (0.0, 0.0, 0.0)

    def test_rates_lookup(self):
        model = ErrorModel(n=2, gate_errors={("CNOT", (0, 1)): ((0, 0.1), (1, 0.2))})
        assert model.rates_for(GateLabel("CNOT", (0, 1))) == ((0, 0.1), (1, 0.2))
        assert model.rates_for(GateLabel("CNOT", (1, 0))) == ()
        assert model.rates_for(GateLabel("H", (0,))) == ()


class TestLayerErrorRate:
    def test_single_entry(self):
        model = ErrorModel(n=1, gate_errors={("1Q", (0,)): ((0, 0.12),)})
        rate = layer_error_rate(model, [GateLabel("H", (0,))])
        assert rate == pytest.approx(0.12)

    def test_two_sources_can_cancel(self):
        p1, p2 = 0.3, 0.2
        model = ErrorModel(
            n=2, gate_errors={("CNOT", (0, 1)): ((0, p1),), ("1Q", (0,)): ((0, p2),)}
        )
        # both sources on qubit 0: identity iff neither fires or both draw
        # the same Pauli
        expected = 1.0 - ((1 - p1) * (1 - p2) + 3 * (p1 / 3) * (p2 / 3))
        gates = [GateLabel("CNOT", (0, 1))] + [GateLabel("H", (0,))]
        assert layer_error_rate(model, gates) == pytest.approx(expected)

    def test_depol_contribution(self):
        model = ErrorModel(n=2, layer_depol=0.4)
        rate = layer_error_rate(model, [])
        assert rate == pytest.approx(0.4 * (1 - 0.25**2))

    def test_crosstalk5_category_rates(self):
        model = build_model_crosstalk5()
        ones = {q: GateLabel("H", (q,)) for q in range(5)}
        eps1 = layer_error_rate(model, list(ones.values()))
        assert eps1 == pytest.approx(1 - 0.999**5)
        ring_layer = [GateLabel("CNOT", (0, 1)), ones[2], ones[3], ones[4]]
        eps2 = layer_error_rate(model, ring_layer)
        assert eps2 == pytest.approx(1 - 0.96 * 0.999**3)
        eta = 1 - (0.92 / 0.96) ** 0.25
        center_layer = [GateLabel("CNOT", (4, 0)), ones[1], ones[2], ones[3]]
        eps3 = layer_error_rate(model, center_layer)
        expected = 1 - 0.96 * (1 - eta) * ((1 - eta) * 0.999 + eta * 0.001 / 3) ** 3
        assert eps3 == pytest.approx(expected)
        assert eps3 == pytest.approx(0.0828, abs=5e-4)


class TestSimulateCircuit:
    def test_zero_error_always_succeeds(self, rng):
        model = ErrorModel(n=2)
        for m in (0, 3):
            circ = generate_drb_circuit(small_design(), m, rng)
            successes, hist = simulate_circuit(circ, model, 500, rng)
            assert successes == 500
            assert hist is None

    def test_certain_meas_flip_always_fails(self, rng):
        model = ErrorModel(n=1, meas_flip=(1.0,))
        successes, _ = simulate_circuit(trivial_circuit(), model, 100, rng)
        assert successes == 0

    def test_uniform_error_succeeds_one_third(self, rng):
        # a forced uniform non-identity Pauli leaves Z outcomes intact only
        # for the Z draw
        model = ErrorModel(n=1, gate_errors={("1Q", (0,)): ((0, 1.0),)})
        successes, _ = simulate_circuit(trivial_circuit(n=1, m=1), model, 30000, rng)
        assert successes / 30000 == pytest.approx(1 / 3, abs=0.015)

    def test_depolarizing_matches_closed_form(self):
        lam = 0.85
        n = 2
        model = build_model_layer_depolarizing(n, lam)
        design = small_design(n=n, seed=21)
        total = {m: [0, 0] for m in (0, 2, 5)}
        for m in total:
            for index in range(12):
                gen = stream(21, m, index)
                circ = generate_drb_circuit(design, m, gen)
                successes, _ = simulate_circuit(circ, model, 2000, stream(99, m, index))
                total[m][0] += successes
                total[m][1] += 2000
        for m, (succ, shots) in total.items():
            expected = (1 - 2.0**-n) * lam**m + 2.0**-n
            sigma = np.sqrt(expected * (1 - expected) / shots)
            assert abs(succ / shots - expected) <= 3 * sigma + 1e-12, f"m={m}"

    def test_histogram_zero_noise(self, rng):
        circ = generate_drb_circuit(small_design(seed=9), 2, rng)
        _, hist = simulate_circuit(circ, ErrorModel(n=2), 50, rng, histogram=True)
        target = "".join(str(b) for b in circ.target)
        assert hist == ((target, 50),)

    def test_histogram_counts_sum_to_shots(self, rng):
        model = build_model_crosstalk5()
        design = small_design(
            n=5,
            device=all_to_all(5, "HPI"),
            sampler=PCnotSampler(p_cnot=0.5, pool="HPI"),
            seed=31,
        )
        circ = generate_drb_circuit(design, 3, rng)
        _, hist = simulate_circuit(circ, model, 300, rng, histogram=True)
        assert sum(c for _, c in hist) <= 300
        assert len(hist) <= 64
        assert all(len(b) == 5 for b, _ in hist)

    def test_input_validation(self, rng):
        circ = trivial_circuit(n=1)
        with pytest.raises(ValueError):
            simulate_circuit(circ, ErrorModel(n=2), 10, rng)
        with pytest.raises(ValueError):
            simulate_circuit(circ, ErrorModel(n=1), 0, rng)

    def test_single_error_insertion_matches_dense(self, rng):
        """Frame propagation through the symplectic action must agree with
        inserting the error matrix into the dense circuit unitary."""
        circ = generate_drb_circuit(small_design(seed=13), 3, rng)
        n = 2
        full = circ.full_circuit
        layers = full.layers
        e0 = np.zeros(2**n, dtype=complex)
        e0[0] = 1.0
        paulis = [
            PauliOp(n, x, z)
            for x, z in [((1, 0), (0, 0)), ((0, 1), (0, 0)), ((0, 0), (1, 0)),
                         ((0, 0), (0, 1)), ((1, 0), (1, 0)), ((0, 1), (0, 1))]
        ]
        for cut in range(len(layers) + 1):
            prefix = Circuit(n, layers[:cut])
            suffix = Circuit(n, layers[cut:])
            s_suffix = circuit_to_clifford(suffix).s
            for p in paulis:
                moved = (s_suffix @ p.vec) % 2
                predicted = (circ.target_bits ^ moved[:n]) % 2
                u = (
                    oracles.circuit_unitary(suffix)
                    @ oracles.pauli_op_matrix(p)
                    @ oracles.circuit_unitary(prefix)
                )
                state = u @ e0
                idx = int("".join(str(b) for b in predicted), 2)
                assert abs(state[idx]) == pytest.approx(1.0, abs=1e-9)


class TestRunExperiment:
    def test_empty(self):
        data = run_experiment([], ErrorModel(n=2), np.random.default_rng(0), shots=10)
        assert data.rows == ()

    def test_rows_align(self):
        circuits, _ = generate_experiment(small_design(seed=3))
        data = run_experiment(circuits, ErrorModel(n=2), np.random.default_rng(1), shots=25)
        assert [r.circuit_id for r in data.rows] == [c.circuit_id for c in circuits]
        assert all(r.shots == 25 and r.successes == 25 for r in data.rows)

    def test_thread_count_invariance(self):
        circuits, _ = generate_experiment(small_design(seed=4))
        model = build_model_main_sim(2)
        d1 = run_experiment(circuits, model, np.random.default_rng(7), shots=100, threads=1)
        d4 = run_experiment(circuits, model, np.random.default_rng(7), shots=100, threads=4)
        assert d1 == d4

    def test_same_seed_identical(self):
        circuits, _ = generate_experiment(small_design(seed=4))
        model = build_model_main_sim(2)
        d1 = run_experiment(circuits, model, np.random.default_rng(7), shots=100)
        d2 = run_experiment(circuits, model, np.random.default_rng(7), shots=100)
        assert d1 == d2

    def test_provenance_attached(self):
        data = run_experiment([], ErrorModel(n=1), np.random.default_rng(0), shots=1,
                              provenance={"note": "x"})
        assert data.provenance == {"note": "x"}

    def test_spread_matches_binomial(self):
        """Independent-seed reruns of one circuit spread like a binomial."""
        lam = 0.9
        model = build_model_layer_depolarizing(2, lam)
        circ = generate_drb_circuit(small_design(seed=15), 4, stream(15, 4, 0))
        p_true = (1 - 0.25) * lam**4 + 0.25
        shots = 500
        rates = []
        for k in range(100):
            successes, _ = simulate_circuit(circ, model, shots, stream(1000, k))
            rates.append(successes / shots)
        observed_var = np.var(rates, ddof=1)
        expected_var = p_true * (1 - p_true) / shots
        assert 0.55 < observed_var / expected_var < 1.7


class TestModelBuilders:
    def test_main_sim_rates(self):
        model = build_model_main_sim(3)
        cnot_total = layer_error_rate(model, [GateLabel("CNOT", (0, 1)), GateLabel("H", (2,))])
        assert cnot_total == pytest.approx(1 - 0.9975**2 * 0.9995, rel=1e-9)
        assert model.meas_flip == (0.0, 0.0, 0.0)

    def test_crosstalk5_totals(self):
        model = build_model_crosstalk5()
        lone_ring = layer_error_rate(model, [GateLabel("CNOT", (1, 2))])
        assert lone_ring == pytest.approx(0.04)
        lone_center = layer_error_rate(model, [GateLabel("CNOT", (4, 2))])
        assert lone_center == pytest.approx(0.08)
        meas_total = 1 - (1 - 0.02) ** 5
        assert meas_total == pytest.approx(0.0961, abs=1e-4)

    def test_calibration_zero_rates(self):
        model = build_model_from_calibration(2, 0.0, {(0, 1): 0.0}, 0.0)
        assert all(all(p == 0 for _, p in v) for v in model.gate_errors.values())

    def test_calibration_cnot_split(self):
        model = build_model_from_calibration(2, 0.0, {(0, 1): 0.04}, 0.0)
        rate = layer_error_rate(model, [GateLabel("CNOT", (0, 1))])
        assert rate == pytest.approx(0.04)

    def test_calibration_z_failure_closed_form(self, rng):
        # uniform non-identity Pauli at rate q flips a Z measurement with
        # probability 2q/3
        q = 0.3
        model = build_model_from_calibration(1, q)
        successes, _ = simulate_circuit(trivial_circuit(n=1, m=1), model, 30000, rng)
        assert successes / 30000 == pytest.approx(1 - 2 * q / 3, abs=0.01)

    def test_calibration_missing_entries(self):
        with pytest.raises(ValueError):
            build_model_from_calibration(2, {0: 0.1})
        with pytest.raises(ValueError):
            build_model_from_calibration(2, 0.0, None, {0: 0.1})

    def test_depolarizing_validation(self):
        with pytest.raises(ValueError):
            build_model_layer_depolarizing(2, 1.2)
