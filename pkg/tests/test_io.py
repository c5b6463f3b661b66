"""Format round trips and validation messages for every file kind."""

import json

import pytest

from drbench.clifford import GateLabel
from drbench.device import all_to_all
from drbench.io import (
    FormatError,
    canonical_json,
    circuit_from_text,
    circuit_to_text,
    color_for_n,
    dataset_from_jsonl,
    dataset_to_jsonl,
    design_from_config,
    design_to_config,
    model_coverage_gaps,
    model_from_json,
    model_from_spec,
    plot_csv,
    render_decay_svg,
)
from drbench.protocols import ExperimentDesign, generate_experiment
from drbench.sampling import PCnotSampler
from drbench.simulate import DataRow, Dataset


def design(protocol="DRB", **kw):
    base = dict(
        protocol=protocol,
        device=all_to_all(2, "HPI"),
        sampler=None if protocol == "CRB" else PCnotSampler(p_cnot=0.5, pool="HPI"),
        lengths=(0, 2, 4),
        circuits_per_length=2,
        shots=64,
        seed=9,
    )
    base.update(kw)
    return ExperimentDesign(**base)


class TestCircuitText:
    @pytest.mark.parametrize("protocol", ["DRB", "CRB"])
    def test_round_trip(self, protocol):
        circuits, _ = generate_experiment(design(protocol))
        for circ in circuits:
            text = circuit_to_text(circ)
            assert circuit_from_text(text) == circ

    def test_round_trip_with_frames(self):
        circuits, _ = generate_experiment(
            design(frame_randomization=True, emit_frame_gates=True)
        )
        for circ in circuits:
            assert circuit_from_text(circuit_to_text(circ)) == circ

    def test_header_layout(self):
        circuits, _ = generate_experiment(design())
        text = circuit_to_text(circuits[0])
        for key in ("# id=", "# protocol=", "# n=", "# m=", "# target=",
                    "# seed=", "# segments="):
            assert key in text

    def test_missing_header_rejected(self):
        circuits, _ = generate_experiment(design())
        lines = circuit_to_text(circuits[0]).splitlines()
        broken = "\n".join(l for l in lines if not l.startswith("# target="))
        with pytest.raises(FormatError, match="target"):
            circuit_from_text(broken)

    def test_segment_mismatch_rejected(self):
        circuits, _ = generate_experiment(design())
        text = circuit_to_text(circuits[0]).replace("# segments=", "# segments=9")
        with pytest.raises(FormatError, match="segments"):
            circuit_from_text(text)

    def test_malformed_gate_rejected(self):
        with pytest.raises(FormatError, match="gate"):
            circuit_from_text(
                "# id=x\n# protocol=DRB\n# n=1\n# m=0\n# target=0\n"
                "# seed=0,0,0\n# segments=1,0,0\nH0\n"
            )


class TestDatasetJsonl:
    def test_round_trip(self):
        rows = (
            DataRow("a", 0, "01", 100, 99, histogram=(("01", 99), ("11", 1))),
            DataRow("b", 4, "01", 100, 80),
        )
        data = Dataset(rows, {"model": "zero", "seed": 4})
        back = dataset_from_jsonl(dataset_to_jsonl(data))
        assert back == data

    def test_bare_external_rows(self):
        text = (
            '{"m": 0, "shots": 100, "successes": 97}\n'
            '{"m": 5, "shots": 100, "successes": 60}\n'
        )
        data = dataset_from_jsonl(text)
        assert data.provenance == {}
        assert data.rows[0].circuit_id == "ext_00000"
        assert data.rows[1].m == 5
        assert data.rows[0].target == ""

    def test_missing_field_named(self):
        with pytest.raises(FormatError, match="successes"):
            dataset_from_jsonl('{"m": 0, "shots": 100}\n')

    def test_bad_json_line(self):
        with pytest.raises(FormatError, match="line 1"):
            dataset_from_jsonl("not json\n")

    def test_impossible_counts_rejected(self):
        with pytest.raises(FormatError, match="row 0"):
            dataset_from_jsonl('{"m": 0, "shots": 10, "successes": 11}\n')


class TestConfig:
    def test_round_trip(self):
        for protocol in ("DRB", "CRB"):
            d = design(protocol)
            assert design_from_config(design_to_config(d)) == d

    def test_presets(self):
        cfg = {
            "protocol": "DRB",
            "device": {"n": 5, "preset": "ring_with_center", "gate_set": "HPI"},
            "sampler": {"kind": "pairing", "p_cnot": 0.5},
            "lengths": [0, 2],
            "circuits_per_length": 1,
            "shots": 10,
        }
        d = design_from_config(cfg)
        assert d.device.n == 5
        assert d.sampler.pool == "HPI"
        cfg["device"] = {"n": 3, "preset": "ring"}
        cfg["sampler"] = {"kind": "pcnot", "p_cnot": 0.25}
        assert design_from_config(cfg).device.edges == ((0, 1), (1, 2), (2, 0))

    def test_missing_fields_named(self):
        base = {
            "device": {"n": 2, "edges": [[0, 1]], "gate_set": "HPI"},
            "sampler": {"kind": "pcnot", "p_cnot": 0.5},
        }
        cases = [
            ({}, "device"),
            ({"device": {"edges": [[0, 1]]}}, "device.n"),
            ({"device": {"n": 2}}, "device.edges"),
            ({"device": {"n": 2, "preset": "torus"}}, "device.preset"),
            ({**base, "sampler": {}}, "sampler.kind"),
            ({**base, "sampler": {"kind": "pcnot"}}, "sampler.p_cnot"),
            ({**base, "sampler": {"kind": "magic"}}, "sampler.kind"),
            ({**base, "protocol": "XRB"}, "protocol"),
            ({**base, "compile": {"bogus": 1}}, "compile.bogus"),
        ]
        for overrides, needle in cases:
            with pytest.raises(FormatError, match=needle):
                design_from_config(overrides)

    def test_category_config(self):
        cfg = {
            "device": {"n": 2, "edges": [[0, 1], [1, 0]], "gate_set": "HPI"},
            "sampler": {
                "kind": "category",
                "probabilities": [0.5, 0.5],
                "edge_groups": [[[0, 1], [1, 0]]],
            },
        }
        d = design_from_config(cfg)
        assert d.sampler.kind == "category"
        assert d.sampler.edge_groups == (((0, 1), (1, 0)),)


class TestModelFiles:
    def test_scalar_broadcast(self):
        model = model_from_json({"n": 2, "one_qubit": 0.001, "cnot": 0.01, "readout": 0.02})
        assert ("CNOT", (1, 0)) in model.gate_errors
        assert model.meas_flip == (0.02, 0.02)

    def test_explicit_maps(self):
        model = model_from_json(
            {"n": 2, "one_qubit": {"0": 0.001, "1": 0.002}, "cnot": {"0,1": 0.04}}
        )
        assert model.rates_for(GateLabel("CNOT", (0, 1))) != ()
        assert ("CNOT", (1, 0)) not in model.gate_errors

    def test_layer_depol_passthrough(self):
        model = model_from_json({"n": 1, "layer_depol": 0.25})
        assert model.layer_depol == 0.25

    def test_validation(self):
        with pytest.raises(FormatError, match="'n'"):
            model_from_json({"one_qubit": 0.1})
        with pytest.raises(FormatError, match="n=3"):
            model_from_json({"n": 3}, n=2)
        with pytest.raises(FormatError, match="cnot"):
            model_from_json({"n": 2, "cnot": {"0-1": 0.1}})
        with pytest.raises(FormatError, match="one_qubit"):
            model_from_json({"n": 2, "one_qubit": "lots"})

    def test_bundled_specs(self):
        assert model_from_spec("main_sim", 3).n == 3
        assert model_from_spec("crosstalk5", 5).meas_flip == (0.02,) * 5
        assert model_from_spec("zero", 2).layer_depol == 0.0
        assert model_from_spec("depolarizing:0.9", 2).layer_depol == pytest.approx(0.1)
        with pytest.raises(FormatError, match="crosstalk5"):
            model_from_spec("crosstalk5", 4)
        with pytest.raises(FormatError, match="unknown model"):
            model_from_spec("nope", 2)
        with pytest.raises(FormatError, match="depolarizing"):
            model_from_spec("depolarizing:2.0", 2)

    def test_coverage_gaps(self):
        circuits, _ = generate_experiment(design())
        full = model_from_spec("zero", 2)
        assert model_coverage_gaps(full, circuits) == []
        sparse = model_from_json({"n": 2, "one_qubit": 0.0, "cnot": {"0,1": 0.0}})
        gaps = model_coverage_gaps(sparse, circuits)
        assert "CNOT 1,0" in gaps


class TestPlotAndReport:
    def test_plot_csv_shape(self):
        averages = {0: (1.0, (1.0, 1.0)), 4: (0.8, (0.7, 0.9))}
        text = plot_csv(averages, 0.25, 0.75, 0.9)
        lines = text.strip().splitlines()
        assert lines[0] == "m,P_m,q05,q25,q50,q75,q95,fitted"
        assert len(lines) == 3
        row = lines[2].split(",")
        assert row[0] == "4"
        assert float(row[7]) == pytest.approx(0.25 + 0.75 * 0.9**4)
        assert float(row[2]) <= float(row[4]) <= float(row[6])

    def test_svg_deterministic(self):
        runs = [
            {"label": "n=2: r=1e-3", "n": 2, "points": {0: 1.0, 4: 0.9, 8: 0.8},
             "fit": (0.25, 0.75, 0.97)},
            {"label": "n=3: r=2e-3", "n": 3, "points": {0: 1.0, 4: 0.85},
             "fit": (0.125, 0.875, 0.95)},
        ]
        one = render_decay_svg(runs)
        two = render_decay_svg(runs)
        assert one == two
        assert one.startswith("<svg")
        assert one.count("<polyline") == 2
        assert color_for_n(2) in one and color_for_n(3) in one
        assert color_for_n(2) != color_for_n(3)

    def test_svg_empty_rejected(self):
        with pytest.raises(ValueError):
            render_decay_svg([])


class TestCanonicalJson:
    def test_sorted_and_stable(self):
        a = canonical_json({"b": 1, "a": [1, 2]})
        b = canonical_json({"a": [1, 2], "b": 1})
        assert a == b
        assert a.endswith("\n")
        assert json.loads(a) == {"a": [1, 2], "b": 1}
