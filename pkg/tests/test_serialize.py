import json

import numpy as np
import pytest

from discordkit.annihilators import build_da_channel, random_da_spec
from discordkit.channels import choi_distance, random_channel
from discordkit.classify import is_point_channel
from discordkit.discord import Hybrid, discord
from discordkit.serialize import (
    FileFormatError,
    channel_to_json,
    da_spec_to_json,
    discord_result_to_json,
    load_channel,
    load_da_spec,
    load_state,
    state_to_json,
    verdict_to_json,
)
from discordkit.states import (
    BipartiteState,
    DensityOperator,
    basis_ket,
    bell_state,
    random_bipartite,
    random_density,
)


class TestStateFiles:
    def test_round_trip_bipartite(self, tmp_path):
        state = random_bipartite(2, 3, 0)
        path = tmp_path / "state.json"
        path.write_text(json.dumps(state_to_json(state)))
        loaded = load_state(path)
        assert isinstance(loaded, BipartiteState)
        assert (loaded.dim_a, loaded.dim_b) == (2, 3)
        np.testing.assert_allclose(loaded.matrix, state.matrix, atol=1e-12)

    def test_round_trip_single(self):
        op = random_density(3, "hilbert-schmidt", 1)
        loaded = load_state(state_to_json(op))
        assert isinstance(loaded, DensityOperator)
        np.testing.assert_allclose(loaded.matrix, op.matrix, atol=1e-12)

    def test_missing_dims(self):
        with pytest.raises(FileFormatError, match="dims"):
            load_state({"matrix": []})

    def test_bad_dims(self):
        with pytest.raises(FileFormatError, match="dims"):
            load_state({"dims": [2, 0], "matrix": []})

    def test_matrix_length_mismatch(self):
        with pytest.raises(FileFormatError, match="matrix"):
            load_state({"dims": [2], "matrix": [[1.0, 0.0]]})

    def test_bad_entry_names_index(self):
        payload = state_to_json(random_density(2, "hilbert-schmidt", 2))
        payload["matrix"][3] = "oops"
        with pytest.raises(FileFormatError, match=r"matrix\[3\]"):
            load_state(payload)

    def test_invalid_state_rejected(self):
        payload = {"dims": [2], "matrix": [[1.0, 0.0], [0.5, 0.0], [0.0, 0.0], [0.0, 0.0]]}
        with pytest.raises(FileFormatError, match="matrix"):
            load_state(payload)


class TestChannelFiles:
    def test_round_trip(self, tmp_path):
        channel = random_channel(2, 3, 2, 10)
        path = tmp_path / "channel.json"
        path.write_text(json.dumps(channel_to_json(channel)))
        loaded = load_channel(path)
        assert choi_distance(loaded, channel) <= 1e-9

    def test_writer_emits_descending_kraus(self):
        channel = random_channel(2, 2, 3, 11)
        payload = channel_to_json(channel)
        norms = [
            np.linalg.norm([complex(re, im) for re, im in k]) for k in payload["data"]
        ]
        assert norms == sorted(norms, reverse=True)

    def test_choi_input_accepted(self):
        channel = random_channel(2, 2, 2, 12)
        payload = {
            "type": "choi",
            "d_in": 2,
            "d_out": 2,
            "data": [[z.real, z.imag] for z in channel.choi.reshape(-1)],
        }
        loaded = load_channel(payload)
        assert choi_distance(loaded, channel) <= 1e-9

    def test_bad_type(self):
        with pytest.raises(FileFormatError, match="type"):
            load_channel({"type": "magic", "d_in": 2, "d_out": 2, "data": []})

    def test_non_tp_choi_rejected(self):
        payload = {
            "type": "choi",
            "d_in": 2,
            "d_out": 2,
            "data": [[float(x), 0.0] for x in (np.eye(4) * 0.25).reshape(-1)],
        }
        with pytest.raises(FileFormatError, match="data"):
            load_channel(payload)


class TestDASpecFiles:
    def test_round_trip(self):
        spec = random_da_spec(2, 2, 20)
        loaded = load_da_spec(da_spec_to_json(spec))
        assert choi_distance(build_da_channel(loaded), build_da_channel(spec)) <= 1e-9

    def test_multi_identity_rejected_with_constraint_message(self):
        payload = {
            "dims": [2, 2],
            "entries": [
                {
                    "kind": "multi",
                    "projector": [[float(x), 0.0] for x in np.eye(2).reshape(-1)],
                    "action": {"type": "identity"},
                }
            ],
        }
        with pytest.raises(FileFormatError, match="rank-1"):
            load_da_spec(payload)

    def test_incomplete_partition_rejected(self):
        payload = {
            "dims": [2, 2],
            "entries": [
                {
                    "kind": "rank1",
                    "vector": [[1.0, 0.0], [0.0, 0.0]],
                    "action": {"type": "identity"},
                }
            ],
        }
        with pytest.raises(FileFormatError, match="entries"):
            load_da_spec(payload)


class TestSubsetSpecFiles:
    def test_round_trip(self):
        import numpy as np
        from discordkit.cqsets import (
            BothEntry,
            ConvexCQSubsetSpec,
            FixedEntry,
            PointEntry,
            membership,
            sample_state,
        )
        from discordkit.serialize import cq_subset_spec_to_json, load_cq_subset_spec
        from discordkit.states import random_unitary

        rng = np.random.default_rng(50)
        frame = random_unitary(4, rng)
        block = frame[:, 2:4]
        spec = ConvexCQSubsetSpec(
            dim_a=4,
            dim_b=2,
            both_entries=(BothEntry(frame[:, 0], random_density(2, "hilbert-schmidt", rng)),),
            fixed_entries=(
                FixedEntry(
                    frame[:, 1],
                    tuple(random_density(2, "hilbert-schmidt", rng) for _ in range(2)),
                ),
            ),
            point_entries=(
                PointEntry(block @ block.conj().T, random_density(2, "hilbert-schmidt", rng)),
            ),
        )
        loaded = load_cq_subset_spec(cq_subset_spec_to_json(spec))
        state = sample_state(loaded, 51)
        assert membership(spec, state)
        assert membership(loaded, sample_state(spec, 52))

    def test_unrestricted_fixed_entry_round_trips(self):
        from discordkit.cqsets import ConvexCQSubsetSpec, FixedEntry
        from discordkit.serialize import cq_subset_spec_to_json, load_cq_subset_spec

        spec = ConvexCQSubsetSpec(
            dim_a=2, dim_b=2, fixed_entries=(FixedEntry(basis_ket(2, 0), None),)
        )
        loaded = load_cq_subset_spec(cq_subset_spec_to_json(spec))
        assert loaded.fixed_entries[0].generators is None

    def test_invalid_spec_rejected(self):
        import numpy as np
        from discordkit.serialize import load_cq_subset_spec

        payload = {
            "dims": [2, 2],
            "both": [],
            "fixed": [],
            "point": [
                {
                    "projector": [[float(x), 0.0] for x in np.diag([1.0, 0.0]).reshape(-1)],
                    "state": [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
                }
            ],
        }
        with pytest.raises(FileFormatError, match="rank"):
            load_cq_subset_spec(payload)


class TestResultPayloads:
    def test_discord_result_fields(self):
        result = discord(bell_state(0), Hybrid())
        payload = discord_result_to_json(result)
        assert set(payload) == {
            "discord",
            "mutual_information",
            "classical_correlation",
            "measurement",
            "optimizer",
        }
        assert payload["measurement"]["type"] == "bloch"
        assert len(payload["measurement"]["vector"]) == 3

    def test_verdict_with_witness_serialises(self):
        from discordkit.channels import make_qc_channel

        channel = make_qc_channel(
            [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)],
            [basis_ket(2, 0), basis_ket(2, 1)],
        )
        verdict = is_point_channel(channel)
        payload = verdict_to_json(verdict)
        assert payload["kind"] == "no"
        assert "witness" in payload
        json.dumps(payload)  # must be JSON-clean
