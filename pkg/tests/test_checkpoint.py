import struct

import numpy as np
import pytest

from src.exceptions import ArtifactIOError, CheckpointVersionError
from src.neural import checkpoint
from src.neural import service as neural_service


@pytest.fixture(scope="function")
def ensemble_nets(rng):
    actor = neural_service.actor_spec(10, 2, (16, 12))
    critic = neural_service.critic_spec(10, 2, (16, 12))
    return [neural_service.init_network(actor, rng), neural_service.init_network(actor, rng),
            neural_service.init_network(critic, rng), neural_service.init_network(critic, rng)]


class TestCheckpoint:
    def test_round_trip_is_exact(self, ensemble_nets, tmp_path):
        path = checkpoint.save_networks(tmp_path / "nets.ckpt", ensemble_nets)
        loaded = checkpoint.load_networks(path)
        assert len(loaded) == len(ensemble_nets)
        for original, restored in zip(ensemble_nets, loaded):
            assert restored.spec == original.spec
            for a, b in zip(original.parameters(), restored.parameters()):
                np.testing.assert_array_equal(a, b)

    def test_save_load_save_is_byte_identical(self, ensemble_nets, tmp_path):
        first = checkpoint.save_networks(tmp_path / "a.ckpt", ensemble_nets)
        second = checkpoint.save_networks(tmp_path / "b.ckpt", checkpoint.load_networks(first))
        assert first.read_bytes() == second.read_bytes()

    def test_critic_topology_is_recovered(self, ensemble_nets):
        restored = checkpoint.decode(checkpoint.encode(ensemble_nets))
        assert [net.spec.is_critic for net in restored] == [False, False, True, True]
        assert restored[2].spec.action_layer == 1
        assert restored[2].spec.action_width == 2

    def test_header_layout(self, ensemble_nets):
        data = checkpoint.encode(ensemble_nets[:1])
        assert data[:8] == b"MPQDPG01"
        assert struct.unpack_from("<II", data, 8) == (1, 3)
        assert struct.unpack_from("<III", data, 16) == (10, 16, 1)
        header = 8 + 4 + 4 + 3 * 12
        first_weights = np.frombuffer(data, dtype="<f8", count=16 * 10, offset=header).reshape(10, 16)
        np.testing.assert_array_equal(first_weights, ensemble_nets[0].weights[0])

    def test_empty_network_list(self):
        assert checkpoint.decode(checkpoint.encode([])) == []

    def test_corrupted_magic(self, ensemble_nets):
        data = bytearray(checkpoint.encode(ensemble_nets))
        data[0:8] = b"NOTMAGIC"
        with pytest.raises(CheckpointVersionError):
            checkpoint.decode(bytes(data))

    def test_truncated_payload(self, ensemble_nets):
        data = checkpoint.encode(ensemble_nets)
        with pytest.raises(CheckpointVersionError):
            checkpoint.decode(data[:-8])

    def test_truncated_header(self):
        with pytest.raises(CheckpointVersionError):
            checkpoint.decode(b"MPQDPG01" + struct.pack("<I", 2))

    def test_trailing_bytes(self, ensemble_nets):
        with pytest.raises(CheckpointVersionError):
            checkpoint.decode(checkpoint.encode(ensemble_nets) + b"\x00" * 8)

    def test_unknown_activation_code(self):
        data = b"MPQDPG01" + struct.pack("<II", 1, 1) + struct.pack("<III", 1, 1, 9) + b"\x00" * 16
        with pytest.raises(CheckpointVersionError):
            checkpoint.decode(data)

    def test_huge_widths_are_reported_as_truncation(self):
        # (2**32 - 1)**2 weights would wrap negative in int64
        data = b"MPQDPG01" + struct.pack("<II", 1, 1) + struct.pack("<III", 0xFFFFFFFF, 0xFFFFFFFF, 2) + b"\x00" * 64
        with pytest.raises(CheckpointVersionError) as exc_info:
            checkpoint.decode(data)
        assert "truncated payload" in exc_info.value.detail

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            checkpoint.load_networks(tmp_path / "missing.ckpt")
