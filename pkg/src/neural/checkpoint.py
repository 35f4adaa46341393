"""Little-endian binary checkpoints for a list of networks.

Layout: magic ``MPQDPG01``, uint32 network count, then per network a uint32
layer count followed by (in_width, out_width, activation code) uint32 triples.
The payload follows the full header: for every network and layer, the
in_width x out_width weight matrix in row-major float64, then the biases.
Adam state is not stored.
"""
import logging
import math
import struct
from pathlib import Path

import numpy as np

from src.exceptions import ArtifactIOError, CheckpointVersionError
from .models import ACTIVATION_CODES, ACTIVATIONS_BY_CODE, LayerSpec, MlpNetwork, NetworkSpec

logger = logging.getLogger(__name__)

MAGIC = b"MPQDPG01"
FLOAT = np.dtype("<f8")


def encode(nets: list[MlpNetwork]) -> bytes:
    header = [MAGIC, struct.pack("<I", len(nets))]
    payload = []
    for net in nets:
        header.append(struct.pack("<I", len(net.spec.layers)))
        for layer, weights, biases in zip(net.spec.layers, net.weights, net.biases):
            header.append(struct.pack("<III", layer.input_width, layer.output_width,
                                      ACTIVATION_CODES[layer.activation]))
            payload.append(np.ascontiguousarray(weights, dtype=FLOAT).tobytes())
            payload.append(np.ascontiguousarray(biases, dtype=FLOAT).tobytes())
    return b"".join(header + payload)


def _spec_from_layers(layers: list[LayerSpec], source) -> NetworkSpec:
    """Rebuild the topology; a layer wider than its predecessor's output marks action injection."""
    action_layer, action_width = None, 0
    for i in range(1, len(layers)):
        extra = layers[i].input_width - layers[i - 1].output_width
        if extra == 0:
            continue
        if extra < 0 or action_layer is not None:
            raise CheckpointVersionError(source, f"inconsistent layer widths at layer {i}")
        action_layer, action_width = i, extra
    return NetworkSpec(layers=tuple(layers), action_layer=action_layer, action_width=action_width)


def decode(data: bytes, source="<bytes>") -> list[MlpNetwork]:
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointVersionError(source, f"bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    offset = len(MAGIC)

    def read_uints(count: int) -> tuple[int, ...]:
        nonlocal offset
        size = 4 * count
        if offset + size > len(data):
            raise CheckpointVersionError(source, "truncated header")
        values = struct.unpack_from(f"<{count}I", data, offset)
        offset += size
        return values

    (count,) = read_uints(1)
    specs = []
    for _ in range(count):
        (layer_count,) = read_uints(1)
        layers = []
        for _ in range(layer_count):
            in_width, out_width, code = read_uints(3)
            if code not in ACTIVATIONS_BY_CODE or in_width == 0 or out_width == 0:
                raise CheckpointVersionError(source, f"invalid layer ({in_width}, {out_width}, {code})")
            layers.append(LayerSpec(input_width=in_width, output_width=out_width,
                                    activation=ACTIVATIONS_BY_CODE[code]))
        if not layers:
            raise CheckpointVersionError(source, "network without layers")
        specs.append(_spec_from_layers(layers, source))

    nets = []
    for spec in specs:
        weights, biases = [], []
        for layer in spec.layers:
            for shape in ((layer.input_width, layer.output_width), (layer.output_width,)):
                count = math.prod(shape)  # python ints, no overflow on corrupt widths
                size = count * FLOAT.itemsize
                if offset + size > len(data):
                    raise CheckpointVersionError(source, "truncated payload")
                values = np.frombuffer(data, dtype=FLOAT, count=count, offset=offset)
                offset += size
                (weights if len(shape) == 2 else biases).append(values.reshape(shape).astype(np.float64))
        nets.append(MlpNetwork(spec, weights, biases))

    if offset != len(data):
        raise CheckpointVersionError(source, f"{len(data) - offset} trailing bytes after payload")
    return nets


def save_networks(path: Path, nets: list[MlpNetwork]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode(nets))
    except OSError as e:
        logger.error(f"Failed to write checkpoint {path}. Error: {str(e)}")
        raise ArtifactIOError(path, str(e))
    logger.info(f"Saved {len(nets)} networks to {path}")
    return path


def load_networks(path: Path) -> list[MlpNetwork]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        logger.error(f"Failed to read checkpoint {path}. Error: {str(e)}")
        raise ArtifactIOError(path, str(e))
    nets = decode(data, source=path)
    logger.info(f"Loaded {len(nets)} networks from {path}")
    return nets
