"""Binary model checkpoints: parameters, optimizer state, rng position.

Layout: 8-byte magic, u32 format version, u32 header length, a JSON
header describing both network architectures and the scalar counters,
then every tensor as raw little-endian f64 in a fixed order (generator
parameters, discriminator parameters, generator Adam m and v,
discriminator Adam m and v; weights before bias within each layer).
The header is serialized with sorted keys so identical checkpoints are
byte-identical files.
"""

import json
import struct
import sys
from array import array
from dataclasses import dataclass

from .errors import DataError, DimensionError, ParseError, VersionError
from .gan import GanModel
from .nn import AdamState, DenseLayer, Network
from .tensor import Tensor

MAGIC = b"PAYGUARD"
CURRENT_VERSION = 1

_HEADER_KEYS = frozenset({"adam_t", "discriminator", "generator", "height",
                          "iteration", "latent_dim", "rng_state", "width"})
_LAYER_KEYS = frozenset({"activation", "alpha", "in", "out"})


@dataclass(frozen=True)
class Checkpoint:
    """A trained (or initialized) model plus everything needed to resume."""

    model: GanModel
    g_state: AdamState
    d_state: AdamState
    rng_state: int
    iteration: int
    height: int
    width: int

    def __post_init__(self):
        if self.height * self.width != self.model.image_dim:
            raise DimensionError(
                f"{self.height}x{self.width} images have "
                f"{self.height * self.width} pixels but the model expects "
                f"{self.model.image_dim}")
        if not 0 <= self.rng_state < 2 ** 64:
            raise DataError(f"rng_state out of u64 range: {self.rng_state}")
        if self.iteration < 0:
            raise DataError(f"iteration must be >= 0, got {self.iteration}")


def _layer_descriptions(net: Network):
    return [{"activation": layer.activation, "alpha": layer.alpha,
             "in": layer.in_dim, "out": layer.out_dim}
            for layer in net.layers]


def _tensor_bytes(t: Tensor) -> bytes:
    buf = t.data
    if sys.byteorder == "big":
        buf = array("d", buf)
        buf.byteswap()
    return buf.tobytes()


def save(ckpt: Checkpoint, path) -> None:
    header = {
        "adam_t": {"discriminator": ckpt.d_state.t,
                   "generator": ckpt.g_state.t},
        "discriminator": _layer_descriptions(ckpt.model.discriminator),
        "generator": _layer_descriptions(ckpt.model.generator),
        "height": ckpt.height,
        "iteration": ckpt.iteration,
        "latent_dim": ckpt.model.latent_dim,
        "rng_state": str(ckpt.rng_state),
        "width": ckpt.width,
    }
    blob = json.dumps(header, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", CURRENT_VERSION, len(blob)), blob]
    for tensors in _payload_order(ckpt):
        chunks.extend(_tensor_bytes(t) for t in tensors)
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def _payload_order(ckpt: Checkpoint):
    return (ckpt.model.generator.params(),
            ckpt.model.discriminator.params(),
            ckpt.g_state.m, ckpt.g_state.v,
            ckpt.d_state.m, ckpt.d_state.v)


def _param_shapes(layers):
    shapes = []
    for desc in layers:
        shapes.append((desc["out"], desc["in"]))
        shapes.append((desc["out"],))
    return shapes


def _parse_header(raw: bytes):
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ParseError(f"checkpoint header is not valid JSON: {err}") from err
    if not isinstance(header, dict) or set(header) != _HEADER_KEYS:
        raise ParseError(
            f"checkpoint header must have exactly the keys "
            f"{sorted(_HEADER_KEYS)}")
    for role in ("generator", "discriminator"):
        for i, desc in enumerate(header[role]):
            if not isinstance(desc, dict) or set(desc) != _LAYER_KEYS:
                raise ParseError(
                    f"{role} layer {i} must describe exactly "
                    f"{sorted(_LAYER_KEYS)}")
    return header


def _read_tensors(view, offset, shapes, total):
    tensors = []
    for shape in shapes:
        size = 1
        for d in shape:
            size *= d
        end = offset + 8 * size
        if end > total:
            raise ParseError(
                f"checkpoint truncated: tensor {shape} needs bytes "
                f"{offset}..{end} but the file ends at {total}")
        buf = array("d")
        buf.frombytes(view[offset:end])
        if sys.byteorder == "big":
            buf.byteswap()
        tensors.append(Tensor._wrap(shape, buf))
        offset = end
    return tensors, offset


def load(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError as err:
        raise DataError(f"checkpoint not found: {path}") from err
    if len(raw) < 16:
        raise ParseError(
            f"checkpoint too short: {len(raw)} bytes, need at least 16")
    if raw[:8] != MAGIC:
        raise ParseError(
            f"bad magic at byte offset 0: {raw[:8]!r}, expected {MAGIC!r}")
    version, header_len = struct.unpack("<II", raw[8:16])
    if version != CURRENT_VERSION:
        raise VersionError(
            f"checkpoint is format version {version}; this build reads "
            f"version {CURRENT_VERSION}")
    if 16 + header_len > len(raw):
        raise ParseError(
            f"header claims {header_len} bytes at offset 16 but the file "
            f"ends at {len(raw)}")
    header = _parse_header(raw[16:16 + header_len])

    try:
        gen_shapes = _param_shapes(header["generator"])
        disc_shapes = _param_shapes(header["discriminator"])
        view = memoryview(raw)
        offset = 16 + header_len
        total = len(raw)
        gen_params, offset = _read_tensors(view, offset, gen_shapes, total)
        disc_params, offset = _read_tensors(view, offset, disc_shapes, total)
        g_m, offset = _read_tensors(view, offset, gen_shapes, total)
        g_v, offset = _read_tensors(view, offset, gen_shapes, total)
        d_m, offset = _read_tensors(view, offset, disc_shapes, total)
        d_v, offset = _read_tensors(view, offset, disc_shapes, total)
        if offset != total:
            raise ParseError(
                f"{total - offset} trailing bytes after the last tensor "
                f"at offset {offset}")

        gen = _build_network(header["generator"], gen_params)
        disc = _build_network(header["discriminator"], disc_params)
        model = GanModel(gen, disc, header["latent_dim"])
        return Checkpoint(
            model=model,
            g_state=AdamState(g_m, g_v, header["adam_t"]["generator"]),
            d_state=AdamState(d_m, d_v, header["adam_t"]["discriminator"]),
            rng_state=int(header["rng_state"]),
            iteration=header["iteration"],
            height=header["height"],
            width=header["width"])
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"malformed checkpoint header values: {err}") from err


def _build_network(descriptions, params):
    layers = []
    for i, desc in enumerate(descriptions):
        layers.append(DenseLayer(params[2 * i], params[2 * i + 1],
                                 desc["activation"], desc["alpha"]))
    return Network(layers)
