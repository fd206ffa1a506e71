"""Binary checkpoint: magic, text metadata, NUL, little-endian float64 tensors.

    BCIL1\\n
    config.<field> = <value>
    normalizer.min = <comma-separated floats>
    normalizer.max = <comma-separated floats>
    tensor = <name> <dim> [<dim> ...]      (one per tensor, declaration order)
    \\0
    <payloads in the order of the tensor lines>
"""

from __future__ import annotations

import dataclasses
import math
import re
from pathlib import Path

import numpy as np

from ..errors import Malformed, VersionMismatch
from . import lstm
from .normalizer import Normalizer
from .train import ModelConfig, SequenceModel

MAGIC = b"BCIL1\n"
_MAGIC_RE = re.compile(rb"^BCIL(\d+)\n")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "none"
    return str(value)


def _parse(field: dataclasses.Field, text: str):
    if text == "none":
        return None
    kind = field.type if isinstance(field.type, str) else getattr(field.type, "__name__", "")
    if kind == "bool":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    if kind == "int":
        return int(text)
    if kind == "str":
        return text
    value = float(text)
    return int(value) if field.name == "ar_period" and math.isfinite(value) and value == int(value) else value


def save_model(model: SequenceModel, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"config.{f.name} = {_fmt(getattr(model.config, f.name))}"
             for f in dataclasses.fields(ModelConfig)]
    lines.append("normalizer.min = " + ",".join(map(repr, model.normalizer.lo.tolist())))
    lines.append("normalizer.max = " + ",".join(map(repr, model.normalizer.hi.tolist())))
    for name, w in model.weights.items():
        lines.append("tensor = " + " ".join([name, *map(str, w.shape)]))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        fh.write(b"\0")
        for w in model.weights.values():
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())


def load_model(path) -> SequenceModel:
    data = Path(path).read_bytes()
    m = _MAGIC_RE.match(data)
    if m is None:
        raise Malformed("not a model checkpoint (bad magic)")
    if data[:len(MAGIC)] != MAGIC:
        raise VersionMismatch(f"checkpoint version {m.group(1).decode()} is not supported")
    try:
        nul = data.index(b"\0", len(MAGIC))
    except ValueError:
        raise Malformed("metadata block is not terminated") from None
    try:
        text = data[len(MAGIC):nul].decode("utf-8")
    except UnicodeDecodeError:
        raise Malformed("metadata is not UTF-8") from None

    fields = {f.name: f for f in dataclasses.fields(ModelConfig)}
    cfg_kwargs, norm, tensors = {}, {}, []
    for lineno, line in enumerate(text.splitlines(), start=2):
        key, sep, value = line.partition(" = ")
        if not sep:
            raise Malformed("expected 'key = value'", lineno)
        try:
            if key.startswith("config."):
                name = key[7:]
                if name not in fields:
                    raise ValueError(f"unknown config key {name!r}")
                cfg_kwargs[name] = _parse(fields[name], value)
            elif key in ("normalizer.min", "normalizer.max"):
                norm[key] = np.array([float(x) for x in value.split(",")])
            elif key == "tensor":
                name, *dims = value.split()
                tensors.append((name, tuple(int(d) for d in dims)))
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise Malformed(str(exc), lineno) from None

    try:
        config = ModelConfig(**cfg_kwargs)
        normalizer = Normalizer(norm["normalizer.min"], norm["normalizer.max"])
    except (TypeError, ValueError, KeyError) as exc:
        raise Malformed(f"invalid configuration or normalizer: {exc}") from None
    if normalizer.lo.shape != (18,):
        raise Malformed("normalizer must cover 18 columns")

    v = config.model_variant
    expected = lstm.expected_shapes(v.n_in, v.n_out, config.layers, config.units)
    if [n for n, _ in tensors] != list(expected) or any(expected[n] != s for n, s in tensors):
        raise Malformed("tensor names/shapes do not match the configuration")

    payload = data[nul + 1:]
    sizes = [int(np.prod(s)) for _, s in tensors]
    if len(payload) != 8 * sum(sizes):
        raise Malformed(f"payload has {len(payload)} bytes, expected {8 * sum(sizes)}")
    weights, offset = {}, 0
    for (name, shape), size in zip(tensors, sizes):
        arr = np.frombuffer(payload, dtype="<f8", count=size, offset=offset).astype(float)
        weights[name] = arr.reshape(shape)
        offset += 8 * size
    if not all(np.all(np.isfinite(w)) for w in weights.values()):
        raise Malformed("non-finite weights")
    return SequenceModel(config, weights, normalizer)
