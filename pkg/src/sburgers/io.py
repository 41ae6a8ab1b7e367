"""Config parsing, canonical hashing, CSV writers and binary checkpoints."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import struct
import zlib
from pathlib import Path

import jsonschema
import numpy as np

from .errors import CheckpointError, ConfigurationError
from .noise import SigmaCoefficient
from .solver import SimulationConfig
from .weights import SpaceTimeGrid, WeightFunction

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

_weight_schema = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["exponential", "polynomial"]},
        "m": _pos,
        "r": {"type": "number", "minimum": 1},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["grid", "weight", "weight_hat", "k", "sigma", "u0"],
    "properties": {
        "grid": {
            "type": "object",
            "required": ["L", "nx", "T"],
            "properties": {
                "L": _pos,
                "nx": {"type": "integer", "minimum": 3},
                "T": _pos,
                "dt": {"anyOf": [_pos, {"type": "null"}]},
            },
            "additionalProperties": False,
        },
        "weight": _weight_schema,
        "weight_hat": _weight_schema,
        "k": {"type": "number", "minimum": 0},
        "sigma": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["bounded_sin", "saturating", "constant_zero"]},
                "beta": _pos,
                "lipschitz": _pos,
            },
            "additionalProperties": False,
        },
        "u0": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["gaussian", "zero", "values"]},
                "amplitude": _num,
                "width": _pos,
                "center": _num,
                "values": {"type": "array", "items": _num},
            },
            "additionalProperties": False,
        },
        "truncation_N": {"anyOf": [_pos, {"type": "null"}]},
        "flux": {"type": "boolean"},
        "seeds": {
            "anyOf": [
                {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                {
                    "type": "object",
                    "required": ["count"],
                    "properties": {
                        "start": {"type": "integer", "minimum": 0},
                        "count": {"type": "integer", "minimum": 1},
                    },
                    "additionalProperties": False,
                },
            ]
        },
        "ou": {
            "type": "object",
            "properties": {
                "alphas": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "alpha_frac": _pos,
                "q": _pos,
                "factorization_seeds": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "suite_params": {"type": "object"},
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "truncation_N": None,
    "flux": True,
    "seeds": {"start": 0, "count": 1},
    "ou": {"alphas": [1.0, 2.0, 4.0, 8.0], "alpha_frac": 0.2, "q": 8, "factorization_seeds": 0},
    "suite_params": {},
}


def parse_config(text):
    """JSON text -> config dict with defaults filled in.

    Raises ConfigurationError carrying line/column or the offending field.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    errors = sorted(jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(raw),
                    key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            where = ".".join(str(p) for p in e.absolute_path) or "<root>"
            msg = e.message
            if e.validator == "required":
                missing = msg.split("'")[1]
                where = f"{where}.{missing}" if where != "<root>" else missing
                msg = "required key missing"
            msgs.append(f"{where}: {msg}")
        raise ConfigurationError("; ".join(msgs))
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in raw.items():
        if key == "ou":
            cfg["ou"].update(val)
        else:
            cfg[key] = val
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def canonical_json(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def seed_list(cfg):
    s = cfg["seeds"]
    if isinstance(s, list):
        return [int(v) for v in s]
    start = int(s.get("start", 0))
    return list(range(start, start + int(s["count"])))


def _weight(d):
    try:
        if d["kind"] == "exponential":
            return WeightFunction.exponential(d["m"])
        return WeightFunction.polynomial(d["r"])
    except KeyError as exc:
        raise ConfigurationError(f"weight of kind {d['kind']} needs {exc.args[0]!r}") from None


def build_u0(d, grid):
    kind = d["kind"]
    if kind == "zero":
        return np.zeros(grid.nx)
    if kind == "gaussian":
        a = d.get("amplitude", 1.0)
        w = d.get("width", 1.0)
        x0 = d.get("center", 0.0)
        u = a * np.exp(-((grid.x - x0) ** 2) / (2.0 * w * w))
        u[0] = u[-1] = 0.0
        return u
    vals = np.asarray(d.get("values", []), dtype=float)
    if vals.shape != (grid.nx,):
        raise ConfigurationError(f"u0.values: expected {grid.nx} entries, got {vals.size}")
    return vals


def build_sim_config(cfg, seed=0):
    try:
        g = cfg["grid"]
        grid = SpaceTimeGrid(g["L"], g["nx"], g["T"], g.get("dt"))
        s = cfg["sigma"]
        sigma = SigmaCoefficient(s["kind"], s.get("beta", 1.0), s.get("lipschitz", 1.0))
        return SimulationConfig(
            grid=grid, k=float(cfg["k"]), weight=_weight(cfg["weight"]),
            weight_hat=_weight(cfg["weight_hat"]), sigma=sigma,
            u0=build_u0(cfg["u0"], grid), truncation_N=cfg.get("truncation_N"),
            seed=int(seed), flux=bool(cfg.get("flux", True)),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def fmt(v):
    """Deterministic text form of a CSV cell."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return "" if v is None else str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([fmt(v) for v in r])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# binary checkpoint: b"SBRG", u32 version, u32 header length, UTF-8 JSON
# header, then little-endian f64 arrays listed in the header, then u32 crc32
MAGIC = b"SBRG"
VERSION = 1


def write_checkpoint(path, header, arrays):
    header = dict(header)
    header["arrays"] = [[name, list(a.shape)] for name, a in arrays.items()]
    hb = json.dumps(header, sort_keys=True).encode()
    body = MAGIC + struct.pack("<II", VERSION, len(hb)) + hb
    for a in arrays.values():
        body += np.ascontiguousarray(a, dtype="<f8").tobytes()
    body += struct.pack("<I", zlib.crc32(body))
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(body)
    tmp.replace(path)


def read_checkpoint(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc.strerror}") from None
    if len(data) < 16 or data[:4] != MAGIC:
        raise CheckpointError("bad magic")
    version, hlen = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != crc:
        raise CheckpointError("checksum mismatch")
    try:
        header = json.loads(data[12:12 + hlen])
    except ValueError:
        raise CheckpointError("unreadable header") from None
    off = 12 + hlen
    arrays = {}
    for name, shape in header["arrays"]:
        n = int(np.prod(shape)) * 8
        if off + n > len(data) - 4:
            raise CheckpointError("truncated array data")
        arrays[name] = np.frombuffer(data[off:off + n], dtype="<f8").reshape(shape).copy()
        off += n
    if off != len(data) - 4:
        raise CheckpointError("trailing bytes")
    return header, arrays
