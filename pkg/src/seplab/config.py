"""Config loading and validation for the command-line runner.

A run is described by a single JSON document. Rational parameters are written
as "num/den" strings (or integers); named builtins cover the common objects:

  sources      {"alphabet": [0, 1], "masses": ["1/2", "1/2"]}
               or the shorthand {"uniform": [0, 1]}
  distortions  "hamming", "sorted_hamming", or
               {"x_alphabet": [...], "y_alphabet": [...], "matrix": [[...]]}
  channels     "bsc(1/10)", "identity", "half_lying", or
               {"input": [...], "output": [...], "rows": [[...]]}
  media        {"kind": "independent_links", "links": {"0>1": "bsc(1/10)"}}
               or {"kind": "xor_interference", "flip": "1/10"}

Validation failures raise ConfigError with a field-level message; the runner
maps that to exit code 2.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

import jsonschema

from .channels import CompoundChannel, Dmc, bsc, half_lying_channel, identity_channel
from .distortion import DistortionSpec, hamming, sorted_hamming
from .multiuser import (
    IndependentLinksMedium,
    UnicastDemand,
    independent_links_medium,
    xor_interference_medium,
)
from .probability import Distribution, as_fraction

__all__ = [
    "ConfigError",
    "load_config",
    "validate_config",
    "build_source",
    "build_distortion",
    "build_channel",
    "build_channel_set",
    "build_medium",
    "build_demand",
    "STOCHASTIC_SUBCOMMANDS",
    "SUBCOMMANDS",
]

SUBCOMMANDS = (
    "rd",
    "capacity",
    "simulate",
    "exponent",
    "duality",
    "threshold",
    "multiuser",
    "verify-all",
)

# Subcommands that draw random samples and therefore demand a master seed.
STOCHASTIC_SUBCOMMANDS = frozenset({"capacity", "simulate", "multiuser"})


class ConfigError(ValueError):
    """Schema violation or unbuildable config; message names the field."""


# --------------------------------------------------------------------------
# schema fragments

_RATIONAL = {
    "oneOf": [
        {"type": "integer"},
        {"type": "number"},
        {"type": "string", "pattern": r"^-?\d+(/\d+)?$"},
    ]
}
_SYMBOL = {"type": ["integer", "string"]}
_ALPHABET = {"type": "array", "items": _SYMBOL, "minItems": 1}
_SOURCE = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"uniform": _ALPHABET},
            "required": ["uniform"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "alphabet": _ALPHABET,
                "masses": {"type": "array", "items": _RATIONAL, "minItems": 1},
            },
            "required": ["alphabet", "masses"],
            "additionalProperties": False,
        },
    ]
}
_MATRIX = {
    "type": "array",
    "items": {"type": "array", "items": _RATIONAL, "minItems": 1},
    "minItems": 1,
}
_DISTORTION = {
    "oneOf": [
        {"type": "string", "enum": ["hamming", "sorted_hamming"]},
        {
            "type": "object",
            "properties": {
                "x_alphabet": _ALPHABET,
                "y_alphabet": _ALPHABET,
                "matrix": _MATRIX,
            },
            "required": ["x_alphabet", "y_alphabet", "matrix"],
            "additionalProperties": False,
        },
    ]
}
_CHANNEL = {
    "oneOf": [
        {"type": "string", "pattern": r"^(bsc\([^)]+\)|identity|half_lying)$"},
        {
            "type": "object",
            "properties": {"input": _ALPHABET, "output": _ALPHABET, "rows": _MATRIX},
            "required": ["input", "output", "rows"],
            "additionalProperties": False,
        },
    ]
}
_CHANNELS = {"type": "array", "items": _CHANNEL, "minItems": 1}
_BLOCKLENGTHS = {
    "type": "array",
    "items": {"type": "integer", "minimum": 1},
    "minItems": 1,
}
_SEED = {"type": "integer", "minimum": 0}
_MEDIUM = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "independent_links"},
                "links": {
                    "type": "object",
                    "patternProperties": {r"^\d+>\d+$": _CHANNEL},
                    "additionalProperties": False,
                    "minProperties": 1,
                },
            },
            "required": ["kind", "links"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "xor_interference"},
                "flip": _RATIONAL,
            },
            "required": ["kind", "flip"],
            "additionalProperties": False,
        },
    ]
}
_DEMAND = {
    "type": "object",
    "properties": {
        "sender": {"type": "integer", "minimum": 0},
        "receiver": {"type": "integer", "minimum": 0},
        "source": _SOURCE,
        "distortion": _DISTORTION,
        "level": _RATIONAL,
    },
    "required": ["sender", "receiver", "source", "distortion", "level"],
    "additionalProperties": False,
}

_SCHEMAS: dict[str, dict] = {
    "rd": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "rd"},
            "source": _SOURCE,
            "distortion": _DISTORTION,
            "levels": {"type": "array", "items": _RATIONAL, "minItems": 1},
        },
        "required": ["subcommand", "source", "distortion", "levels"],
        "additionalProperties": False,
    },
    "capacity": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "capacity"},
            "channels": _CHANNELS,
            "restarts": {"type": "integer", "minimum": 1},
            "iterations": {"type": "integer", "minimum": 1},
            "seed": _SEED,
        },
        "required": ["subcommand", "channels", "seed"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "simulate"},
            "channels": _CHANNELS,
            "source": _SOURCE,
            "distortion": _DISTORTION,
            "typicality": _RATIONAL,
            "level": _RATIONAL,
            "rate": _RATIONAL,
            "blocklengths": _BLOCKLENGTHS,
            "trials": {"type": "integer", "minimum": 1},
            "seed": _SEED,
        },
        "required": [
            "subcommand",
            "channels",
            "source",
            "distortion",
            "typicality",
            "level",
            "rate",
            "blocklengths",
            "trials",
            "seed",
        ],
        "additionalProperties": False,
    },
    "exponent": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "exponent"},
            "source": _SOURCE,
            "distortion": _DISTORTION,
            "typicality": _RATIONAL,
            "level": _RATIONAL,
            "rate": _RATIONAL,
            "blocklengths": _BLOCKLENGTHS,
        },
        "required": [
            "subcommand",
            "source",
            "distortion",
            "typicality",
            "level",
            "rate",
            "blocklengths",
        ],
        "additionalProperties": False,
    },
    "duality": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "duality"},
            "source": _SOURCE,
            "distortion": _DISTORTION,
            "blocklengths": _BLOCKLENGTHS,
            "levels": {
                "oneOf": [
                    {"const": "grid"},
                    {"type": "array", "items": _RATIONAL, "minItems": 1},
                ]
            },
            "representatives": {"type": "integer", "minimum": 0},
        },
        "required": ["subcommand", "source", "distortion", "blocklengths", "levels"],
        "additionalProperties": False,
    },
    "threshold": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "threshold"},
            "source": _SOURCE,
            "distortion": _DISTORTION,
            "level": _RATIONAL,
            "rate": _RATIONAL,
            "blocklengths": _BLOCKLENGTHS,
        },
        "required": [
            "subcommand",
            "source",
            "distortion",
            "level",
            "rate",
            "blocklengths",
        ],
        "additionalProperties": False,
    },
    "multiuser": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "multiuser"},
            "mode": {"enum": ["simulate", "replacement", "end_to_end"]},
            "media": {"type": "array", "items": _MEDIUM, "minItems": 1},
            "demands": {"type": "array", "items": _DEMAND, "minItems": 1},
            "blocklength": {"type": "integer", "minimum": 1},
            "trials": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "codebook_law": _SOURCE,
            "pair": {
                "type": "array",
                "items": {"type": "integer", "minimum": 0},
                "minItems": 2,
                "maxItems": 2,
            },
            "source_rates": {"type": "array", "items": _RATIONAL},
            "channel_rates": {"type": "array", "items": _RATIONAL},
        },
        "required": ["subcommand", "media", "demands", "blocklength", "seed"],
        "additionalProperties": False,
    },
    "verify-all": {
        "type": "object",
        "properties": {
            "subcommand": {"const": "verify-all"},
            "criteria": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1, "maximum": 12},
                "minItems": 1,
            },
            "inject_fault": {"type": "boolean"},
        },
        "required": ["subcommand"],
        "additionalProperties": False,
    },
}


# --------------------------------------------------------------------------
# loading / validation


def load_config(path) -> dict:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config unreadable: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate_config(doc)
    return doc


def validate_config(doc) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    sub = doc.get("subcommand")
    if sub not in _SCHEMAS:
        raise ConfigError(
            f"subcommand: expected one of {sorted(_SCHEMAS)}, got {sub!r}"
        )
    validator = jsonschema.Draft202012Validator(_SCHEMAS[sub])
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        field = "/".join(str(p) for p in err.absolute_path) or "top level"
        raise ConfigError(f"{field}: {err.message}")
    if sub in STOCHASTIC_SUBCOMMANDS and "seed" not in doc:
        raise ConfigError("seed: required for stochastic runs")


# --------------------------------------------------------------------------
# builders


def build_source(frag) -> Distribution:
    if "uniform" in frag:
        return Distribution.uniform(tuple(frag["uniform"]))
    alphabet = tuple(frag["alphabet"])
    masses = frag["masses"]
    if len(masses) != len(alphabet):
        raise ConfigError("source/masses: length must match alphabet")
    exact = all(isinstance(m, (int, str)) for m in masses)
    try:
        if exact:
            return Distribution.rational(alphabet, [as_fraction(m) for m in masses])
        return Distribution.from_floats(alphabet, [float(m) for m in masses])
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"source/masses: {exc}") from exc


def build_distortion(frag, alphabet=(0, 1)) -> DistortionSpec:
    if frag == "hamming":
        return hamming(tuple(alphabet))
    if frag == "sorted_hamming":
        return sorted_hamming(tuple(alphabet))
    matrix = tuple(
        tuple(as_fraction(v) if isinstance(v, (int, str)) else float(v) for v in row)
        for row in frag["matrix"]
    )
    try:
        return DistortionSpec(
            tuple(frag["x_alphabet"]),
            tuple(frag["y_alphabet"]),
            "additive",
            name="config-matrix",
            matrix=matrix,
        )
    except ValueError as exc:
        raise ConfigError(f"distortion: {exc}") from exc


_BSC_RE = re.compile(r"^bsc\(([^)]+)\)$")


def build_channel(frag):
    if isinstance(frag, str):
        match = _BSC_RE.match(frag)
        if match:
            try:
                return bsc(as_fraction(match.group(1)))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"channel: bad crossover {match.group(1)!r}") from exc
        if frag == "identity":
            return identity_channel()
        if frag == "half_lying":
            return half_lying_channel()
        raise ConfigError(f"channel: unknown builtin {frag!r}")
    rows = tuple(
        tuple(as_fraction(v) if isinstance(v, (int, str)) else float(v) for v in row)
        for row in frag["rows"]
    )
    try:
        return Dmc(tuple(frag["input"]), tuple(frag["output"]), rows)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"channel: {exc}") from exc


def build_channel_set(frags) -> CompoundChannel:
    kernels = [build_channel(f) for f in frags]
    try:
        return CompoundChannel(kernels)
    except ValueError as exc:
        raise ConfigError(f"channels: {exc}") from exc


def build_medium(frag):
    if frag["kind"] == "xor_interference":
        return xor_interference_medium(as_fraction(frag["flip"]))
    links = {}
    for key, chan in frag["links"].items():
        s, r = key.split(">")
        kernel = build_channel(chan)
        if not isinstance(kernel, Dmc):
            raise ConfigError(f"media/links/{key}: links must be per-letter kernels")
        links[(int(s), int(r))] = kernel
    try:
        return independent_links_medium(links)
    except ValueError as exc:
        raise ConfigError(f"media/links: {exc}") from exc


def build_demand(frag) -> UnicastDemand:
    source = build_source(frag["source"])
    spec = build_distortion(frag["distortion"], source.alphabet)
    try:
        return UnicastDemand(
            int(frag["sender"]),
            int(frag["receiver"]),
            source,
            spec,
            as_fraction(frag["level"]),
        )
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"demands: {exc}") from exc
