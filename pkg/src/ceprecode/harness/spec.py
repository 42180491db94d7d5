"""Declarative experiment descriptions and the key=value config format.

A config file is plain text, one ``key = value`` per line; ``#`` starts a
comment and lists are comma separated (``N = 60,100,200``). Keys prefixed
``full.`` override their unprefixed twin when a run asks for full-scale
Monte Carlo sizes.
"""

import enum
import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..alphabet import Alphabet
from ..exceptions import SpecValidationError

__all__ = [
    "ExperimentKind",
    "ExperimentSpec",
    "parse_config_text",
    "load_preset",
    "preset_names",
    "build_spec",
    "PARAMETERS",
]


class ExperimentKind(enum.Enum):
    MUI_VS_N = "mui-vs-n"
    E_STAR_VS_N = "e-star-vs-n"
    MIN_POWER_VS_N = "min-power-vs-n"
    POWER_GAP_VS_RATE = "power-gap-vs-rate"
    RATE_VS_N_SCALED_POWER = "rate-vs-n-scaled-power"
    CLT_CHECK = "clt-check"
    BOX_PROB = "box-prob"


def _int(text):
    value = int(str(text).strip())
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _float(text):
    value = float(str(text).strip())
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("must be finite")
    return value


def _pos_float(text):
    value = _float(text)
    if value <= 0:
        raise ValueError("must be positive")
    return value


def _list(item):
    def parse(text):
        if isinstance(text, (list, tuple)):
            parts = list(text)
        else:
            parts = [p for p in str(text).split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)

    return parse


def _ascending(item):
    base = _list(item)

    def parse(text):
        values = base(text)
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("values must be strictly ascending")
        return values

    return parse


def _alphabet(text):
    return Alphabet.parse(text).kind.value


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean")


_REQUIRED = object()

# Shared Monte Carlo knobs; defaults match MonteCarloParams.
_MC = {
    "num_channels": (_int, 200),
    "num_symbols": (_int, 200),
    "max_outer_iterations": (_int, 10),
}

PARAMETERS = {
    ExperimentKind.MUI_VS_N: {
        "M": (_int, _REQUIRED),
        "N": (_ascending(_int), _REQUIRED),
        "alphabet": (_list(_alphabet), ("qam16", "gaussian")),
        "energy": (_pos_float, 1.0),
        **_MC,
    },
    ExperimentKind.E_STAR_VS_N: {
        "M": (_int, _REQUIRED),
        "N": (_ascending(_int), _REQUIRED),
        "alphabet": (_list(_alphabet), ("qam16",)),
        "target_mui": (_list(_pos_float), (0.1,)),
        "bracket_lo": (_pos_float, 0.01),
        "bracket_hi": (_pos_float, 20.0),
        "relative_tolerance": (_pos_float, 1e-3),
        **_MC,
    },
    ExperimentKind.MIN_POWER_VS_N: {
        "M": (_int, _REQUIRED),
        "N": (_ascending(_int), _REQUIRED),
        "target_rate": (_pos_float, 2.0),
        "include_zf": (_bool, False),
        **_MC,
    },
    ExperimentKind.POWER_GAP_VS_RATE: {
        "M": (_int, _REQUIRED),
        "N": (_int, _REQUIRED),
        "rates": (_ascending(_pos_float), _REQUIRED),
        **_MC,
    },
    ExperimentKind.RATE_VS_N_SCALED_POWER: {
        "M": (_int, _REQUIRED),
        "N": (_ascending(_int), _REQUIRED),
        "p0": (_pos_float, _REQUIRED),
        **_MC,
    },
    ExperimentKind.CLT_CHECK: {
        "M": (_int, _REQUIRED),
        "N": (_ascending(_int), _REQUIRED),
        "samples": (_int, 100000),
    },
    ExperimentKind.BOX_PROB: {
        "M": (_int, _REQUIRED),
        "N": (_ascending(_int), _REQUIRED),
        "delta": (_ascending(_pos_float), _REQUIRED),
        "alphabet": (_alphabet, "qam16"),
        "energy": (_pos_float, 1.0),
        "samples": (_int, 100000),
    },
}

# Parameters that describe the run rather than the experiment.
_META_KEYS = {"kind", "seed"}


def parse_config_text(text, source="<config>"):
    """Parse key=value lines into an ordered dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecValidationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise SpecValidationError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def _preset_dir():
    return resources.files("ceprecode.harness") / "presets"


def preset_names():
    return sorted(p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith(".cfg"))


def load_preset(name_or_path):
    """Raw key=value mapping from a preset name (shipped) or a file path."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_config_text(path.read_text(), str(path))
    candidate = _preset_dir() / f"{name_or_path}.cfg"
    if candidate.is_file():
        return parse_config_text(candidate.read_text(), f"preset {name_or_path}")
    raise SpecValidationError(f"no preset file or shipped preset named {name_or_path!r}")


def _format_value(value):
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value).lower() if isinstance(value, bool) else str(value)


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated experiment: kind, typed parameters and master seed."""

    kind: ExperimentKind
    parameters: dict = field(default_factory=dict)
    master_seed: int = 0
    output_path: str = ""

    def canonical_text(self):
        lines = [f"kind={self.kind.value}", f"seed={self.master_seed}"]
        lines += [f"{k}={_format_value(v)}" for k, v in sorted(self.parameters.items())]
        return "\n".join(lines) + "\n"

    @property
    def spec_hash(self):
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    def __getitem__(self, key):
        return self.parameters[key]


def build_spec(kind, raw, master_seed=0, output_path="", full=False):
    """Validate raw string parameters for ``kind`` into an :class:`ExperimentSpec`.

    Every required key must be present and every value must parse before
    anything runs; unknown keys are rejected.
    """
    kind = ExperimentKind(kind) if not isinstance(kind, ExperimentKind) else kind
    schema = PARAMETERS[kind]
    raw = dict(raw)
    declared = raw.pop("kind", None)
    if declared is not None and declared.strip() != kind.value:
        raise SpecValidationError(f"preset is for {declared!r}, not {kind.value!r}")
    if "seed" in raw:
        master_seed = raw.pop("seed")
    scaled = {k[5:]: v for k, v in raw.items() if k.startswith("full.")}
    raw = {k: v for k, v in raw.items() if not k.startswith("full.")}
    if full:
        raw.update(scaled)
    unknown = sorted(set(raw) - set(schema) - set(_META_KEYS))
    bad_scaled = sorted(set(scaled) - set(schema))
    if unknown or bad_scaled:
        raise SpecValidationError(f"unknown parameter(s) for {kind.value}: {', '.join(unknown + bad_scaled)}")
    params = {}
    for name, (parse, default) in schema.items():
        if name in raw:
            try:
                params[name] = parse(raw[name])
            except (TypeError, ValueError) as exc:
                raise SpecValidationError(f"parameter {name}={raw[name]!r}: {exc}") from None
        elif default is _REQUIRED:
            raise SpecValidationError(f"missing required parameter {name!r} for {kind.value}")
        else:
            params[name] = default
    try:
        seed = int(str(master_seed).strip())
    except ValueError:
        raise SpecValidationError(f"seed must be an integer, got {master_seed!r}") from None
    if not 0 <= seed < 2**64:
        raise SpecValidationError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    _check_consistency(kind, params)
    return ExperimentSpec(kind, params, seed, str(output_path))


def _check_consistency(kind, params):
    M = params["M"]
    ns = params["N"] if isinstance(params["N"], tuple) else (params["N"],)
    if any(n < M for n in ns):
        raise SpecValidationError(f"every N must be >= M={M}, got N={ns}")
    if kind is ExperimentKind.E_STAR_VS_N and params["bracket_lo"] >= params["bracket_hi"]:
        raise SpecValidationError("bracket_lo must be below bracket_hi")
