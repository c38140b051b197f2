"""Registry of the concrete maps, addressable by name and parameter list."""

from __future__ import annotations

from ..mapspec import MapSpec, ParameterError
from .planar import build_annulus_fixed, build_exp, build_fatou_modified
from .sine import build_qr_sine
from .stubs import build_power, build_three_pits
from .zorich import build_zorich

_REGISTRY = {
    "zorich": (build_zorich, {"a": 10.0, "M": 2.0}),
    "qr-sine": (build_qr_sine, {"lambda": 6.0, "n": 3.0}),
    "fatou-mod": (build_fatou_modified, {"M": 50.0}),
    "annulus-fixed": (build_annulus_fixed, {"delta": 0.05}),
    "exp": (build_exp, {"lambda": 0.2}),
    "three-pits": (build_three_pits, {}),
    "power2": (build_power, {}),
}

_PARAM_NAMES = {
    "zorich": {"a": "a", "M": "M"},
    "qr-sine": {"lambda": "lam", "n": "n"},
    "fatou-mod": {"M": "M"},
    "annulus-fixed": {"delta": "delta"},
    "exp": {"lambda": "lam"},
    "three-pits": {},
    "power2": {},
}


def registered_maps() -> list[str]:
    return sorted(_REGISTRY)


def build_map(name: str, **params) -> MapSpec:
    """Instantiate a registered map, overriding defaults with the given params."""
    if name not in _REGISTRY:
        raise ParameterError(
            f"unknown map {name!r}; registered maps: {', '.join(registered_maps())}"
        )
    builder, defaults = _REGISTRY[name]
    merged = dict(defaults)
    for key, value in params.items():
        if key not in merged:
            raise ParameterError(
                f"map {name!r} has no parameter {key!r}; expected one of "
                f"{sorted(merged) or 'none'}"
            )
        merged[key] = value
    kwargs = {_PARAM_NAMES[name][k]: v for k, v in merged.items()}
    return builder(**kwargs)


def registry_manifest() -> dict:
    """JSON-serialisable description of every registered map with its defaults."""
    out = {}
    for name, (_, defaults) in sorted(_REGISTRY.items()):
        spec = build_map(name)
        entry = spec.describe()
        entry["default_params"] = dict(defaults)
        out[name] = entry
    return out
