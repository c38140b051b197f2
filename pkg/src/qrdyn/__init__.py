"""Desk-scale toolkit for the dynamics of entire quasiregular self-maps of R^n.

The package bundles a small zoo of concrete maps (a 3D exponential-type beam
map, a trigonometric-type analogue, and several planar examples), an orbit
engine with escape/bounded/basin classification, three Julia-set estimators,
a pits-effect detector, numeric dilatation estimation, and an n-harmonic
condenser-capacity solver, all tied together by a reproducible CLI.
"""

__version__ = "0.1.0"

from .mapspec import MapSpec, EscapeCertificate
from .maps import build_map, registry_manifest, registered_maps

__all__ = [
    "MapSpec",
    "EscapeCertificate",
    "build_map",
    "registry_manifest",
    "registered_maps",
    "__version__",
]
