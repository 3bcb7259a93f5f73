"""Verification lab for taut contact spheres and their hyperkaehler structures.

Modules:

* :mod:`tautlab.jets` -- truncated Taylor jets and scalar fields (order <= 4)
* :mod:`tautlab.forms` -- differential forms, vector fields, chart maps
* :mod:`tautlab.quat` -- quaternions and quaternion-valued forms
* :mod:`tautlab.contact` -- contact spheres, structure data, metrics, Reeb fields
* :mod:`tautlab.hk` -- symplectic triples, normal forms, curvature
* :mod:`tautlab.models` -- concrete examples and the Monge-Ampere chain
* :mod:`tautlab.cli` -- command-line suites
"""

from .contact import ContactSphere, MetricField, StructureData
from .forms import ChartMap, DifferentialForm, VectorField
from .hk import SymplecticTriple
from .jets import Jet, ScalarField, eval_jet
from .quat import Quaternion, QuaternionForm

__version__ = "0.1.0"

__all__ = [
    "ChartMap",
    "ContactSphere",
    "DifferentialForm",
    "Jet",
    "MetricField",
    "Quaternion",
    "QuaternionForm",
    "ScalarField",
    "StructureData",
    "SymplecticTriple",
    "VectorField",
    "eval_jet",
]
