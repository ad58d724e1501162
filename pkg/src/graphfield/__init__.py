"""Graph-complex calculus for polyvector fields.

Submodules:

``graphs``        decorated graphs, canonical forms, subgraphs and quotients
``faceoperad``    trees of corollas and their boundary differential
``polyfields``    exact polynomial polyvector fields and graph operators
``propagators``   angle forms on pairs of points
``integrator``    Monte Carlo weights on configuration spaces
``theory``        weight tables, induced operations, wheels and flows
``cli``           the ``graphfield`` command
"""

from .graphs import DecoratedGraph, canonical_form, enumerate_graphs, parse_graph, wheel
from .polyfields import Grading, PolyField, parse_polyfield, phi, schouten
from .propagators import get_propagator
from .integrator import WeightEstimate, weight, zeta_box_integral
from .theory import WeightTable, build_morphism, build_mu, duflo_transform, transform_mc

__version__ = "0.1.0"

__all__ = [
    "DecoratedGraph", "canonical_form", "enumerate_graphs", "parse_graph", "wheel",
    "Grading", "PolyField", "parse_polyfield", "phi", "schouten",
    "get_propagator", "WeightEstimate", "weight", "zeta_box_integral",
    "WeightTable", "build_morphism", "build_mu", "duflo_transform", "transform_mc",
]
