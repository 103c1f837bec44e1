"""Approximate nearest neighbor search through low-dimensional random projections."""
from .embedding import (
    DimensionParams,
    ProjectionMap,
    heuristic_dimension,
    project,
    sample_projection,
    target_dimension,
    target_dimension_expansion,
)
from .index import AnnConfig, AnnIndex, build_index, rho_exponent
from .kann_tree import KannTree, Neighbor, build_tree, range_search, search_kann

__all__ = [
    "AnnConfig", "AnnIndex", "DimensionParams", "KannTree", "Neighbor", "ProjectionMap",
    "build_index", "build_tree", "heuristic_dimension", "project", "range_search",
    "rho_exponent", "sample_projection", "search_kann", "target_dimension",
    "target_dimension_expansion",
]
