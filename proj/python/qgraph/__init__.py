"""Spectra of quantum graphs: eigenvalues, band structures and flat-band states."""

from ._qgraph import (
    InputError,
    NumericalError,
    PreconditionError,
    Problem,
    QGraphError,
    band_structure,
    compact_state,
    eigenvalues,
    flat_bands,
    is_self_adjoint,
    load,
    loads,
    secular,
)

__all__ = [
    "InputError",
    "NumericalError",
    "PreconditionError",
    "Problem",
    "QGraphError",
    "band_structure",
    "compact_state",
    "eigenvalues",
    "flat_bands",
    "is_self_adjoint",
    "load",
    "loads",
    "secular",
]
