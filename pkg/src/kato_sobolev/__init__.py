"""Numerical toolkit for Sobolev and uniformly-local Sobolev (Kato) spaces on periodic grids."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    FieldFormatError,
    GridError,
    IndeterminateError,
    KatoSobolevError,
    PreconditionError,
)
from .grid import GridSpec, SampledField, dft_forward, dft_inverse, field_read, field_write, make_grid, sample
from .kato import KatoNormSpec, TranslationSet, kato_norm
from .report import Case, ReportDoc
from .sobolev import h_norm, multiply
from .weights import BlockOrder, conv_bound_constant, weight_l1_norm

__all__ = [
    "BlockOrder",
    "Case",
    "ConvergenceError",
    "FieldFormatError",
    "GridError",
    "GridSpec",
    "IndeterminateError",
    "KatoNormSpec",
    "KatoSobolevError",
    "PreconditionError",
    "ReportDoc",
    "SampledField",
    "TranslationSet",
    "conv_bound_constant",
    "dft_forward",
    "dft_inverse",
    "field_read",
    "field_write",
    "h_norm",
    "kato_norm",
    "make_grid",
    "multiply",
    "sample",
    "weight_l1_norm",
]
