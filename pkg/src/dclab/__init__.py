"""Spectra, kernels and solution operators for planar elliptic equations
that degenerate on a circle, plus a normalizer for second-order operators
with a point singularity.

Submodules load on first attribute access so that the command-line entry
point can configure thread counts before numpy is imported.
"""

from importlib import import_module

from .errors import DclabError, InvalidInput, InvariantViolation, NumericFailure

__version__ = "0.1.0"

_SUBMODULES = ("basic", "cli", "core", "cylinder", "expr", "floquet", "hill", "kernels", "normalizer",
               "oracle", "periodic", "second_order", "spectrum", "verify")

_EXPORTS = {
    "OperatorSpec": "core", "CylinderFunction": "core", "CylinderDomain": "core", "log_radii": "core",
    "apply_operator": "core", "apply_adjoint": "core", "green_residual": "core",
    "PeriodicFunction": "periodic", "winding_number": "periodic",
    "monodromy": "floquet", "fundamental_matrix": "floquet",
    "find_spectral_values": "spectrum", "SpectralValue": "spectrum", "SpectrumWindow": "spectrum",
    "basic_solution": "basic", "basic_family": "basic", "character": "basic",
    "kernel_context": "kernels", "kernel_omega": "kernels", "kernel_decomposed": "kernels",
    "laurent_coefficients": "cylinder", "cauchy_integral": "cylinder", "solve_T": "cylinder",
    "semilinear_solve": "cylinder",
    "build_P": "second_order", "solve_K": "second_order", "hypothesis_H_check": "second_order",
    "PlaneOperator": "normalizer", "normalize": "normalizer", "invariant_mu": "normalizer",
    "parse_expression": "expr",
    "BACKEND": "_backend",
}

__all__ = ["DclabError", "InvalidInput", "InvariantViolation", "NumericFailure", "__version__",
           *_SUBMODULES, *_EXPORTS]


def __getattr__(name):
    if name in _SUBMODULES:
        return import_module(f".{name}", __name__)
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
