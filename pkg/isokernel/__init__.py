"""Heat kernels, isotropic Levy processes and subordination on spheres S^{d-1}."""
from .errors import (
    DivergenceError,
    DomainError,
    IntegrabilityError,
    IsoKernelError,
    ModelFileError,
    NotInvertibleError,
    NumericalError,
    StatisticalFailure,
    TestbedFailure,
    UnsupportedError,
)
from .special_fn import SphereGeometry
from .spectrum import BernsteinFunction, DensityFamily, LevyMeasureSpec, LevyModel

__all__ = [
    "BernsteinFunction",
    "DensityFamily",
    "DivergenceError",
    "DomainError",
    "IntegrabilityError",
    "IsoKernelError",
    "LevyMeasureSpec",
    "LevyModel",
    "ModelFileError",
    "NotInvertibleError",
    "NumericalError",
    "SphereGeometry",
    "StatisticalFailure",
    "TestbedFailure",
    "UnsupportedError",
]
