"""Group-aware feature attributions and an axiom-checking harness."""

__version__ = "0.1.0"

from .attribution import (
    AttributionResult,
    MethodOptions,
    aggregate_by_group,
    attribute,
    attribute_all,
    bshap,
    gshap,
    integrated_gradients,
    owen,
)
from .axioms import PreservationMatrix, run_preservation_matrix
from .counterexamples import reproduce
from .credit import credit_structure, ingest_credit_csv, surrogate_model
from .model import (
    AdditiveLogisticModel,
    CallableModel,
    CoalitionValueCache,
    LinearModel,
    LogisticLinearModel,
    PiecewiseLinear,
    coalition_value,
    compose_with_inverse,
    evaluate,
    gradient,
)
from .partition import GroupStructure, validate
from .transforms import GroupAffineTransform, LinearFractionalTransform
