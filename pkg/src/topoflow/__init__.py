"""topoflow: topological optimization of point clouds with diffeomorphic
interpolation of persistence-based gradients."""

from .rips import (
    PointCloud,
    Simplex,
    FilteredComplex,
    Diagram,
    DiagramPoint,
    SimplexBudgetError,
    build_filtration,
    filtration_value,
    compute_persistence,
    reduce_oracle,
    enclosing_radius,
)
from .losses import (
    LossSpec,
    Cotangent,
    simplification_loss,
    augmentation_loss,
    registration_loss,
    topological_loss,
    box_regularization,
    pers_k,
)
from .gradient import SparseGradient, DegenerateEdgeError, pullback, consolidate
from .diffeo import (
    Interpolant,
    SingularKernelError,
    fit,
    evaluate,
    lipschitz_bound,
    descent_check,
)
from .optimizer import (
    OptimConfig,
    Flow,
    FlowStep,
    TraceRecord,
    RunResult,
    LossPipeline,
    vanilla_step,
    diffeo_step,
    run,
    validation_loss,
    apply_flow,
    invert_flow,
)
from .datasets import generate

__version__ = "0.1.0"

__all__ = [
    "PointCloud", "Simplex", "FilteredComplex", "Diagram", "DiagramPoint",
    "SimplexBudgetError", "build_filtration", "filtration_value",
    "compute_persistence", "reduce_oracle", "enclosing_radius",
    "LossSpec", "Cotangent", "simplification_loss", "augmentation_loss",
    "registration_loss", "topological_loss", "box_regularization", "pers_k",
    "SparseGradient", "DegenerateEdgeError", "pullback", "consolidate",
    "Interpolant", "SingularKernelError", "fit", "evaluate",
    "lipschitz_bound", "descent_check",
    "OptimConfig", "Flow", "FlowStep", "TraceRecord", "RunResult",
    "LossPipeline", "vanilla_step", "diffeo_step", "run", "validation_loss",
    "apply_flow", "invert_flow",
    "generate",
    "__version__",
]
