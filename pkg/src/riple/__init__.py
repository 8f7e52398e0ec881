"""Question recommendation from knowledge gaps and interests."""

__version__ = "0.1.0"

from .baselines import ItemAverage, ItemKNN, UserAverage, UserKNN
from .dataset import (DatasetError, InteractionDataset, ParseError, ValidationError,
                      export_dataset, load_dataset)
from .engine import recommend
from .evaluation import (EvalReport, SplitSpec, SyntheticTemplate, compare_algorithms,
                         kfold_split, rmse, run_experiment, sweep, topic_accuracy)
from .factorization import BiasedMatrixFactorization, MatrixFactorization, TrainingDivergedError
from .integration import gap_score, integrate
from .persistence import load_model, load_pipeline, save_model, save_pipeline
from .pipeline import RiPLE
from .profile import build_profile
from .synthetic import generate_cohort, simulate_interactions

__all__ = [
    "BiasedMatrixFactorization", "DatasetError", "EvalReport", "InteractionDataset",
    "ItemAverage", "ItemKNN", "MatrixFactorization", "ParseError", "RiPLE", "SplitSpec",
    "SyntheticTemplate", "TrainingDivergedError", "UserAverage", "UserKNN", "ValidationError",
    "build_profile", "compare_algorithms", "export_dataset", "gap_score", "generate_cohort",
    "integrate", "kfold_split", "load_dataset", "load_model", "load_pipeline", "recommend",
    "rmse", "run_experiment", "save_model", "save_pipeline", "simulate_interactions", "sweep",
    "topic_accuracy",
]
