"""causalsynth: a causal synthetic-data workbench.

Hybrid synthetic tabular generation (covariates from a generator,
treatment/outcome from separately fitted models), targeted synthetic
pairing for practical positivity problems, privacy/utility diagnostics,
and a replicated simulation engine for benchmarking ATE estimators
before a real-data analysis.
"""

from .data import (
    ColumnSchema,
    Dataset,
    Standardizer,
    fit_standardizer,
    load_table,
    schema_from_json,
    schema_to_json,
    subsample,
    validate_schema,
    write_table,
)
from .dgp import (
    BENCHMARK_SCHEMA,
    BenchmarkConfig,
    TruthOracle,
    sample_dataset,
    true_ate,
    truth_oracle,
)
from .diagnostics import (
    BoundReport,
    DCRReport,
    LossDecomposition,
    OverlapDecomposition,
    ate_sensitivity_check,
    contrast_l2,
    dcr,
    joint_loss_identity,
    outcome_kl_loss,
    overlap_decomposition,
    pinsker_contrast_bound,
    tstr,
)
from .errors import NumericalError, ValidationError
from .estimators import (
    ATEEstimate,
    EstimatorConfig,
    eif_values,
    estimate_aipw,
    estimate_all,
    estimate_ipw,
    estimate_or,
    estimate_tmle,
)
from .generate import (
    HybridConfig,
    fit_generator,
    full_generate,
    hybrid_generate,
)
from .nuisance import (
    GeneralizedLinearModel,
    NuisancePair,
    auc,
    fit_glm,
    fit_nuisances,
    predict_prob,
    truncate,
)
from .positivity import (
    ExtremeSet,
    PairingPlan,
    PositivityResult,
    PositivityScenario,
    assign_outcomes,
    augment_dataset,
    detect_extreme,
    extreme_threshold,
    pair_synthetic,
    run_positivity_experiment,
)
from .simengine import (
    DgpEnvironment,
    FidelityReport,
    HybridEnvironment,
    MetricTable,
    SimConfig,
    build_reference,
    fidelity_compare,
    run_replications,
    sweep,
)

__version__ = "0.1.0"
