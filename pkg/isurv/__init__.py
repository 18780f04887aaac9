# isurv/__init__.py

from .errors import (
    ISurvError,
    ValidationError,
    SchemaError,
    SizeError,
    DomainError,
    ShapeError,
    UnrepresentableLabelError,
    UndefinedMetricError,
    TrainingError,
    FormatError,
)
from .data import (
    SurvivalDataset,
    SurvivalTable,
    FeaturePreprocessor,
    SyntheticKind,
    SyntheticSpec,
    fit_preprocessor,
    prepare_split,
    read_table,
    load_csv,
    save_csv,
    gen_response,
    weibull_event_time,
    make_dataset,
)
from .grid import (
    TimeGrid,
    ImpreciseLabel,
    build_grid,
    interval_index,
    make_labels,
    label_bounds,
    sample_credal,
    sample_credal_batch,
)
from .attention import (
    Embedding,
    DotProductAttention,
    GaussianAttention,
    embed,
    raw_attention,
    make_mask,
    row_softmax,
    gaussian_attention,
    value_and_grad,
)
from .models import (
    Variant,
    ModelConfig,
    TrainedModel,
    mix_probabilities,
    instance_loss,
    instance_losses,
    loss_isurvm,
    loss_isurvq,
    loss_isurvj,
    train,
    fine_tune,
    attention_weights,
    predict_distribution,
    predict_distributions,
    predict_survival,
    predict_survival_curves,
    interval_probabilities,
    predict_interval_survival,
    model_interval_survival,
    expected_time,
    expected_times,
)
from .baselines import (
    SurvivalCurve,
    kaplan_meier,
    beran,
    beran_curves,
)
from .metrics import (
    EvaluationReport,
    c_index,
    concordance,
    brier_score,
    integrated_brier,
    ks_distance,
    unconditional_sf,
)
from .readwrite import (
    save_model,
    load_model,
)

name: str = "isurv"
