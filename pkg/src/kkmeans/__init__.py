"""Landmark-embedded kernel k-means with certification oracles and a benchmark harness."""

from .clustering import (
    ClusterModel,
    Partition,
    brute_force_kmeans,
    empirical_cost,
    fit_embedded,
    kernel_cost_exact,
    kmeanspp_seed,
    lifted_cost_exact,
    lloyd,
    test_cost,
)
from .data_io import ingest, read_idx
from .embedding import (
    EmbeddedSet,
    Embedder,
    build_embedder,
    eig_psd,
    embed,
    embed_lifted,
    lift_centroids,
    load_embedder,
    save_embedder,
)
from .errors import (
    DegenerateBandwidthError,
    DegenerateMatrixError,
    FormatError,
    InvalidArgumentError,
    KKMeansError,
)
from .experiment import (
    ExperimentConfig,
    RunRecord,
    child_seed,
    emit_csv,
    emit_summary,
    read_records_csv,
    run_experiment,
    split_indices,
)
from .kernels import (
    Dataset,
    GramMatrix,
    KernelSpec,
    auto_bandwidth,
    check_square_gram,
    gram,
    kernel_diag,
    kernel_eval,
)
from .landmarks import (
    CertificationReport,
    Dictionary,
    LeverageScores,
    certify,
    certify_gamma_preserving,
    certify_sandwich,
    effective_dimension,
    projected_gram,
    rls_exact,
    rls_size,
    sample_rls,
    sample_uniform,
    uniform_size,
)
from .metrics import nmi, summarize_runs

__version__ = "0.1.0"

__all__ = [
    "CertificationReport",
    "ClusterModel",
    "Dataset",
    "DegenerateBandwidthError",
    "DegenerateMatrixError",
    "Dictionary",
    "EmbeddedSet",
    "Embedder",
    "ExperimentConfig",
    "FormatError",
    "GramMatrix",
    "InvalidArgumentError",
    "KKMeansError",
    "KernelSpec",
    "LeverageScores",
    "Partition",
    "RunRecord",
    "auto_bandwidth",
    "brute_force_kmeans",
    "build_embedder",
    "certify",
    "certify_gamma_preserving",
    "certify_sandwich",
    "check_square_gram",
    "child_seed",
    "effective_dimension",
    "eig_psd",
    "embed",
    "embed_lifted",
    "emit_csv",
    "emit_summary",
    "empirical_cost",
    "fit_embedded",
    "gram",
    "ingest",
    "kernel_cost_exact",
    "kernel_diag",
    "kernel_eval",
    "kmeanspp_seed",
    "lift_centroids",
    "lifted_cost_exact",
    "lloyd",
    "load_embedder",
    "nmi",
    "projected_gram",
    "read_idx",
    "read_records_csv",
    "rls_exact",
    "rls_size",
    "run_experiment",
    "sample_rls",
    "sample_uniform",
    "save_embedder",
    "split_indices",
    "summarize_runs",
    "test_cost",
    "uniform_size",
]
