"""corpus-atlas: discover subject categories in an embedded document corpus.

Pipeline: ingest and filter arXiv-style metadata, align precomputed abstract
embeddings, PCA-reduce to a variance target, select the cluster count by
validation silhouette over a K-Means sweep, and report how the discovered
clusters relate to the original subject labels.
"""

from .cluster import KMeansModel, KMeansParams
from .corpus import (
    Corpus,
    FilterPolicy,
    LengthStats,
    PaperRecord,
    SplitIndex,
    category_histograms,
    length_stats,
    load_atlas,
    load_corpus,
    macro_of,
    save_corpus,
    split,
)
from .embedstore import AlignResult, EmbeddingMatrix, align, read_embeddings, write_embeddings
from .modelsel import SweepResult, select_best, silhouette, sweep
from .pipeline import PipelineConfig, load_config, run_pipeline
from .project import TsneConfig, calibrate_affinities, kl_and_gradient, tsne
from .reduce import PcaModel, explained_curve
from .report import ClusterReport, CrossTab, build_report, crosstab, emit_report

__version__ = "0.1.0"
