"""novkit: entity-pair novelty measurement for paper and patent corpora."""

from .corpus import (AnalysisTable, Corpus, Document, EntityMention,
                     InstitutionRecord, PatentControls, build_variables,
                     filter_for_regression, load_corpus, write_corpus)
from .embed import (EmbeddingVector, VectorStore, fetch_remote,
                    load_vector_store, write_vector_store)
from .errors import (ConfigError, ConvergenceError, DataError, NovkitError,
                     NumericError, RankDeficiencyError)
from .normalize import (NormalizationMap, cluster_entities, levenshtein,
                        normalized_distance, preprocess_entity)
from .novelty import (EntityPair, NoveltyResult, PairDistanceTable,
                      annual_top_flags, combination_type_stats,
                      corpus_pair_distances, cosine_similarity,
                      document_novelty, enumerate_pairs, novelty_threshold,
                      semantic_distance, zscore_novelty)
from .stats import (DesignMatrix, ModelSuiteSpec, RegressionResult,
                    logistic_fit, mann_whitney_u, ols_fit, pearson_matrix,
                    quantile_fit, run_model_suite, vif)

__version__ = "0.1.0"
