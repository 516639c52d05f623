#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coloralign/color_core.hpp"
#include "coloralign/corpus_stats.hpp"
#include "coloralign/embeddings.hpp"
#include "coloralign/lexicon.hpp"
#include "coloralign/linmap.hpp"
#include "coloralign/rsa.hpp"

namespace coloralign {

struct RunConfig {
    std::filesystem::path chip_table;
    std::filesystem::path lexicon;
    // Each entry is a layered embedding directory or a single .vec file.
    std::vector<std::filesystem::path> embeddings;
    LexiconShape shape;

    long cutoff = 100;
    double c_scale = 0.001;
    CmcRatios ratios;
    CentroidOptions centroids;

    int folds = 6;
    int controls = 10;
    std::size_t shuffles = 100;
    std::size_t shuffle_significance = 0;
    std::size_t permutations = 10000;
    std::optional<std::uint64_t> seed;

    double probe_alpha = 0.1;
    std::vector<double> alpha_grid = default_alpha_grid();
    bool sweep = true;
    double weight_fraction = 0.95;
    RankMetric rank_metric = RankMetric::Pearson;
    // Chip centroids of static embeddings span at most (terms - 1) dimensions,
    // so probe fits may stall on the flat directions; they are kept and
    // counted unless strict convergence is requested.
    LassoOptions lasso{1e-6, 10000, true};
    TemperatureConfig temperature;

    // 0 = hardware concurrency.
    unsigned threads = 0;

    // Throws ConfigError for out-of-range values.
    void validate() const;
    // Seed, or ConfigError naming the step that needs one.
    std::uint64_t require_seed(const std::string& step) const;
};

// Everything a pipeline needs, loaded once.
struct PipelineInputs {
    ChipTable chips;
    NamingLexicon lexicon;
    TermSet terms;
    std::vector<EmbeddingSet> embeddings;  // one per (model, config, layer)
    std::map<std::string, std::string> checksums;  // path -> sha256
};

PipelineInputs load_pipeline_inputs(const RunConfig& config);

// "model/config/layer"
std::string embedding_label(const EmbeddingSet& set);

struct RsaItem {
    std::string model_id;
    ExtractionConfig config = ExtractionConfig::STATIC;
    int layer = 0;
    KendallResult kendall;
    std::map<std::string, double> per_term_tau;
    std::optional<ShuffleControlResult> shuffle;
};

struct LayerSummary {
    std::string model_id;
    ExtractionConfig config = ExtractionConfig::STATIC;
    std::size_t layers = 0;
    double max_tau = 0.0;
    int best_layer = 0;
    double mean_tau = 0.0;
    double std_tau = 0.0;  // population standard deviation over layers
};

std::vector<LayerSummary> summarize_layers(const std::vector<RsaItem>& items);

struct RsaReport {
    std::vector<std::string> terms;
    Rsm cielab;
    std::vector<RsaItem> items;
    std::vector<LayerSummary> summaries;
    std::vector<std::string> cross_labels;
    Eigen::MatrixXd cross_model;
};

RsaReport run_rsa_pipeline(const RunConfig& config, const PipelineInputs& inputs);
RsaReport run_rsa_pipeline(const RunConfig& config);

struct ChartRow {
    int chip_id = 0;
    char value_row = 'A';
    int hue_column = 0;
    double rank = 0.0;
    std::string modal_term;
};

struct ProbeAnalysis {
    CrossValidation cv;
    Selectivity selectivity;
    double nuclear_norm = 0.0;
    int nonzero_dims = 0;
    bool probe_converged = true;
    ChipRanks ranks;
    double mean_rank = 0.0;
    // Per-chip explained variance of the held-out predictions averaged over
    // warm and cool chips.
    std::map<int, double> chip_ev;
    double warm_ev = 0.0;
    double cool_ev = 0.0;
    std::size_t warm_chips = 0;
    std::size_t cool_chips = 0;
    // Empty when either variable is constant over the chips.
    std::optional<RankCorrelation> rank_surprisal;
    SubspaceAnalysis subspace;
    std::optional<ComplexitySweep> sweep;
    std::vector<ChartRow> chart;
};

// Per-chip EV: mean over output columns of 1 - residual^2 / variance, where
// the variance is taken over all rows. The mean over rows equals the pooled
// explained variance.
std::map<int, double> per_chip_explained_variance(const ProbeDataset& dataset, const Eigen::MatrixXd& predicted);

ProbeAnalysis analyze_probe(const ProbeDataset& dataset, const ChipTable& chips, const NamingLexicon& lexicon,
                            const RunConfig& config);

struct LinmapItem {
    std::string model_id;
    ExtractionConfig config = ExtractionConfig::STATIC;
    int layer = 0;
    std::vector<int> excluded_chips;
    ProbeAnalysis analysis;
};

struct LinmapReport {
    std::vector<std::string> terms;
    std::vector<LinmapItem> items;
};

LinmapReport run_linmap_pipeline(const RunConfig& config, const PipelineInputs& inputs);
LinmapReport run_linmap_pipeline(const RunConfig& config);

// JSON reports carry the resolved config and input checksums. Output is a
// pure function of its arguments.
std::string config_json(const RunConfig& config);
std::string rsa_report_json(const RunConfig& config, const PipelineInputs& inputs, const RsaReport& report);
std::string linmap_report_json(const RunConfig& config, const PipelineInputs& inputs, const LinmapReport& report);

std::string chart_csv(const std::vector<ChartRow>& rows);
std::string sweep_csv(const ComplexitySweep& sweep);
std::string subspace_csv(const SubspaceAnalysis& subspace);
// Per-term tau, one column per RSA item.
std::string per_term_csv(const RsaReport& report);

}  // namespace coloralign
