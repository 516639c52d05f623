#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "coloralign/color_core.hpp"
#include "coloralign/embeddings.hpp"
#include "coloralign/lexicon.hpp"

namespace coloralign {

// Representational similarity matrix over an ordered label list.
class Rsm {
public:
    Rsm() = default;
    // Throws InputError unless the matrix is square, matches the labels,
    // is symmetric within 1e-9, has unique labels, and every diagonal entry
    // is its row's maximum.
    Rsm(std::vector<std::string> labels, Eigen::MatrixXd matrix);

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    std::size_t size() const noexcept { return labels_.size(); }

    // Strict upper triangle, row-major.
    std::vector<double> upper_triangle() const;

private:
    std::vector<std::string> labels_;
    Eigen::MatrixXd matrix_;
};

// Pairwise Pearson similarity of the terms' embeddings; diagonal 1.
Rsm build_embedding_rsm(const EmbeddingSet& embeddings, const TermSet& terms);

struct CielabRsmOptions {
    double c_scale = 0.001;
    CmcRatios ratios;
    CentroidOptions centroids;
};

// Kernel similarity of symmetrised CMC distances between given centroids.
Rsm cielab_rsm_from_centroids(const std::vector<std::string>& labels, const std::vector<LabColor>& centroids,
                              double c_scale = 0.001, CmcRatios ratios = {});

Rsm build_cielab_rsm(const NamingLexicon& lexicon, const ChipTable& chips, const TermSet& terms,
                     const CielabRsmOptions& options = {});

struct PermutationOptions {
    std::size_t permutations = 10000;
    std::uint64_t seed = 0;
};

struct KendallResult {
    double tau = 0.0;
    double p_value = 1.0;   // two-sided label-permutation p
    double p_normal = 1.0;  // normal approximation
    std::size_t pairs = 0;
    std::size_t permutations = 0;
};

// Tau-b over the strict upper triangles. The p-value permutes the labels of
// `rsm_b` (rows and columns together). Throws AlignmentError when the label
// lists differ. permutations == 0 skips the permutation test.
KendallResult kendall_tau(const Rsm& rsm_a, const Rsm& rsm_b, const PermutationOptions& options = {});

// Tau-b between corresponding rows, self-entry removed. NaN where a row is
// constant in either RSM.
std::map<std::string, double> per_term_tau(const Rsm& rsm_a, const Rsm& rsm_b);

struct ShuffleControlOptions {
    std::size_t shuffles = 100;
    std::uint64_t seed = 0;
    double c_scale = 0.001;
    CmcRatios ratios;
    CentroidOptions centroids;
    // Permutation-test each shuffled tau with this many permutations (0 = skip).
    std::size_t significance_permutations = 0;
};

struct ShuffleControlResult {
    double identity_tau = 0.0;  // unshuffled assignment, sanity row
    std::vector<double> taus;
    std::vector<double> p_values;  // empty unless significance was requested
    double mean_tau = 0.0;
    double mean_abs_tau = 0.0;
    std::size_t significant_at_05 = 0;
};

// Re-runs RSA after randomly permuting which term owns which CIELAB centroid.
ShuffleControlResult shuffle_control(const Rsm& rsm_embedding, const NamingLexicon& lexicon, const ChipTable& chips,
                                     const TermSet& terms, const ShuffleControlOptions& options);

// Same, starting from precomputed centroids aligned with rsm_embedding's labels.
ShuffleControlResult shuffle_control(const Rsm& rsm_embedding, const std::vector<LabColor>& centroids,
                                     const ShuffleControlOptions& options);

// Pairwise tau-b between upper-triangle flattenings; diagonal 1.
Eigen::MatrixXd cross_model_rsa(const std::vector<Rsm>& rsms);

std::string rsm_to_csv(const Rsm& rsm);
Rsm rsm_from_csv(const std::string& contents, const std::string& source = "<memory>");
void save_rsm_csv(const Rsm& rsm, const std::filesystem::path& path);
Rsm load_rsm_csv(const std::filesystem::path& path);

}  // namespace coloralign
