#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coloralign/color_core.hpp"
#include "coloralign/embeddings.hpp"
#include "coloralign/error.hpp"
#include "coloralign/lexicon.hpp"

namespace coloralign {

// Rows are chips: X holds chip embedding centroids, Y the chips' Lab.
struct ProbeDataset {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
    std::vector<int> chip_ids;

    Eigen::Index rows() const noexcept { return X.rows(); }
    // Throws InputError on misaligned rows, NaN, or more than 330 chips.
    void validate() const;
};

struct ProbeDatasetBuild {
    ProbeDataset dataset;
    std::vector<int> excluded_chips;  // no retained term labels them
};

ProbeDatasetBuild build_probe_dataset(const NamingLexicon& lexicon, const ChipTable& chips,
                                      const EmbeddingSet& embeddings, const TermSet& terms);

struct LassoOptions {
    double tol = 1e-6;
    int max_iter = 10000;
    // Return the last iterate with converged = false instead of throwing.
    bool accept_unconverged = false;
};

// Coefficients in original input coordinates: prediction = X * weights^T +
// intercept^T. The penalised problem is solved on centred, unit-variance
// columns of X and centred Y, minimising
//     ||Xs Ws^T - Yc||^2 + alpha * sum |Ws|
// with no 1/n factor on the squared error.
struct LassoFit {
    Eigen::MatrixXd weights;               // k x d, original coordinates
    Eigen::VectorXd intercept;             // k
    Eigen::MatrixXd standardized_weights;  // k x d, standardised coordinates
    int sweeps = 0;
    bool converged = true;
    // Objective after every coordinate sweep (all outputs summed).
    std::vector<double> objective_trace;
};

class LassoNonConvergence : public NumericalError {
public:
    LassoNonConvergence(const std::string& what, LassoFit last) : NumericalError(what), last_(std::move(last)) {}
    const LassoFit& last_iterate() const noexcept { return last_; }

private:
    LassoFit last_;
};

LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha, const LassoOptions& options = {});

// Smallest alpha for which every standardised coefficient is zero.
double lasso_alpha_max(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

Eigen::MatrixXd predict(const LassoFit& fit, const Eigen::MatrixXd& X);

// Uniform average over output columns of 1 - SS_res / SS_tot. Columns with
// zero target variance are skipped; 0 when every column is skipped.
double explained_variance(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& predicted);

// Seeded shuffled assignment of n rows to `folds` near-equal folds.
std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed);

struct CrossValidation {
    double mean_ev = 0.0;
    std::vector<double> per_fold_ev;
    Eigen::MatrixXd out_of_fold;  // held-out prediction for every row
    int unconverged_fits = 0;
};

CrossValidation cross_validate(const ProbeDataset& dataset, double alpha, int folds, std::uint64_t seed,
                               const LassoOptions& options = {});

struct Selectivity {
    double selectivity = 0.0;
    double ev_real = 0.0;
    double ev_control_mean = 0.0;
    std::vector<double> ev_controls;
    int unconverged_fits = 0;  // real and control folds
};

// Cross-validated EV on the real targets minus the mean over `n_controls`
// runs where the rows of Y are randomly permuted.
Selectivity selectivity(const ProbeDataset& dataset, double alpha, int folds, int n_controls, std::uint64_t seed,
                        const LassoOptions& options = {});

double nuclear_norm(const Eigen::MatrixXd& W);

enum class RankMetric { Pearson, Euclidean };

// 1-based rank of `true_index` among ascending distances; ties share the mean
// rank.
double rank_from_distances(std::span<const double> distances, std::size_t true_index);

struct ChipRanks {
    std::map<int, double> ranks;
    // Chips whose predicted triple was constant under the Pearson metric and
    // were ranked by Euclidean distance instead.
    std::vector<int> euclidean_fallback;
};

// Ranks each chip's true Lab among the Lab of every chip in `chip_ids` by
// distance from its predicted Lab triple.
ChipRanks chip_rank(const Eigen::MatrixXd& predicted, const ChipTable& gold, const std::vector<int>& chip_ids,
                    RankMetric metric = RankMetric::Pearson);

struct SubspacePoint {
    int dims = 0;
    double ev = 0.0;
};

struct SubspaceAnalysis {
    int k = 0;
    double ev_at_k = 0.0;
    double full_ev = 0.0;
    std::vector<Eigen::Index> ranked_dims;  // by mean |coefficient|, descending
    std::vector<SubspacePoint> curve;        // EV keeping the top-k dims, k = 1..nonzero
};

// Keeps the fewest input dimensions that carry `weight_fraction` of the total
// absolute weight (averaged over output rows) and reports the EV of the
// truncated map on the dataset, with the intercept refitted from the means.
SubspaceAnalysis subspace_analysis(const Eigen::MatrixXd& W, const ProbeDataset& dataset, double weight_fraction);

struct SweepPoint {
    double alpha = 0.0;
    double nuclear_norm = 0.0;
    double ev_real = 0.0;
    double ev_control = 0.0;
    int nonzero = 0;
    int unconverged_fits = 0;
};

struct ComplexitySweep {
    std::vector<SweepPoint> points;  // ascending alpha
    std::size_t norm_increases = 0;  // steps where the norm grew by more than 1e-6
    bool real_dominates_control = true;
};

ComplexitySweep complexity_sweep(const ProbeDataset& dataset, std::vector<double> alphas, int folds, int n_controls,
                                 std::uint64_t seed, const LassoOptions& options = {});

// Logarithmic grid from 1e-4 to 1e3, 13 points.
std::vector<double> default_alpha_grid();

}  // namespace coloralign
