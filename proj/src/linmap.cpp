#include "coloralign/linmap.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "coloralign/random.hpp"

namespace coloralign {

namespace {

constexpr std::uint64_t kControlStream = 0xc0a7'0001ULL;

struct Standardized {
    Eigen::MatrixXd X;
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;  // 0 for constant columns
    Eigen::MatrixXd Y;
    Eigen::RowVectorXd y_mean;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    Standardized s;
    const double n = static_cast<double>(X.rows());
    s.mean = X.colwise().mean();
    s.X = X.rowwise() - s.mean;
    s.scale = (s.X.colwise().squaredNorm() / n).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.X.cols(); ++j) {
        if (s.scale(j) > 0.0) {
            s.X.col(j) /= s.scale(j);
        } else {
            s.X.col(j).setZero();
        }
    }
    s.y_mean = Y.colwise().mean();
    s.Y = Y.rowwise() - s.y_mean;
    return s;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

ProbeDataset take_rows(const ProbeDataset& d, const std::vector<Eigen::Index>& rows) {
    ProbeDataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
    out.Y.resize(static_cast<Eigen::Index>(rows.size()), d.Y.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(rows[i]);
        out.Y.row(static_cast<Eigen::Index>(i)) = d.Y.row(rows[i]);
        out.chip_ids.push_back(d.chip_ids.empty() ? static_cast<int>(rows[i]) : d.chip_ids[static_cast<std::size_t>(rows[i])]);
    }
    return out;
}

ProbeDataset permute_targets(const ProbeDataset& d, std::uint64_t seed) {
    const auto perm = random_permutation(static_cast<std::size_t>(d.rows()), seed);
    ProbeDataset out = d;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.Y.row(static_cast<Eigen::Index>(i)) = d.Y.row(static_cast<Eigen::Index>(perm[i]));
    }
    return out;
}

}  // namespace

void ProbeDataset::validate() const {
    if (X.rows() != Y.rows()) throw InputError("probe dataset: X and Y row counts differ");
    if (!chip_ids.empty() && static_cast<Eigen::Index>(chip_ids.size()) != X.rows()) {
        throw InputError("probe dataset: chip id list misaligned with rows");
    }
    if (X.rows() > kChartChipCount) throw InputError("probe dataset: more rows than chart chips");
    if (!X.allFinite() || !Y.allFinite()) throw InputError("probe dataset: non-finite entry");
}

ProbeDatasetBuild build_probe_dataset(const NamingLexicon& lexicon, const ChipTable& chips,
                                      const EmbeddingSet& embeddings, const TermSet& terms) {
    ProbeDatasetBuild out;
    std::vector<Eigen::VectorXd> rows;
    std::vector<LabColor> labs;
    for (int c = 0; c < lexicon.chip_count(); ++c) {
        auto centroid = chip_centroid_embedding(lexicon, c, embeddings, terms);
        if (!centroid) {
            out.excluded_chips.push_back(c);
            continue;
        }
        rows.push_back(std::move(*centroid));
        labs.push_back(chips.chip(c).lab);
        out.dataset.chip_ids.push_back(c);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.dataset.X.resize(n, embeddings.dim());
    out.dataset.Y.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.dataset.X.row(i) = rows[static_cast<std::size_t>(i)].transpose();
        const auto& lab = labs[static_cast<std::size_t>(i)];
        out.dataset.Y.row(i) << lab.L, lab.a, lab.b;
    }
    out.dataset.validate();
    return out;
}

LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha, const LassoOptions& options) {
    if (X.rows() != Y.rows()) throw InputError("lasso: X and Y row counts differ");
    if (X.rows() < 2) throw InputError("lasso: need at least two rows");
    if (alpha < 0.0) throw ConfigError("lasso: alpha must be non-negative");
    if (options.tol <= 0.0 || options.max_iter < 1) throw ConfigError("lasso: tol and max_iter must be positive");

    const Standardized s = standardize(X, Y);
    const Eigen::Index d = X.cols();
    const Eigen::Index k = Y.cols();
    const Eigen::VectorXd col_sq = s.X.colwise().squaredNorm().transpose();
    const double half_alpha = 0.5 * alpha;

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k, d);
    Eigen::MatrixXd R = s.Y;  // residuals, one column per output

    auto objective = [&] { return R.squaredNorm() + alpha * W.cwiseAbs().sum(); };

    // One pass over the given coordinates of every output; returns the largest
    // coefficient change.
    auto sweep = [&](bool active_only) {
        double max_change = 0.0;
        for (Eigen::Index out = 0; out < k; ++out) {
            auto r = R.col(out);
            for (Eigen::Index j = 0; j < d; ++j) {
                if (col_sq(j) == 0.0) continue;
                const double old = W(out, j);
                if (active_only && old == 0.0) continue;
                const double rho = s.X.col(j).dot(r) + col_sq(j) * old;
                const double updated = soft_threshold(rho, half_alpha) / col_sq(j);
                const double change = updated - old;
                if (change != 0.0) {
                    r.noalias() -= change * s.X.col(j);
                    W(out, j) = updated;
                    max_change = std::max(max_change, std::abs(change));
                }
            }
        }
        return max_change;
    };

    LassoFit fit;
    bool converged = false;
    while (fit.sweeps < options.max_iter) {
        const double full_change = sweep(false);
        ++fit.sweeps;
        fit.objective_trace.push_back(objective());
        if (full_change < options.tol) {
            converged = true;
            break;
        }
        while (fit.sweeps < options.max_iter) {
            const double active_change = sweep(true);
            ++fit.sweeps;
            fit.objective_trace.push_back(objective());
            if (active_change < options.tol) break;
        }
    }

    fit.standardized_weights = W;
    fit.weights = Eigen::MatrixXd::Zero(k, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        if (s.scale(j) > 0.0) fit.weights.col(j) = W.col(j) / s.scale(j);
    }
    fit.intercept = (s.y_mean - s.mean * fit.weights.transpose()).transpose();

    fit.converged = converged;
    if (!converged && !options.accept_unconverged) {
        throw LassoNonConvergence("lasso did not converge within " + std::to_string(options.max_iter) +
                                      " sweeps (alpha " + std::to_string(alpha) + ")",
                                  std::move(fit));
    }
    return fit;
}

double lasso_alpha_max(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    const Standardized s = standardize(X, Y);
    // Same dot products as the first coordinate sweep, so alpha_max zeroes
    // every coefficient without rounding slack.
    double m = 0.0;
    for (Eigen::Index o = 0; o < s.Y.cols(); ++o) {
        for (Eigen::Index j = 0; j < s.X.cols(); ++j) m = std::max(m, std::abs(s.X.col(j).dot(s.Y.col(o))));
    }
    return 2.0 * m;
}

Eigen::MatrixXd predict(const LassoFit& fit, const Eigen::MatrixXd& X) {
    return (X * fit.weights.transpose()).rowwise() + fit.intercept.transpose();
}

double explained_variance(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& predicted) {
    if (Y.rows() != predicted.rows() || Y.cols() != predicted.cols()) {
        throw InputError("explained variance: shape mismatch");
    }
    double total = 0.0;
    int used = 0;
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
        const double mean = Y.col(c).mean();
        const double ss_tot = (Y.col(c).array() - mean).square().sum();
        if (ss_tot <= 0.0) continue;
        const double ss_res = (Y.col(c) - predicted.col(c)).squaredNorm();
        total += 1.0 - ss_res / ss_tot;
        ++used;
    }
    return used ? total / used : 0.0;
}

std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (n / folds < 2) {
        throw ConfigError("cross-validation: " + std::to_string(n) + " rows cannot fill " + std::to_string(folds) +
                          " folds with at least 2 rows each");
    }
    const auto perm = random_permutation(static_cast<std::size_t>(n), seed);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        fold[perm[pos]] = static_cast<int>(pos * static_cast<std::size_t>(folds) / perm.size());
    }
    return fold;
}

CrossValidation cross_validate(const ProbeDataset& dataset, double alpha, int folds, std::uint64_t seed,
                               const LassoOptions& options) {
    dataset.validate();
    const auto assignment = fold_assignment(dataset.rows(), folds, seed);
    CrossValidation cv;
    cv.out_of_fold = Eigen::MatrixXd::Zero(dataset.rows(), dataset.Y.cols());
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < dataset.rows(); ++i) {
            (assignment[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        }
        const auto train_set = take_rows(dataset, train);
        const auto test_set = take_rows(dataset, test);
        const auto fit = fit_lasso(train_set.X, train_set.Y, alpha, options);
        if (!fit.converged) ++cv.unconverged_fits;
        const Eigen::MatrixXd pred = predict(fit, test_set.X);
        for (std::size_t i = 0; i < test.size(); ++i) cv.out_of_fold.row(test[i]) = pred.row(static_cast<Eigen::Index>(i));
        cv.per_fold_ev.push_back(explained_variance(test_set.Y, pred));
    }
    cv.mean_ev = std::accumulate(cv.per_fold_ev.begin(), cv.per_fold_ev.end(), 0.0) / folds;
    return cv;
}

Selectivity selectivity(const ProbeDataset& dataset, double alpha, int folds, int n_controls, std::uint64_t seed,
                        const LassoOptions& options) {
    if (n_controls < 1) throw ConfigError("selectivity needs at least one control run");
    Selectivity out;
    const auto real = cross_validate(dataset, alpha, folds, seed, options);
    out.ev_real = real.mean_ev;
    out.unconverged_fits = real.unconverged_fits;
    for (int c = 0; c < n_controls; ++c) {
        const auto control = permute_targets(dataset, derive_seed(seed ^ kControlStream, static_cast<std::uint64_t>(c)));
        const auto cv = cross_validate(control, alpha, folds, seed, options);
        out.ev_controls.push_back(cv.mean_ev);
        out.unconverged_fits += cv.unconverged_fits;
    }
    out.ev_control_mean = std::accumulate(out.ev_controls.begin(), out.ev_controls.end(), 0.0) / n_controls;
    out.selectivity = out.ev_real - out.ev_control_mean;
    return out;
}

double nuclear_norm(const Eigen::MatrixXd& W) {
    if (W.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(W).singularValues().sum();
}

double rank_from_distances(std::span<const double> distances, std::size_t true_index) {
    const double own = distances[true_index];
    std::size_t closer = 0, tied = 0;
    for (std::size_t j = 0; j < distances.size(); ++j) {
        if (j == true_index) continue;
        if (distances[j] < own) {
            ++closer;
        } else if (distances[j] == own) {
            ++tied;
        }
    }
    return 1.0 + static_cast<double>(closer) + 0.5 * static_cast<double>(tied);
}

ChipRanks chip_rank(const Eigen::MatrixXd& predicted, const ChipTable& gold, const std::vector<int>& chip_ids,
                    RankMetric metric) {
    const auto n = static_cast<std::size_t>(predicted.rows());
    if (predicted.cols() != 3) throw InputError("chip rank: predictions must have 3 columns");
    if (chip_ids.size() != n) throw InputError("chip rank: chip id list misaligned with predictions");
    if (n < 2) throw InputError("chip rank: need at least two chips");

    std::vector<Eigen::Vector3d> targets;
    for (int id : chip_ids) {
        const auto& lab = gold.chip(id).lab;
        targets.emplace_back(lab.L, lab.a, lab.b);
    }
    auto centred_unit = [](const Eigen::Vector3d& v) -> std::optional<Eigen::Vector3d> {
        const Eigen::Vector3d c = v.array() - v.mean();
        const double norm = c.norm();
        if (norm == 0.0) return std::nullopt;
        return Eigen::Vector3d(c / norm);
    };
    std::vector<std::optional<Eigen::Vector3d>> target_units;
    for (const auto& t : targets) target_units.push_back(centred_unit(t));

    ChipRanks out;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = predicted.row(static_cast<Eigen::Index>(i)).transpose();
        const auto pu = metric == RankMetric::Pearson ? centred_unit(p) : std::nullopt;
        const bool euclidean = metric == RankMetric::Euclidean || !pu;
        if (metric == RankMetric::Pearson && !pu) out.euclidean_fallback.push_back(chip_ids[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (euclidean) {
                dist[j] = (p - targets[j]).norm();
            } else {
                // Constant gold triples have undefined r; treat them as uncorrelated.
                const double r = target_units[j] ? std::clamp(pu->dot(*target_units[j]), -1.0, 1.0) : 0.0;
                dist[j] = 1.0 - r;
            }
        }
        out.ranks[chip_ids[i]] = rank_from_distances(dist, i);
    }
    return out;
}

SubspaceAnalysis subspace_analysis(const Eigen::MatrixXd& W, const ProbeDataset& dataset, double weight_fraction) {
    if (!(weight_fraction > 0.0 && weight_fraction <= 1.0)) throw ConfigError("weight fraction must lie in (0, 1]");
    if (W.cols() != dataset.X.cols()) throw InputError("subspace analysis: weight matrix width differs from X");

    const Eigen::VectorXd score = W.cwiseAbs().colwise().mean().transpose();
    SubspaceAnalysis out;
    out.ranked_dims.resize(static_cast<std::size_t>(W.cols()));
    std::iota(out.ranked_dims.begin(), out.ranked_dims.end(), Eigen::Index{0});
    std::stable_sort(out.ranked_dims.begin(), out.ranked_dims.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return score(x) > score(y); });

    const double total = score.sum();
    const Eigen::RowVectorXd x_mean = dataset.X.colwise().mean();
    const Eigen::RowVectorXd y_mean = dataset.Y.colwise().mean();
    const Eigen::MatrixXd Xc = dataset.X.rowwise() - x_mean;

    // Predictions of the truncated map grow one column at a time.
    Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(dataset.rows(), W.rows());
    auto ev_now = [&] { return explained_variance(dataset.Y, pred.rowwise() + y_mean); };

    double cumulative = 0.0;
    bool found = false;
    for (std::size_t rank = 0; rank < out.ranked_dims.size(); ++rank) {
        const Eigen::Index j = out.ranked_dims[rank];
        if (score(j) == 0.0) break;
        pred.noalias() += Xc.col(j) * W.col(j).transpose();
        cumulative += score(j);
        const double ev = ev_now();
        out.curve.push_back({static_cast<int>(rank + 1), ev});
        if (!found && cumulative >= weight_fraction * total * (1.0 - 1e-12)) {
            out.k = static_cast<int>(rank + 1);
            out.ev_at_k = ev;
            found = true;
        }
    }
    out.full_ev = out.curve.empty() ? ev_now() : out.curve.back().ev;
    if (!found) out.ev_at_k = out.full_ev;
    return out;
}

ComplexitySweep complexity_sweep(const ProbeDataset& dataset, std::vector<double> alphas, int folds, int n_controls,
                                 std::uint64_t seed, const LassoOptions& options) {
    if (alphas.empty()) throw ConfigError("complexity sweep: empty alpha grid");
    std::sort(alphas.begin(), alphas.end());
    ComplexitySweep out;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        SweepPoint p;
        p.alpha = alphas[i];
        const auto fit = fit_lasso(dataset.X, dataset.Y, p.alpha, options);
        p.nuclear_norm = nuclear_norm(fit.weights);
        p.nonzero = static_cast<int>((fit.weights.array() != 0.0).count());
        const auto sel = selectivity(dataset, p.alpha, folds, n_controls, seed, options);
        p.ev_real = sel.ev_real;
        p.ev_control = sel.ev_control_mean;
        p.unconverged_fits = sel.unconverged_fits + (fit.converged ? 0 : 1);
        if (!out.points.empty() && p.nuclear_norm > out.points.back().nuclear_norm + 1e-6) ++out.norm_increases;
        if (p.ev_real < p.ev_control) out.real_dominates_control = false;
        out.points.push_back(p);
    }
    return out;
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 13; ++i) grid.push_back(std::pow(10.0, -4.0 + 7.0 * i / 12.0));
    return grid;
}

}  // namespace coloralign
