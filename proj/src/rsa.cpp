#include "coloralign/rsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "coloralign/error.hpp"
#include "coloralign/kendall.hpp"
#include "coloralign/random.hpp"
#include "coloralign/text_io.hpp"

namespace coloralign {

namespace {

constexpr double kSymmetryTolerance = 1e-9;

void require_same_labels(const Rsm& a, const Rsm& b) {
    if (a.labels() != b.labels()) {
        throw AlignmentError("RSM label lists differ (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + " labels, or different order)");
    }
}

// Tau-b numerator of the upper triangles of `a` and `b` under relabelings of
// `b`. Ties in `a` and the multiset of `b` entries do not change under a
// relabeling, so only the joint ties and the inversion count are recomputed.
class LabelPermutationTau {
public:
    LabelPermutationTau(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) : n_(a.rows()) {
        std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
        for (Eigen::Index i = 0; i < n_; ++i)
            for (Eigen::Index j = i + 1; j < n_; ++j) pairs.emplace_back(i, j);
        const std::size_t m = pairs.size();

        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
            return a(pairs[p].first, pairs[p].second) < a(pairs[q].first, pairs[q].second);
        });
        row_.resize(m);
        col_.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            row_[k] = pairs[order[k]].first;
            col_[k] = pairs[order[k]].second;
        }
        for (std::size_t k = 0; k < m;) {
            std::size_t e = k + 1;
            const double v = a(row_[k], col_[k]);
            while (e < m && a(row_[e], col_[e]) == v) ++e;
            if (e - k > 1) {
                groups_.emplace_back(k, e);
                n1_ += static_cast<std::int64_t>((e - k) * (e - k - 1) / 2);
            }
            k = e;
        }

        std::vector<double> bvals;
        bvals.reserve(m);
        for (const auto& [i, j] : pairs) bvals.push_back(b(i, j));
        std::vector<double> sorted = bvals;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        brank_ = Eigen::MatrixXi::Zero(n_, n_);
        std::map<double, std::int64_t> tie_runs;
        for (const auto& [i, j] : pairs) {
            const int r = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), b(i, j)) - sorted.begin());
            brank_(i, j) = r;
            brank_(j, i) = r;
            ++tie_runs[b(i, j)];
        }
        for (const auto& [v, t] : tie_runs) n2_ += t * (t - 1) / 2;
        n0_ = static_cast<std::int64_t>(m) * static_cast<std::int64_t>(m - 1) / 2;
    }

    struct Scratch {
        std::vector<int> seq;
        std::vector<int> buf;
    };

    std::int64_t statistic(const std::vector<std::size_t>& perm, Scratch& s) const {
        const std::size_t m = row_.size();
        s.seq.resize(m);
        s.buf.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            s.seq[k] = brank_(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(row_[k])]),
                              static_cast<Eigen::Index>(perm[static_cast<std::size_t>(col_[k])]));
        }
        std::int64_t joint = 0;
        for (const auto& [lo, hi] : groups_) {
            std::sort(s.seq.begin() + static_cast<std::ptrdiff_t>(lo), s.seq.begin() + static_cast<std::ptrdiff_t>(hi));
            std::int64_t run = 1;
            for (std::size_t k = lo + 1; k <= hi; ++k) {
                if (k < hi && s.seq[k] == s.seq[k - 1]) {
                    ++run;
                } else {
                    joint += run * (run - 1) / 2;
                    run = 1;
                }
            }
        }
        const std::int64_t swaps = count_inversions(s.seq, s.buf, 0, m);
        return n0_ - n1_ - n2_ + joint - 2 * swaps;
    }

    TauCounts counts(std::int64_t s) const { return {n0_, n1_, n2_, s}; }

private:
    static std::int64_t count_inversions(std::vector<int>& v, std::vector<int>& buf, std::size_t lo, std::size_t hi) {
        if (hi - lo < 2) return 0;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::int64_t swaps = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
        std::size_t i = lo, j = mid, k = lo;
        while (i < mid && j < hi) {
            if (v[j] < v[i]) {
                swaps += static_cast<std::int64_t>(mid - i);
                buf[k++] = v[j++];
            } else {
                buf[k++] = v[i++];
            }
        }
        while (i < mid) buf[k++] = v[i++];
        while (j < hi) buf[k++] = v[j++];
        std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
                  v.begin() + static_cast<std::ptrdiff_t>(lo));
        return swaps;
    }

    Eigen::Index n_;
    std::vector<Eigen::Index> row_, col_;
    std::vector<std::pair<std::size_t, std::size_t>> groups_;
    Eigen::MatrixXi brank_;
    std::int64_t n0_ = 0, n1_ = 0, n2_ = 0;
};

// Counts replicates whose |statistic| reaches |observed|. Replicate r draws its
// permutation from derive_seed(seed, r), so the count is schedule-independent.
std::size_t count_extreme(const LabelPermutationTau& engine, std::size_t n_labels, std::int64_t observed,
                          const PermutationOptions& options) {
    const std::size_t total = options.permutations;
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), total / 2000 + 1));
    std::vector<std::size_t> hits(workers, 0);
    auto work = [&](std::size_t w) {
        LabelPermutationTau::Scratch scratch;
        std::vector<std::size_t> perm(n_labels);
        for (std::size_t r = w; r < total; r += workers) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            std::mt19937_64 rng(derive_seed(options.seed, r));
            shuffle_in_place(perm, rng);
            const std::int64_t s = engine.statistic(perm, scratch);
            if (std::llabs(s) >= std::llabs(observed)) ++hits[w];
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    }
    return std::accumulate(hits.begin(), hits.end(), std::size_t{0});
}

}  // namespace

Rsm::Rsm(std::vector<std::string> labels, Eigen::MatrixXd matrix) : labels_(std::move(labels)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(labels_.size());
    if (matrix_.rows() != n || matrix_.cols() != n) {
        throw InputError("RSM: matrix is " + std::to_string(matrix_.rows()) + "x" + std::to_string(matrix_.cols()) +
                         " but there are " + std::to_string(n) + " labels");
    }
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
        throw InputError("RSM: duplicate labels");
    }
    if (!matrix_.allFinite()) throw InputError("RSM: non-finite entry");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(matrix_(i, j) - matrix_(j, i)) > kSymmetryTolerance) {
                throw InputError("RSM: not symmetric at (" + labels_[static_cast<std::size_t>(i)] + ", " +
                                 labels_[static_cast<std::size_t>(j)] + ")");
            }
            if (matrix_(i, j) > matrix_(i, i) + kSymmetryTolerance) {
                throw InputError("RSM: row '" + labels_[static_cast<std::size_t>(i)] +
                                 "' exceeds its self-similarity");
            }
        }
    }
}

std::vector<double> Rsm::upper_triangle() const {
    std::vector<double> out;
    const auto n = matrix_.rows();
    out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) out.push_back(matrix_(i, j));
    return out;
}

Rsm build_embedding_rsm(const EmbeddingSet& embeddings, const TermSet& terms) {
    std::string missing;
    for (const auto& t : terms.terms()) {
        if (!embeddings.contains(t)) missing += (missing.empty() ? "" : ", ") + t;
    }
    if (!missing.empty()) {
        throw NotFoundError("embedding set '" + embeddings.model_id() + "' lacks terms: " + missing);
    }
    const auto n = static_cast<Eigen::Index>(terms.size());
    std::vector<Eigen::VectorXd> vecs;
    for (const auto& t : terms.terms()) vecs.push_back(embeddings.vector(t));
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = pearson_similarity(vecs[static_cast<std::size_t>(i)], vecs[static_cast<std::size_t>(j)]);
            m(i, j) = r;
            m(j, i) = r;
        }
    }
    return Rsm(terms.terms(), std::move(m));
}

Rsm cielab_rsm_from_centroids(const std::vector<std::string>& labels, const std::vector<LabColor>& centroids,
                              double c_scale, CmcRatios ratios) {
    if (labels.size() != centroids.size()) throw InputError("CIELAB RSM: labels and centroids differ in length");
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = symmetric_delta_e_cmc(centroids[static_cast<std::size_t>(i)],
                                                   centroids[static_cast<std::size_t>(j)], ratios);
            const double s = similarity_kernel(d, c_scale);
            m(i, j) = s;
            m(j, i) = s;
        }
    }
    return Rsm(labels, std::move(m));
}

Rsm build_cielab_rsm(const NamingLexicon& lexicon, const ChipTable& chips, const TermSet& terms,
                     const CielabRsmOptions& options) {
    std::vector<LabColor> centroids;
    for (const auto& t : terms.terms()) centroids.push_back(term_centroid_lab(lexicon, chips, t, options.centroids));
    return cielab_rsm_from_centroids(terms.terms(), centroids, options.c_scale, options.ratios);
}

KendallResult kendall_tau(const Rsm& rsm_a, const Rsm& rsm_b, const PermutationOptions& options) {
    require_same_labels(rsm_a, rsm_b);
    const auto ua = rsm_a.upper_triangle();
    const auto ub = rsm_b.upper_triangle();
    const TauB tb = kendall_tau_b(ua, ub);

    KendallResult out;
    out.tau = tb.tau;
    out.p_normal = tb.p_normal;
    out.pairs = ua.size();
    if (options.permutations > 0 && std::isfinite(tb.tau)) {
        const LabelPermutationTau engine(rsm_a.matrix(), rsm_b.matrix());
        const std::size_t hits = count_extreme(engine, rsm_a.size(), tb.counts.s, options);
        out.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.permutations + 1);
        out.permutations = options.permutations;
    }
    return out;
}

std::map<std::string, double> per_term_tau(const Rsm& rsm_a, const Rsm& rsm_b) {
    require_same_labels(rsm_a, rsm_b);
    std::map<std::string, double> out;
    const auto n = static_cast<Eigen::Index>(rsm_a.size());
    std::vector<double> ra, rb;
    for (Eigen::Index i = 0; i < n; ++i) {
        ra.clear();
        rb.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            ra.push_back(rsm_a.matrix()(i, j));
            rb.push_back(rsm_b.matrix()(i, j));
        }
        out[rsm_a.labels()[static_cast<std::size_t>(i)]] = kendall_tau_b(ra, rb).tau;
    }
    return out;
}

ShuffleControlResult shuffle_control(const Rsm& rsm_embedding, const std::vector<LabColor>& centroids,
                                     const ShuffleControlOptions& options) {
    if (options.shuffles < 1) throw ConfigError("shuffle control needs at least one shuffle");
    const auto& labels = rsm_embedding.labels();
    if (centroids.size() != labels.size()) throw AlignmentError("shuffle control: centroid count differs from RSM size");

    ShuffleControlResult out;
    const Rsm identity = cielab_rsm_from_centroids(labels, centroids, options.c_scale, options.ratios);
    out.identity_tau = kendall_tau(rsm_embedding, identity, {0, 0}).tau;

    for (std::size_t r = 0; r < options.shuffles; ++r) {
        const auto perm = random_permutation(labels.size(), derive_seed(options.seed, r));
        std::vector<LabColor> shuffled(centroids.size());
        for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = centroids[perm[i]];
        const Rsm control = cielab_rsm_from_centroids(labels, shuffled, options.c_scale, options.ratios);
        const auto k = kendall_tau(rsm_embedding, control,
                                   {options.significance_permutations, derive_seed(options.seed ^ 0x5eedULL, r)});
        out.taus.push_back(k.tau);
        if (options.significance_permutations > 0) {
            out.p_values.push_back(k.p_value);
            if (k.p_value < 0.05) ++out.significant_at_05;
        }
    }
    const double n = static_cast<double>(out.taus.size());
    for (double t : out.taus) {
        out.mean_tau += t / n;
        out.mean_abs_tau += std::abs(t) / n;
    }
    return out;
}

ShuffleControlResult shuffle_control(const Rsm& rsm_embedding, const NamingLexicon& lexicon, const ChipTable& chips,
                                     const TermSet& terms, const ShuffleControlOptions& options) {
    if (rsm_embedding.labels() != terms.terms()) throw AlignmentError("shuffle control: RSM labels differ from term set");
    std::vector<LabColor> centroids;
    for (const auto& t : terms.terms()) centroids.push_back(term_centroid_lab(lexicon, chips, t, options.centroids));
    return shuffle_control(rsm_embedding, centroids, options);
}

Eigen::MatrixXd cross_model_rsa(const std::vector<Rsm>& rsms) {
    const auto n = static_cast<Eigen::Index>(rsms.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
    std::vector<std::vector<double>> flat;
    for (const auto& r : rsms) {
        require_same_labels(rsms.front(), r);
        flat.push_back(r.upper_triangle());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double t = kendall_tau_b(flat[static_cast<std::size_t>(i)], flat[static_cast<std::size_t>(j)]).tau;
            out(i, j) = t;
            out(j, i) = t;
        }
    }
    return out;
}

std::string rsm_to_csv(const Rsm& rsm) {
    std::string out = "term";
    for (const auto& l : rsm.labels()) out += "," + l;
    out += '\n';
    const auto n = static_cast<Eigen::Index>(rsm.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        out += rsm.labels()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) out += "," + text::format_double(rsm.matrix()(i, j));
        out += '\n';
    }
    return out;
}

Rsm rsm_from_csv(const std::string& contents, const std::string& source) {
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        const auto cells = text::split_on(line, ',');
        if (labels.empty()) {
            for (std::size_t k = 1; k < cells.size(); ++k) labels.emplace_back(text::trim(cells[k]));
            if (labels.empty()) throw ParseError(source, line_no, "header has no labels");
            continue;
        }
        if (cells.size() != labels.size() + 1) throw ParseError(source, line_no, "row width differs from header");
        if (std::string(text::trim(cells[0])) != labels[rows.size()]) {
            throw ParseError(source, line_no, "row label does not match header order");
        }
        std::vector<double> row;
        for (std::size_t k = 1; k < cells.size(); ++k) {
            const auto v = text::parse_double(text::trim(cells[k]));
            if (!v) throw ParseError(source, line_no, "malformed value");
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (static_cast<Eigen::Index>(rows.size()) != n) throw ParseError(source, line_no, "RSM is not square");
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return Rsm(std::move(labels), std::move(m));
}

void save_rsm_csv(const Rsm& rsm, const std::filesystem::path& path) {
    text::write_file(path, rsm_to_csv(rsm));
}

Rsm load_rsm_csv(const std::filesystem::path& path) {
    return rsm_from_csv(text::read_file(path), path.string());
}

}  // namespace coloralign
