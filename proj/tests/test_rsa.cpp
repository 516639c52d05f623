#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "coloralign/error.hpp"
#include "coloralign/kendall.hpp"
#include "coloralign/random.hpp"
#include "coloralign/rsa.hpp"
#include "oracles.hpp"
#include "support/synthetic.hpp"

using namespace coloralign;

namespace {

std::vector<std::string> labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(i));
    return out;
}

// Symmetric matrix with unit diagonal and off-diagonal entries in (-1, 1),
// optionally rounded to create ties.
Eigen::MatrixXd random_similarity(Eigen::Index n, std::mt19937_64& rng, double round_to = 0.0) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = std::tanh(standard_normal(rng));
            if (round_to > 0) v = std::round(v / round_to) * round_to;
            m(i, j) = m(j, i) = v;
        }
    }
    return m;
}

Eigen::MatrixXd correlated(const Eigen::MatrixXd& a, double noise, std::mt19937_64& rng) {
    Eigen::MatrixXd b = a;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
            b(i, j) = b(j, i) = std::tanh(std::atanh(std::clamp(a(i, j), -0.999, 0.999)) + noise * standard_normal(rng));
        }
    }
    return b;
}

std::vector<double> upper(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

// Permutation p-value by explicit relabeling and brute-force pair counting,
// drawing the same permutations as the library.
double brute_force_p(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t permutations,
                     std::uint64_t seed) {
    const auto ua = upper(a);
    const auto c = oracle::brute_force_pairs(ua, upper(b));
    const long long observed = std::llabs(c.concordant - c.discordant);
    std::size_t hits = 0;
    const auto n = static_cast<std::size_t>(a.rows());
    for (std::size_t r = 0; r < permutations; ++r) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::mt19937_64 rng(derive_seed(seed, r));
        shuffle_in_place(perm, rng);
        Eigen::MatrixXd pb(a.rows(), a.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                pb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    b(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
        const auto pc = oracle::brute_force_pairs(ua, upper(pb));
        if (std::llabs(pc.concordant - pc.discordant) >= observed) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

}  // namespace

TEST_SUITE("rsa") {

TEST_CASE("tau-b matches brute force on sequences with ties") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform_below(rng, 60));
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(uniform_below(rng, t % 3 == 0 ? 4 : 1000));
            y[i] = static_cast<double>(uniform_below(rng, t % 2 == 0 ? 5 : 1000));
        }
        const auto c = oracle::brute_force_pairs(x, y);
        const auto tb = kendall_tau_b(x, y);
        CHECK(tb.counts.s == c.concordant - c.discordant);
        CHECK(tb.counts.n1 == c.tie_x);
        CHECK(tb.counts.n2 == c.tie_y);
        if (c.tie_x < c.pairs && c.tie_y < c.pairs) {
            CHECK(tb.tau == oracle::brute_force_tau_b(x, y));
        } else {
            CHECK(std::isnan(tb.tau));
        }
    }
}

TEST_CASE("tau-b normal approximation agrees with a textbook case") {
    // x = 1..10, y with two swaps: S = 45 - 2*2 = 41, no ties.
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, y{2, 1, 3, 4, 5, 6, 7, 8, 10, 9};
    const auto tb = kendall_tau_b(x, y);
    CHECK(tb.tau == doctest::Approx(41.0 / 45.0));
    const double var = 10.0 * 9.0 * 25.0 / 18.0;
    const double z = 41.0 / std::sqrt(var);
    CHECK(tb.p_normal == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("Rsm validation") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(0, 1) = m(1, 0) = 0.5;
    CHECK_NOTHROW(Rsm(labels(3), m));
    CHECK_THROWS_AS(Rsm(labels(2), m), InputError);
    Eigen::MatrixXd asym = m;
    asym(0, 1) = 0.4;
    CHECK_THROWS_AS(Rsm(labels(3), asym), InputError);
    Eigen::MatrixXd big = m;
    big(0, 2) = big(2, 0) = 2.0;
    CHECK_THROWS_AS(Rsm(labels(3), big), InputError);
    CHECK_THROWS_AS(Rsm({"a", "a", "b"}, m), InputError);
}

TEST_CASE("embedding RSM is Pearson between vectors") {
    Eigen::MatrixXd v(3, 4);
    v << 1, 2, 3, 4, 2, 4, 5, 4, 4, 3, 2, 1;
    const EmbeddingSet emb({"red", "blue", "gray"}, v);
    const auto rsm = build_embedding_rsm(emb, TermSet({"red", "blue", "gray"}));
    CHECK(rsm.matrix()(0, 1) == doctest::Approx(3.5 / std::sqrt(23.75)));
    CHECK(rsm.matrix()(0, 2) == doctest::Approx(-1.0));
    CHECK(rsm.matrix()(1, 1) == 1.0);
    try {
        build_embedding_rsm(emb, TermSet({"red", "mauve", "teal"}));
        FAIL("expected not-found");
    } catch (const NotFoundError& e) {
        CHECK(std::string(e.what()).find("mauve") != std::string::npos);
        CHECK(std::string(e.what()).find("teal") != std::string::npos);
    }
}

TEST_CASE("CIELAB RSM uses the kernel of symmetrised CMC") {
    const std::vector<LabColor> c{{50, 0, 0}, {60, 0, 0}, {40, 30, -20}};
    const auto rsm = cielab_rsm_from_centroids({"a", "b", "c"}, c);
    const double d = symmetric_delta_e_cmc(c[0], c[1]);
    CHECK(rsm.matrix()(0, 1) == doctest::Approx(std::exp(-0.001 * d * d)));
    CHECK(rsm.matrix()(1, 0) == rsm.matrix()(0, 1));
    CHECK(rsm.matrix()(2, 2) == 1.0);
}

TEST_CASE("tau of an RSM with itself is one") {
    std::mt19937_64 rng(8);
    const Rsm a(labels(10), random_similarity(10, rng));
    const auto k = kendall_tau(a, a, {200, 1});
    CHECK(k.tau == doctest::Approx(1.0));
    CHECK(k.pairs == 45);
    CHECK(k.p_value < 0.05);
}

TEST_CASE("label mismatch is an alignment error") {
    std::mt19937_64 rng(8);
    const Rsm a(labels(5), random_similarity(5, rng));
    const Rsm b({"x", "t1", "t2", "t3", "t4"}, random_similarity(5, rng));
    CHECK_THROWS_AS(kendall_tau(a, b), AlignmentError);
    CHECK_THROWS_AS(per_term_tau(a, b), AlignmentError);
}

TEST_CASE("permutation p equals explicit relabeling with brute-force counting") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 6; ++t) {
        const auto a = random_similarity(9, rng, t % 2 ? 0.25 : 0.0);
        const auto b = correlated(a, 0.3 + 0.4 * t, rng);
        const Rsm ra(labels(9), a), rb(labels(9), b);
        const auto k = kendall_tau(ra, rb, {300, 1000 + static_cast<std::uint64_t>(t)});
        CHECK(k.p_value == brute_force_p(a, b, 300, 1000 + static_cast<std::uint64_t>(t)));
    }
}

TEST_CASE("permutation p does not depend on thread scheduling") {
    std::mt19937_64 rng(3);
    const auto a = random_similarity(18, rng);
    const Rsm ra(labels(18), a), rb(labels(18), correlated(a, 1.5, rng));
    const auto first = kendall_tau(ra, rb, {20000, 4});
    const auto second = kendall_tau(ra, rb, {20000, 4});
    CHECK(first.p_value == second.p_value);
}

TEST_CASE("per-term tau uses off-diagonal rows") {
    std::mt19937_64 rng(12);
    const auto a = random_similarity(6, rng);
    const auto b = correlated(a, 0.8, rng);
    const auto per = per_term_tau(Rsm(labels(6), a), Rsm(labels(6), b));
    for (Eigen::Index i = 0; i < 6; ++i) {
        std::vector<double> ra, rb;
        for (Eigen::Index j = 0; j < 6; ++j) {
            if (j == i) continue;
            ra.push_back(a(i, j));
            rb.push_back(b(i, j));
        }
        CHECK(per.at("t" + std::to_string(i)) == oracle::brute_force_tau_b(ra, rb));
    }
}

TEST_CASE("shuffled-centroid control on aligned synthetic data") {
    const auto chips = synthetic::chart();
    const NamingLexicon lex(synthetic::naming_judgments(chips, 7));
    const auto terms = filter_terms(lex, 100);
    std::vector<LabColor> centroids;
    for (const auto& t : terms.terms()) centroids.push_back(term_centroid_lab(lex, chips, t));
    const auto emb = synthetic::aligned_term_embeddings(terms.terms(), centroids, 32, 0.05, 11);
    const auto rsm = build_embedding_rsm(emb, terms);
    ShuffleControlOptions opts;
    opts.seed = 5;
    const auto control = shuffle_control(rsm, lex, chips, terms, opts);
    CHECK(control.taus.size() == 100);
    CHECK(control.identity_tau > 0.5);
    CHECK(control.mean_abs_tau <= 0.1);
    const auto again = shuffle_control(rsm, centroids, opts);
    CHECK(again.taus == control.taus);
}

TEST_CASE("cross-model RSA") {
    std::mt19937_64 rng(2);
    const auto a = random_similarity(8, rng);
    const auto b = correlated(a, 0.5, rng);
    const Rsm ra(labels(8), a), rb(labels(8), b);
    const auto m = cross_model_rsa({ra, rb, ra});
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 2) == doctest::Approx(1.0));
    CHECK(m(0, 1) == oracle::brute_force_tau_b(upper(a), upper(b)));
    CHECK(m(1, 0) == m(0, 1));
}

TEST_CASE("RSM CSV round trip") {
    std::mt19937_64 rng(4);
    const Rsm a(labels(5), random_similarity(5, rng));
    const auto b = rsm_from_csv(rsm_to_csv(a));
    CHECK(b.labels() == a.labels());
    CHECK((b.matrix().array() == a.matrix().array()).all());
}

}  // TEST_SUITE
