#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "coloralign/embeddings.hpp"
#include "coloralign/error.hpp"
#include "coloralign/text_io.hpp"
#include "oracles.hpp"
#include "support/synthetic.hpp"

using namespace coloralign;
namespace fs = std::filesystem;

namespace {

std::string random_file(std::size_t n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::string out = std::to_string(n) + " " + std::to_string(d) + "\n";
    for (std::size_t i = 0; i < n; ++i) {
        out += "term" + std::to_string(i);
        for (int j = 0; j < d; ++j) out += " " + text::format_double(standard_normal(rng));
        out += "\n";
    }
    return out;
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("coloralign_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("embeddings") {

TEST_CASE("parse a well-formed file") {
    const auto set = parse_embeddings(random_file(18, 1024, 1));
    CHECK(set.size() == 18);
    CHECK(set.dim() == 1024);
    CHECK(set.contains("term17"));
    CHECK_THROWS_AS(set.vector("mauve"), NotFoundError);
}

TEST_CASE("short row names the term") {
    auto text = random_file(3, 4, 2);
    const auto pos = text.find("term1 ");
    const auto end = text.find('\n', pos);
    text.erase(text.rfind(' ', end - 1), end - text.rfind(' ', end - 1));
    try {
        parse_embeddings(text, "e.vec");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("term1") != std::string::npos);
        CHECK(e.line() == 3);
    }
}

TEST_CASE("duplicate term and non-finite values are rejected") {
    CHECK_THROWS_AS(parse_embeddings("2 2\nred 1 2\nred 3 4\n"), InputError);
    CHECK_THROWS_AS(parse_embeddings("1 2\nred nan 2\n"), InputError);
    CHECK_THROWS_AS(parse_embeddings("1 2\nred inf 2\n"), InputError);
    Eigen::MatrixXd v(1, 2);
    v << 1, std::nan("");
    CHECK_THROWS_AS(EmbeddingSet({"red"}, v), InputError);
}

TEST_CASE("serialisation round trip is bit exact") {
    const auto first = parse_embeddings(random_file(7, 9, 3));
    const auto second = parse_embeddings(serialize_embeddings(first));
    CHECK(first.terms() == second.terms());
    CHECK((first.vectors().array() == second.vectors().array()).all());
}

TEST_CASE("manifest parsing") {
    const auto m = parse_manifest("model=bert-large-uncased, config=CC, layers=25\n");
    CHECK(m.model_id == "bert-large-uncased");
    CHECK(m.config == ExtractionConfig::CC);
    CHECK(m.layers == 25);
    const auto again = parse_manifest(serialize_manifest(m));
    CHECK(again.model_id == m.model_id);
    CHECK(again.layers == 25);
    CHECK_THROWS_AS(parse_manifest("config=NC\nlayers=2\n"), ParseError);
    CHECK_THROWS_AS(parse_manifest("model=x\nconfig=XX\n"), InputError);
}

TEST_CASE("layered directory round trip and missing layer") {
    const auto dir = scratch_dir("layered");
    std::vector<EmbeddingSet> layers;
    for (int l = 0; l < 3; ++l) {
        auto s = parse_embeddings(random_file(4, 5, 10 + static_cast<std::uint64_t>(l)));
        s.set_identity("tiny", ExtractionConfig::NC, l);
        layers.push_back(s);
    }
    save_layered_embeddings(layers, dir);
    const auto loaded = load_layered_embeddings(dir);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[2].layer() == 2);
    CHECK(loaded[2].model_id() == "tiny");
    CHECK(loaded[2].config() == ExtractionConfig::NC);
    CHECK((loaded[1].vectors().array() == layers[1].vectors().array()).all());

    fs::remove(dir / layer_file_name(1));
    try {
        load_layered_embeddings(dir);
        FAIL("expected an input error");
    } catch (const InputError& e) {
        const std::string what = e.what();
        CHECK(what.find("manifest.txt") != std::string::npos);
        CHECK(what.find("layer01.vec") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("single file is a one-layer static set") {
    const auto dir = scratch_dir("single");
    text::write_file(dir / "fasttext.vec", random_file(3, 4, 5));
    const auto loaded = load_layered_embeddings(dir / "fasttext.vec");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].model_id() == "fasttext");
    CHECK(loaded[0].config() == ExtractionConfig::STATIC);
    fs::remove_all(dir);
}

TEST_CASE("pearson hand case") {
    const std::vector<double> u{1, 2, 3, 4}, v{2, 4, 5, 4};
    // Covariance 3.5 over variances 5 and 4.75 (sums of squared deviations).
    CHECK(pearson_similarity(u, v) == doctest::Approx(3.5 / std::sqrt(5.0 * 4.75)).epsilon(1e-12));
    CHECK(pearson_similarity(u, u) == doctest::Approx(1.0));
    const std::vector<double> neg{-1, -2, -3, -4};
    CHECK(pearson_similarity(u, neg) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(pearson_similarity(u, std::vector<double>{3, 3, 3, 3}), NumericalError);
}

TEST_CASE("pearson is symmetric and affine invariant") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> u(20), v(20), w(20);
        for (int i = 0; i < 20; ++i) {
            u[i] = standard_normal(rng);
            v[i] = standard_normal(rng) + 0.5 * u[i];
        }
        const double a = 0.1 + synthetic::uniform01(rng) * 10, b = standard_normal(rng) * 100;
        for (int i = 0; i < 20; ++i) w[i] = a * u[i] + b;
        const double r = pearson_similarity(u, v);
        CHECK(r == doctest::Approx(pearson_similarity(v, u)).epsilon(1e-14));
        CHECK(r == doctest::Approx(pearson_similarity(w, v)).epsilon(1e-10));
        CHECK(r == doctest::Approx(oracle::naive_pearson(u, v)).epsilon(1e-10));
        CHECK(std::abs(r) <= 1.0);
    }
}

}  // TEST_SUITE
