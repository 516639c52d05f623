#pragma once

// Contents of the committed synthetic fixtures under tests/fixtures/synthetic,
// keyed by relative path. make_fixtures writes them; a unit test checks the
// committed copies still match.

#include <map>
#include <string>
#include <vector>

#include "coloralign/embeddings.hpp"
#include "synthetic.hpp"

namespace coloralign::synthetic {

inline constexpr std::uint64_t kLexiconSeed = 7;
inline constexpr std::uint64_t kAlignedSeed = 11;
inline constexpr std::uint64_t kLayeredSeed = 23;
inline constexpr std::uint64_t kRandomSeed = 31;
inline constexpr Eigen::Index kTermDim = 32;

inline std::map<std::string, std::string> fixture_files() {
    std::map<std::string, std::string> files;
    const auto chips = chart();
    const auto judgments = naming_judgments(chips, kLexiconSeed);
    files["chips.txt"] = chip_table_text(chips);
    files["lexicon.tsv"] = lexicon_text(judgments);

    const NamingLexicon lexicon(judgments);
    const auto terms = filter_terms(lexicon, 100);
    std::vector<LabColor> centroids;
    for (const auto& t : terms.terms()) centroids.push_back(term_centroid_lab(lexicon, chips, t));

    files["embeddings/aligned.vec"] =
        serialize_embeddings(aligned_term_embeddings(terms.terms(), centroids, kTermDim, 0.05, kAlignedSeed));

    // Alignment improves with depth, like a model whose upper layers encode color.
    const double layer_noise[4] = {3.0, 1.0, 0.25, 0.05};
    EmbeddingManifest manifest{"synthetic-lm", ExtractionConfig::CC, 4};
    files["embeddings/layered/manifest.txt"] = serialize_manifest(manifest);
    for (int l = 0; l < 4; ++l) {
        files["embeddings/layered/" + layer_file_name(l)] = serialize_embeddings(aligned_term_embeddings(
            terms.terms(), centroids, 48, layer_noise[l], derive_seed(kLayeredSeed, static_cast<std::uint64_t>(l))));
    }

    std::mt19937_64 rng(kRandomSeed);
    Eigen::MatrixXd noise(static_cast<Eigen::Index>(terms.size()), kTermDim);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = standard_normal(rng);
    files["embeddings/random.vec"] = serialize_embeddings(EmbeddingSet(terms.terms(), noise, "random"));
    return files;
}

}  // namespace coloralign::synthetic
