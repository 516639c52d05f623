#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace coloralign {

enum class ExtractionConfig { NC, RC, CC, STATIC };

std::string to_string(ExtractionConfig c);
ExtractionConfig parse_extraction_config(const std::string& s);

// Term vectors for one model, configuration and layer. Rows of `vectors()`
// follow the order of `terms()`.
class EmbeddingSet {
public:
    EmbeddingSet() = default;
    // Throws InputError on duplicate terms, ragged rows or non-finite entries.
    EmbeddingSet(std::vector<std::string> terms, Eigen::MatrixXd vectors, std::string model_id = "",
                 ExtractionConfig config = ExtractionConfig::STATIC, int layer = 0);

    const std::string& model_id() const noexcept { return model_id_; }
    ExtractionConfig config() const noexcept { return config_; }
    int layer() const noexcept { return layer_; }
    Eigen::Index dim() const noexcept { return vectors_.cols(); }
    std::size_t size() const noexcept { return terms_.size(); }

    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
    bool contains(const std::string& term) const { return index_.count(term) != 0; }
    // Throws NotFoundError for unknown terms.
    Eigen::VectorXd vector(const std::string& term) const;

    void set_identity(std::string model_id, ExtractionConfig config, int layer);

private:
    std::string model_id_;
    ExtractionConfig config_ = ExtractionConfig::STATIC;
    int layer_ = 0;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, Eigen::Index> index_;
    Eigen::MatrixXd vectors_;
};

// Word-vector text format: header `N D`, then N lines `term v1 ... vD`.
EmbeddingSet load_embeddings(const std::filesystem::path& path);
EmbeddingSet parse_embeddings(const std::string& contents, const std::string& source = "<memory>");
std::string serialize_embeddings(const EmbeddingSet& set);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

struct EmbeddingManifest {
    std::string model_id;
    ExtractionConfig config = ExtractionConfig::STATIC;
    int layers = 1;
};

EmbeddingManifest parse_manifest(const std::string& contents, const std::string& source = "<memory>");
std::string serialize_manifest(const EmbeddingManifest& manifest);

inline constexpr const char* kManifestFile = "manifest.txt";
std::string layer_file_name(int layer);

// A directory with `manifest.txt` and `layer00.vec ... layerNN.vec`, or a
// single `.vec` file (treated as a one-layer STATIC set named after the file).
std::vector<EmbeddingSet> load_layered_embeddings(const std::filesystem::path& path);
void save_layered_embeddings(const std::vector<EmbeddingSet>& layers, const std::filesystem::path& dir);

// Sample Pearson correlation. Throws NumericalError for constant input.
double pearson_similarity(std::span<const double> u, std::span<const double> v);
double pearson_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

}  // namespace coloralign
