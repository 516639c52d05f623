#include "coloralign/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coloralign/error.hpp"
#include "coloralign/text_io.hpp"

namespace coloralign {

std::string to_string(ExtractionConfig c) {
    switch (c) {
        case ExtractionConfig::NC: return "NC";
        case ExtractionConfig::RC: return "RC";
        case ExtractionConfig::CC: return "CC";
        case ExtractionConfig::STATIC: return "STATIC";
    }
    return "STATIC";
}

ExtractionConfig parse_extraction_config(const std::string& s) {
    if (s == "NC") return ExtractionConfig::NC;
    if (s == "RC") return ExtractionConfig::RC;
    if (s == "CC") return ExtractionConfig::CC;
    if (s == "STATIC") return ExtractionConfig::STATIC;
    throw InputError("unknown extraction config '" + s + "' (expected NC, RC, CC or STATIC)");
}

EmbeddingSet::EmbeddingSet(std::vector<std::string> terms, Eigen::MatrixXd vectors, std::string model_id,
                           ExtractionConfig config, int layer)
    : model_id_(std::move(model_id)), config_(config), layer_(layer), terms_(std::move(terms)),
      vectors_(std::move(vectors)) {
    if (static_cast<Eigen::Index>(terms_.size()) != vectors_.rows()) {
        throw InputError("embedding set: " + std::to_string(terms_.size()) + " terms but " +
                         std::to_string(vectors_.rows()) + " vectors");
    }
    if (!vectors_.allFinite()) throw InputError("embedding set: non-finite vector entry");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], static_cast<Eigen::Index>(i)).second) {
            throw InputError("embedding set: duplicate term '" + terms_[i] + "'");
        }
    }
}

Eigen::VectorXd EmbeddingSet::vector(const std::string& term) const {
    const auto it = index_.find(term);
    if (it == index_.end()) throw NotFoundError("no embedding for term '" + term + "'");
    return vectors_.row(it->second).transpose();
}

void EmbeddingSet::set_identity(std::string model_id, ExtractionConfig config, int layer) {
    model_id_ = std::move(model_id);
    config_ = config;
    layer_ = layer;
}

EmbeddingSet parse_embeddings(const std::string& contents, const std::string& source) {
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;

    std::size_t count = 0;
    Eigen::Index dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto header = text::split_whitespace(line);
        const auto n = header.size() == 2 ? text::parse_int(header[0]) : std::nullopt;
        const auto d = header.size() == 2 ? text::parse_int(header[1]) : std::nullopt;
        if (!n || !d || *n < 0 || *d <= 0) throw ParseError(source, line_no, "expected header `N D`");
        count = static_cast<std::size_t>(*n);
        dim = static_cast<Eigen::Index>(*d);
        break;
    }
    if (dim == 0) throw ParseError(source, line_no, "missing header `N D`");

    std::vector<std::string> terms;
    terms.reserve(count);
    Eigen::MatrixXd vectors(static_cast<Eigen::Index>(count), dim);
    std::unordered_map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_whitespace(line);
        const std::string term(fields[0]);
        if (terms.size() == count) throw ParseError(source, line_no, "more vectors than the header declares");
        if (static_cast<Eigen::Index>(fields.size()) - 1 != dim) {
            throw ParseError(source, line_no,
                             "term '" + term + "' has " + std::to_string(fields.size() - 1) +
                                 " values, header declares " + std::to_string(dim));
        }
        if (!seen.emplace(term, line_no).second) {
            throw ParseError(source, line_no, "duplicate term '" + term + "'");
        }
        const auto row = static_cast<Eigen::Index>(terms.size());
        for (Eigen::Index j = 0; j < dim; ++j) {
            const auto v = text::parse_double(fields[static_cast<std::size_t>(j) + 1]);
            if (!v) throw ParseError(source, line_no, "term '" + term + "': malformed value");
            if (!std::isfinite(*v)) throw ParseError(source, line_no, "term '" + term + "': non-finite value");
            vectors(row, j) = *v;
        }
        terms.push_back(term);
    }
    if (terms.size() != count) {
        throw ParseError(source, line_no,
                         "header declares " + std::to_string(count) + " vectors, found " +
                             std::to_string(terms.size()));
    }
    return EmbeddingSet(std::move(terms), std::move(vectors));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    return parse_embeddings(text::read_file(path), path.string());
}

std::string serialize_embeddings(const EmbeddingSet& set) {
    std::string out = std::to_string(set.size()) + " " + std::to_string(set.dim()) + "\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        out += set.terms()[i];
        for (Eigen::Index j = 0; j < set.dim(); ++j) {
            out += ' ';
            out += text::format_double(set.vectors()(static_cast<Eigen::Index>(i), j));
        }
        out += '\n';
    }
    return out;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    text::write_file(path, serialize_embeddings(set));
}

EmbeddingManifest parse_manifest(const std::string& contents, const std::string& source) {
    EmbeddingManifest m;
    bool has_model = false;
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        for (const auto item : text::split_on(line, ',')) {
            const auto kv = text::trim(item);
            if (kv.empty() || kv.front() == '#') continue;
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key=value");
            const std::string key(text::trim(kv.substr(0, eq)));
            const std::string value(text::trim(kv.substr(eq + 1)));
            if (key == "model") {
                m.model_id = value;
                has_model = true;
            } else if (key == "config") {
                m.config = parse_extraction_config(value);
            } else if (key == "layers") {
                const auto n = text::parse_int(value);
                if (!n || *n < 1) throw ParseError(source, line_no, "layers must be a positive integer");
                m.layers = static_cast<int>(*n);
            } else {
                throw ParseError(source, line_no, "unknown manifest key '" + key + "'");
            }
        }
    }
    if (!has_model) throw ParseError(source, line_no, "manifest lacks model=");
    return m;
}

std::string serialize_manifest(const EmbeddingManifest& manifest) {
    return "model=" + manifest.model_id + "\nconfig=" + to_string(manifest.config) +
           "\nlayers=" + std::to_string(manifest.layers) + "\n";
}

std::string layer_file_name(int layer) {
    std::string n = std::to_string(layer);
    if (n.size() < 2) n.insert(0, 2 - n.size(), '0');
    return "layer" + n + ".vec";
}

std::vector<EmbeddingSet> load_layered_embeddings(const std::filesystem::path& path) {
    std::vector<EmbeddingSet> layers;
    if (std::filesystem::is_regular_file(path)) {
        auto set = load_embeddings(path);
        set.set_identity(path.stem().string(), ExtractionConfig::STATIC, 0);
        layers.push_back(std::move(set));
        return layers;
    }
    const auto manifest_path = path / kManifestFile;
    if (!std::filesystem::exists(manifest_path)) {
        throw InputError("embedding source " + path.string() + " is neither a .vec file nor a directory with " +
                         kManifestFile);
    }
    const auto manifest = parse_manifest(text::read_file(manifest_path), manifest_path.string());
    Eigen::Index dim = -1;
    for (int layer = 0; layer < manifest.layers; ++layer) {
        const auto file = path / layer_file_name(layer);
        if (!std::filesystem::exists(file)) {
            throw InputError("manifest " + manifest_path.string() + " (model " + manifest.model_id +
                             ") lists " + std::to_string(manifest.layers) + " layers but " + file.string() +
                             " is missing");
        }
        auto set = load_embeddings(file);
        if (dim >= 0 && set.dim() != dim) {
            throw InputError(file.string() + ": dimension " + std::to_string(set.dim()) +
                             " differs from earlier layers (" + std::to_string(dim) + ")");
        }
        dim = set.dim();
        set.set_identity(manifest.model_id, manifest.config, layer);
        layers.push_back(std::move(set));
    }
    return layers;
}

void save_layered_embeddings(const std::vector<EmbeddingSet>& layers, const std::filesystem::path& dir) {
    if (layers.empty()) throw InputError("no layers to save");
    EmbeddingManifest m{layers.front().model_id(), layers.front().config(), static_cast<int>(layers.size())};
    std::filesystem::create_directories(dir);
    text::write_file(dir / kManifestFile, serialize_manifest(m));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        save_embeddings(layers[i], dir / layer_file_name(static_cast<int>(i)));
    }
}

double pearson_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InputError("pearson: length mismatch");
    if (u.size() < 2) throw InputError("pearson: need at least two coordinates");
    const auto n = static_cast<double>(u.size());
    double mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        mu += u[i];
        mv += v[i];
    }
    mu /= n;
    mv /= n;
    double suv = 0.0, suu = 0.0, svv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double du = u[i] - mu;
        const double dv = v[i] - mv;
        suv += du * dv;
        suu += du * du;
        svv += dv * dv;
    }
    if (suu == 0.0 || svv == 0.0) throw NumericalError("pearson: correlation undefined for a constant vector");
    return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

double pearson_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return pearson_similarity(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                              std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace coloralign
