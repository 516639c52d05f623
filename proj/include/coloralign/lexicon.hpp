#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coloralign/color_core.hpp"
#include "coloralign/embeddings.hpp"

namespace coloralign {

struct NamingJudgment {
    int chip_id = 0;
    int subject_id = 0;
    std::string term;
};

// Expected dimensions of a naming data set. The defaults describe the full
// chart with 51 namers per chip; toy lexicons in tests use smaller shapes.
struct LexiconShape {
    int chip_count = kChartChipCount;
    int judgments_per_chip = 51;
};

using TermCounts = std::map<std::string, int>;

class NamingLexicon {
public:
    // Throws IntegrityError listing every chip whose judgment count differs
    // from the shape, or that is missing.
    NamingLexicon(const std::vector<NamingJudgment>& judgments, LexiconShape shape = {});

    const LexiconShape& shape() const noexcept { return shape_; }
    int chip_count() const noexcept { return shape_.chip_count; }
    int judgments_per_chip() const noexcept { return shape_.judgments_per_chip; }
    std::size_t judgment_count() const noexcept { return judgment_count_; }

    // Term -> count of judgments on one chip.
    const TermCounts& chip_terms(int chip_id) const;
    // Term -> total count across the lexicon.
    const std::map<std::string, long>& vocabulary() const noexcept { return totals_; }
    // Chip -> count for one term; throws NotFoundError for unknown terms.
    const std::map<int, int>& term_chips(const std::string& term) const;
    bool contains(const std::string& term) const { return totals_.count(term) != 0; }

private:
    LexiconShape shape_;
    std::size_t judgment_count_ = 0;
    std::vector<TermCounts> by_chip_;
    std::map<std::string, std::map<int, int>> by_term_;
    std::map<std::string, long> totals_;
};

// TSV rows `chip_id<TAB>subject_id<TAB>term`; terms are lowercased.
NamingLexicon load_lexicon(const std::filesystem::path& path, LexiconShape shape = {});
NamingLexicon parse_lexicon(const std::string& contents, LexiconShape shape = {},
                            const std::string& source = "<memory>");

// Retained color terms, ordered by descending lexicon count, ties alphabetical.
class TermSet {
public:
    TermSet() = default;
    explicit TermSet(std::vector<std::string> terms);

    const std::vector<std::string>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }
    bool contains(const std::string& term) const;
    const std::string& operator[](std::size_t i) const { return terms_[i]; }

private:
    std::vector<std::string> terms_;
};

// Terms with total count >= cutoff. Throws ConfigError when nothing survives.
TermSet filter_terms(const NamingLexicon& lexicon, long cutoff);

struct CentroidOptions {
    // Count each chip once per term instead of once per judgment.
    bool dedupe_chips = false;
};

LabColor term_centroid_lab(const NamingLexicon& lexicon, const ChipTable& chips, const std::string& term,
                           CentroidOptions options = {});

// Judgment-weighted mean of the retained terms' embeddings for one chip.
// nullopt when no retained term labels the chip (the chip is excluded).
std::optional<Eigen::VectorXd> chip_centroid_embedding(const NamingLexicon& lexicon, int chip_id,
                                                       const EmbeddingSet& embeddings, const TermSet& terms);

// Most frequent term on the chip; ties go to the alphabetically first term.
std::string modal_term(const NamingLexicon& lexicon, int chip_id);

// P(w|c) for every term used on the chip.
std::map<std::string, double> term_given_chip(const NamingLexicon& lexicon, int chip_id);
// P(c|w) under a uniform chip prior, for every chip the term labels.
std::map<int, double> chip_given_term(const NamingLexicon& lexicon, const std::string& term);

// Expected listener surprisal of the chip in bits.
double surprisal(const NamingLexicon& lexicon, int chip_id);

}  // namespace coloralign
