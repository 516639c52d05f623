#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coloralign/lexicon.hpp"

namespace coloralign {

// Windowed co-occurrence counts for the target terms of a tokenised corpus.
// `marginals[w]` counts the (word, context) pairs in which w takes part, so
// for a target t it equals the sum of its row, and `total` is the number of
// pairs in the corpus.
struct CooccurrenceCounts {
    int window = 1;
    std::map<std::string, std::map<std::string, std::int64_t>> counts;
    std::map<std::string, std::int64_t> marginals;
    std::int64_t total = 0;

    // Commutative merge of shard results with equal windows.
    void merge(const CooccurrenceCounts& other);
};

// Counts pairs within `window` tokens of each target occurrence, never across
// lines (one pre-tokenised sentence per line). Throws InputError on an empty
// corpus.
CooccurrenceCounts count_cooccurrences(std::istream& corpus, const TermSet& targets, int window);
CooccurrenceCounts count_cooccurrences_file(const std::filesystem::path& path, const TermSet& targets, int window);

using SparseVector = std::map<std::string, double>;

// Positive PMI (log2, clipped at 0, zeros omitted). Throws NotFoundError for
// terms without counts.
SparseVector pmi_vector(const CooccurrenceCounts& counts, const std::string& term);

// Shannon entropy (bits) of the positive entries normalised to sum to one.
// Throws NumericalError when no entry is positive.
double pmi_collocation_entropy(const SparseVector& pmi);

// Entropy in bits of a count distribution.
double entropy_bits(const std::map<std::string, std::int64_t>& counts);

struct TermCorpusStats {
    std::string term;
    std::int64_t occurrences = 0;
    double log_freq = 0.0;  // natural log of occurrences
    std::optional<double> pmi_col;
    double pos_ent = 0.0;
    double deprel_ent = 0.0;
    double head_ent = 0.0;
    double adj_prop = 0.0;
    double amod_prop = 0.0;
    double cop_prop = 0.0;
    std::map<std::string, std::int64_t> pos_counts;
    std::map<std::string, std::int64_t> deprel_counts;
    std::map<std::string, std::int64_t> head_counts;
};

enum class CopulaMode {
    GovernsCop,  // the term heads a `cop` dependent ("the banana is yellow")
    BearsCop,    // the term itself carries the `cop` relation
};

struct ConlluOptions {
    CopulaMode copula = CopulaMode::GovernsCop;
    // Skip malformed rows (counting them) instead of throwing ParseError.
    bool tolerant = false;
};

struct ConlluStats {
    std::map<std::string, TermCorpusStats> terms;  // only terms that occur
    std::size_t sentences = 0;
    std::size_t tokens = 0;
    std::size_t skipped_rows = 0;
};

// Per-term statistics from a 10-column dependency corpus, matching terms on
// the lowercased FORM column.
ConlluStats conllu_term_stats(std::istream& corpus, const TermSet& terms, const ConlluOptions& options = {},
                              const std::string& source = "<stream>");
ConlluStats conllu_term_stats_file(const std::filesystem::path& path, const TermSet& terms,
                                   const ConlluOptions& options = {});

// Per-term table written by the `stats` command:
// term, occurrences, log_freq, pmi_col, pos_ent, deprel_ent, head_ent,
// adj_prop, amod_prop, cop_prop (tab-separated, NA for missing pmi_col).
std::string serialize_term_stats(const std::map<std::string, TermCorpusStats>& stats);
std::map<std::string, TermCorpusStats> parse_term_stats(const std::string& contents,
                                                        const std::string& source = "<memory>");

struct RankCorrelation {
    double rho = 0.0;
    double p_value = 1.0;  // two-sided permutation p
};

// Mean ranks (1-based) with ties sharing their average rank.
std::vector<double> average_ranks(const std::vector<double>& values);

// Spearman's rho with a seeded permutation p-value. Throws NumericalError for
// constant input.
RankCorrelation spearman(const std::vector<double>& x, const std::vector<double>& y, std::size_t permutations = 10000,
                         std::uint64_t seed = 0);

struct FeatureRow {
    std::string term;
    std::string model;
    std::optional<double> tau;
    std::optional<double> log_freq, pmi_col, pos_ent, deprel_ent, head_ent, adj_prop, amod_prop, cop_prop;
};

struct FeatureTable {
    std::vector<FeatureRow> rows;
    // Indices of rows with at least one missing value (written as NA).
    std::vector<std::size_t> flagged;
};

inline constexpr const char* kFeatureHeader =
    "term\tmodel\ttau\tlog_freq\tpmi_col\tpos_ent\tdeprel_ent\thead_ent\tadj_prop\tamod_prop\tcop_prop";

// One row per (term, model) of `responses`; predictors joined by term.
FeatureTable build_feature_table(const std::map<std::string, TermCorpusStats>& stats,
                                 const std::map<std::string, std::map<std::string, double>>& responses);

std::string serialize_feature_table(const FeatureTable& table);
FeatureTable parse_feature_table(const std::string& contents, const std::string& source = "<memory>");
void export_feature_table(const FeatureTable& table, const std::filesystem::path& path);

}  // namespace coloralign
