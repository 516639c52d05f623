#include "coloralign/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "coloralign/error.hpp"
#include "coloralign/text_io.hpp"

namespace coloralign {

NamingLexicon::NamingLexicon(const std::vector<NamingJudgment>& judgments, LexiconShape shape)
    : shape_(shape), by_chip_(static_cast<std::size_t>(shape.chip_count)) {
    if (shape.chip_count < 1 || shape.judgments_per_chip < 1) throw ConfigError("lexicon shape must be positive");
    std::vector<int> per_chip(static_cast<std::size_t>(shape.chip_count), 0);
    for (const auto& j : judgments) {
        if (j.chip_id < 0 || j.chip_id >= shape.chip_count) {
            throw IntegrityError("lexicon: chip id " + std::to_string(j.chip_id) + " outside 0.." +
                                 std::to_string(shape.chip_count - 1));
        }
        if (j.term.empty()) throw IntegrityError("lexicon: empty term on chip " + std::to_string(j.chip_id));
        ++per_chip[static_cast<std::size_t>(j.chip_id)];
        ++by_chip_[static_cast<std::size_t>(j.chip_id)][j.term];
        ++by_term_[j.term][j.chip_id];
        ++totals_[j.term];
    }
    judgment_count_ = judgments.size();

    std::string offenders;
    std::size_t n_bad = 0;
    for (int c = 0; c < shape.chip_count; ++c) {
        const int n = per_chip[static_cast<std::size_t>(c)];
        if (n != shape.judgments_per_chip) {
            if (n_bad < 20) {
                offenders += (n_bad ? ", " : "") + std::string("chip ") + std::to_string(c) + " (" +
                             std::to_string(n) + ")";
            }
            ++n_bad;
        }
    }
    if (n_bad > 0) {
        throw IntegrityError("lexicon: " + std::to_string(n_bad) + " chip(s) without exactly " +
                             std::to_string(shape.judgments_per_chip) + " judgments: " + offenders +
                             (n_bad > 20 ? ", ..." : ""));
    }
}

const TermCounts& NamingLexicon::chip_terms(int chip_id) const {
    if (chip_id < 0 || chip_id >= shape_.chip_count) throw NotFoundError("unknown chip id " + std::to_string(chip_id));
    return by_chip_[static_cast<std::size_t>(chip_id)];
}

const std::map<int, int>& NamingLexicon::term_chips(const std::string& term) const {
    const auto it = by_term_.find(term);
    if (it == by_term_.end()) throw NotFoundError("term '" + term + "' does not occur in the lexicon");
    return it->second;
}

NamingLexicon parse_lexicon(const std::string& contents, LexiconShape shape, const std::string& source) {
    std::vector<NamingJudgment> rows;
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty() || line.front() == '#') continue;
        const auto fields = text::split_on(line, '\t');
        if (fields.size() != 3) {
            throw ParseError(source, line_no, "expected chip_id<TAB>subject_id<TAB>term");
        }
        const auto chip = text::parse_int(text::trim(fields[0]));
        const auto subject = text::parse_int(text::trim(fields[1]));
        if (!chip) throw ParseError(source, line_no, "non-integer chip_id");
        if (!subject) throw ParseError(source, line_no, "non-integer subject_id");
        const auto term = text::to_lower(text::trim(fields[2]));
        if (term.empty()) throw ParseError(source, line_no, "empty term");
        rows.push_back({static_cast<int>(*chip), static_cast<int>(*subject), term});
    }
    return NamingLexicon(rows, shape);
}

NamingLexicon load_lexicon(const std::filesystem::path& path, LexiconShape shape) {
    return parse_lexicon(text::read_file(path), shape, path.string());
}

TermSet::TermSet(std::vector<std::string> terms) : terms_(std::move(terms)) {
    std::set<std::string> seen;
    for (const auto& t : terms_) {
        if (!seen.insert(t).second) throw InputError("term set: duplicate term '" + t + "'");
    }
}

bool TermSet::contains(const std::string& term) const {
    return std::find(terms_.begin(), terms_.end(), term) != terms_.end();
}

TermSet filter_terms(const NamingLexicon& lexicon, long cutoff) {
    if (cutoff < 1) throw ConfigError("term cutoff must be >= 1");
    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [term, count] : lexicon.vocabulary()) {
        if (count >= cutoff) kept.emplace_back(term, count);
    }
    if (kept.empty()) {
        throw ConfigError("no term occurs at least " + std::to_string(cutoff) + " times; lower the cutoff");
    }
    std::sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    std::vector<std::string> terms;
    terms.reserve(kept.size());
    for (auto& [term, count] : kept) terms.push_back(std::move(term));
    return TermSet(std::move(terms));
}

LabColor term_centroid_lab(const NamingLexicon& lexicon, const ChipTable& chips, const std::string& term,
                           CentroidOptions options) {
    double L = 0.0, a = 0.0, b = 0.0, weight = 0.0;
    for (const auto& [chip_id, count] : lexicon.term_chips(term)) {
        const double w = options.dedupe_chips ? 1.0 : static_cast<double>(count);
        const auto& lab = chips.chip(chip_id).lab;
        L += w * lab.L;
        a += w * lab.a;
        b += w * lab.b;
        weight += w;
    }
    return {L / weight, a / weight, b / weight};
}

std::optional<Eigen::VectorXd> chip_centroid_embedding(const NamingLexicon& lexicon, int chip_id,
                                                       const EmbeddingSet& embeddings, const TermSet& terms) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(embeddings.dim());
    long weight = 0;
    for (const auto& [term, count] : lexicon.chip_terms(chip_id)) {
        if (!terms.contains(term)) continue;
        sum += static_cast<double>(count) * embeddings.vector(term);
        weight += count;
    }
    if (weight == 0) return std::nullopt;
    return Eigen::VectorXd(sum / static_cast<double>(weight));
}

std::string modal_term(const NamingLexicon& lexicon, int chip_id) {
    // std::map iterates alphabetically, so strict > keeps the first of a tie.
    const std::string* best = nullptr;
    int best_count = 0;
    for (const auto& [term, count] : lexicon.chip_terms(chip_id)) {
        if (count > best_count) {
            best = &term;
            best_count = count;
        }
    }
    return best ? *best : std::string{};
}

std::map<std::string, double> term_given_chip(const NamingLexicon& lexicon, int chip_id) {
    std::map<std::string, double> p;
    const double n = lexicon.judgments_per_chip();
    for (const auto& [term, count] : lexicon.chip_terms(chip_id)) p[term] = count / n;
    return p;
}

std::map<int, double> chip_given_term(const NamingLexicon& lexicon, const std::string& term) {
    // Uniform P(c) cancels from numerator and denominator of Bayes' rule.
    const auto& chips = lexicon.term_chips(term);
    const double n = lexicon.judgments_per_chip();
    double evidence = 0.0;
    for (const auto& [chip, count] : chips) evidence += count / n;
    std::map<int, double> p;
    for (const auto& [chip, count] : chips) p[chip] = (count / n) / evidence;
    return p;
}

double surprisal(const NamingLexicon& lexicon, int chip_id) {
    const double n = lexicon.judgments_per_chip();
    double s = 0.0;
    for (const auto& [term, count] : lexicon.chip_terms(chip_id)) {
        double evidence = 0.0;
        for (const auto& [other, other_count] : lexicon.term_chips(term)) evidence += other_count / n;
        const double p_w_given_c = count / n;
        const double p_c_given_w = p_w_given_c / evidence;
        s -= p_w_given_c * std::log2(p_c_given_w);
    }
    return std::max(0.0, s);
}

}  // namespace coloralign
