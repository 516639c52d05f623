#include "coloralign/corpus_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "coloralign/embeddings.hpp"
#include "coloralign/error.hpp"
#include "coloralign/random.hpp"
#include "coloralign/text_io.hpp"

namespace coloralign {

void CooccurrenceCounts::merge(const CooccurrenceCounts& other) {
    if (other.window != window) throw InputError("cannot merge co-occurrence counts with different windows");
    for (const auto& [term, row] : other.counts) {
        auto& mine = counts[term];
        for (const auto& [ctx, n] : row) mine[ctx] += n;
    }
    for (const auto& [w, n] : other.marginals) marginals[w] += n;
    total += other.total;
}

CooccurrenceCounts count_cooccurrences(std::istream& corpus, const TermSet& targets, int window) {
    if (window < 1) throw ConfigError("co-occurrence window must be >= 1");
    const std::unordered_set<std::string> wanted(targets.terms().begin(), targets.terms().end());
    CooccurrenceCounts out;
    out.window = window;
    std::string line;
    std::size_t tokens_seen = 0;
    while (std::getline(corpus, line)) {
        const auto toks = text::split_whitespace(line);
        const auto n = static_cast<std::ptrdiff_t>(toks.size());
        tokens_seen += toks.size();
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + window);
            const std::int64_t neighbours = hi - lo;  // window positions other than i
            if (neighbours == 0) continue;
            std::string word(toks[static_cast<std::size_t>(i)]);
            out.marginals[word] += neighbours;
            out.total += neighbours;
            if (!wanted.count(word)) continue;
            auto& row = out.counts[word];
            for (std::ptrdiff_t j = lo; j <= hi; ++j) {
                if (j != i) ++row[std::string(toks[static_cast<std::size_t>(j)])];
            }
        }
    }
    if (tokens_seen == 0) throw InputError("co-occurrence counting: empty corpus");
    return out;
}

CooccurrenceCounts count_cooccurrences_file(const std::filesystem::path& path, const TermSet& targets, int window) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus " + path.string());
    return count_cooccurrences(in, targets, window);
}

SparseVector pmi_vector(const CooccurrenceCounts& counts, const std::string& term) {
    const auto row = counts.counts.find(term);
    const auto marg = counts.marginals.find(term);
    if (row == counts.counts.end() || marg == counts.marginals.end() || marg->second == 0) {
        throw NotFoundError("term '" + term + "' has no co-occurrence counts");
    }
    SparseVector out;
    const double total = static_cast<double>(counts.total);
    const double term_marg = static_cast<double>(marg->second);
    for (const auto& [ctx, n] : row->second) {
        const double ctx_marg = static_cast<double>(counts.marginals.at(ctx));
        const double pmi = std::log2(static_cast<double>(n) * total / (term_marg * ctx_marg));
        if (pmi > 0.0) out[ctx] = pmi;
    }
    return out;
}

double pmi_collocation_entropy(const SparseVector& pmi) {
    double sum = 0.0;
    for (const auto& [ctx, v] : pmi) {
        if (v > 0.0) sum += v;
    }
    if (sum <= 0.0) throw NumericalError("collocation entropy undefined for a vector without positive entries");
    double h = 0.0;
    for (const auto& [ctx, v] : pmi) {
        if (v <= 0.0) continue;
        const double p = v / sum;
        h -= p * std::log2(p);
    }
    return std::max(0.0, h);
}

double entropy_bits(const std::map<std::string, std::int64_t>& counts) {
    double total = 0.0;
    for (const auto& [k, n] : counts) total += static_cast<double>(n);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (const auto& [k, n] : counts) {
        if (n <= 0) continue;
        const double p = static_cast<double>(n) / total;
        h -= p * std::log2(p);
    }
    return std::max(0.0, h);
}

namespace {

struct Token {
    int id = 0;
    std::string form;
    std::string lemma;
    std::string upos;
    int head = 0;
    std::string deprel;
};

std::string base_relation(const std::string& deprel) {
    return deprel.substr(0, deprel.find(':'));
}

void finish_sentence(const std::vector<Token>& sentence, const std::unordered_set<std::string>& wanted,
                     const ConlluOptions& options, ConlluStats& out) {
    if (sentence.empty()) return;
    ++out.sentences;
    out.tokens += sentence.size();
    std::unordered_map<int, const Token*> by_id;
    for (const auto& t : sentence) by_id[t.id] = &t;
    for (const auto& t : sentence) {
        const std::string form = text::to_lower(t.form);
        if (!wanted.count(form)) continue;
        auto& s = out.terms[form];
        s.term = form;
        ++s.occurrences;
        ++s.pos_counts[t.upos];
        ++s.deprel_counts[t.deprel];
        std::string head_lemma = "<root>";
        if (t.head != 0) {
            const auto h = by_id.find(t.head);
            head_lemma = h == by_id.end() ? "<missing>" : text::to_lower(h->second->lemma);
        }
        ++s.head_counts[head_lemma];

        bool copula = false;
        if (options.copula == CopulaMode::BearsCop) {
            copula = base_relation(t.deprel) == "cop";
        } else {
            copula = std::any_of(sentence.begin(), sentence.end(), [&](const Token& child) {
                return child.head == t.id && base_relation(child.deprel) == "cop";
            });
        }
        // Proportion numerators accumulate in the *_prop fields until finalize.
        if (t.upos == "ADJ") s.adj_prop += 1.0;
        if (base_relation(t.deprel) == "amod") s.amod_prop += 1.0;
        if (copula) s.cop_prop += 1.0;
    }
}

}  // namespace

ConlluStats conllu_term_stats(std::istream& corpus, const TermSet& terms, const ConlluOptions& options,
                              const std::string& source) {
    const std::unordered_set<std::string> wanted(terms.terms().begin(), terms.terms().end());
    ConlluStats out;
    std::vector<Token> sentence;
    std::string line;
    std::size_t line_no = 0;

    auto malformed = [&](const std::string& why) {
        if (!options.tolerant) throw ParseError(source, line_no, why);
        ++out.skipped_rows;
    };

    while (std::getline(corpus, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) {
            finish_sentence(sentence, wanted, options, out);
            sentence.clear();
            continue;
        }
        if (line.front() == '#') continue;
        const auto cols = text::split_on(line, '\t');
        if (cols.size() != 10) {
            malformed("expected 10 tab-separated columns, found " + std::to_string(cols.size()));
            continue;
        }
        // Multiword token ranges and empty nodes carry no basic dependency.
        if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) continue;
        const auto id = text::parse_int(cols[0]);
        const auto head = text::parse_int(cols[6]);
        if (!id || *id < 1) {
            malformed("malformed token id '" + std::string(cols[0]) + "'");
            continue;
        }
        if (!head || *head < 0) {
            malformed("malformed head '" + std::string(cols[6]) + "'");
            continue;
        }
        sentence.push_back({static_cast<int>(*id), std::string(cols[1]), std::string(cols[2]), std::string(cols[3]),
                            static_cast<int>(*head), std::string(cols[7])});
    }
    finish_sentence(sentence, wanted, options, out);

    for (auto& [term, s] : out.terms) {
        const double n = static_cast<double>(s.occurrences);
        s.log_freq = std::log(n);
        s.pos_ent = entropy_bits(s.pos_counts);
        s.deprel_ent = entropy_bits(s.deprel_counts);
        s.head_ent = entropy_bits(s.head_counts);
        s.adj_prop /= n;
        s.amod_prop /= n;
        s.cop_prop /= n;
    }
    return out;
}

ConlluStats conllu_term_stats_file(const std::filesystem::path& path, const TermSet& terms,
                                   const ConlluOptions& options) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dependency corpus " + path.string());
    return conllu_term_stats(in, terms, options, path.string());
}

namespace {

std::string cell(const std::optional<double>& v) {
    return v ? text::format_double(*v) : "NA";
}

std::optional<double> parse_cell(std::string_view s, const std::string& source, std::size_t line_no) {
    if (s == "NA") return std::nullopt;
    const auto v = text::parse_double(s);
    if (!v) throw ParseError(source, line_no, "malformed number '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string serialize_term_stats(const std::map<std::string, TermCorpusStats>& stats) {
    std::string out = "term\toccurrences\tlog_freq\tpmi_col\tpos_ent\tdeprel_ent\thead_ent\tadj_prop\tamod_prop\tcop_prop\n";
    for (const auto& [term, s] : stats) {
        const bool parsed = s.occurrences > 0;
        auto opt = [&](double v) { return parsed ? std::optional<double>(v) : std::nullopt; };
        out += term + "\t" + std::to_string(s.occurrences) + "\t" + cell(opt(s.log_freq)) + "\t" + cell(s.pmi_col) +
               "\t" + cell(opt(s.pos_ent)) + "\t" + cell(opt(s.deprel_ent)) + "\t" + cell(opt(s.head_ent)) + "\t" +
               cell(opt(s.adj_prop)) + "\t" + cell(opt(s.amod_prop)) + "\t" + cell(opt(s.cop_prop)) + "\n";
    }
    return out;
}

std::map<std::string, TermCorpusStats> parse_term_stats(const std::string& contents, const std::string& source) {
    std::map<std::string, TermCorpusStats> out;
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || text::trim(line).empty()) continue;
        const auto c = text::split_on(line, '\t');
        if (c.size() != 10) throw ParseError(source, line_no, "expected 10 columns");
        TermCorpusStats s;
        s.term = std::string(c[0]);
        const auto occ = text::parse_int(c[1]);
        if (!occ) throw ParseError(source, line_no, "malformed occurrence count");
        s.occurrences = *occ;
        s.pmi_col = parse_cell(c[3], source, line_no);
        if (s.occurrences > 0) {
            auto req = [&](std::size_t k) {
                const auto v = parse_cell(c[k], source, line_no);
                if (!v) throw ParseError(source, line_no, "missing value for a parsed term");
                return *v;
            };
            s.log_freq = req(2);
            s.pos_ent = req(4);
            s.deprel_ent = req(5);
            s.head_ent = req(6);
            s.adj_prop = req(7);
            s.amod_prop = req(8);
            s.cop_prop = req(9);
        }
        out[s.term] = s;
    }
    return out;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(n);
    for (std::size_t k = 0; k < n;) {
        std::size_t e = k + 1;
        while (e < n && values[order[e]] == values[order[k]]) ++e;
        const double mean_rank = 0.5 * static_cast<double>(k + 1 + e);
        for (std::size_t t = k; t < e; ++t) ranks[order[t]] = mean_rank;
        k = e;
    }
    return ranks;
}

RankCorrelation spearman(const std::vector<double>& x, const std::vector<double>& y, std::size_t permutations,
                         std::uint64_t seed) {
    if (x.size() != y.size()) throw InputError("spearman: length mismatch");
    if (x.size() < 3) throw InputError("spearman: need at least 3 observations");
    const auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    RankCorrelation out;
    out.rho = pearson_similarity(rx, ry);
    if (permutations == 0) return out;

    // Ranks are centred once so each replicate is a single dot product.
    auto centre = [](std::vector<double> v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        for (auto& e : v) e -= m;
        return v;
    };
    const auto cx = centre(rx);
    auto cy = centre(ry);
    const double norm = std::sqrt(std::inner_product(cx.begin(), cx.end(), cx.begin(), 0.0) *
                                  std::inner_product(cy.begin(), cy.end(), cy.begin(), 0.0));
    const double observed = std::abs(out.rho) - 1e-12;
    std::size_t hits = 0;
    std::vector<double> shuffled = cy;
    for (std::size_t r = 0; r < permutations; ++r) {
        shuffled = cy;
        std::mt19937_64 rng(derive_seed(seed, r));
        shuffle_in_place(shuffled, rng);
        const double rho = std::inner_product(cx.begin(), cx.end(), shuffled.begin(), 0.0) / norm;
        if (std::abs(rho) >= observed) ++hits;
    }
    out.p_value = static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
    return out;
}

FeatureTable build_feature_table(const std::map<std::string, TermCorpusStats>& stats,
                                 const std::map<std::string, std::map<std::string, double>>& responses) {
    FeatureTable table;
    for (const auto& [model, taus] : responses) {
        for (const auto& [term, tau] : taus) {
            FeatureRow row;
            row.term = term;
            row.model = model;
            if (std::isfinite(tau)) row.tau = tau;
            const auto it = stats.find(term);
            if (it != stats.end()) {
                const auto& s = it->second;
                row.pmi_col = s.pmi_col;
                if (s.occurrences > 0) {
                    row.log_freq = s.log_freq;
                    row.pos_ent = s.pos_ent;
                    row.deprel_ent = s.deprel_ent;
                    row.head_ent = s.head_ent;
                    row.adj_prop = s.adj_prop;
                    row.amod_prop = s.amod_prop;
                    row.cop_prop = s.cop_prop;
                }
            }
            const bool complete = row.tau && row.log_freq && row.pmi_col && row.pos_ent && row.deprel_ent &&
                                  row.head_ent && row.adj_prop && row.amod_prop && row.cop_prop;
            if (!complete) table.flagged.push_back(table.rows.size());
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string serialize_feature_table(const FeatureTable& table) {
    std::string out = std::string(kFeatureHeader) + "\n";
    for (const auto& r : table.rows) {
        out += r.term + "\t" + r.model + "\t" + cell(r.tau) + "\t" + cell(r.log_freq) + "\t" + cell(r.pmi_col) +
               "\t" + cell(r.pos_ent) + "\t" + cell(r.deprel_ent) + "\t" + cell(r.head_ent) + "\t" +
               cell(r.adj_prop) + "\t" + cell(r.amod_prop) + "\t" + cell(r.cop_prop) + "\n";
    }
    return out;
}

FeatureTable parse_feature_table(const std::string& contents, const std::string& source) {
    FeatureTable table;
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != kFeatureHeader) throw ParseError(source, line_no, "unexpected feature table header");
            continue;
        }
        if (text::trim(line).empty()) continue;
        const auto c = text::split_on(line, '\t');
        if (c.size() != 11) throw ParseError(source, line_no, "expected 11 columns");
        FeatureRow r;
        r.term = std::string(c[0]);
        r.model = std::string(c[1]);
        r.tau = parse_cell(c[2], source, line_no);
        r.log_freq = parse_cell(c[3], source, line_no);
        r.pmi_col = parse_cell(c[4], source, line_no);
        r.pos_ent = parse_cell(c[5], source, line_no);
        r.deprel_ent = parse_cell(c[6], source, line_no);
        r.head_ent = parse_cell(c[7], source, line_no);
        r.adj_prop = parse_cell(c[8], source, line_no);
        r.amod_prop = parse_cell(c[9], source, line_no);
        r.cop_prop = parse_cell(c[10], source, line_no);
        const bool complete = r.tau && r.log_freq && r.pmi_col && r.pos_ent && r.deprel_ent && r.head_ent &&
                              r.adj_prop && r.amod_prop && r.cop_prop;
        if (!complete) table.flagged.push_back(table.rows.size());
        table.rows.push_back(std::move(r));
    }
    return table;
}

void export_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
    text::write_file(path, serialize_feature_table(table));
}

}  // namespace coloralign
