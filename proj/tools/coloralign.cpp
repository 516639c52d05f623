#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coloralign/corpus_stats.hpp"
#include "coloralign/error.hpp"
#include "coloralign/lexicon.hpp"
#include "coloralign/pipeline.hpp"
#include "coloralign/templates.hpp"
#include "coloralign/text_io.hpp"

namespace fs = std::filesystem;
using namespace coloralign;

namespace {

void emit(const std::string& contents, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << contents;
    } else {
        text::write_file(out, contents);
    }
}

std::vector<HueRange> parse_ranges(const std::string& text_ranges) {
    std::vector<HueRange> out;
    for (auto part : text::split_on(text_ranges, ',')) {
        const auto bounds = text::split_on(text::trim(part), '-');
        const auto lo = bounds.size() == 2 ? text::parse_double(bounds[0]) : std::nullopt;
        const auto hi = bounds.size() == 2 ? text::parse_double(bounds[1]) : std::nullopt;
        if (!lo || !hi) throw ConfigError("malformed hue range '" + std::string(part) + "' (expected begin-end)");
        out.push_back({*lo, *hi});
    }
    return out;
}

struct LexiconArgs {
    std::string lexicon;
    int chip_count = kChartChipCount;
    int judgments = 51;
    long cutoff = 100;

    void add(CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--lexicon", lexicon, "naming data TSV (chip_id, subject_id, term)");
        if (required) opt->required();
        cmd->add_option("--chip-count", chip_count, "chips in the naming data")->capture_default_str();
        cmd->add_option("--judgments-per-chip", judgments, "judgments expected per chip")->capture_default_str();
        cmd->add_option("--cutoff", cutoff, "minimum term count")->capture_default_str();
    }
    LexiconShape shape() const { return {chip_count, judgments}; }
};

// Terms from an explicit list, or the lexicon filtered at the cutoff.
TermSet resolve_terms(const std::string& terms_file, const LexiconArgs& lex) {
    if (!terms_file.empty()) {
        std::vector<std::string> terms;
        for (const auto& t : load_word_list(terms_file)) terms.push_back(text::to_lower(t));
        return TermSet(std::move(terms));
    }
    if (lex.lexicon.empty()) throw ConfigError("give either --terms or --lexicon");
    return filter_terms(load_lexicon(lex.lexicon, lex.shape()), lex.cutoff);
}

struct PipelineArgs {
    RunConfig config;
    LexiconArgs lex;
    std::optional<std::uint64_t> seed;
    std::string chips;
    std::vector<std::string> embeddings;
    std::string out;
    double cmc_l = 2.0, cmc_c = 1.0;

    void add(CLI::App* cmd) {
        lex.add(cmd, true);
        cmd->add_option("--chips", chips, "chip table")->required();
        cmd->add_option("--embeddings", embeddings, "embedding directories or .vec files")->required();
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--c-scale", config.c_scale, "similarity kernel scale")->capture_default_str();
        cmd->add_option("--cmc-l", cmc_l, "CMC lightness ratio")->capture_default_str();
        cmd->add_option("--cmc-c", cmc_c, "CMC chroma ratio")->capture_default_str();
        cmd->add_flag("--dedupe-chips", config.centroids.dedupe_chips, "count each chip once per term in centroids");
        cmd->add_option("--permutations", config.permutations, "permutations for p-values")->capture_default_str();
        cmd->add_option("--threads", config.threads, "worker threads (0 = all cores)")->capture_default_str();
        cmd->add_option("--out", out, "JSON report path (default stdout)");
    }

    RunConfig resolve() {
        config.chip_table = chips;
        config.lexicon = lex.lexicon;
        config.shape = lex.shape();
        config.cutoff = lex.cutoff;
        config.ratios = {cmc_l, cmc_c};
        config.seed = seed;
        for (const auto& e : embeddings) config.embeddings.emplace_back(e);
        return config;
    }
};

int run_rsa(PipelineArgs& args, const std::string& per_term_csv_path, const std::string& rsm_dir) {
    const auto config = args.resolve();
    const auto inputs = load_pipeline_inputs(config);
    const auto report = run_rsa_pipeline(config, inputs);
    emit(rsa_report_json(config, inputs, report), args.out);
    if (!per_term_csv_path.empty()) text::write_file(per_term_csv_path, per_term_csv(report));
    if (!rsm_dir.empty()) {
        save_rsm_csv(report.cielab, fs::path(rsm_dir) / "cielab.csv");
        for (const auto& set : inputs.embeddings) {
            auto name = embedding_label(set);
            std::replace(name.begin(), name.end(), '/', '_');
            save_rsm_csv(build_embedding_rsm(set, inputs.terms), fs::path(rsm_dir) / (name + ".csv"));
        }
    }
    return 0;
}

int run_linmap(PipelineArgs& args, const std::string& csv_dir) {
    const auto config = args.resolve();
    config.require_seed("linmap");
    const auto inputs = load_pipeline_inputs(config);
    const auto report = run_linmap_pipeline(config, inputs);
    emit(linmap_report_json(config, inputs, report), args.out);
    if (!csv_dir.empty()) {
        for (const auto& item : report.items) {
            const std::string stem =
                item.model_id + "_" + to_string(item.config) + "_" + std::to_string(item.layer);
            const fs::path dir(csv_dir);
            text::write_file(dir / (stem + "_chart.csv"), chart_csv(item.analysis.chart));
            text::write_file(dir / (stem + "_subspace.csv"), subspace_csv(item.analysis.subspace));
            if (item.analysis.sweep) text::write_file(dir / (stem + "_sweep.csv"), sweep_csv(*item.analysis.sweep));
        }
    }
    return 0;
}

int run_surprisal(const LexiconArgs& lex, const std::string& out) {
    const auto lexicon = load_lexicon(lex.lexicon, lex.shape());
    std::string tsv = "chip_id\tsurprisal\tmodal_term\n";
    for (int c = 0; c < lexicon.chip_count(); ++c) {
        tsv += std::to_string(c) + "\t" + text::format_double(surprisal(lexicon, c)) + "\t" + modal_term(lexicon, c) +
               "\n";
    }
    emit(tsv, out);
    return 0;
}

int run_stats(const TermSet& terms, const std::string& conllu, const std::string& corpus, int window,
              const std::string& copula, bool tolerant, const std::string& out) {
    if (conllu.empty() && corpus.empty()) throw ConfigError("give --conllu and/or --corpus");
    std::map<std::string, TermCorpusStats> stats;
    for (const auto& t : terms.terms()) stats[t].term = t;
    if (!conllu.empty()) {
        ConlluOptions opts;
        if (copula == "bears") {
            opts.copula = CopulaMode::BearsCop;
        } else if (copula != "governs") {
            throw ConfigError("--copula must be 'governs' or 'bears'");
        }
        opts.tolerant = tolerant;
        const auto parsed = conllu_term_stats_file(conllu, terms, opts);
        if (parsed.skipped_rows > 0) std::cerr << "skipped " << parsed.skipped_rows << " malformed rows\n";
        for (const auto& [t, s] : parsed.terms) {
            const auto pmi = stats[t].pmi_col;
            stats[t] = s;
            stats[t].pmi_col = pmi;
        }
    }
    if (!corpus.empty()) {
        const auto counts = count_cooccurrences_file(corpus, terms, window);
        for (const auto& t : terms.terms()) {
            try {
                stats[t].pmi_col = pmi_collocation_entropy(pmi_vector(counts, t));
            } catch (const NotFoundError&) {
                stats[t].pmi_col.reset();
            } catch (const NumericalError&) {
                stats[t].pmi_col.reset();
            }
        }
    }
    emit(serialize_term_stats(stats), out);
    return 0;
}

int run_pmi(const TermSet& terms, const std::string& corpus, int window, const std::string& out) {
    const auto counts = count_cooccurrences_file(corpus, terms, window);
    std::vector<std::string> kept;
    std::vector<SparseVector> rows;
    std::set<std::string> contexts;
    for (const auto& t : terms.terms()) {
        try {
            rows.push_back(pmi_vector(counts, t));
        } catch (const NotFoundError&) {
            std::cerr << "warning: '" << t << "' does not occur in the corpus; skipped\n";
            continue;
        }
        kept.push_back(t);
        for (const auto& [ctx, v] : rows.back()) contexts.insert(ctx);
    }
    if (kept.empty() || contexts.empty()) throw InputError("no target term has positive PMI contexts");
    std::map<std::string, Eigen::Index> column;
    for (const auto& c : contexts) column.emplace(c, static_cast<Eigen::Index>(column.size()));
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(contexts.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const auto& [ctx, v] : rows[i]) m(static_cast<Eigen::Index>(i), column.at(ctx)) = v;
    }
    const EmbeddingSet set(kept, m);
    emit(serialize_embeddings(set), out);
    return 0;
}

int run_templates(const TermSet& terms, const std::string& objects_file, const std::string& sentences_out,
                  const std::string& index_out) {
    const auto objects = objects_file.empty() ? default_objects() : load_word_list(objects_file);
    const auto contexts = generate_controlled_contexts(terms.terms(), objects, default_frames());
    emit(serialize_sentences(contexts), sentences_out);
    if (!index_out.empty()) text::write_file(index_out, serialize_template_index(contexts));
    return 0;
}

int run_report(const std::string& stats_path, const std::vector<std::string>& rsa_reports, const std::string& out) {
    const auto stats = parse_term_stats(text::read_file(stats_path), stats_path);
    std::map<std::string, std::map<std::string, double>> responses;
    for (const auto& path : rsa_reports) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text::read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path + ": " + e.what());
        }
        if (!j.contains("kind") || j["kind"] != "rsa" || !j.contains("items")) {
            throw InputError(path + " is not an RSA report");
        }
        for (const auto& item : j["items"]) {
            const std::string model = item.at("model").get<std::string>() + "/" +
                                      item.at("config").get<std::string>() + "/" +
                                      std::to_string(item.at("layer").get<int>());
            auto& row = responses[model];
            for (const auto& [term, tau] : item.at("per_term_tau").items()) {
                row[term] = tau.is_null() ? std::nan("") : tau.get<double>();
            }
        }
    }
    const auto table = build_feature_table(stats, responses);
    if (!table.flagged.empty()) std::cerr << table.flagged.size() << " rows have missing values (NA)\n";
    emit(serialize_feature_table(table), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Color term alignment analyses: RSA, linear mapping, surprisal and corpus statistics"};
    app.require_subcommand(1);

    PipelineArgs rsa_args;
    std::string per_term_csv_path, rsm_dir;
    auto* rsa = app.add_subcommand("rsa", "representational similarity analysis against CIELAB");
    rsa_args.add(rsa);
    rsa->add_option("--shuffles", rsa_args.config.shuffles, "shuffled-centroid control runs")->capture_default_str();
    rsa->add_option("--shuffle-significance", rsa_args.config.shuffle_significance,
                    "permutations per shuffled run (0 = skip)")
        ->capture_default_str();
    rsa->add_option("--per-term-csv", per_term_csv_path, "per-term tau table");
    rsa->add_option("--rsm-dir", rsm_dir, "write every RSM as CSV here");

    PipelineArgs lin_args;
    std::string csv_dir, warm = "315-360,0-90", achromatic = "cool", metric = "pearson";
    std::vector<double> alphas;
    bool no_sweep = false;
    bool strict_convergence = false;
    auto* linmap = app.add_subcommand("linmap", "lasso probe from embeddings to CIELAB");
    lin_args.add(linmap);
    linmap->add_option("--alpha", lin_args.config.probe_alpha, "probe regularisation")->capture_default_str();
    linmap->add_option("--alphas", alphas, "sweep grid (default 13 log-spaced points 1e-4..1e3)");
    linmap->add_flag("--no-sweep", no_sweep, "skip the complexity sweep");
    linmap->add_option("--folds", lin_args.config.folds, "cross-validation folds")->capture_default_str();
    linmap->add_option("--controls", lin_args.config.controls, "control-task runs")->capture_default_str();
    linmap->add_option("--weight-fraction", lin_args.config.weight_fraction, "subspace weight share")
        ->capture_default_str();
    linmap->add_option("--rank-metric", metric, "pearson or euclidean")->capture_default_str();
    linmap->add_option("--warm", warm, "warm hue ranges, e.g. 315-360,0-90")->capture_default_str();
    linmap->add_option("--achromatic", achromatic, "temperature of achromatic chips (warm or cool)")
        ->capture_default_str();
    linmap->add_option("--tol", lin_args.config.lasso.tol, "coordinate descent tolerance")->capture_default_str();
    linmap->add_option("--max-iter", lin_args.config.lasso.max_iter, "coordinate descent sweep cap")
        ->capture_default_str();
    linmap->add_flag("--strict-convergence", strict_convergence, "fail on any lasso fit that hits --max-iter");
    linmap->add_option("--csv-dir", csv_dir, "write chart, subspace and sweep CSVs here");

    LexiconArgs sur_lex;
    std::string sur_out;
    auto* sur = app.add_subcommand("surprisal", "per-chip listener surprisal and modal term");
    sur_lex.add(sur, true);
    sur->add_option("--out", sur_out, "TSV path (default stdout)");

    LexiconArgs stats_lex;
    std::string stats_terms, conllu, stats_corpus, copula = "governs", stats_out;
    int stats_window = 2;
    bool tolerant = false;
    auto* stats = app.add_subcommand("stats", "per-term corpus statistics");
    stats_lex.add(stats, false);
    stats->add_option("--terms", stats_terms, "term list (overrides the lexicon)");
    stats->add_option("--conllu", conllu, "dependency-parsed corpus");
    stats->add_option("--corpus", stats_corpus, "tokenised plain-text corpus for collocation entropy");
    stats->add_option("--window", stats_window, "co-occurrence window")->capture_default_str();
    stats->add_option("--copula", copula, "governs (term heads a cop child) or bears (term is cop)")
        ->capture_default_str();
    stats->add_flag("--tolerant", tolerant, "skip malformed dependency rows");
    stats->add_option("--out", stats_out, "TSV path (default stdout)");

    LexiconArgs pmi_lex;
    std::string pmi_terms, pmi_corpus, pmi_out;
    int pmi_window = 1;
    auto* pmi = app.add_subcommand("pmi", "positive PMI vectors as an embedding file");
    pmi_lex.add(pmi, false);
    pmi->add_option("--terms", pmi_terms, "term list (overrides the lexicon)");
    pmi->add_option("--corpus", pmi_corpus, "tokenised plain-text corpus")->required();
    pmi->add_option("--window", pmi_window, "co-occurrence window")->capture_default_str();
    pmi->add_option("--out", pmi_out, ".vec path (default stdout); the file stem becomes the model id");

    LexiconArgs tpl_lex;
    std::string tpl_terms, objects, sentences_out, index_out;
    auto* tpl = app.add_subcommand("templates", "controlled template sentences");
    tpl_lex.add(tpl, false);
    tpl->add_option("--terms", tpl_terms, "term list (overrides the lexicon)");
    tpl->add_option("--objects", objects, "object nouns, one per line");
    tpl->add_option("--out", sentences_out, "sentence file (default stdout)");
    tpl->add_option("--index", index_out, "TSV index path");

    std::string report_stats, report_out;
    std::vector<std::string> report_rsa;
    auto* report = app.add_subcommand("report", "feature table joining corpus statistics with per-term tau");
    report->add_option("--stats", report_stats, "output of the stats command")->required();
    report->add_option("--rsa", report_rsa, "RSA JSON reports")->required();
    report->add_option("--out", report_out, "TSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*rsa) return run_rsa(rsa_args, per_term_csv_path, rsm_dir);
        if (*linmap) {
            auto& c = lin_args.config;
            if (!alphas.empty()) c.alpha_grid = alphas;
            c.sweep = !no_sweep;
            if (strict_convergence) c.lasso.accept_unconverged = false;
            if (metric == "pearson") {
                c.rank_metric = RankMetric::Pearson;
            } else if (metric == "euclidean") {
                c.rank_metric = RankMetric::Euclidean;
            } else {
                throw ConfigError("--rank-metric must be 'pearson' or 'euclidean'");
            }
            c.temperature.warm_ranges = parse_ranges(warm);
            if (achromatic == "warm") {
                c.temperature.achromatic = Temperature::Warm;
            } else if (achromatic != "cool") {
                throw ConfigError("--achromatic must be 'warm' or 'cool'");
            }
            return run_linmap(lin_args, csv_dir);
        }
        if (*sur) return run_surprisal(sur_lex, sur_out);
        if (*stats) {
            return run_stats(resolve_terms(stats_terms, stats_lex), conllu, stats_corpus, stats_window, copula,
                             tolerant, stats_out);
        }
        if (*pmi) return run_pmi(resolve_terms(pmi_terms, pmi_lex), pmi_corpus, pmi_window, pmi_out);
        if (*tpl) return run_templates(resolve_terms(tpl_terms, tpl_lex), objects, sentences_out, index_out);
        if (*report) return run_report(report_stats, report_rsa, report_out);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
