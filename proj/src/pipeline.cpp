#include "coloralign/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "coloralign/error.hpp"
#include "coloralign/random.hpp"
#include "coloralign/text_io.hpp"

namespace coloralign {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kSpearmanStream = 0x5ea2'0001ULL;

// Runs f(i) for i in [0, n) on a small pool. The exception of the lowest
// failing index is rethrown so errors do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

template <class F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError(context + ": " + e.what());
    } catch (const InputError& e) {
        throw InputError(context + ": " + e.what());
    }
}

std::string config_name(ExtractionConfig c) { return to_string(c); }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json checksums_json(const PipelineInputs& inputs) {
    Json out = Json::object();
    for (const auto& [path, sum] : inputs.checksums) out[path] = sum;
    return out;
}

Json config_object(const RunConfig& c) {
    Json j;
    j["chip_table"] = c.chip_table.generic_string();
    j["lexicon"] = c.lexicon.generic_string();
    Json emb = Json::array();
    for (const auto& p : c.embeddings) emb.push_back(p.generic_string());
    j["embeddings"] = emb;
    j["chip_count"] = c.shape.chip_count;
    j["judgments_per_chip"] = c.shape.judgments_per_chip;
    j["cutoff"] = c.cutoff;
    j["c_scale"] = c.c_scale;
    j["cmc_l"] = c.ratios.lightness;
    j["cmc_c"] = c.ratios.chroma;
    j["dedupe_chips"] = c.centroids.dedupe_chips;
    j["folds"] = c.folds;
    j["controls"] = c.controls;
    j["shuffles"] = c.shuffles;
    j["shuffle_significance"] = c.shuffle_significance;
    j["permutations"] = c.permutations;
    j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    j["probe_alpha"] = c.probe_alpha;
    j["alpha_grid"] = c.alpha_grid;
    j["sweep"] = c.sweep;
    j["weight_fraction"] = c.weight_fraction;
    j["rank_metric"] = c.rank_metric == RankMetric::Pearson ? "pearson" : "euclidean";
    j["lasso_tol"] = c.lasso.tol;
    j["lasso_max_iter"] = c.lasso.max_iter;
    j["lasso_accept_unconverged"] = c.lasso.accept_unconverged;
    Json warm = Json::array();
    for (const auto& r : c.temperature.warm_ranges) warm.push_back({r.begin, r.end});
    j["warm_ranges"] = warm;
    j["achromatic"] = to_string(c.temperature.achromatic);
    return j;
}

void add_checksum(std::map<std::string, std::string>& sums, const std::filesystem::path& p) {
    sums[p.generic_string()] = text::sha256_file(p);
}

}  // namespace

void RunConfig::validate() const {
    if (cutoff < 1) throw ConfigError("cutoff must be positive");
    if (!(c_scale > 0.0)) throw ConfigError("c_scale must be positive");
    if (!(ratios.lightness > 0.0 && ratios.chroma > 0.0)) throw ConfigError("CMC ratios must be positive");
    if (folds < 2) throw ConfigError("folds must be at least 2");
    if (controls < 1) throw ConfigError("controls must be at least 1");
    if (!(probe_alpha >= 0.0)) throw ConfigError("probe alpha must be non-negative");
    if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
    for (double a : alpha_grid) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha grid values must be finite and non-negative");
    }
    if (!(weight_fraction > 0.0 && weight_fraction <= 1.0)) throw ConfigError("weight fraction must lie in (0, 1]");
    if (!(lasso.tol > 0.0) || lasso.max_iter < 1) throw ConfigError("lasso tolerance and iteration cap must be positive");
    for (const auto& r : temperature.warm_ranges) {
        if (!(r.begin >= 0.0 && r.end <= 360.0 && r.begin < r.end)) {
            throw ConfigError("warm hue ranges must satisfy 0 <= begin < end <= 360");
        }
    }
}

std::uint64_t RunConfig::require_seed(const std::string& step) const {
    if (!seed) throw ConfigError(step + " is stochastic and requires --seed");
    return *seed;
}

PipelineInputs load_pipeline_inputs(const RunConfig& config) {
    config.validate();
    if (config.embeddings.empty()) throw ConfigError("no embedding sources given");
    std::map<std::string, std::string> sums;
    auto chips = load_chip_table(config.chip_table);
    add_checksum(sums, config.chip_table);
    auto lexicon = load_lexicon(config.lexicon, config.shape);
    add_checksum(sums, config.lexicon);
    auto terms = filter_terms(lexicon, config.cutoff);

    std::vector<EmbeddingSet> sets;
    for (const auto& source : config.embeddings) {
        auto layers = load_layered_embeddings(source);
        if (std::filesystem::is_regular_file(source)) {
            add_checksum(sums, source);
        } else {
            add_checksum(sums, source / kManifestFile);
            for (std::size_t l = 0; l < layers.size(); ++l) {
                add_checksum(sums, source / layer_file_name(static_cast<int>(l)));
            }
        }
        for (auto& s : layers) sets.push_back(std::move(s));
    }
    return PipelineInputs{std::move(chips), std::move(lexicon), std::move(terms), std::move(sets), std::move(sums)};
}

std::string embedding_label(const EmbeddingSet& set) {
    return set.model_id() + "/" + config_name(set.config()) + "/" + std::to_string(set.layer());
}

std::vector<LayerSummary> summarize_layers(const std::vector<RsaItem>& items) {
    std::vector<LayerSummary> out;
    std::vector<std::vector<const RsaItem*>> groups;
    for (const auto& item : items) {
        auto it = std::find_if(out.begin(), out.end(), [&](const LayerSummary& s) {
            return s.model_id == item.model_id && s.config == item.config;
        });
        if (it == out.end()) {
            out.push_back({item.model_id, item.config});
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[static_cast<std::size_t>(it - out.begin())].push_back(&item);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        auto& s = out[g];
        const auto& members = groups[g];
        s.layers = members.size();
        s.max_tau = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (const auto* m : members) {
            sum += m->kendall.tau;
            if (m->kendall.tau > s.max_tau) {
                s.max_tau = m->kendall.tau;
                s.best_layer = m->layer;
            }
        }
        s.mean_tau = sum / static_cast<double>(members.size());
        double ss = 0.0;
        for (const auto* m : members) ss += (m->kendall.tau - s.mean_tau) * (m->kendall.tau - s.mean_tau);
        s.std_tau = std::sqrt(ss / static_cast<double>(members.size()));
    }
    return out;
}

RsaReport run_rsa_pipeline(const RunConfig& config, const PipelineInputs& inputs) {
    config.validate();
    std::uint64_t seed = 0;
    if (config.permutations > 0) seed = config.require_seed("the RSA permutation test");
    if (config.shuffles > 0) seed = config.require_seed("the shuffled-centroid control");

    RsaReport report;
    report.terms = inputs.terms.terms();
    std::vector<LabColor> centroids;
    for (const auto& t : report.terms) {
        centroids.push_back(term_centroid_lab(inputs.lexicon, inputs.chips, t, config.centroids));
    }
    report.cielab = cielab_rsm_from_centroids(report.terms, centroids, config.c_scale, config.ratios);

    const std::size_t n = inputs.embeddings.size();
    std::vector<Rsm> rsms(n);
    report.items.resize(n);
    parallel_for(n, config.threads, [&](std::size_t i) {
        const auto& set = inputs.embeddings[i];
        with_context(embedding_label(set), [&] {
            auto& item = report.items[i];
            item.model_id = set.model_id();
            item.config = set.config();
            item.layer = set.layer();
            rsms[i] = build_embedding_rsm(set, inputs.terms);
            item.kendall = kendall_tau(rsms[i], report.cielab, {config.permutations, seed});
            item.per_term_tau = per_term_tau(rsms[i], report.cielab);
            if (config.shuffles > 0) {
                ShuffleControlOptions opts;
                opts.shuffles = config.shuffles;
                opts.seed = seed;
                opts.c_scale = config.c_scale;
                opts.ratios = config.ratios;
                opts.centroids = config.centroids;
                opts.significance_permutations = config.shuffle_significance;
                item.shuffle = shuffle_control(rsms[i], centroids, opts);
            }
        });
    });
    report.summaries = summarize_layers(report.items);
    for (const auto& set : inputs.embeddings) report.cross_labels.push_back(embedding_label(set));
    report.cross_model = cross_model_rsa(rsms);
    return report;
}

RsaReport run_rsa_pipeline(const RunConfig& config) {
    return run_rsa_pipeline(config, load_pipeline_inputs(config));
}

std::map<int, double> per_chip_explained_variance(const ProbeDataset& dataset, const Eigen::MatrixXd& predicted) {
    if (predicted.rows() != dataset.Y.rows() || predicted.cols() != dataset.Y.cols()) {
        throw InputError("per-chip EV: prediction shape differs from targets");
    }
    const Eigen::MatrixXd centred = dataset.Y.rowwise() - dataset.Y.colwise().mean();
    const Eigen::RowVectorXd var = centred.colwise().squaredNorm() / static_cast<double>(dataset.Y.rows());
    std::map<int, double> out;
    for (Eigen::Index i = 0; i < dataset.Y.rows(); ++i) {
        double sum = 0.0;
        int used = 0;
        for (Eigen::Index j = 0; j < dataset.Y.cols(); ++j) {
            if (var(j) <= 0.0) continue;
            const double r = dataset.Y(i, j) - predicted(i, j);
            sum += 1.0 - r * r / var(j);
            ++used;
        }
        out[dataset.chip_ids[static_cast<std::size_t>(i)]] = used ? sum / used : 0.0;
    }
    return out;
}

ProbeAnalysis analyze_probe(const ProbeDataset& dataset, const ChipTable& chips, const NamingLexicon& lexicon,
                            const RunConfig& config) {
    config.validate();
    dataset.validate();
    const std::uint64_t seed = config.require_seed("linmap");
    ProbeAnalysis out;
    out.cv = cross_validate(dataset, config.probe_alpha, config.folds, seed, config.lasso);
    out.selectivity = selectivity(dataset, config.probe_alpha, config.folds, config.controls, seed, config.lasso);

    const auto fit = fit_lasso(dataset.X, dataset.Y, config.probe_alpha, config.lasso);
    out.probe_converged = fit.converged;
    out.nuclear_norm = nuclear_norm(fit.weights);
    out.nonzero_dims = static_cast<int>((fit.weights.cwiseAbs().colwise().sum().array() > 0.0).count());
    out.subspace = subspace_analysis(fit.weights, dataset, config.weight_fraction);

    out.ranks = chip_rank(out.cv.out_of_fold, chips, dataset.chip_ids, config.rank_metric);
    double rank_sum = 0.0;
    for (const auto& [id, r] : out.ranks.ranks) rank_sum += r;
    out.mean_rank = rank_sum / static_cast<double>(out.ranks.ranks.size());

    out.chip_ev = per_chip_explained_variance(dataset, out.cv.out_of_fold);
    double warm_sum = 0.0, cool_sum = 0.0;
    for (const auto& [id, ev] : out.chip_ev) {
        if (classify_temperature(chips.chip(id).lab, config.temperature) == Temperature::Warm) {
            warm_sum += ev;
            ++out.warm_chips;
        } else {
            cool_sum += ev;
            ++out.cool_chips;
        }
    }
    out.warm_ev = out.warm_chips ? warm_sum / static_cast<double>(out.warm_chips) : 0.0;
    out.cool_ev = out.cool_chips ? cool_sum / static_cast<double>(out.cool_chips) : 0.0;

    std::vector<double> ranks, surprisals;
    for (int id : dataset.chip_ids) {
        ranks.push_back(out.ranks.ranks.at(id));
        surprisals.push_back(surprisal(lexicon, id));
    }
    try {
        out.rank_surprisal = spearman(ranks, surprisals, config.permutations, seed ^ kSpearmanStream);
    } catch (const NumericalError&) {
        out.rank_surprisal.reset();
    }

    if (config.sweep) {
        out.sweep = complexity_sweep(dataset, config.alpha_grid, config.folds, config.controls, seed, config.lasso);
    }

    for (int id : dataset.chip_ids) {
        const auto& chip = chips.chip(id);
        out.chart.push_back({id, chip.value_row, chip.hue_column, out.ranks.ranks.at(id), modal_term(lexicon, id)});
    }
    return out;
}

LinmapReport run_linmap_pipeline(const RunConfig& config, const PipelineInputs& inputs) {
    config.validate();
    config.require_seed("linmap");
    LinmapReport report;
    report.terms = inputs.terms.terms();
    const std::size_t n = inputs.embeddings.size();
    report.items.resize(n);
    parallel_for(n, config.threads, [&](std::size_t i) {
        const auto& set = inputs.embeddings[i];
        with_context(embedding_label(set), [&] {
            auto& item = report.items[i];
            item.model_id = set.model_id();
            item.config = set.config();
            item.layer = set.layer();
            auto build = build_probe_dataset(inputs.lexicon, inputs.chips, set, inputs.terms);
            item.excluded_chips = std::move(build.excluded_chips);
            item.analysis = analyze_probe(build.dataset, inputs.chips, inputs.lexicon, config);
        });
    });
    return report;
}

LinmapReport run_linmap_pipeline(const RunConfig& config) {
    return run_linmap_pipeline(config, load_pipeline_inputs(config));
}

std::string config_json(const RunConfig& config) { return config_object(config).dump(2) + "\n"; }

std::string rsa_report_json(const RunConfig& config, const PipelineInputs& inputs, const RsaReport& report) {
    Json j;
    j["kind"] = "rsa";
    j["config"] = config_object(config);
    j["checksums"] = checksums_json(inputs);
    j["terms"] = report.terms;
    Json items = Json::array();
    for (const auto& item : report.items) {
        Json it;
        it["model"] = item.model_id;
        it["config"] = config_name(item.config);
        it["layer"] = item.layer;
        it["tau"] = number_or_null(item.kendall.tau);
        it["p_value"] = item.kendall.p_value;
        it["p_normal"] = number_or_null(item.kendall.p_normal);
        it["pairs"] = item.kendall.pairs;
        it["permutations"] = item.kendall.permutations;
        Json per_term = Json::object();
        for (const auto& t : report.terms) per_term[t] = number_or_null(item.per_term_tau.at(t));
        it["per_term_tau"] = per_term;
        if (item.shuffle) {
            const auto& s = *item.shuffle;
            Json sh;
            sh["identity_tau"] = number_or_null(s.identity_tau);
            sh["mean_tau"] = number_or_null(s.mean_tau);
            sh["mean_abs_tau"] = number_or_null(s.mean_abs_tau);
            sh["significant_at_05"] = s.significant_at_05;
            sh["taus"] = s.taus;
            if (!s.p_values.empty()) sh["p_values"] = s.p_values;
            it["shuffle_control"] = sh;
        }
        items.push_back(it);
    }
    j["items"] = items;
    Json summaries = Json::array();
    for (const auto& s : report.summaries) {
        summaries.push_back({{"model", s.model_id},
                             {"config", config_name(s.config)},
                             {"layers", s.layers},
                             {"max_tau", number_or_null(s.max_tau)},
                             {"best_layer", s.best_layer},
                             {"mean_tau", number_or_null(s.mean_tau)},
                             {"std_tau", number_or_null(s.std_tau)}});
    }
    j["layer_summary"] = summaries;
    Json cross;
    cross["labels"] = report.cross_labels;
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < report.cross_model.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < report.cross_model.cols(); ++c) row.push_back(number_or_null(report.cross_model(r, c)));
        rows.push_back(row);
    }
    cross["tau"] = rows;
    j["cross_model"] = cross;
    return j.dump(2) + "\n";
}

std::string linmap_report_json(const RunConfig& config, const PipelineInputs& inputs, const LinmapReport& report) {
    Json j;
    j["kind"] = "linmap";
    j["config"] = config_object(config);
    j["checksums"] = checksums_json(inputs);
    j["terms"] = report.terms;
    Json items = Json::array();
    for (const auto& item : report.items) {
        const auto& a = item.analysis;
        Json it;
        it["model"] = item.model_id;
        it["config"] = config_name(item.config);
        it["layer"] = item.layer;
        it["chips"] = a.chart.size();
        it["excluded_chips"] = item.excluded_chips;
        it["explained_variance"] = a.cv.mean_ev;
        it["per_fold_ev"] = a.cv.per_fold_ev;
        it["selectivity"] = a.selectivity.selectivity;
        it["ev_controls"] = a.selectivity.ev_controls;
        it["ev_control_mean"] = a.selectivity.ev_control_mean;
        it["nuclear_norm"] = a.nuclear_norm;
        it["nonzero_dims"] = a.nonzero_dims;
        it["unconverged_fits"] = {{"probe", a.probe_converged ? 0 : 1},
                                  {"cross_validation", a.cv.unconverged_fits},
                                  {"selectivity", a.selectivity.unconverged_fits}};
        it["mean_rank"] = a.mean_rank;
        Json ranks = Json::object();
        for (const auto& [id, r] : a.ranks.ranks) ranks[std::to_string(id)] = r;
        it["chip_ranks"] = ranks;
        it["euclidean_fallback"] = a.ranks.euclidean_fallback;
        it["temperature"] = {{"warm_ev", a.warm_ev},
                             {"cool_ev", a.cool_ev},
                             {"warm_chips", a.warm_chips},
                             {"cool_chips", a.cool_chips}};
        if (a.rank_surprisal) {
            it["rank_surprisal"] = {{"rho", a.rank_surprisal->rho}, {"p_value", a.rank_surprisal->p_value}};
        } else {
            it["rank_surprisal"] = nullptr;
        }
        Json sub;
        sub["k"] = a.subspace.k;
        sub["ev_at_k"] = a.subspace.ev_at_k;
        sub["full_ev"] = a.subspace.full_ev;
        Json curve = Json::array();
        for (const auto& p : a.subspace.curve) curve.push_back({p.dims, p.ev});
        sub["curve"] = curve;
        it["subspace"] = sub;
        if (a.sweep) {
            Json sw;
            Json pts = Json::array();
            for (const auto& p : a.sweep->points) {
                pts.push_back({{"alpha", p.alpha},
                               {"nuclear_norm", p.nuclear_norm},
                               {"ev_real", p.ev_real},
                               {"ev_control", p.ev_control},
                               {"nonzero", p.nonzero},
                               {"unconverged_fits", p.unconverged_fits}});
            }
            sw["points"] = pts;
            sw["norm_increases"] = a.sweep->norm_increases;
            sw["real_dominates_control"] = a.sweep->real_dominates_control;
            it["sweep"] = sw;
        }
        items.push_back(it);
    }
    j["items"] = items;
    return j.dump(2) + "\n";
}

std::string chart_csv(const std::vector<ChartRow>& rows) {
    std::string out = "chip_id,value_row,hue_column,rank,modal_term\n";
    for (const auto& r : rows) {
        out += std::to_string(r.chip_id) + "," + std::string(1, r.value_row) + "," + std::to_string(r.hue_column) +
               "," + text::format_double(r.rank) + "," + r.modal_term + "\n";
    }
    return out;
}

std::string sweep_csv(const ComplexitySweep& sweep) {
    std::string out = "alpha,nuclear_norm,ev_real,ev_control,nonzero\n";
    for (const auto& p : sweep.points) {
        out += text::format_double(p.alpha) + "," + text::format_double(p.nuclear_norm) + "," +
               text::format_double(p.ev_real) + "," + text::format_double(p.ev_control) + "," +
               std::to_string(p.nonzero) + "\n";
    }
    return out;
}

std::string subspace_csv(const SubspaceAnalysis& subspace) {
    std::string out = "dims,ev\n";
    for (const auto& p : subspace.curve) out += std::to_string(p.dims) + "," + text::format_double(p.ev) + "\n";
    return out;
}

std::string per_term_csv(const RsaReport& report) {
    std::string out = "term";
    for (const auto& item : report.items) {
        out += "," + item.model_id + "/" + config_name(item.config) + "/" + std::to_string(item.layer);
    }
    out += "\n";
    for (const auto& t : report.terms) {
        out += t;
        for (const auto& item : report.items) {
            const double v = item.per_term_tau.at(t);
            out += "," + (std::isfinite(v) ? text::format_double(v) : std::string("NA"));
        }
        out += "\n";
    }
    return out;
}

}  // namespace coloralign
