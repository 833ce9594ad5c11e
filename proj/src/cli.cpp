#include "narrinf/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "narrinf/error.hpp"
#include "narrinf/estimand.hpp"
#include "narrinf/exposure.hpp"
#include "narrinf/fisher.hpp"
#include "narrinf/formats.hpp"
#include "narrinf/inference.hpp"
#include "narrinf/ingest.hpp"
#include "narrinf/io.hpp"
#include "narrinf/model.hpp"

#ifndef NARRINF_VERSION
#define NARRINF_VERSION "dev"
#endif

namespace narrinf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t default_threads() {
    if (const char* env = std::getenv("NARRINF_THREADS")) {
        try {
            const long long v = io::parse_int(env, "NARRINF_THREADS");
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const InputError&) {
        }
    }
    return 1;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Provenance record written beside every command's outputs.
class Manifest {
public:
    Manifest(std::string command_line, json config)
        : command_(std::move(command_line)), config_(std::move(config)), start_(std::chrono::steady_clock::now()) {}

    void input(const fs::path& p) { inputs_[p.string()] = io::sha256_hex(io::read_file(p)); }
    void seed(std::uint64_t s) { seed_ = s; }

    /// Adds manifest `name` to the pending outputs, digesting everything staged so far.
    void stage(io::AtomicOutputs& out, const fs::path& path) const {
        json outputs = json::object();
        for (const auto& [p, contents] : out.pending()) outputs[p.string()] = io::sha256_hex(contents);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json m = {{"command", command_},
                  {"config", config_},
                  {"config_hash", io::sha256_hex(config_.dump())},
                  {"inputs", inputs_},
                  {"outputs", outputs},
                  {"tool_version", NARRINF_VERSION},
                  {"wall_time_seconds", wall}};
        m["seed"] = seed_ ? json(*seed_) : json(nullptr);
        out.add_path(path, m.dump(2) + "\n");
    }

private:
    std::string command_;
    json config_;
    json inputs_ = json::object();
    std::optional<std::uint64_t> seed_;
    std::chrono::steady_clock::time_point start_;
};

std::string join_args(const std::vector<std::string>& args) {
    std::string out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ' ';
        out += args[i];
    }
    return out;
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
    fs::path p = file;
    p.replace_filename(file.stem().string() + suffix);
    return p;
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
    std::string input;
    std::string narrative;
    std::string out;
    std::string sources;
    bool normalize_rows = false;
    bool dot = false;
};

int cmd_ingest(const IngestOptions& o, const std::string& command, std::ostream& log) {
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw InputError("cannot read " + o.input);
    const auto spec = NarrativeSpec::from_json(io::read_file(o.narrative));
    auto parsed = parse_records(in);
    log << "parsed " << parsed.records.size() << " records, skipped " << parsed.skipped << " lines\n";

    const auto records = filter_narrative(parsed.records, spec);
    if (records.empty()) throw EmptyError("no records match the narrative");
    log << records.size() << " records match the narrative\n";

    auto rg = build_retweet_graph(records);
    for (const auto& w : rg.warnings) log << "warning: " << w << '\n';

    formats::Dataset d;
    d.x = extract_covariates(records, rg.graph, rg.index);
    d.y = compute_outcomes(records, rg.index);
    d.z = infer_sources(records, rg.graph, rg.index, split_list(o.sources));
    d.stats = vertex_stats(records, rg.graph, rg.index);
    d.graph = o.normalize_rows ? normalize_rows(rg.graph) : rg.graph;
    log << d.graph.n_vertices() << " vertices, " << d.graph.edge_count() << " edges, " << d.z.count()
        << " sources\n";

    io::AtomicOutputs out(o.out);
    formats::add_dataset(out, d);
    if (o.dot) {
        std::ostringstream dot;
        std::vector<std::string> labels;
        for (const auto& s : d.stats) labels.push_back(s.screen_name);
        write_dot(dot, d.graph, labels);
        out.add("graph.dot", dot.str());
    }
    Manifest m(command, json{{"command", "ingest"},
                             {"normalize_rows", o.normalize_rows},
                             {"sources", split_list(o.sources)},
                             {"skipped_lines", parsed.skipped}});
    m.input(o.input);
    m.input(o.narrative);
    m.stage(out, fs::path(o.out) / "manifest.json");
    out.commit();
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    std::string data;
    std::string out;
    std::size_t hops = 1;
    McmcConfig mcmc;
    PriorSpec priors;
    double max_rhat = 1.2;
    double eta_clamp = 30.0;
};

int cmd_fit(FitOptions o, const std::string& command, std::ostream& log) {
    const auto d = formats::read_dataset(o.data);
    ModelConfig mc{o.hops, o.eta_clamp};
    const FitData data = make_fit_data(d.graph, d.z, d.x, d.y, o.hops);
    const auto samples = fit(data, o.priors, o.mcmc, mc);
    const auto diag = diagnostics(samples, 1.05);

    io::AtomicOutputs out(o.out);
    out.add("posterior.csv", formats::posterior_csv(samples));
    out.add("diagnostics.json", formats::diagnostics_json(diag).dump(2) + "\n");
    json config = {{"command", "fit"},
                   {"hops", o.hops},
                   {"chains", o.mcmc.n_chains},
                   {"iters", o.mcmc.n_iters},
                   {"burn", o.mcmc.burn_in},
                   {"thin", o.mcmc.thin},
                   {"seed", o.mcmc.seed},
                   {"target_accept", o.mcmc.target_accept},
                   {"eta_clamp", o.eta_clamp},
                   {"priors",
                    {{"tau_sd", o.priors.tau_sd},
                     {"beta_sd", o.priors.beta_sd},
                     {"mu_sd", o.priors.mu_sd},
                     {"sigma2_shape", o.priors.sigma2_shape},
                     {"sigma2_scale", o.priors.sigma2_scale}}}};
    Manifest m(command, config);
    for (const char* f : formats::kDatasetFiles) {
        if (fs::exists(fs::path(o.data) / f)) m.input(fs::path(o.data) / f);
    }
    m.seed(o.mcmc.seed);
    m.stage(out, fs::path(o.out) / "manifest.json");
    out.commit();

    for (const auto& p : diag.parameters) {
        log << p.name << ": mean " << p.mean << " sd " << p.sd << " 90% [" << p.lo << ", " << p.hi << "]";
        if (p.rhat) log << " rhat " << *p.rhat;
        log << '\n';
    }
    for (const auto& n : diag.notices) log << "notice: " << n << '\n';
    if (diag.max_rhat() > o.max_rhat) {
        log << "split-Rhat " << diag.max_rhat() << " exceeds " << o.max_rhat << '\n';
        return static_cast<int>(ExitCode::kConvergence);
    }
    return 0;
}

// ---------------------------------------------------------------- impact

struct ImpactOptions {
    std::string data;
    std::string posterior;
    std::string out;
    std::string report;
    std::string vertices;
    std::string base_sources;
    double eta_clamp = 30.0;
    std::size_t threads = 1;
};

std::size_t resolve_vertex(const formats::Dataset& d, const std::string& key) {
    const auto& ids = d.graph.vertex_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == key) return i;
    }
    const std::string name = key.size() > 1 && key.front() == '@' ? key.substr(1) : key;
    for (std::size_t i = 0; i < d.stats.size(); ++i) {
        if (d.stats[i].screen_name == name) return i;
    }
    throw InputError("vertex '" + key + "' is not in the dataset");
}

int cmd_impact(const ImpactOptions& o, const std::string& command, std::ostream& log) {
    auto d = formats::read_dataset(o.data);
    const auto post = formats::read_posterior_csv(o.posterior);
    if (post.draws.empty()) throw InputError("posterior " + o.posterior + " has no draws");
    if (post.n_covariates != d.x.n_cols()) {
        throw InputError("posterior has " + std::to_string(post.n_covariates) + " covariate effects, data has " +
                         std::to_string(d.x.n_cols()) + " covariates");
    }
    if (d.stats.empty()) {
        d.stats.resize(d.graph.n_vertices());
        for (std::size_t i = 0; i < d.stats.size(); ++i) {
            d.stats[i].screen_name = d.graph.vertex_ids()[i];
            d.stats[i].tweets = static_cast<long long>(d.y.y[static_cast<Eigen::Index>(i)]);
        }
    }

    std::vector<std::size_t> subset;
    for (const auto& v : split_list(o.vertices)) subset.push_back(resolve_vertex(d, v));
    std::optional<SourceVector> base;
    if (!o.base_sources.empty()) {
        base = SourceVector(d.graph.n_vertices());
        for (const auto& v : split_list(o.base_sources)) base->set(resolve_vertex(d, v), true);
    }

    ModelConfig mc{post.n_hops, o.eta_clamp};
    const auto impacts = rank_impacts(post.draws, d.graph, d.x, base, subset, mc, o.threads);
    const auto pr = pagerank(d.graph);

    const fs::path out_path(o.out);
    const fs::path report_path = o.report.empty() ? sibling(out_path, "_report.csv") : fs::path(o.report);
    io::AtomicOutputs out(out_path.parent_path());
    out.add_path(out_path, formats::impact_csv(impacts, d.stats));
    out.add_path(report_path, formats::report_csv(impacts, d.stats, pr.scores));
    Manifest m(command, json{{"command", "impact"},
                             {"vertices", split_list(o.vertices)},
                             {"base_sources", split_list(o.base_sources)},
                             {"eta_clamp", o.eta_clamp}});
    for (const char* f : formats::kDatasetFiles) {
        if (fs::exists(fs::path(o.data) / f)) m.input(fs::path(o.data) / f);
    }
    m.input(o.posterior);
    m.stage(out, sibling(out_path, ".manifest.json"));
    out.commit();
    log << "wrote " << impacts.size() << " impact rows from " << post.draws.size() << " draws\n";
    return 0;
}

// ---------------------------------------------------------------- crlb

struct CrlbOptions {
    std::string data;
    std::string params;
    std::string out;
    double ridge = 0.0;
    double floor = 1e-6;
};

int cmd_crlb(const CrlbOptions& o, const std::string& command, std::ostream& log) {
    const auto d = formats::read_dataset(o.data);
    const auto p = formats::read_params(o.params);
    if (p.n_hops() != 1 || d.x.n_cols() != 1 || p.n_covariates() != 1) {
        throw UnsupportedError("crlb supports one exposure hop and one covariate (params have " +
                               std::to_string(p.n_hops()) + " hops, data has " + std::to_string(d.x.n_cols()) +
                               " covariates); reduce the design or use the general Fisher path");
    }
    const ExposureTensor s = exposure_profile(d.graph, d.z, 1);
    const auto f = fisher_information(p, d.z, s, d.x);
    const auto diag = design_diagnostics(f, o.floor);
    const auto bound = crlb(f, o.ridge);

    io::AtomicOutputs out(fs::path(o.out).parent_path());
    out.add_path(o.out, formats::crlb_json(f, bound, diag).dump(2) + "\n");
    Manifest m(command, json{{"command", "crlb"}, {"ridge", o.ridge}, {"floor", o.floor}});
    for (const char* file : formats::kDatasetFiles) {
        if (fs::exists(fs::path(o.data) / file)) m.input(fs::path(o.data) / file);
    }
    m.input(o.params);
    m.stage(out, sibling(o.out, ".manifest.json"));
    out.commit();
    log << "condition number " << bound.condition_number << ", F11 " << diag.f11 << ", F22 " << diag.f22 << '\n';
    for (const auto& n : diag.notes) log << "note: " << n << '\n';
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::size_t n = 200;
    double mean_degree = 5.0;
    int weight_max = 3;
    double source_fraction = 0.1;
    std::string params;
    std::uint64_t seed = 1;
    std::string out;
};

// Renders a simulated dataset as narrative records. Every account with
// outgoing edges or a source flag gets at least one original tweet; originals
// of sources come first, then other originals, then all retweets, so the
// causal-ordering rule keeps every edge.
std::vector<TweetRecord> render_records(const formats::Dataset& d, std::uint64_t seed) {
    constexpr Timestamp kStart = 1494007200;  // 2017-05-05T18:00:00Z
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::uniform_int_distribution<long long> followers(10, 100000);
    const auto deg = degrees(d.graph);
    const std::size_t n = d.graph.n_vertices();

    std::vector<long long> followers_of(n);
    for (auto& f : followers_of) f = followers(rng);
    auto make = [&](std::size_t i, Timestamp t, long long serial) {
        TweetRecord r;
        r.tweet_id = "t" + std::to_string(serial);
        r.created_at = t;
        r.user_id = d.graph.vertex_ids()[i];
        r.screen_name = "user" + r.user_id.substr(1);
        r.lang = "en";
        r.hashtags = {"Narrative"};
        r.followers_count = followers_of[i];
        return r;
    };

    std::vector<TweetRecord> records;
    std::vector<std::string> first_tweet(n);
    long long serial = 0;
    Timestamp clock_src = kStart;
    Timestamp clock_other = kStart + 3600;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            if ((pass == 0) != d.z[i]) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            const long long floor = (d.z[i] || deg.out_degree[ii] > 0) ? 1 : 0;
            const long long originals =
                std::max(floor, static_cast<long long>(d.y.y[ii]) - static_cast<long long>(deg.in_strength[ii]));
            for (long long k = 0; k < originals; ++k) {
                Timestamp& clock = pass == 0 ? clock_src : clock_other;
                auto r = make(i, clock++, serial++);
                r.text = "#Narrative original post " + std::to_string(k + 1);
                if (first_tweet[i].empty()) first_tweet[i] = r.tweet_id;
                records.push_back(std::move(r));
            }
        }
    }
    Timestamp clock_rt = kStart + 7200;
    for (const auto& e : d.graph.edges()) {
        const auto src = static_cast<std::size_t>(d.graph.index_of(e.src));
        const auto dst = static_cast<std::size_t>(d.graph.index_of(e.dst));
        for (int k = 0; k < static_cast<int>(e.weight); ++k) {
            auto r = make(dst, clock_rt++, serial++);
            r.text = "RT @user" + e.src.substr(1) + ": #Narrative original post";
            r.retweet_of = RetweetRef{e.src, first_tweet[src]};
            records.push_back(std::move(r));
        }
    }
    return records;
}

int cmd_simulate(const SimulateOptions& o, const std::string& command, std::ostream& log) {
    const ModelParams p = formats::read_params(o.params);
    if (p.n_covariates() != 1) {
        throw InputError("simulated designs have one covariate (popularity); params have " +
                         std::to_string(p.n_covariates()));
    }
    auto design = simulate_design(o.n, o.mean_degree, o.weight_max, o.source_fraction, o.seed);
    ModelConfig mc{p.n_hops(), 30.0};
    auto sim = simulate_outcomes(p, design.graph, design.z, design.x, mc, o.seed + 1);

    formats::Dataset d{design.graph, design.x, sim.y, design.z, {}};
    const auto records = render_records(d, o.seed);
    VertexIndex index;
    for (std::size_t i = 0; i < d.graph.n_vertices(); ++i) index.emplace(d.graph.vertex_ids()[i], i);
    d.stats = vertex_stats(records, d.graph, index);

    std::string jsonl;
    for (const auto& r : records) jsonl += to_json_line(r) + '\n';

    io::AtomicOutputs out(o.out);
    out.add("records.jsonl", jsonl);
    out.add("narrative.json", json{{"hashtags", {"Narrative"}}, {"keywords", json::array()}, {"case_sensitive", false}}
                                  .dump(2) +
                                  "\n");
    out.add("params.json", formats::params_to_json(p).dump(2) + "\n");
    formats::add_dataset(out, d);
    Manifest m(command, json{{"command", "simulate"},
                             {"n", o.n},
                             {"mean_degree", o.mean_degree},
                             {"weight_max", o.weight_max},
                             {"source_fraction", o.source_fraction}});
    m.input(o.params);
    m.seed(o.seed);
    m.stage(out, fs::path(o.out) / "manifest.json");
    out.commit();
    log << "simulated " << o.n << " accounts, " << d.graph.edge_count() << " edges, " << d.z.count() << " sources, "
        << records.size() << " records\n";
    return 0;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const std::string& manifest_path, std::ostream& log) {
    json m = json::parse(io::read_file(manifest_path), nullptr, false);
    if (m.is_discarded() || !m.is_object()) throw InputError(manifest_path + " is not a manifest");
    int mismatches = 0;
    for (const char* section : {"inputs", "outputs"}) {
        const json entries = m.value(section, json::object());
        for (const auto& [path, digest] : entries.items()) {
            std::string actual = fs::exists(path) ? io::sha256_hex(io::read_file(path)) : "missing";
            if (actual != digest.get<std::string>()) {
                log << section << " mismatch: " << path << '\n';
                ++mismatches;
            }
        }
    }
    log << (mismatches ? "manifest digests differ\n" : "manifest digests match\n");
    return mismatches ? static_cast<int>(ExitCode::kInput) : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal influence estimation on narrative interaction networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", NARRINF_VERSION);
    std::size_t threads = default_threads();

    IngestOptions ing;
    auto* c_ingest = app.add_subcommand("ingest", "Filter JSONL records to a narrative and build the dataset");
    c_ingest->add_option("--input", ing.input, "Tweet records, one JSON object per line")->required();
    c_ingest->add_option("--narrative", ing.narrative, "Narrative spec JSON (hashtags, keywords)")->required();
    c_ingest->add_option("--out", ing.out, "Output directory")->required();
    c_ingest->add_option("--sources", ing.sources, "Comma-separated explicit sources (ids or @names)");
    c_ingest->add_flag("--normalize-rows", ing.normalize_rows, "Divide each influence row by its maximum");
    c_ingest->add_flag("--dot", ing.dot, "Also write graph.dot");

    FitOptions fo;
    auto* c_fit = app.add_subcommand("fit", "Sample the posterior of the outcome model");
    c_fit->add_option("--data", fo.data, "Dataset directory")->required();
    c_fit->add_option("--out", fo.out, "Output directory")->required();
    c_fit->add_option("--hops", fo.hops, "Exposure hops")->capture_default_str()->check(CLI::PositiveNumber);
    c_fit->add_option("--chains", fo.mcmc.n_chains, "Chains")->capture_default_str();
    c_fit->add_option("--iters", fo.mcmc.n_iters, "Iterations per chain")->capture_default_str();
    c_fit->add_option("--burn", fo.mcmc.burn_in, "Burn-in iterations")->capture_default_str();
    c_fit->add_option("--thin", fo.mcmc.thin, "Keep every k-th post-burn-in draw")->capture_default_str();
    c_fit->add_option("--seed", fo.mcmc.seed, "Random seed")->capture_default_str();
    c_fit->add_option("--target-accept", fo.mcmc.target_accept, "Adaptation target")->capture_default_str();
    c_fit->add_option("--max-rhat", fo.max_rhat, "Exit 4 above this split-Rhat")->capture_default_str();
    c_fit->add_option("--sigma2-shape", fo.priors.sigma2_shape, "Inverse-gamma shape for sigma_eps^2")
        ->capture_default_str();
    c_fit->add_option("--sigma2-scale", fo.priors.sigma2_scale, "Inverse-gamma scale for sigma_eps^2")
        ->capture_default_str();
    c_fit->add_option("--eta-clamp", fo.eta_clamp, "Linear predictor clamp")->capture_default_str();

    ImpactOptions io_;
    auto* c_impact = app.add_subcommand("impact", "Rank accounts by posterior causal impact");
    c_impact->add_option("--data", io_.data, "Dataset directory")->required();
    c_impact->add_option("--posterior", io_.posterior, "posterior.csv from fit")->required();
    c_impact->add_option("--out", io_.out, "Impact CSV path")->required();
    c_impact->add_option("--report", io_.report, "Report CSV path (default <out>_report.csv)");
    c_impact->add_option("--vertices", io_.vertices, "Comma-separated subset (ids or @names)");
    c_impact->add_option("--base-sources", io_.base_sources, "Comma-separated base source set (default none)");
    c_impact->add_option("--eta-clamp", io_.eta_clamp, "Linear predictor clamp")->capture_default_str();

    CrlbOptions co;
    auto* c_crlb = app.add_subcommand("crlb", "Fisher information and Cramer-Rao bound for a parameter point");
    c_crlb->add_option("--data", co.data, "Dataset directory")->required();
    c_crlb->add_option("--params", co.params, "Parameter JSON")->required();
    c_crlb->add_option("--out", co.out, "Output JSON path")->required();
    c_crlb->add_option("--ridge", co.ridge, "Ridge added to F before inversion")->capture_default_str();
    c_crlb->add_option("--floor", co.floor, "Weak-design threshold for F11/F22")->capture_default_str();

    SimulateOptions so;
    auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic dataset from known parameters");
    c_sim->add_option("--n", so.n, "Accounts")->capture_default_str()->check(CLI::PositiveNumber);
    c_sim->add_option("--mean-degree", so.mean_degree, "Mean out-degree")->capture_default_str();
    c_sim->add_option("--weight-max", so.weight_max, "Maximum edge weight")->capture_default_str();
    c_sim->add_option("--source-frac", so.source_fraction, "Probability an account is a source")
        ->capture_default_str();
    c_sim->add_option("--params", so.params, "Ground-truth parameter JSON")->required();
    c_sim->add_option("--seed", so.seed, "Random seed")->capture_default_str();
    c_sim->add_option("--out", so.out, "Output directory")->required();

    std::string manifest;
    auto* c_verify = app.add_subcommand("verify", "Recompute the digests recorded in a manifest");
    c_verify->add_option("--manifest", manifest, "manifest.json")->required();

    for (auto* sub : {c_fit, c_impact}) {
        sub->add_option("--threads", threads, "Worker threads (env NARRINF_THREADS)")->capture_default_str();
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(ExitCode::kInput);
    }

    const std::string command = join_args(args);
    try {
        if (*c_ingest) return cmd_ingest(ing, command, err);
        if (*c_fit) {
            fo.mcmc.threads = threads;
            return cmd_fit(fo, command, err);
        }
        if (*c_impact) {
            io_.threads = threads;
            return cmd_impact(io_, command, err);
        }
        if (*c_crlb) return cmd_crlb(co, command, err);
        if (*c_sim) return cmd_simulate(so, command, err);
        if (*c_verify) return cmd_verify(manifest, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kInput);
    }
    return static_cast<int>(ExitCode::kInput);
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace narrinf::cli
