#include "cli.hpp"

#include "pfm/asymptotics.hpp"
#include "pfm/dataset.hpp"
#include "pfm/emr.hpp"
#include "pfm/engine.hpp"
#include "pfm/errors.hpp"
#include "pfm/experiment.hpp"
#include "pfm/serialize.hpp"
#include "pfm/service.hpp"
#include "pfm/synthetic.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

namespace pfm {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError("cannot write '" + path.string() + "'");
    out << text;
}

struct ModelOptions {
    std::size_t anchors = 64;
    std::size_t nearest = 5;
    double alpha = 0.99;
    std::size_t kmeans_iterations = 50;

    void add_to(CLI::App& app) {
        app.add_option("--anchors", anchors, "anchor count A")->capture_default_str();
        app.add_option("--nearest", nearest, "nearest anchors s per item")->capture_default_str();
        app.add_option("--alpha", alpha, "ranking trade-off in (0, 1)")->capture_default_str();
        app.add_option("--kmeans-iterations", kmeans_iterations, "Lloyd iterations")->capture_default_str();
    }

    RetrievalConfig config() const {
        RetrievalConfig cfg;
        cfg.anchor_count = anchors;
        cfg.nearest_anchors = nearest;
        cfg.alpha = alpha;
        cfg.kmeans_iterations = kmeans_iterations;
        return cfg;
    }
};

SeparableDensity density_from(const std::vector<std::string>& specs, std::size_t dim) {
    if (specs.size() == 1)
        return SeparableDensity::same(parse_axis_density(specs[0]), dim);
    if (specs.size() != dim)
        throw ValidationError("give one density for all axes or one per axis");
    SeparableDensity f;
    for (const auto& s : specs)
        f.axes.push_back(parse_axis_density(s));
    return f;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-query Pareto-front retrieval engine", "pfm"};
    app.require_subcommand(1);
    std::function<void()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a dataset and convert it between formats");
    std::string ingest_in, ingest_out, ingest_in_fmt, ingest_out_fmt, normalize = "none";
    ingest->add_option("--input", ingest_in, "dataset to read")->required();
    ingest->add_option("--output", ingest_out, "dataset to write");
    ingest->add_option("--input-format", ingest_in_fmt, "csv or binary (default: by extension)");
    ingest->add_option("--output-format", ingest_out_fmt, "csv or binary (default: by extension)");
    ingest->add_option("--normalize", normalize, "none, zscore or minmax")->capture_default_str();
    ingest->callback([&] {
        action = [&] {
            const auto data = ingest_in_fmt.empty() ? load_dataset(ingest_in)
                                                    : load_dataset(ingest_in, parse_format(ingest_in_fmt));
            const auto features = normalize_features(data.data, parse_normalization(normalize));
            Json summary{{"input", ingest_in},
                         {"n", features.size()},
                         {"m", features.dim()},
                         {"classes", data.labels ? data.labels->classes() : 0},
                         {"normalize", normalize}};
            if (!ingest_out.empty()) {
                const auto fmt = ingest_out_fmt.empty() ? format_from_extension(ingest_out)
                                                        : parse_format(ingest_out_fmt);
                save_dataset(ingest_out, fmt, features, data.labels ? &*data.labels : nullptr);
                summary["output"] = ingest_out;
                summary["fingerprint"] = file_fingerprint(ingest_out);
            }
            out << summary.dump(2) << "\n";
        };
    });

    // build-model
    auto* build = app.add_subcommand("build-model", "Build an anchor-graph ranking model");
    std::string build_dataset, build_output, build_id, build_metadata, build_data_dir;
    std::uint64_t build_seed = 0;
    ModelOptions build_opts;
    build->add_option("--dataset", build_dataset, "dataset file")->required();
    build->add_option("--output", build_output, "write the model file here instead of registering it");
    build->add_option("--seed", build_seed, "k-means seed")->capture_default_str();
    build->add_option("--model-id", build_id, "registry id (default: derived from data, config and seed)");
    build->add_option("--metadata", build_metadata, "per-item metadata JSON (registry only)");
    build->add_option("--data-dir", build_data_dir, "registry directory (default: $PFM_DATA_DIR or .)");
    build_opts.add_to(*build);
    build->callback([&] {
        action = [&] {
            const RetrievalConfig cfg = build_opts.config();
            if (!build_output.empty()) {
                const auto data = load_dataset(build_dataset);
                cfg.validate(data.data.size());
                EmrModel model = build_emr_model(data.data, cfg, build_seed);
                model.dataset_fingerprint = file_fingerprint(build_dataset);
                save_emr_model(build_output, model);
                out << Json{{"model_path", build_output},
                            {"dataset_fingerprint", model.dataset_fingerprint},
                            {"seed", build_seed},
                            {"config", config_to_json(cfg)}}
                           .dump(2)
                    << "\n";
                return;
            }
            RetrievalService service(build_data_dir.empty() ? default_data_dir() : fs::path(build_data_dir));
            BuildRequest req{build_dataset, cfg, build_seed, std::nullopt, build_metadata};
            if (!build_id.empty())
                req.model_id = build_id;
            const auto entry = service.build_model(req);
            out << Json{{"model_id", entry.model_id},
                        {"model_path", service.registry().resolve(entry.model_path).string()},
                        {"dataset_fingerprint", entry.dataset_fingerprint},
                        {"seed", entry.seed},
                        {"config", config_to_json(entry.config)}}
                       .dump(2)
                << "\n";
        };
    });

    // retrieve
    auto* ret = app.add_subcommand("retrieve", "Rank items against several queries");
    std::string ret_model, ret_dataset, ret_method = "pfm", ret_data_dir;
    std::vector<std::size_t> ret_queries;
    std::vector<std::string> ret_query_ids;
    std::vector<double> ret_weights;
    std::size_t ret_k = 20;
    ret->add_option("--model", ret_model, "registry model id or model file")->required();
    ret->add_option("--dataset", ret_dataset, "dataset file (required with a model file)");
    auto* q_idx = ret->add_option("--queries", ret_queries, "query item indices, comma separated")->delimiter(',');
    auto* q_ids = ret->add_option("--query-ids", ret_query_ids, "query item ids, comma separated")->delimiter(',');
    q_idx->excludes(q_ids);
    ret->add_option("--k", ret_k, "items to return")->capture_default_str();
    ret->add_option("--method", ret_method, "pfm, mq_avg, mq_max or scalarized")->capture_default_str();
    ret->add_option("--weights", ret_weights, "scalarization weights, comma separated")->delimiter(',');
    ret->add_option("--data-dir", ret_data_dir, "registry directory (default: $PFM_DATA_DIR or .)");
    ret->callback([&] {
        action = [&] {
            if (ret_queries.empty() && ret_query_ids.empty())
                throw ValidationError("give --queries or --query-ids");
            Json ids = Json::array();
            for (auto q : ret_queries)
                ids.push_back(q);
            for (const auto& q : ret_query_ids)
                ids.push_back(q);
            RetrievalService service(ret_data_dir.empty() ? default_data_dir() : fs::path(ret_data_dir));
            Json request{{"query_ids", ids}, {"k", ret_k}, {"method", ret_method}};
            if (!ret_weights.empty())
                request["weights"] = ret_weights;
            if (service.registry().find(ret_model)) {
                request["model_id"] = ret_model;
                out << service.retrieve(request).dump(2) << "\n";
                return;
            }
            if (!fs::is_regular_file(ret_model))
                throw NotFoundError("'" + ret_model + "' is neither a registered model nor a model file");
            if (ret_dataset.empty())
                throw ValidationError("--dataset is required with a model file");
            const auto data = load_dataset(ret_dataset);
            const auto model = load_emr_model(ret_model, data.data);
            if (!model.dataset_fingerprint.empty() && model.dataset_fingerprint != file_fingerprint(ret_dataset))
                throw Error("fingerprint_mismatch", "dataset does not match the model file");
            const QuerySet qs = resolve_queries(data.data, ids);
            if (ret_k < 1)
                throw ValidationError("k must be at least 1");
            const auto result = retrieve(data.data, model, qs, parse_method(ret_method), ret_k, ret_weights);
            Json response = query_response_json(result, data.data, qs);
            response["k"] = ret_k;
            out << response.dump(2) << "\n";
        };
    });

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Query-pair experiment: mean nDCG@k per method");
    std::string eval_dataset, eval_json, eval_profiles;
    std::vector<std::string> eval_methods = {"pfm", "mq_avg", "mq_max"};
    std::size_t eval_pairs = 100, eval_models = 5, eval_k = 20, eval_grid = 50, eval_fronts = 5, eval_min_rel = 5;
    std::uint64_t eval_pair_seed = 1, eval_model_seed = 1;
    ModelOptions eval_opts;
    eval->add_option("--dataset", eval_dataset, "labelled dataset file")->required();
    eval->add_option("--pairs", eval_pairs, "query pairs to draw")->capture_default_str();
    eval->add_option("--models", eval_models, "models built with consecutive seeds")->capture_default_str();
    eval->add_option("--methods", eval_methods, "comma separated methods")->delimiter(',');
    eval->add_option("--k", eval_k, "largest k")->capture_default_str();
    eval->add_option("--seed", eval_pair_seed, "pair sampling seed")->capture_default_str();
    eval->add_option("--model-seed", eval_model_seed, "seed of the first model")->capture_default_str();
    eval->add_option("--min-relevant", eval_min_rel, "relevant items a pair needs")->capture_default_str();
    eval->add_option("--grid", eval_grid, "profile grid size")->capture_default_str();
    eval->add_option("--fronts", eval_fronts, "fronts in the relevance profile")->capture_default_str();
    eval->add_option("--json", eval_json, "also write the full report as JSON");
    eval->add_option("--profiles", eval_profiles, "write per-front relevance profiles as CSV");
    eval_opts.add_to(*eval);
    eval->callback([&] {
        action = [&] {
            const auto data = load_dataset(eval_dataset);
            if (!data.labels)
                throw ValidationError("evaluation needs a labelled dataset");
            if (eval_models < 1)
                throw ValidationError("--models must be at least 1");
            const RetrievalConfig cfg = eval_opts.config();
            cfg.validate(data.data.size());
            ExperimentOptions options;
            options.methods.clear();
            for (const auto& m : eval_methods)
                options.methods.push_back(parse_method(m));
            options.k_max = eval_k;
            options.grid_size = eval_grid;
            options.profile_fronts = eval_fronts;
            const auto batch = make_query_pair_batch(*data.labels, eval_pairs, eval_pair_seed, eval_min_rel);
            std::vector<EmrModel> models;
            std::vector<std::uint64_t> seeds;
            for (std::size_t i = 0; i < eval_models; ++i) {
                seeds.push_back(eval_model_seed + i);
                models.push_back(build_emr_model(data.data, cfg, seeds.back()));
            }
            auto report = run_query_pair_experiment(data.data, *data.labels, models, batch, options);
            report.model_seeds = seeds;
            out << metric_report_csv(report);
            if (!eval_json.empty()) {
                Json j = metric_report_json(report);
                j["meta"]["config"] = config_to_json(cfg);
                j["meta"]["pairs_requested"] = batch.requested;
                j["meta"]["min_relevant"] = batch.min_relevant;
                write_text(eval_json, j.dump(2) + "\n");
            }
            if (!eval_profiles.empty())
                write_text(eval_profiles, front_profiles_csv(report.front_profiles));
        };
    });

    // asymptotics
    auto* asym = app.add_subcommand("asymptotics", "Monte Carlo checks of Pareto depth asymptotics");
    asym->require_subcommand(1);
    std::string asym_format = "csv";
    std::uint64_t asym_seed = 1;
    asym->add_option("--format", asym_format, "csv or json")->capture_default_str();
    asym->add_option("--seed", asym_seed, "base seed")->capture_default_str();
    auto check_format = [&] {
        if (asym_format != "csv" && asym_format != "json")
            throw ValidationError("--format must be csv or json");
    };

    auto* cont = asym->add_subcommand("continuum", "Scaled depth against the separable-density limit");
    std::vector<std::string> cont_density = {"uniform"};
    std::vector<std::size_t> cont_n = {1000, 10000, 100000};
    std::size_t cont_dim = 2, cont_runs = 10;
    cont->add_option("--density", cont_density, "axis density (one, or one per axis)")->delimiter(';');
    cont->add_option("--dim", cont_dim, "dimension d")->capture_default_str();
    cont->add_option("--n", cont_n, "sample sizes, comma separated")->delimiter(',');
    cont->add_option("--runs", cont_runs, "independent samples per n")->capture_default_str();
    cont->callback([&] {
        action = [&] {
            check_format();
            const auto f = density_from(cont_density, cont_dim);
            const auto table = continuum_comparison(f, cont_n, evaluation_grid(cont_dim), cont_runs, asym_seed);
            if (asym_format == "json") {
                Json j = continuum_table_json(table);
                j["seed"] = asym_seed;
                j["runs"] = cont_runs;
                j["dim"] = cont_dim;
                out << j.dump(2) << "\n";
            } else {
                out << continuum_table_csv(table);
            }
        };
    });

    auto* probe = asym->add_subcommand("probe", "Convexity defect of planar depth level curves");
    std::vector<std::string> probe_density = {"uniform"};
    std::vector<double> probe_levels = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
    std::size_t probe_n = 100000;
    std::string probe_curves;
    probe->add_option("--density", probe_density, "axis density (one, or one per axis)")->delimiter(';');
    probe->add_option("--n", probe_n, "sample size")->capture_default_str();
    probe->add_option("--levels", probe_levels, "levels a, comma separated")->delimiter(',');
    probe->add_option("--curves", probe_curves, "write level curve points (gnuplot blocks) here");
    probe->callback([&] {
        action = [&] {
            check_format();
            const auto f = density_from(probe_density, 2);
            const auto points = sample_density(f, probe_n, asym_seed);
            const auto report = quasiconcavity_probe(points, probe_levels);
            if (asym_format == "json") {
                out << Json{{"seed", asym_seed}, {"n", probe_n}, {"levels", probe_report_json(report)}}.dump(2)
                    << "\n";
            } else {
                out << probe_report_csv(report);
            }
            if (!probe_curves.empty()) {
                const auto layering = non_dominated_sort(points);
                std::string text;
                for (const auto& l : report) {
                    if (l.skipped)
                        continue;
                    text += "# level " + std::to_string(l.level) + " front " + std::to_string(l.front) + "\n";
                    for (auto i : tail_to_tail_order(layering.fronts[l.front - 1], points))
                        text += std::to_string(points[i][0]) + " " + std::to_string(points[i][1]) + "\n";
                    text += "\n\n";
                }
                write_text(probe_curves, text);
            }
        };
    });

    auto* chains = asym->add_subcommand("chains", "Front index against longest-chain depth on random instances");
    std::size_t chain_instances = 200, chain_n_min = 50, chain_n_max = 500;
    std::vector<std::size_t> chain_dims = {2, 3, 4};
    chains->add_option("--instances", chain_instances, "random instances")->capture_default_str();
    chains->add_option("--n-min", chain_n_min, "smallest n")->capture_default_str();
    chains->add_option("--n-max", chain_n_max, "largest n")->capture_default_str();
    chains->add_option("--dims", chain_dims, "dimensions, comma separated")->delimiter(',');
    chains->callback([&] {
        action = [&] {
            check_format();
            const auto r = front_chain_agreement(chain_instances, chain_n_min, chain_n_max, chain_dims, asym_seed);
            if (asym_format == "json") {
                out << Json{{"seed", asym_seed},
                            {"instances", r.instances},
                            {"points", r.points},
                            {"mismatches", r.mismatches}}
                           .dump(2)
                    << "\n";
            } else {
                out << "instances,points,mismatches\n"
                    << r.instances << "," << r.points << "," << r.mismatches << "\n";
            }
        };
    });

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string serve_host = "127.0.0.1", serve_data_dir;
    int serve_port = 8080;
    serve->add_option("--host", serve_host, "bind address")->capture_default_str();
    serve->add_option("--port", serve_port, "port")->capture_default_str();
    serve->add_option("--data-dir", serve_data_dir, "registry directory (default: $PFM_DATA_DIR or .)");
    serve->callback([&] {
        action = [&] {
            RetrievalService service(serve_data_dir.empty() ? default_data_dir() : fs::path(serve_data_dir));
            httplib::Server server;
            install_routes(server, service);
            err << "listening on " << serve_host << ":" << serve_port << "\n";
            if (!server.listen(serve_host, serve_port))
                throw Error("io_error", "cannot listen on " + serve_host + ":" + std::to_string(serve_port));
        };
    });

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the synthetic multi-label bridge benchmark");
    std::string synth_output;
    BridgeBenchmarkConfig synth_cfg;
    synth->add_option("--output", synth_output, "dataset file (.csv or binary)")->required();
    synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
    synth->add_option("--cluster-size", synth_cfg.cluster_size)->capture_default_str();
    synth->add_option("--bridge-size", synth_cfg.bridge_size)->capture_default_str();
    synth->add_option("--distractor-size", synth_cfg.distractor_size)->capture_default_str();
    synth->add_option("--dim", synth_cfg.dim)->capture_default_str();
    synth->add_option("--separation", synth_cfg.separation)->capture_default_str();
    synth->add_option("--cluster-spread", synth_cfg.cluster_spread)->capture_default_str();
    synth->add_option("--bridge-spread", synth_cfg.bridge_spread)->capture_default_str();
    synth->callback([&] {
        action = [&] {
            const auto data = make_bridge_benchmark(synth_cfg);
            save_dataset(synth_output, format_from_extension(synth_output), data.data, &*data.labels);
            out << Json{{"output", synth_output},
                        {"n", data.data.size()},
                        {"m", data.data.dim()},
                        {"seed", synth_cfg.seed},
                        {"fingerprint", file_fingerprint(synth_output)}}
                       .dump(2)
                << "\n";
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (action)
            action();
        return 0;
    } catch (const Error& e) {
        err << "error [" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace pfm
