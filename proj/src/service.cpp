#include "pfm/service.hpp"

#include "pfm/engine.hpp"
#include "pfm/errors.hpp"

#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pfm {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomically(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw FormatError("cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error("bad_request", what + " is not valid JSON: " + e.what());
    }
}

std::size_t positive_size(const Json& j, const char* name) {
    if (!j.is_number_integer())
        throw ValidationError(std::string(name) + " must be an integer");
    const auto v = j.get<long long>();
    if (v < 1)
        throw ValidationError(std::string(name) + " must be at least 1");
    return static_cast<std::size_t>(v);
}

Json error_body(const std::string& code, const std::string& message) {
    return Json{{"error", {{"code", code}, {"message", message}}}};
}

} // namespace

Json registry_entry_json(const RegistryEntry& e) {
    return Json{{"model_id", e.model_id},
                {"dataset_path", e.dataset_path},
                {"dataset_fingerprint", e.dataset_fingerprint},
                {"model_path", e.model_path},
                {"metadata_path", e.metadata_path},
                {"config", config_to_json(e.config)},
                {"seed", e.seed}};
}

RegistryEntry registry_entry_from_json(const Json& j) {
    try {
        RegistryEntry e;
        e.model_id = j.at("model_id").get<std::string>();
        e.dataset_path = j.at("dataset_path").get<std::string>();
        e.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
        e.model_path = j.at("model_path").get<std::string>();
        e.metadata_path = j.value("metadata_path", std::string{});
        e.config = config_from_json(j.value("config", Json::object()));
        e.seed = j.value("seed", std::uint64_t{0});
        return e;
    } catch (const Json::exception& ex) {
        throw FormatError(std::string("malformed registry entry: ") + ex.what());
    }
}

ModelRegistry::ModelRegistry(fs::path data_dir) : dir_(std::move(data_dir)) {}

fs::path ModelRegistry::resolve(const std::string& path) const {
    fs::path p(path);
    return p.is_absolute() ? p : dir_ / p;
}

std::map<std::string, RegistryEntry> ModelRegistry::read() const {
    std::map<std::string, RegistryEntry> out;
    if (!fs::exists(registry_path()))
        return out;
    const Json j = parse_json(read_text(registry_path()), "registry");
    if (!j.contains("models") || !j["models"].is_array())
        throw FormatError("registry has no models array");
    for (const auto& e : j["models"]) {
        auto entry = registry_entry_from_json(e);
        out[entry.model_id] = std::move(entry);
    }
    return out;
}

void ModelRegistry::write(const std::map<std::string, RegistryEntry>& entries) const {
    Json models = Json::array();
    for (const auto& [id, e] : entries)
        models.push_back(registry_entry_json(e));
    write_atomically(registry_path(), Json{{"models", std::move(models)}}.dump(2) + "\n");
}

std::optional<RegistryEntry> ModelRegistry::find(const std::string& model_id) const {
    std::lock_guard lock(mutex_);
    auto all = read();
    auto it = all.find(model_id);
    if (it == all.end())
        return std::nullopt;
    return it->second;
}

std::vector<RegistryEntry> ModelRegistry::entries() const {
    std::lock_guard lock(mutex_);
    std::vector<RegistryEntry> out;
    for (auto& [id, e] : read())
        out.push_back(e);
    return out;
}

void ModelRegistry::put(const RegistryEntry& entry) {
    std::lock_guard lock(mutex_);
    auto all = read();
    all[entry.model_id] = entry;
    write(all);
}

fs::path default_data_dir() {
    const char* env = std::getenv("PFM_DATA_DIR");
    return env && *env ? fs::path(env) : fs::current_path();
}

std::string derive_model_id(const std::string& fingerprint, const RetrievalConfig& cfg, std::uint64_t seed) {
    const std::string key = fingerprint + "\n" + config_to_json(cfg).dump() + "\n" + std::to_string(seed);
    return "m" + sha256_hex(key).substr(0, 16);
}

QuerySet resolve_queries(const FeatureDataset& ds, const Json& query_ids) {
    if (!query_ids.is_array() || query_ids.empty())
        throw ValidationError("query_ids must be a non-empty array");
    QuerySet qs;
    for (const auto& q : query_ids) {
        if (q.is_string()) {
            auto idx = ds.index_of(q.get<std::string>());
            if (!idx)
                throw ValidationError("unknown item id '" + q.get<std::string>() + "'");
            qs.items.push_back(*idx);
        } else if (q.is_number_integer() && q.get<long long>() >= 0) {
            qs.items.push_back(static_cast<std::size_t>(q.get<long long>()));
        } else {
            throw ValidationError("query ids must be item id strings or non-negative indices");
        }
    }
    validate_query_set(qs, ds);
    return qs;
}

int http_status_for(const std::string& code) {
    if (code == "not_found")
        return 404;
    if (code == "bad_request")
        return 400;
    if (code == "fingerprint_mismatch")
        return 409;
    if (code == "validation_error" || code == "dimension_error" || code == "parse_error" ||
        code == "format_error" || code == "integrity_error")
        return 422;
    return 500;
}

RetrievalService::RetrievalService(fs::path data_dir) : registry_(std::move(data_dir)) {}

std::mutex& RetrievalService::build_mutex(const std::string& model_id) {
    std::lock_guard lock(build_mutexes_guard_);
    auto& slot = build_mutexes_[model_id];
    if (!slot)
        slot = std::make_unique<std::mutex>();
    return *slot;
}

RegistryEntry RetrievalService::build_model(const BuildRequest& request) {
    if (request.dataset_path.empty())
        throw ValidationError("dataset_path is required");
    const fs::path dataset = fs::absolute(request.dataset_path);
    if (!fs::is_regular_file(dataset))
        throw ValidationError("dataset '" + request.dataset_path + "' does not exist");
    if (!request.metadata_path.empty() && !fs::is_regular_file(request.metadata_path))
        throw ValidationError("metadata '" + request.metadata_path + "' does not exist");

    const std::string fingerprint = file_fingerprint(dataset);
    const std::string id = request.model_id.value_or(derive_model_id(fingerprint, request.config, request.seed));
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "." || id == "..")
        throw ValidationError("model_id must be a plain name");

    std::lock_guard build_lock(build_mutex(id));
    const auto data = load_dataset(dataset);
    if (file_fingerprint(dataset) != fingerprint)
        throw Error("fingerprint_mismatch", "dataset changed while the model was being built");
    request.config.validate(data.data.size());
    EmrModel model = build_emr_model(data.data, request.config, request.seed);
    model.dataset_fingerprint = fingerprint;

    RegistryEntry entry;
    entry.model_id = id;
    entry.dataset_path = dataset.string();
    entry.dataset_fingerprint = fingerprint;
    entry.model_path = (fs::path("models") / (id + ".emr")).string();
    entry.metadata_path = request.metadata_path.empty() ? "" : fs::absolute(request.metadata_path).string();
    entry.config = request.config;
    entry.seed = request.seed;

    const fs::path target = registry_.resolve(entry.model_path);
    fs::create_directories(target.parent_path());
    auto tmp = target;
    tmp += ".tmp";
    save_emr_model(tmp, model);
    fs::rename(tmp, target);
    registry_.put(entry);
    {
        std::unique_lock lock(cache_mutex_);
        cache_.erase(id);
    }
    return entry;
}

std::shared_ptr<const LoadedModel> RetrievalService::load(const RegistryEntry& entry) {
    const fs::path dataset = entry.dataset_path;
    if (!fs::is_regular_file(dataset))
        throw Error("fingerprint_mismatch", "dataset '" + entry.dataset_path + "' is missing");
    if (file_fingerprint(dataset) != entry.dataset_fingerprint)
        throw Error("fingerprint_mismatch",
                    "dataset '" + entry.dataset_path + "' no longer matches model '" + entry.model_id + "'");
    try {
        auto data = load_dataset(dataset);
        auto model = load_emr_model(registry_.resolve(entry.model_path), data.data);
        Json metadata;
        if (!entry.metadata_path.empty())
            metadata = parse_json(read_text(entry.metadata_path), "metadata");
        if (model.dataset_fingerprint != entry.dataset_fingerprint)
            throw Error("fingerprint_mismatch",
                        "model file of '" + entry.model_id + "' was built from another dataset");
        return std::make_shared<const LoadedModel>(
            LoadedModel{entry, std::move(data), std::move(model), std::move(metadata)});
    } catch (const Error& e) {
        if (e.code() == "fingerprint_mismatch")
            throw;
        throw Error("model_load_error", "model '" + entry.model_id + "': " + e.what());
    }
}

std::shared_ptr<const LoadedModel> RetrievalService::model(const std::string& model_id) {
    auto entry = registry_.find(model_id);
    if (!entry)
        throw NotFoundError("unknown model '" + model_id + "'");
    std::error_code ec;
    const auto mtime = fs::last_write_time(entry->dataset_path, ec);
    const auto size = ec ? 0 : fs::file_size(entry->dataset_path, ec);
    {
        std::shared_lock lock(cache_mutex_);
        auto it = cache_.find(model_id);
        if (!ec && it != cache_.end() && it->second.dataset_mtime == mtime && it->second.dataset_size == size &&
            it->second.loaded->entry.dataset_fingerprint == entry->dataset_fingerprint &&
            it->second.loaded->entry.model_path == entry->model_path)
            return it->second.loaded;
    }
    auto loaded = load(*entry);
    std::unique_lock lock(cache_mutex_);
    cache_[model_id] = {loaded, mtime, size};
    return loaded;
}

Json RetrievalService::retrieve(const Json& request) {
    if (!request.is_object())
        throw Error("bad_request", "request body must be a JSON object");
    if (!request.contains("model_id") || !request["model_id"].is_string())
        throw ValidationError("model_id is required");
    const auto loaded = model(request["model_id"].get<std::string>());
    const auto& ds = loaded->data.data;
    if (!request.contains("query_ids"))
        throw ValidationError("query_ids is required");
    const QuerySet qs = resolve_queries(ds, request["query_ids"]);
    const std::size_t k =
        request.contains("k") ? positive_size(request["k"], "k") : loaded->entry.config.k_return;
    Method method = Method::pfm;
    if (request.contains("method")) {
        if (!request["method"].is_string())
            throw ValidationError("method must be a string");
        method = parse_method(request["method"].get<std::string>());
    }
    std::vector<double> weights;
    if (request.contains("weights")) {
        try {
            weights = request["weights"].get<std::vector<double>>();
        } catch (const Json::exception&) {
            throw ValidationError("weights must be an array of numbers");
        }
        if (weights.size() != qs.size())
            throw ValidationError("weights must have one entry per query");
    } else if (method == Method::scalarized) {
        throw ValidationError("scalarized retrieval needs weights");
    }
    const auto result = pfm::retrieve(ds, loaded->model, qs, method, k, weights);
    Json out = query_response_json(result, ds, qs);
    out["model_id"] = loaded->entry.model_id;
    out["k"] = k;
    return out;
}

Json RetrievalService::fronts(const std::string& model_id, const std::vector<std::string>& query_ids,
                              std::size_t depth) {
    const auto loaded = model(model_id);
    const auto& ds = loaded->data.data;
    if (depth < 1)
        throw ValidationError("depth must be at least 1");
    const QuerySet qs = resolve_queries(ds, Json(query_ids));
    const auto candidates = candidate_items(ds.size(), qs);
    const auto view = explore_fronts(dissimilarities(query_scores(loaded->model, qs)), candidates, depth);
    Json out = front_view_json(view, ds, qs);
    out["model_id"] = model_id;
    return out;
}

Json RetrievalService::item(const std::string& item_id, const std::optional<std::string>& model_id) {
    std::vector<std::string> ids;
    if (model_id) {
        ids.push_back(*model_id);
    } else {
        for (const auto& e : registry_.entries())
            ids.push_back(e.model_id);
    }
    for (const auto& id : ids) {
        const auto loaded = model(id);
        const auto& ds = loaded->data.data;
        const auto idx = ds.index_of(item_id);
        if (!idx)
            continue;
        Json out{{"item_id", item_id}, {"model_id", id}, {"index", *idx}};
        if (loaded->data.labels) {
            const auto& labels = *loaded->data.labels;
            Json names = Json::array();
            const auto row = labels.row(*idx);
            for (std::size_t c = 0; c < labels.classes(); ++c) {
                if (row[c])
                    names.push_back(labels.class_names()[c]);
            }
            out["labels"] = std::move(names);
        }
        if (loaded->metadata.is_object() && loaded->metadata.contains(item_id)) {
            const auto& meta = loaded->metadata[item_id];
            out["metadata"] = meta;
            if (meta.is_object() && meta.contains("thumbnail"))
                out["thumbnail"] = meta["thumbnail"];
        }
        return out;
    }
    throw NotFoundError("unknown item '" + item_id + "'");
}

namespace {

template <typename Handler>
void respond(httplib::Response& res, Handler&& handler, int ok_status = 200) {
    const auto start = std::chrono::steady_clock::now();
    try {
        Json body = handler();
        res.status = ok_status;
        res.set_content(body.dump(), "application/json");
    } catch (const Error& e) {
        res.status = http_status_for(e.code());
        res.set_content(error_body(e.code(), e.what()).dump(), "application/json");
    } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_body("internal_error", e.what()).dump(), "application/json");
    }
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    res.set_header("X-Elapsed-Ms", std::to_string(elapsed.count()));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty())
            out.push_back(tok);
    return out;
}

} // namespace

void install_routes(httplib::Server& server, RetrievalService& service) {
    server.Post("/models", [&service](const httplib::Request& req, httplib::Response& res) {
        respond(
            res,
            [&] {
                const Json body = parse_json(req.body, "request body");
                if (!body.is_object())
                    throw Error("bad_request", "request body must be a JSON object");
                BuildRequest br;
                if (!body.contains("dataset_path") || !body["dataset_path"].is_string())
                    throw ValidationError("dataset_path is required");
                br.dataset_path = body["dataset_path"].get<std::string>();
                br.config = config_from_json(body.value("config", Json::object()));
                if (body.contains("seed")) {
                    if (!body["seed"].is_number_unsigned())
                        throw ValidationError("seed must be a non-negative integer");
                    br.seed = body["seed"].get<std::uint64_t>();
                }
                if (body.contains("model_id")) {
                    if (!body["model_id"].is_string())
                        throw ValidationError("model_id must be a string");
                    br.model_id = body["model_id"].get<std::string>();
                }
                if (body.contains("metadata_path")) {
                    if (!body["metadata_path"].is_string())
                        throw ValidationError("metadata_path must be a string");
                    br.metadata_path = body["metadata_path"].get<std::string>();
                }
                const auto entry = service.build_model(br);
                return Json{{"model_id", entry.model_id},
                            {"dataset_fingerprint", entry.dataset_fingerprint},
                            {"seed", entry.seed},
                            {"config", config_to_json(entry.config)}};
            },
            201);
    });

    server.Get("/models", [&service](const httplib::Request&, httplib::Response& res) {
        respond(res, [&] {
            Json models = Json::array();
            for (const auto& e : service.registry().entries())
                models.push_back(Json{{"model_id", e.model_id},
                                      {"dataset_fingerprint", e.dataset_fingerprint},
                                      {"seed", e.seed},
                                      {"config", config_to_json(e.config)}});
            return Json{{"models", std::move(models)}};
        });
    });

    server.Post("/retrieve", [&service](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] { return service.retrieve(parse_json(req.body, "request body")); });
    });

    server.Get(R"(/fronts/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] {
            const std::string model_id = req.matches[1];
            const auto queries = split_list(req.get_param_value("queries"));
            if (queries.empty())
                throw ValidationError("queries parameter is required");
            std::size_t depth = 1;
            if (req.has_param("depth")) {
                const auto raw = req.get_param_value("depth");
                try {
                    std::size_t used = 0;
                    const long long v = std::stoll(raw, &used);
                    if (used != raw.size() || v < 1)
                        throw ValidationError("");
                    depth = static_cast<std::size_t>(v);
                } catch (const std::exception&) {
                    throw ValidationError("depth must be a positive integer");
                }
            }
            return service.fronts(model_id, queries, depth);
        });
    });

    server.Get(R"(/items/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        respond(res, [&] {
            std::optional<std::string> model_id;
            if (req.has_param("model"))
                model_id = req.get_param_value("model");
            return service.item(req.matches[1], model_id);
        });
    });
}

} // namespace pfm
