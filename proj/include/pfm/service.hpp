#pragma once

#include "pfm/dataset.hpp"
#include "pfm/emr.hpp"
#include "pfm/serialize.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace pfm {

struct RegistryEntry {
    std::string model_id;
    std::string dataset_path;
    std::string dataset_fingerprint;
    std::string model_path;  // relative to the data directory unless absolute
    std::string metadata_path;  // optional per-item metadata JSON
    RetrievalConfig config;
    std::uint64_t seed = 0;
};

Json registry_entry_json(const RegistryEntry& e);
RegistryEntry registry_entry_from_json(const Json& j);

/// model_id -> entry, persisted as registry.json in the data directory.
class ModelRegistry {
public:
    explicit ModelRegistry(std::filesystem::path data_dir);

    const std::filesystem::path& data_dir() const noexcept { return dir_; }
    std::filesystem::path registry_path() const { return dir_ / "registry.json"; }
    std::filesystem::path resolve(const std::string& path) const;

    std::optional<RegistryEntry> find(const std::string& model_id) const;
    std::vector<RegistryEntry> entries() const;
    void put(const RegistryEntry& entry);

private:
    std::map<std::string, RegistryEntry> read() const;
    void write(const std::map<std::string, RegistryEntry>& entries) const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// $PFM_DATA_DIR, or the working directory when unset.
std::filesystem::path default_data_dir();

/// Stable id derived from the dataset fingerprint, configuration and seed.
std::string derive_model_id(const std::string& fingerprint, const RetrievalConfig& cfg, std::uint64_t seed);

struct LoadedModel {
    RegistryEntry entry;
    LabeledDataset data;
    EmrModel model;
    Json metadata;  // item_id -> object, or null
};

struct BuildRequest {
    std::string dataset_path;
    RetrievalConfig config;
    std::uint64_t seed = 0;
    std::optional<std::string> model_id;
    std::string metadata_path;
};

/// Registry-backed retrieval. Loaded models are immutable and shared between
/// requests; builds for the same model_id are serialized.
class RetrievalService {
public:
    explicit RetrievalService(std::filesystem::path data_dir);

    ModelRegistry& registry() noexcept { return registry_; }

    /// Builds, persists and registers a model; returns the registry entry.
    RegistryEntry build_model(const BuildRequest& request);

    /// Throws NotFoundError for an unknown id and IntegrityError
    /// ("fingerprint_mismatch") when the dataset file no longer matches.
    std::shared_ptr<const LoadedModel> model(const std::string& model_id);

    Json retrieve(const Json& request);
    Json fronts(const std::string& model_id, const std::vector<std::string>& query_ids, std::size_t depth);
    Json item(const std::string& item_id, const std::optional<std::string>& model_id);

private:
    struct CacheSlot {
        std::shared_ptr<const LoadedModel> loaded;
        std::filesystem::file_time_type dataset_mtime;
        std::uintmax_t dataset_size = 0;
    };

    std::shared_ptr<const LoadedModel> load(const RegistryEntry& entry);
    std::mutex& build_mutex(const std::string& model_id);

    ModelRegistry registry_;
    std::shared_mutex cache_mutex_;
    std::map<std::string, CacheSlot> cache_;
    std::mutex build_mutexes_guard_;
    std::map<std::string, std::unique_ptr<std::mutex>> build_mutexes_;
};

/// Resolves query ids (strings are item ids, integers are item indices).
QuerySet resolve_queries(const FeatureDataset& ds, const Json& query_ids);

/// HTTP status for an engine error code.
int http_status_for(const std::string& code);

void install_routes(httplib::Server& server, RetrievalService& service);

} // namespace pfm
