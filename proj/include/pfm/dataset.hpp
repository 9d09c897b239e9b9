#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pfm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n items with m-dimensional feature vectors. Immutable once constructed;
/// the constructor enforces unique ids, m >= 1, n >= 1 and finite entries.
class FeatureDataset {
public:
    FeatureDataset(std::vector<std::string> ids, RowMatrix features);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::string& id(std::size_t i) const { return ids_.at(i); }
    const RowMatrix& features() const noexcept { return features_; }
    std::span<const double> row(std::size_t i) const;

    std::optional<std::size_t> index_of(const std::string& id) const;

private:
    std::vector<std::string> ids_;
    RowMatrix features_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// n x C binary class membership.
class LabelMatrix {
public:
    LabelMatrix(std::size_t rows, std::size_t classes, std::vector<std::uint8_t> bits,
                std::vector<std::string> class_names = {});

    std::size_t rows() const noexcept { return rows_; }
    std::size_t classes() const noexcept { return classes_; }
    std::span<const std::uint8_t> row(std::size_t i) const;
    const std::vector<std::string>& class_names() const noexcept { return names_; }

private:
    std::size_t rows_;
    std::size_t classes_;
    std::vector<std::uint8_t> bits_;
    std::vector<std::string> names_;
};

struct LabeledDataset {
    FeatureDataset data;
    std::optional<LabelMatrix> labels;
};

/// In-sample queries: distinct item indices.
struct QuerySet {
    std::vector<std::size_t> items;

    std::size_t size() const noexcept { return items.size(); }
};

struct RetrievalConfig {
    double alpha = 0.99;           // EMR trade-off, alpha = 1 / (1 + mu)
    std::size_t anchor_count = 64;
    std::size_t nearest_anchors = 5;
    double sigma = 1.0;            // classic MR kernel bandwidth
    std::size_t k_return = 20;
    std::size_t kmeans_iterations = 50;

    /// Throws ValidationError when a field is out of range for a dataset of n items.
    void validate(std::size_t n) const;
};

enum class DatasetFormat { csv, binary };

DatasetFormat parse_format(const std::string& name);
DatasetFormat format_from_extension(const std::filesystem::path& path);

/// CSV: header row; column 1 item id; feature columns; optional trailing
/// `label_<name>` columns holding 0/1.
LabeledDataset load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const FeatureDataset& ds,
              const LabelMatrix* labels = nullptr);

/// Little-endian binary container, bit-exact for features.
LabeledDataset load_binary(const std::filesystem::path& path);
void save_binary(const std::filesystem::path& path, const FeatureDataset& ds,
                 const LabelMatrix* labels = nullptr);

LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
LabeledDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, DatasetFormat format, const FeatureDataset& ds,
                  const LabelMatrix* labels = nullptr);

void validate_query_set(const QuerySet& qs, const FeatureDataset& ds);

enum class Normalization { none, zscore, minmax };

Normalization parse_normalization(const std::string& name);

/// Explicit preprocessing step; loading never rescales features on its own.
FeatureDataset normalize_features(const FeatureDataset& ds, Normalization how);

std::string sha256_hex(std::string_view bytes);

/// Hex SHA-256 of the file's bytes.
std::string file_fingerprint(const std::filesystem::path& path);

} // namespace pfm
