#include "pfm/dataset.hpp"

#include "pfm/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <unordered_set>

namespace pfm {

FeatureDataset::FeatureDataset(std::vector<std::string> ids, RowMatrix features)
    : ids_(std::move(ids)), features_(std::move(features)) {
    if (ids_.empty())
        throw IntegrityError("dataset must contain at least one item");
    if (static_cast<std::size_t>(features_.rows()) != ids_.size())
        throw IntegrityError("feature row count does not match id count");
    if (features_.cols() < 1)
        throw IntegrityError("feature dimension must be at least 1");
    if (!features_.allFinite())
        throw IntegrityError("feature matrix contains non-finite entries");
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second)
            throw IntegrityError("duplicate item_id '" + ids_[i] + "'");
    }
}

std::span<const double> FeatureDataset::row(std::size_t i) const {
    if (i >= size())
        throw ValidationError("item index " + std::to_string(i) + " out of range");
    return {features_.data() + i * dim(), dim()};
}

std::optional<std::size_t> FeatureDataset::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t classes, std::vector<std::uint8_t> bits,
                         std::vector<std::string> class_names)
    : rows_(rows), classes_(classes), bits_(std::move(bits)), names_(std::move(class_names)) {
    if (classes_ < 1)
        throw IntegrityError("label matrix needs at least one class");
    if (bits_.size() != rows_ * classes_)
        throw IntegrityError("label matrix size mismatch");
    if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; }))
        throw IntegrityError("label entries must be 0 or 1");
    if (names_.empty()) {
        for (std::size_t c = 0; c < classes_; ++c)
            names_.push_back("c" + std::to_string(c));
    }
    if (names_.size() != classes_)
        throw IntegrityError("class name count does not match class count");
}

std::span<const std::uint8_t> LabelMatrix::row(std::size_t i) const {
    if (i >= rows_)
        throw ValidationError("label row " + std::to_string(i) + " out of range");
    return {bits_.data() + i * classes_, classes_};
}

void RetrievalConfig::validate(std::size_t n) const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("alpha must lie strictly inside (0, 1)");
    if (anchor_count < 1 || anchor_count > n)
        throw ValidationError("anchor_count must be in [1, n=" + std::to_string(n) + "]");
    if (nearest_anchors < 1 || nearest_anchors > anchor_count)
        throw ValidationError("nearest_anchors must be in [1, anchor_count]");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ValidationError("sigma must be a positive finite number");
    if (k_return < 1)
        throw ValidationError("k_return must be positive");
}

DatasetFormat parse_format(const std::string& name) {
    if (name == "csv")
        return DatasetFormat::csv;
    if (name == "binary" || name == "bin")
        return DatasetFormat::binary;
    throw ValidationError("unknown dataset format '" + name + "'");
}

DatasetFormat format_from_extension(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::binary;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

double parse_real(std::string_view tok, std::size_t row, std::size_t col) {
    if (!tok.empty() && tok.front() == '+')
        tok.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
        throw ParseError(row, "column " + std::to_string(col) + ": '" + std::string(tok) +
                                  "' is not a number");
    if (!std::isfinite(v))
        throw ParseError(row, "column " + std::to_string(col) + ": non-finite value '" +
                                  std::string(tok) + "'");
    return v;
}

void format_real(std::string& out, double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), ptr);
}

} // namespace

LabeledDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open dataset '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line))
        throw ParseError(1, "missing header row");
    auto header = split_csv(line);
    if (header.size() < 2)
        throw ParseError(1, "header needs an id column and at least one feature column");

    std::size_t first_label = header.size();
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].starts_with("label_")) {
            first_label = c;
            break;
        }
    }
    for (std::size_t c = first_label; c < header.size(); ++c) {
        if (!header[c].starts_with("label_"))
            throw ParseError(1, "label_ columns must trail the feature columns");
    }
    const std::size_t m = first_label - 1;
    const std::size_t classes = header.size() - first_label;
    if (m < 1)
        throw ParseError(1, "no feature columns");
    std::vector<std::string> class_names;
    for (std::size_t c = first_label; c < header.size(); ++c)
        class_names.emplace_back(header[c].substr(6));

    std::vector<std::string> ids;
    std::vector<double> values;
    std::vector<std::uint8_t> bits;
    std::unordered_set<std::string> seen;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty())
            continue;
        auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError(row, "expected " + std::to_string(header.size()) + " columns, got " +
                                      std::to_string(cells.size()));
        std::string id(cells[0]);
        if (id.empty())
            throw ParseError(row, "empty item_id");
        if (!seen.insert(id).second)
            throw IntegrityError("row " + std::to_string(row) + ": duplicate item_id '" + id + "'");
        ids.push_back(std::move(id));
        for (std::size_t c = 1; c <= m; ++c)
            values.push_back(parse_real(cells[c], row, c + 1));
        for (std::size_t c = first_label; c < cells.size(); ++c) {
            double v = parse_real(cells[c], row, c + 1);
            if (v != 0.0 && v != 1.0)
                throw ParseError(row, "label column " + std::to_string(c + 1) + " must be 0 or 1");
            bits.push_back(static_cast<std::uint8_t>(v));
        }
    }
    if (ids.empty())
        throw ParseError(row, "dataset has no rows");

    const auto n = ids.size();
    RowMatrix features = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(n),
                                               static_cast<Eigen::Index>(m));
    LabeledDataset out{FeatureDataset(std::move(ids), std::move(features)), std::nullopt};
    if (classes > 0)
        out.labels.emplace(n, classes, std::move(bits), std::move(class_names));
    return out;
}

void save_csv(const std::filesystem::path& path, const FeatureDataset& ds, const LabelMatrix* labels) {
    if (labels && labels->rows() != ds.size())
        throw IntegrityError("label row count does not match dataset");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write '" + path.string() + "'");
    std::string buf = "item_id";
    for (std::size_t j = 0; j < ds.dim(); ++j)
        buf += ",f" + std::to_string(j);
    if (labels) {
        for (const auto& name : labels->class_names())
            buf += ",label_" + name;
    }
    buf += '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        buf += ds.id(i);
        for (double v : ds.row(i)) {
            buf += ',';
            format_real(buf, v);
        }
        if (labels) {
            for (auto b : labels->row(i))
                buf += b ? ",1" : ",0";
        }
        buf += '\n';
    }
    out << buf;
}

namespace {

constexpr std::array<char, 8> kDatasetMagic = {'P', 'F', 'M', 'D', 'S', 'E', 'T', '\0'};
constexpr std::uint32_t kDatasetVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class ByteReader {
public:
    explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint64_t u(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::string str(std::size_t len) {
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t k) const {
        if (pos_ + k > bytes_.size())
            throw FormatError("truncated binary dataset");
    }
    std::string bytes_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

// Layout: magic[8] version:u32 n:u64 m:u64 C:u64 features:f64[n*m]
// labels:u8[n*ceil(C/8)] (bit c%8 of byte c/8), then per item (len:u32, id bytes)
// and per class (len:u32, name bytes).
void save_binary(const std::filesystem::path& path, const FeatureDataset& ds, const LabelMatrix* labels) {
    if (labels && labels->rows() != ds.size())
        throw IntegrityError("label row count does not match dataset");
    const std::size_t classes = labels ? labels->classes() : 0;
    std::string out(kDatasetMagic.begin(), kDatasetMagic.end());
    put_u32(out, kDatasetVersion);
    put_u64(out, ds.size());
    put_u64(out, ds.dim());
    put_u64(out, classes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.row(i))
            put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    if (labels) {
        const std::size_t stride = (classes + 7) / 8;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            std::string packed(stride, '\0');
            auto r = labels->row(i);
            for (std::size_t c = 0; c < classes; ++c) {
                if (r[c])
                    packed[c / 8] = static_cast<char>(packed[c / 8] | (1 << (c % 8)));
            }
            out += packed;
        }
    }
    for (const auto& id : ds.ids()) {
        put_u32(out, static_cast<std::uint32_t>(id.size()));
        out += id;
    }
    if (labels) {
        for (const auto& name : labels->class_names()) {
            put_u32(out, static_cast<std::uint32_t>(name.size()));
            out += name;
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw FormatError("cannot write '" + path.string() + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

LabeledDataset load_binary(const std::filesystem::path& path) {
    ByteReader r(read_file(path));
    auto magic = r.str(kDatasetMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kDatasetMagic.begin()))
        throw FormatError("'" + path.string() + "' is not a binary dataset (bad magic)");
    auto version = r.u(4);
    if (version != kDatasetVersion)
        throw FormatError("unsupported dataset version " + std::to_string(version));
    const auto n = r.u(8);
    const auto m = r.u(8);
    const auto classes = r.u(8);
    if (n == 0 || m == 0 || n > (1ull << 32) || m > (1ull << 24) || classes > (1ull << 20))
        throw FormatError("implausible dataset header");
    RowMatrix features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::uint64_t i = 0; i < n * m; ++i)
        features.data()[i] = std::bit_cast<double>(r.u(8));
    std::vector<std::uint8_t> bits;
    if (classes > 0) {
        const std::size_t stride = (classes + 7) / 8;
        bits.reserve(n * classes);
        for (std::uint64_t i = 0; i < n; ++i) {
            auto packed = r.str(stride);
            for (std::size_t c = 0; c < classes; ++c)
                bits.push_back(static_cast<std::uint8_t>((packed[c / 8] >> (c % 8)) & 1));
        }
    }
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        ids.push_back(r.str(r.u(4)));
    std::vector<std::string> names;
    for (std::uint64_t c = 0; c < classes; ++c)
        names.push_back(r.str(r.u(4)));
    if (!r.done())
        throw FormatError("trailing bytes in binary dataset");
    LabeledDataset out{FeatureDataset(std::move(ids), std::move(features)), std::nullopt};
    if (classes > 0)
        out.labels.emplace(n, classes, std::move(bits), std::move(names));
    return out;
}

LabeledDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    return format == DatasetFormat::csv ? load_csv(path) : load_binary(path);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_extension(path));
}

void save_dataset(const std::filesystem::path& path, DatasetFormat format, const FeatureDataset& ds,
                  const LabelMatrix* labels) {
    if (format == DatasetFormat::csv)
        save_csv(path, ds, labels);
    else
        save_binary(path, ds, labels);
}

void validate_query_set(const QuerySet& qs, const FeatureDataset& ds) {
    if (qs.items.empty())
        throw ValidationError("query set is empty");
    std::unordered_set<std::size_t> seen;
    for (auto q : qs.items) {
        if (q >= ds.size())
            throw ValidationError("query index " + std::to_string(q) + " out of range [0, " +
                                  std::to_string(ds.size()) + ")");
        if (!seen.insert(q).second)
            throw ValidationError("duplicate query index " + std::to_string(q));
    }
}

Normalization parse_normalization(const std::string& name) {
    if (name == "none")
        return Normalization::none;
    if (name == "zscore")
        return Normalization::zscore;
    if (name == "minmax")
        return Normalization::minmax;
    throw ValidationError("unknown normalization '" + name + "'");
}

FeatureDataset normalize_features(const FeatureDataset& ds, Normalization how) {
    RowMatrix x = ds.features();
    if (how == Normalization::zscore) {
        Eigen::RowVectorXd mean = x.colwise().mean();
        x.rowwise() -= mean;
        Eigen::RowVectorXd sd =
            (x.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (sd(j) > 0.0)
                x.col(j) /= sd(j);
        }
    } else if (how == Normalization::minmax) {
        Eigen::RowVectorXd lo = x.colwise().minCoeff();
        Eigen::RowVectorXd hi = x.colwise().maxCoeff();
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double span = hi(j) - lo(j);
            x.col(j).array() -= lo(j);
            if (span > 0.0)
                x.col(j) /= span;
        }
    }
    return FeatureDataset(ds.ids(), std::move(x));
}

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
        throw Error("hash_error", "SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string file_fingerprint(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

} // namespace pfm
