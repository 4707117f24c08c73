#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rca::retrieval {

using Vector = std::vector<double>;

class RetrievalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public RetrievalError {
public:
    using RetrievalError::RetrievalError;
};

/// Maps text to a fixed-length vector. Implementations must be deterministic
/// per instance and safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual Vector embed(const std::string &text) const = 0;

    std::string fingerprint() const { return name() + ":" + std::to_string(dimension()); }
};

/// Hashed character-trigram frequencies, L2-normalized. Offline and reproducible.
class TrigramEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit TrigramEmbeddingProvider(std::size_t dimension = 256);

    std::string name() const override { return "trigram"; }
    std::size_t dimension() const override { return dimension_; }
    Vector embed(const std::string &text) const override;

private:
    std::size_t dimension_;
};

/// External embedding service: POST `{"texts": [str]}` -> `{"vectors": [[float]]}`.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string url, std::string name, std::size_t dimension,
                          double timeout_seconds = 30.0);

    std::string name() const override { return name_; }
    std::size_t dimension() const override { return dimension_; }
    Vector embed(const std::string &text) const override;
    std::vector<Vector> embed_batch(const std::vector<std::string> &texts) const;

private:
    std::string url_;
    std::string name_;
    std::size_t dimension_;
    double timeout_seconds_;
};

/// Lowercased character trigrams of `text` with one space of padding on each side.
std::vector<std::string> char_trigrams(std::string_view text);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(std::string_view bytes);

/// dot(u, v) / (|u| |v|). Throws DimensionMismatch or RetrievalError (zero norm).
double cosine(std::span<const double> u, std::span<const double> v);

struct IncidentRecord {
    std::string id;
    std::string diagnostic_text;
    Vector embedding;
    std::string gold_diagnosis;
    std::vector<std::string> gold_action_steps;
    std::map<std::string, std::string> metadata;  // topology_id, scenario
};

struct IncidentInput {
    std::optional<std::string> id;  // generated when absent
    std::string diagnostic_text;
    std::string gold_diagnosis;
    std::vector<std::string> gold_action_steps;
    std::map<std::string, std::string> metadata;
};

struct RetrievalHit {
    std::string record_id;
    double similarity = 0.0;
};

struct RetrievalResult {
    std::vector<RetrievalHit> hits;  // descending similarity, ties by ascending id
    std::size_t n = 0;
};

/// Exact cosine index over past incidents. Single writer, many readers.
class VectorIndex {
public:
    VectorIndex(std::string provider_name, std::size_t dimension);
    explicit VectorIndex(const EmbeddingProvider &provider)
        : VectorIndex(provider.name(), provider.dimension()) {}

    VectorIndex(const VectorIndex &other);
    VectorIndex &operator=(const VectorIndex &other);

    const std::string &provider_name() const { return provider_name_; }
    std::size_t dimension() const { return dimension_; }
    std::string provider_fingerprint() const { return provider_name_ + ":" + std::to_string(dimension_); }

    std::size_t size() const;
    std::vector<IncidentRecord> records() const;
    std::optional<IncidentRecord> find(const std::string &id) const;

    /// Embeds `input.diagnostic_text` and appends the record; returns its id.
    std::string add(const IncidentInput &input, const EmbeddingProvider &provider);

    RetrievalResult query(const std::string &diagnostic_text, std::size_t n,
                          const EmbeddingProvider &provider) const;

    std::string to_json() const;
    static VectorIndex from_json(std::string_view raw);

    void save(const std::filesystem::path &path) const;
    static VectorIndex load(const std::filesystem::path &path);

private:
    void check_provider(const EmbeddingProvider &provider) const;

    std::string provider_name_;
    std::size_t dimension_;
    std::vector<IncidentRecord> records_;
    mutable std::shared_mutex mutex_;
};

}  // namespace rca::retrieval
