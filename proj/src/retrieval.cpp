#include "rca/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <mutex>

#include <json.hpp>

#include "http_client.hpp"
#include "rca/topology.hpp"

namespace rca::retrieval {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> char_trigrams(std::string_view text) {
    std::string norm = " ";
    bool in_space = true;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!in_space) norm.push_back(' ');
            in_space = true;
        } else {
            norm.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    if (!in_space) norm.push_back(' ');

    std::vector<std::string> grams;
    if (norm.size() < 3) return grams;
    grams.reserve(norm.size() - 2);
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) grams.push_back(norm.substr(i, 3));
    return grams;
}

TrigramEmbeddingProvider::TrigramEmbeddingProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

Vector TrigramEmbeddingProvider::embed(const std::string &text) const {
    Vector v(dimension_, 0.0);
    for (const auto &gram : char_trigrams(text)) v[fnv1a(gram) % dimension_] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double &x : v) x /= norm;
    }
    return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::string name, std::size_t dimension,
                                             double timeout_seconds)
    : url_(std::move(url)), name_(std::move(name)), dimension_(dimension), timeout_seconds_(timeout_seconds) {
    if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
    detail::split_url(url_);
}

Vector HttpEmbeddingProvider::embed(const std::string &text) const { return embed_batch({text}).front(); }

std::vector<Vector> HttpEmbeddingProvider::embed_batch(const std::vector<std::string> &texts) const {
    json response;
    try {
        response = detail::post_json(url_, {{"texts", texts}}, timeout_seconds_);
    } catch (const std::exception &e) {
        throw RetrievalError(std::string("embedding service: ") + e.what());
    }
    const auto it = response.find("vectors");
    if (it == response.end() || !it->is_array() || it->size() != texts.size())
        throw RetrievalError("embedding service: response lacks one vector per text");
    std::vector<Vector> out;
    for (const auto &row : *it) {
        if (!row.is_array()) throw RetrievalError("embedding service: vector is not an array");
        Vector v;
        for (const auto &x : row) {
            if (!x.is_number()) throw RetrievalError("embedding service: non-numeric component");
            v.push_back(x.get<double>());
            if (!std::isfinite(v.back())) throw RetrievalError("embedding service: non-finite component");
        }
        if (v.size() != dimension_)
            throw DimensionMismatch("embedding service returned " + std::to_string(v.size()) +
                                    " components, expected " + std::to_string(dimension_));
        out.push_back(std::move(v));
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DimensionMismatch("cosine: dimensions " + std::to_string(u.size()) + " and " +
                                std::to_string(v.size()) + " differ");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (!(nu > 0.0) || !(nv > 0.0)) throw RetrievalError("cosine: zero-norm vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

VectorIndex::VectorIndex(std::string provider_name, std::size_t dimension)
    : provider_name_(std::move(provider_name)), dimension_(dimension) {
    if (dimension_ == 0) throw std::invalid_argument("index dimension must be positive");
}

VectorIndex::VectorIndex(const VectorIndex &other) {
    std::shared_lock lock(other.mutex_);
    provider_name_ = other.provider_name_;
    dimension_ = other.dimension_;
    records_ = other.records_;
}

VectorIndex &VectorIndex::operator=(const VectorIndex &other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_);
    std::shared_lock other_lock(other.mutex_);
    provider_name_ = other.provider_name_;
    dimension_ = other.dimension_;
    records_ = other.records_;
    return *this;
}

std::size_t VectorIndex::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

std::vector<IncidentRecord> VectorIndex::records() const {
    std::shared_lock lock(mutex_);
    return records_;
}

std::optional<IncidentRecord> VectorIndex::find(const std::string &id) const {
    std::shared_lock lock(mutex_);
    for (const auto &r : records_)
        if (r.id == id) return r;
    return std::nullopt;
}

void VectorIndex::check_provider(const EmbeddingProvider &provider) const {
    if (provider.dimension() != dimension_)
        throw DimensionMismatch("provider " + provider.fingerprint() + " does not match index dimension " +
                                std::to_string(dimension_));
    if (provider.fingerprint() != provider_fingerprint())
        throw RetrievalError("provider fingerprint " + provider.fingerprint() + " does not match index " +
                             provider_fingerprint());
}

std::string VectorIndex::add(const IncidentInput &input, const EmbeddingProvider &provider) {
    check_provider(provider);
    if (input.diagnostic_text.empty()) throw RetrievalError("diagnostic text must not be empty");
    if (input.gold_diagnosis.empty()) throw RetrievalError("gold diagnosis must not be empty");

    auto embedding = provider.embed(input.diagnostic_text);
    if (embedding.size() != dimension_)
        throw DimensionMismatch("provider produced " + std::to_string(embedding.size()) +
                                " components, index expects " + std::to_string(dimension_));

    std::unique_lock lock(mutex_);
    auto taken = [&](const std::string &id) {
        return std::any_of(records_.begin(), records_.end(), [&](const auto &r) { return r.id == id; });
    };
    std::string id;
    if (input.id) {
        id = *input.id;
        if (id.empty()) throw RetrievalError("record id must not be empty");
        if (taken(id)) throw RetrievalError("duplicate record id '" + id + "'");
    } else {
        for (std::size_t seq = records_.size() + 1;; ++seq) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "incident-%04zu", seq);
            if (!taken(buf)) {
                id = buf;
                break;
            }
        }
    }
    records_.push_back({id, input.diagnostic_text, std::move(embedding), input.gold_diagnosis,
                        input.gold_action_steps, input.metadata});
    return id;
}

RetrievalResult VectorIndex::query(const std::string &diagnostic_text, std::size_t n,
                                   const EmbeddingProvider &provider) const {
    if (n == 0) throw std::invalid_argument("query count must be positive");
    check_provider(provider);
    const auto probe = provider.embed(diagnostic_text);

    std::shared_lock lock(mutex_);
    if (records_.empty()) throw RetrievalError("query against an empty index");
    RetrievalResult result;
    result.n = n;
    result.hits.reserve(records_.size());
    for (const auto &r : records_) result.hits.push_back({r.id, cosine(probe, r.embedding)});
    lock.unlock();

    std::sort(result.hits.begin(), result.hits.end(), [](const RetrievalHit &a, const RetrievalHit &b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.record_id < b.record_id;
    });
    if (result.hits.size() > n) result.hits.resize(n);
    return result;
}

std::string VectorIndex::to_json() const {
    std::shared_lock lock(mutex_);
    json records = json::array();
    for (const auto &r : records_) {
        records.push_back({{"id", r.id},
                           {"diagnostic_text", r.diagnostic_text},
                           {"embedding", r.embedding},
                           {"gold_diagnosis", r.gold_diagnosis},
                           {"gold_action_steps", r.gold_action_steps},
                           {"metadata", r.metadata}});
    }
    json j = {{"provider", provider_name_}, {"dimension", dimension_}, {"records", std::move(records)}};
    return j.dump(2) + "\n";
}

VectorIndex VectorIndex::from_json(std::string_view raw) {
    try {
        const auto j = json::parse(raw.begin(), raw.end());
        VectorIndex idx(j.at("provider").get<std::string>(), j.at("dimension").get<std::size_t>());
        for (const auto &r : j.at("records")) {
            IncidentRecord rec;
            rec.id = r.at("id").get<std::string>();
            rec.diagnostic_text = r.at("diagnostic_text").get<std::string>();
            rec.embedding = r.at("embedding").get<Vector>();
            rec.gold_diagnosis = r.at("gold_diagnosis").get<std::string>();
            rec.gold_action_steps = r.at("gold_action_steps").get<std::vector<std::string>>();
            if (auto it = r.find("metadata"); it != r.end())
                rec.metadata = it->get<std::map<std::string, std::string>>();
            if (rec.embedding.size() != idx.dimension_)
                throw DimensionMismatch("record '" + rec.id + "' has embedding of length " +
                                        std::to_string(rec.embedding.size()));
            for (const auto &existing : idx.records_)
                if (existing.id == rec.id) throw RetrievalError("duplicate record id '" + rec.id + "'");
            idx.records_.push_back(std::move(rec));
        }
        return idx;
    } catch (const json::exception &e) {
        throw RetrievalError(std::string("invalid corpus file: ") + e.what());
    }
}

void VectorIndex::save(const std::filesystem::path &path) const { topology::write_file(path, to_json()); }

VectorIndex VectorIndex::load(const std::filesystem::path &path) {
    return from_json(topology::read_file(path));
}

}  // namespace rca::retrieval
