#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace rca::llm {

struct GenerationParams {
    double temperature = 0.7;
    int max_output_tokens = 1024;
    double timeout_seconds = 60.0;
    // Distinguishes repeated samples of one prompt (mixture-of-agents drafts).
    // Used for cassette keys only; not sent over the wire.
    unsigned sample = 0;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text generation endpoint. Implementations must be safe for concurrent calls
/// and must return or throw BackendError within `timeout_seconds`.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string name() const = 0;
    virtual std::string generate(const std::string &prompt, const GenerationParams &params) const = 0;
};

/// Deterministic offline backend.
class StubBackend final : public LlmBackend {
public:
    using Responder = std::function<std::string(const std::string &prompt, const GenerationParams &)>;

    /// Returns the prompt unchanged.
    static std::shared_ptr<StubBackend> echo();
    /// Returns `text` for every call.
    static std::shared_ptr<StubBackend> fixed(std::string text);
    static std::shared_ptr<StubBackend> custom(std::string name, Responder responder);

    std::string name() const override { return name_; }
    std::string generate(const std::string &prompt, const GenerationParams &params) const override;

private:
    StubBackend(std::string name, Responder responder)
        : name_(std::move(name)), responder_(std::move(responder)) {}

    std::string name_;
    Responder responder_;
};

/// HTTP JSON backend: POST `{"prompt", "temperature", "max_tokens"}` -> `{"text"}`.
class HttpBackend final : public LlmBackend {
public:
    HttpBackend(std::string url, std::string api_key);
    /// Reads RCA_LLM_URL and RCA_LLM_API_KEY. Throws BackendError if the URL is unset.
    static std::shared_ptr<HttpBackend> from_environment();

    std::string name() const override { return "http"; }
    std::string generate(const std::string &prompt, const GenerationParams &params) const override;

private:
    std::string url_;
    std::string api_key_;
};

/// SHA-256 of the prompt, hex encoded, with ":<sample>" appended for sample > 0.
std::string cassette_key(const std::string &prompt, unsigned sample);

/// Record/replay backend persisting prompt-hash -> response pairs.
///
/// Replay mode answers only from the cassette and throws BackendError on a
/// miss. Record mode forwards misses to the inner backend and stores the answer.
class ReplayBackend final : public LlmBackend {
public:
    enum class Mode { Replay, Record };

    static std::shared_ptr<ReplayBackend> replay(const std::filesystem::path &cassette);
    static std::shared_ptr<ReplayBackend> record(const std::filesystem::path &cassette,
                                                 std::shared_ptr<LlmBackend> inner);

    std::string name() const override { return mode_ == Mode::Replay ? "replay" : "record"; }
    std::string generate(const std::string &prompt, const GenerationParams &params) const override;

    /// Writes the cassette (sorted keys). Record mode only changes the file here.
    void save() const;
    std::size_t size() const;

private:
    ReplayBackend(Mode mode, std::filesystem::path path, std::shared_ptr<LlmBackend> inner);

    Mode mode_;
    std::filesystem::path path_;
    std::shared_ptr<LlmBackend> inner_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::string> cassette_;
};

}  // namespace rca::llm
