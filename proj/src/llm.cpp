#include "rca/llm.hpp"

#include <cstdlib>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "http_client.hpp"
#include "rca/topology.hpp"

namespace rca::llm {

using nlohmann::json;

std::shared_ptr<StubBackend> StubBackend::echo() {
    return std::shared_ptr<StubBackend>(
        new StubBackend("echo", [](const std::string &prompt, const GenerationParams &) { return prompt; }));
}

std::shared_ptr<StubBackend> StubBackend::fixed(std::string text) {
    return std::shared_ptr<StubBackend>(new StubBackend(
        "fixed", [text = std::move(text)](const std::string &, const GenerationParams &) { return text; }));
}

std::shared_ptr<StubBackend> StubBackend::custom(std::string name, Responder responder) {
    return std::shared_ptr<StubBackend>(new StubBackend(std::move(name), std::move(responder)));
}

std::string StubBackend::generate(const std::string &prompt, const GenerationParams &params) const {
    return responder_(prompt, params);
}

HttpBackend::HttpBackend(std::string url, std::string api_key) : url_(std::move(url)), api_key_(std::move(api_key)) {
    try {
        detail::split_url(url_);
    } catch (const std::invalid_argument &e) {
        throw BackendError(e.what());
    }
}

std::shared_ptr<HttpBackend> HttpBackend::from_environment() {
    const char *url = std::getenv("RCA_LLM_URL");
    if (!url || !*url) throw BackendError("RCA_LLM_URL is not set");
    const char *key = std::getenv("RCA_LLM_API_KEY");
    return std::make_shared<HttpBackend>(url, key ? key : "");
}

std::string HttpBackend::generate(const std::string &prompt, const GenerationParams &params) const {
    json body = {{"prompt", prompt}, {"temperature", params.temperature}, {"max_tokens", params.max_output_tokens}};
    std::vector<std::pair<std::string, std::string>> headers;
    if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
    json response;
    try {
        response = detail::post_json(url_, body, params.timeout_seconds, headers);
    } catch (const std::exception &e) {
        throw BackendError(std::string("LLM backend: ") + e.what());
    }
    auto it = response.find("text");
    if (it == response.end() || !it->is_string()) throw BackendError("LLM backend: response lacks a \"text\" string");
    return it->get<std::string>();
}

std::string cassette_key(const std::string &prompt, unsigned sample) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw BackendError("SHA-256 digest failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    if (sample > 0) hex << ":" << std::dec << sample;
    return hex.str();
}

ReplayBackend::ReplayBackend(Mode mode, std::filesystem::path path, std::shared_ptr<LlmBackend> inner)
    : mode_(mode), path_(std::move(path)), inner_(std::move(inner)) {
    if (mode_ == Mode::Record && !inner_) throw BackendError("record mode needs an inner backend");
    if (!std::filesystem::exists(path_)) {
        if (mode_ == Mode::Replay) throw BackendError("cassette not found: " + path_.string());
        return;
    }
    try {
        cassette_ = json::parse(topology::read_file(path_)).get<std::map<std::string, std::string>>();
    } catch (const json::exception &e) {
        throw BackendError("invalid cassette " + path_.string() + ": " + e.what());
    }
}

std::shared_ptr<ReplayBackend> ReplayBackend::replay(const std::filesystem::path &cassette) {
    return std::shared_ptr<ReplayBackend>(new ReplayBackend(Mode::Replay, cassette, nullptr));
}

std::shared_ptr<ReplayBackend> ReplayBackend::record(const std::filesystem::path &cassette,
                                                     std::shared_ptr<LlmBackend> inner) {
    return std::shared_ptr<ReplayBackend>(new ReplayBackend(Mode::Record, cassette, std::move(inner)));
}

std::string ReplayBackend::generate(const std::string &prompt, const GenerationParams &params) const {
    const auto key = cassette_key(prompt, params.sample);
    {
        std::scoped_lock lock(mutex_);
        if (auto it = cassette_.find(key); it != cassette_.end()) return it->second;
    }
    if (mode_ == Mode::Replay) throw BackendError("cassette " + path_.string() + " has no response for prompt " + key);
    auto text = inner_->generate(prompt, params);
    std::scoped_lock lock(mutex_);
    cassette_.emplace(key, text);
    return text;
}

void ReplayBackend::save() const {
    std::scoped_lock lock(mutex_);
    topology::write_file(path_, json(cassette_).dump(2) + "\n");
}

std::size_t ReplayBackend::size() const {
    std::scoped_lock lock(mutex_);
    return cassette_.size();
}

}  // namespace rca::llm
