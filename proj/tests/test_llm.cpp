#include <doctest.h>

#include <atomic>
#include <chrono>
#include <json.hpp>
#include <thread>

#include "helpers.hpp"
#include "mock_server.hpp"
#include "rca/llm.hpp"

using namespace rca::llm;
using nlohmann::json;
using testutil::TempDir;

TEST_CASE("stubs") {
    GenerationParams p;
    CHECK(StubBackend::echo()->generate("hello", p) == "hello");
    CHECK(StubBackend::fixed("same")->generate("a", p) == "same");
    CHECK(StubBackend::fixed("same")->generate("b", p) == "same");
    auto custom = StubBackend::custom("temp", [](const std::string &, const GenerationParams &g) {
        return std::to_string(g.sample);
    });
    p.sample = 2;
    CHECK(custom->name() == "temp");
    CHECK(custom->generate("x", p) == "2");
}

TEST_CASE("cassette keys are sha256 hex with a sample suffix") {
    CHECK(cassette_key("abc", 0) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(cassette_key("", 0) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(cassette_key("abc", 1) == cassette_key("abc", 0) + ":1");
    CHECK(cassette_key("abc", 12).substr(64) == ":12");
}

TEST_CASE("record then replay") {
    TempDir dir;
    const auto path = dir / "cassette.json";
    CHECK_THROWS_AS(ReplayBackend::replay(path), BackendError);

    std::atomic<int> calls{0};
    auto inner = StubBackend::custom("count", [&](const std::string &prompt, const GenerationParams &g) {
        ++calls;
        return prompt + "#" + std::to_string(g.sample);
    });
    auto rec = ReplayBackend::record(path, inner);
    GenerationParams p;
    CHECK(rec->generate("one", p) == "one#0");
    CHECK(rec->generate("one", p) == "one#0");
    CHECK(calls == 1);
    p.sample = 1;
    CHECK(rec->generate("one", p) == "one#1");
    CHECK(rec->size() == 2);
    CHECK_FALSE(std::filesystem::exists(path));
    rec->save();

    auto rep = ReplayBackend::replay(path);
    CHECK(rep->size() == 2);
    CHECK(rep->generate("one", p) == "one#1");
    p.sample = 0;
    CHECK(rep->generate("one", p) == "one#0");
    CHECK_THROWS_AS(rep->generate("two", p), BackendError);
    CHECK(calls == 2);

    const auto j = json::parse(rca::topology::read_file(path));
    CHECK(j.contains(cassette_key("one", 0)));
    CHECK(j.contains(cassette_key("one", 1)));

    rca::topology::write_file(dir / "bad.json", "[1,2");
    CHECK_THROWS_AS(ReplayBackend::replay(dir / "bad.json"), BackendError);
}

TEST_CASE("http backend contract") {
    testutil::MockServer mock;
    std::string seen_auth;
    json seen_body;
    mock.server.Post("/v1/generate", [&](const httplib::Request &req, httplib::Response &res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = json::parse(req.body);
        res.set_content(json{{"text", "answer to " + seen_body["prompt"].get<std::string>()}}.dump(),
                        "application/json");
    });
    mock.server.Post("/notext", [](const httplib::Request &, httplib::Response &res) {
        res.set_content(R"({"output": "x"})", "application/json");
    });
    mock.server.Post("/fail", [](const httplib::Request &, httplib::Response &res) {
        res.status = 503;
        res.set_content("busy", "text/plain");
    });
    mock.server.Post("/slow", [](const httplib::Request &, httplib::Response &res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        res.set_content(R"({"text": "late"})", "application/json");
    });
    mock.start();

    GenerationParams p;
    p.temperature = 0.25;
    p.max_output_tokens = 77;
    HttpBackend http(mock.url("/v1/generate"), "sekret");
    CHECK(http.generate("hi", p) == "answer to hi");
    CHECK(seen_auth == "Bearer sekret");
    CHECK(seen_body["temperature"].get<double>() == 0.25);
    CHECK(seen_body["max_tokens"].get<int>() == 77);
    CHECK_FALSE(seen_body.contains("sample"));

    HttpBackend anonymous(mock.url("/v1/generate"), "");
    anonymous.generate("x", p);
    CHECK(seen_auth.empty());

    CHECK_THROWS_AS(HttpBackend(mock.url("/notext"), "").generate("x", p), BackendError);
    CHECK_THROWS_AS(HttpBackend(mock.url("/fail"), "").generate("x", p), BackendError);
    p.timeout_seconds = 0.5;
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(HttpBackend(mock.url("/slow"), "").generate("x", p), BackendError);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));

    mock.stop();
    p.timeout_seconds = 2;
    CHECK_THROWS_AS(http.generate("hi", p), BackendError);
    CHECK_THROWS_AS(HttpBackend("not a url", ""), BackendError);
}
