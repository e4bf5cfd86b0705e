#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hedlm/llm.hpp"
#include "hedlm/mock.hpp"
#include "test_util.hpp"

using namespace hedlm;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
    const auto dir = fs::path(HEDLM_BINARY_DIR) / ("tmp_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

llm::ChatRequest simple_request(const std::string& content) {
    llm::ChatRequest req;
    req.messages.push_back({"user", content});
    return req;
}

std::string completion_body(const std::string& content) {
    nlohmann::json body = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
    return body.dump();
}

// Scripted transport: replays a fixed list of replies and counts calls.
class FakeTransport final : public llm::Transport {
public:
    explicit FakeTransport(std::vector<llm::TransportReply> replies) : replies_(std::move(replies)) {}

    llm::TransportReply post_chat(const std::string&) override {
        const std::size_t i = calls_++;
        return replies_[std::min(i, replies_.size() - 1)];
    }

    std::size_t calls() const { return calls_; }

private:
    std::vector<llm::TransportReply> replies_;
    std::atomic<std::size_t> calls_{0};
};

llm::TransportReply ok_reply(const std::string& content) {
    return {true, 200, completion_body(content), ""};
}

}  // namespace

TEST_SUITE("llm") {

TEST_CASE("parse_score handles the canonical reply") {
    const auto parsed =
        llm::parse_score("SCORE: 0.90\nREASON: 'Segment1-2 very similar in RMS, label=Fatigue "
                         "matches high RMS pattern.'");
    CHECK(parsed.score == Approx(0.90));
    CHECK(parsed.reason ==
          "'Segment1-2 very similar in RMS, label=Fatigue matches high RMS pattern.'");
    CHECK_FALSE(parsed.clamped);
}

TEST_CASE("parse_score tolerates case and bare fractions") {
    const auto parsed = llm::parse_score("score: .5");
    CHECK(parsed.score == Approx(0.5));
    CHECK(parsed.reason.empty());
}

TEST_CASE("parse_score clamps out-of-range values and flags them") {
    const auto high = llm::parse_score("SCORE: 1.7\nREASON: overshoot");
    CHECK(high.score == Approx(1.0));
    CHECK(high.clamped);
    const auto low = llm::parse_score("SCORE: -0.2");
    CHECK(low.score == Approx(0.0));
    CHECK(low.clamped);
}

TEST_CASE("parse_score rejects replies without a number") {
    CHECK_THROWS_AS(llm::parse_score("no number here"), Error);
    CHECK_THROWS_AS(llm::parse_score("SCORE: none"), Error);
    CHECK_THROWS_AS(llm::parse_score(""), Error);
}

TEST_CASE("parse_score round-trips the canonical render to 2 decimals") {
    for (int i = 0; i <= 100; ++i) {
        const double s = i / 100.0;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "SCORE: %.2f\nREASON: check", s);
        const auto parsed = llm::parse_score(buf);
        CHECK(parsed.score == Approx(s).epsilon(1e-9));
        CHECK(parsed.reason == "check");
    }
}

TEST_CASE("scoring prompt contains the contract pieces") {
    const auto labeled = testutil::patterned_fv("u1", 7, Label::Fatigue);
    const auto target = testutil::patterned_fv("u1", 3, std::nullopt, 0.05);
    const auto req = llm::build_scoring_prompt(labeled, Label::Fatigue, target,
                                               prompt::default_domain_knowledge());
    REQUIRE(req.messages.size() == 1);
    const auto& text = req.messages[0].content;
    CHECK(text.find("SCORE:") != std::string::npos);
    CHECK(text.find("Label=Fatigue") != std::string::npos);
    CHECK(text.find("[New Subject | ID=u1#3, Label=?]") != std::string::npos);
    CHECK(testutil::count_occurrences(text, "Segment1 =>") == 2);
    CHECK(testutil::count_occurrences(text, "Segment3 =>") == 2);
    CHECK(req.model == "gpt-4o-mini");
    CHECK(req.temperature == Approx(0.3));
}

TEST_CASE("scoring prompt matches the golden file") {
    const auto labeled = testutil::patterned_fv("u1", 7, Label::Fatigue);
    const auto target = testutil::patterned_fv("u1", 3, std::nullopt, 0.05);
    const auto req = llm::build_scoring_prompt(labeled, Label::Fatigue, target,
                                               prompt::default_domain_knowledge());
    const auto golden = testutil::read_file(testutil::golden_path("scoring_prompt.txt"));
    if (req.messages[0].content != golden) {
        testutil::write_file(std::string(HEDLM_BINARY_DIR) + "/scoring_prompt.actual.txt",
                             req.messages[0].content);
    }
    CHECK(req.messages[0].content == golden);
}

TEST_CASE("scoring prompt can split domain knowledge into a system message") {
    const auto labeled = testutil::patterned_fv("u1", 7, Label::NonFatigue);
    const auto target = testutil::patterned_fv("u1", 3, std::nullopt, 0.05);
    llm::PromptOptions opts;
    opts.dk_as_system_message = true;
    const auto req = llm::build_scoring_prompt(labeled, Label::NonFatigue, target,
                                               prompt::default_domain_knowledge(), opts);
    REQUIRE(req.messages.size() == 2);
    CHECK(req.messages[0].role == "system");
    CHECK(req.messages[0].content.find("#Domain Knowledge:") == 0);
    CHECK(req.messages[1].role == "user");
    CHECK(req.messages[1].content.find("#Instruction:") == 0);
    CHECK(req.messages[1].content.find("Label=Non-Fatigue") != std::string::npos);
}

TEST_CASE("canonical request JSON is stable and key-ordered") {
    auto req = simple_request("hello");
    req.model = "test-model";
    req.temperature = 0.3;
    const auto a = llm::canonical_request_json(req);
    const auto b = llm::canonical_request_json(req);
    CHECK(a == b);
    CHECK(a ==
          R"({"messages":[{"content":"hello","role":"user"}],"model":"test-model","temperature":0.3})");
}

TEST_CASE("mock score is 1.0 for identical vectors satisfying every class rule") {
    prompt::DomainKnowledge dk;
    dk.text = "synthetic";
    dk.rules = {{1, features::FeatureId::Mean, Label::Fatigue, prompt::Comparator::Greater, 0.5},
                {2, features::FeatureId::Std, Label::Fatigue, prompt::Comparator::Greater, 0.5}};
    const auto fv = testutil::patterned_fv("u", 1, Label::Fatigue);  // all values >= 1.0
    const auto result = llm::mock_score(fv, Label::Fatigue, fv, dk);
    CHECK(result.score == Approx(1.0));
    CHECK(result.source == llm::ResultSource::Mock);
}

TEST_CASE("mock score is 0.5 for identical vectors satisfying no rule") {
    prompt::DomainKnowledge dk;
    dk.rules = {{1, features::FeatureId::Mean, Label::Fatigue, prompt::Comparator::Greater, 99.0},
                {2, features::FeatureId::Std, Label::Fatigue, prompt::Comparator::Greater, 99.0}};
    const auto fv = testutil::patterned_fv("u", 1, Label::Fatigue);
    CHECK(llm::mock_score(fv, Label::Fatigue, fv, dk).score == Approx(0.5));
}

TEST_CASE("mock score stays in [0,1] on random pairs") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> dist(-100.0, 1000.0);
    const auto& dk = prompt::default_domain_knowledge();
    for (int trial = 0; trial < 1000; ++trial) {
        features::FeatureVector a, b;
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            a.values[i] = dist(rng);
            b.values[i] = dist(rng);
        }
        const double s = llm::mock_score(a, Label::Fatigue, b, dk).score;
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("mock similarity is symmetric and monotone in added differences") {
    prompt::DomainKnowledge no_rules;  // isolates the sim term
    const auto base = testutil::patterned_fv("u", 1, Label::Fatigue);

    auto other = base;
    double previous = llm::mock_score(base, Label::Fatigue, other, no_rules).score;
    CHECK(previous == Approx(0.5));  // sim = 1, synergy = 0
    for (std::size_t d = 0; d < kFeatureCount; d += 3) {
        other.values[d] += 0.5;
        const double forward = llm::mock_score(base, Label::Fatigue, other, no_rules).score;
        const double swapped = llm::mock_score(other, Label::Fatigue, base, no_rules).score;
        CHECK(forward == Approx(swapped).epsilon(1e-12));
        CHECK(forward <= previous + 1e-12);
        previous = forward;
    }
}

TEST_CASE("mock few-shot reply picks the higher scoring shot's label") {
    // Synthetic rules that make fatigue-shaped targets satisfy fatigue rules.
    prompt::DomainKnowledge dk;
    dk.rules = {{1, features::FeatureId::Mean, Label::Fatigue, prompt::Comparator::Greater, 10.0},
                {1, features::FeatureId::Mean, Label::NonFatigue, prompt::Comparator::Less, 10.0}};
    auto fat = testutil::patterned_fv("u", 1, Label::Fatigue);
    fat.values[0] = 20.0;
    auto nonfat = testutil::patterned_fv("u", 2, Label::NonFatigue);
    nonfat.values[0] = 1.0;
    auto target = nonfat;
    target.row_index = 9;

    const std::vector<llm::MockShotView> shots = {{&fat, Label::Fatigue}, {&nonfat, Label::NonFatigue}};
    CHECK(llm::mock_fewshot_reply(shots, target, dk) == "non-fatigue");

    auto fat_target = fat;
    fat_target.row_index = 10;
    CHECK(llm::mock_fewshot_reply(shots, fat_target, dk) == "fatigue");
}

TEST_CASE("response cache stores, hits, and detects corruption") {
    const auto dir = fresh_dir("cache_basic");
    {
        llm::ResponseCache cache(dir);
        CHECK_FALSE(cache.lookup("k1", "req1").has_value());
        cache.store("k1", "req1", "resp1");
        CHECK(cache.lookup("k1", "req1").value() == "resp1");
        CHECK_THROWS_AS(cache.lookup("k1", "different-request"), Error);
    }
    {
        // Reload from disk.
        llm::ResponseCache cache(dir);
        CHECK(cache.lookup("k1", "req1").value() == "resp1");
    }
    {
        std::ofstream out(dir + "/cache.jsonl", std::ios::app);
        out << "this is not json\n";
    }
    CHECK_THROWS_AS(llm::ResponseCache{dir}, Error);
}

TEST_CASE("chat client returns content and records one request") {
    auto fake = std::make_unique<FakeTransport>(std::vector{ok_reply("hi there")});
    auto* raw = fake.get();
    llm::TransportConfig cfg;
    llm::ChatClient client(cfg, std::move(fake));
    const auto result = client.complete(simple_request("ping"));
    CHECK(result.text == "hi there");
    CHECK(result.source == llm::ResultSource::Live);
    CHECK(raw->calls() == 1);
}

TEST_CASE("identical requests hit the cache with no second network call") {
    const auto dir = fresh_dir("cache_client");
    auto fake = std::make_unique<FakeTransport>(std::vector{ok_reply("cached answer")});
    auto* raw = fake.get();
    llm::TransportConfig cfg;
    cfg.cache_dir = dir;
    llm::ChatClient client(cfg, std::move(fake));

    const auto first = client.complete(simple_request("q"));
    const auto second = client.complete(simple_request("q"));
    CHECK(first.text == "cached answer");
    CHECK(second.text == "cached answer");
    CHECK(first.source == llm::ResultSource::Live);
    CHECK(second.source == llm::ResultSource::Cache);
    CHECK(raw->calls() == 1);
    CHECK(client.requests_sent() == 1);

    // A new client over the same directory replays from disk.
    auto fake2 = std::make_unique<FakeTransport>(std::vector{ok_reply("should not be needed")});
    auto* raw2 = fake2.get();
    llm::ChatClient reloaded(cfg, std::move(fake2));
    CHECK(reloaded.complete(simple_request("q")).text == "cached answer");
    CHECK(raw2->calls() == 0);
}

TEST_CASE("server errors are retried up to the limit, then surface") {
    const llm::TransportReply error500{true, 500, "boom", ""};
    auto fake = std::make_unique<FakeTransport>(std::vector{error500, error500, error500});
    auto* raw = fake.get();
    llm::TransportConfig cfg;
    cfg.max_retries = 2;
    cfg.backoff_initial_ms = 1;
    llm::ChatClient client(cfg, std::move(fake));
    CHECK_THROWS_AS(client.complete(simple_request("q")), Error);
    CHECK(raw->calls() == 3);  // initial attempt + 2 retries
}

TEST_CASE("a transient failure recovers on retry") {
    const llm::TransportReply down{false, 0, "", "connection refused"};
    auto fake = std::make_unique<FakeTransport>(std::vector{down, ok_reply("recovered")});
    llm::TransportConfig cfg;
    cfg.max_retries = 2;
    cfg.backoff_initial_ms = 1;
    llm::ChatClient client(cfg, std::move(fake));
    CHECK(client.complete(simple_request("q")).text == "recovered");
}

TEST_CASE("client errors other than 429 fail fast") {
    auto fake = std::make_unique<FakeTransport>(
        std::vector{llm::TransportReply{true, 404, "nope", ""}, ok_reply("never")});
    auto* raw = fake.get();
    llm::TransportConfig cfg;
    cfg.max_retries = 3;
    cfg.backoff_initial_ms = 1;
    llm::ChatClient client(cfg, std::move(fake));
    CHECK_THROWS_AS(client.complete(simple_request("q")), Error);
    CHECK(raw->calls() == 1);
}

TEST_CASE("invalid requests are rejected before any transport call") {
    auto fake = std::make_unique<FakeTransport>(std::vector{ok_reply("x")});
    auto* raw = fake.get();
    llm::ChatClient client(llm::TransportConfig{}, std::move(fake));
    llm::ChatRequest empty;
    CHECK_THROWS_AS(client.complete(empty), Error);
    auto hot = simple_request("q");
    hot.temperature = 3.0;
    CHECK_THROWS_AS(client.complete(hot), Error);
    CHECK(raw->calls() == 0);
}

TEST_CASE("http transport round-trips against a local endpoint") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++hits;
        if (auto it = req.headers.find("Authorization"); it != req.headers.end()) {
            seen_auth = it->second;
        }
        if (n == 1) {
            res.status = 500;
            res.set_content("transient", "text/plain");
            return;
        }
        res.set_content(completion_body("live reply"), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    llm::TransportConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    cfg.api_key = "test-key";
    cfg.max_retries = 2;
    cfg.backoff_initial_ms = 1;
    llm::ChatClient client(cfg);
    const auto result = client.complete(simple_request("hello over http"));
    CHECK(result.text == "live reply");
    CHECK(hits == 2);  // 500 then success
    CHECK(seen_auth == "Bearer test-key");

    server.stop();
    worker.join();
}

}  // TEST_SUITE
