#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "apsf/error.hpp"

namespace apsf {

enum class Tag { Worker, Architect };

const char* to_string(Tag tag);

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 8192;
    std::vector<std::string> stop;
    Tag tag = Tag::Worker;
};

struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::string backend_id;
    bool from_cache = false;
};

struct DecodingParams {
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 8192;
    std::vector<std::string> stop;
};

// Worker decodes greedily so scoring is deterministic; the architect
// samples at 0.7 for candidate diversity. All fields are overridable
// through run configuration.
DecodingParams default_params(Tag tag);

ChatRequest make_request(Tag tag, std::vector<ChatMessage> messages,
                         const DecodingParams& params);
ChatRequest make_request(Tag tag, const std::string& user_content,
                         const DecodingParams& params);

// Whitespace-separated chunk count. Offline backends have no usage
// report, so relative efficiency numbers use this approximation.
std::int64_t approx_token_count(const std::string& text);

std::uint64_t fnv1a(const std::string& data, std::uint64_t state = 14695981039346656037ULL);

// Stable content hash of everything that affects a deterministic
// backend's reply: tag, decoding parameters, stop list, and messages.
std::string request_digest(const ChatRequest& request);

// One-line preview stored next to fixture entries for debuggability.
std::string request_summary(const ChatRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
    virtual bool concurrent_safe() const { return true; }
};

// Per-step token usage, split by requester tag.
struct StepUsage {
    std::int64_t worker_prompt = 0;
    std::int64_t worker_completion = 0;
    std::int64_t architect_prompt = 0;
    std::int64_t architect_completion = 0;

    std::int64_t total() const {
        return worker_prompt + worker_completion + architect_prompt + architect_completion;
    }
};

// Cumulative token accounting across a run. Cache hits are free replays
// and are not recorded. Thread-safe; scoring fan-out records in dataset
// order after the parallel region, so snapshots are deterministic.
class TokenLedger {
public:
    TokenLedger() = default;
    explicit TokenLedger(const nlohmann::json& j);

    void record(const ChatResponse& response, Tag tag, int step);

    std::int64_t prompt_total(Tag tag) const;
    std::int64_t completion_total(Tag tag) const;
    std::int64_t tag_total(Tag tag) const;
    std::int64_t grand_total() const;

    std::map<int, StepUsage> snapshots() const;
    std::int64_t step_total(int step) const;
    std::int64_t cumulative_through_step(int step) const;

    nlohmann::json to_json() const;

private:
    mutable std::mutex mu_;
    std::int64_t worker_prompt_ = 0, worker_completion_ = 0;
    std::int64_t architect_prompt_ = 0, architect_completion_ = 0;
    std::map<int, StepUsage> steps_;
};

// Deterministic in-process model: a reply function plus approximate
// token accounting. Used by tests and the synthetic testbed.
class SyntheticBackend : public Backend {
public:
    using ReplyFn = std::function<std::string(const ChatRequest&)>;

    SyntheticBackend(std::string name, ReplyFn reply, bool concurrent = true)
        : name_(std::move(name)), reply_(std::move(reply)), concurrent_(concurrent) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return "synthetic:" + name_; }
    bool concurrent_safe() const override { return concurrent_; }

private:
    std::string name_;
    ReplyFn reply_;
    bool concurrent_;
};

enum class FixtureMode { Digest, Sequence };

// Replays a recorded JSONL fixture. Digest mode matches on request
// content (repeats pop FIFO); sequence mode replays strictly in order,
// which also covers sampled architect calls that never digest-match
// across recordings.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(const std::string& path,
                             std::optional<FixtureMode> mode = std::nullopt);
    ScriptedBackend(const std::vector<std::string>& lines, std::optional<FixtureMode> mode,
                    const std::string& name = "inline");

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return "scripted:" + name_; }
    bool concurrent_safe() const override { return mode_ == FixtureMode::Digest; }

    FixtureMode mode() const { return mode_; }
    std::size_t remaining() const;
    // Replay runs must consume the whole fixture; leftovers mean the
    // run diverged from the recording.
    void assert_exhausted() const;

private:
    struct Entry {
        std::string digest;
        std::string response;
        std::int64_t prompt_tokens = 0;
        std::int64_t completion_tokens = 0;
        bool from_cache = false;
    };

    void init(std::vector<Entry> entries, std::optional<FixtureMode> mode);
    static std::vector<Entry> parse(const std::vector<std::string>& lines,
                                    const std::string& name);

    std::string name_;
    FixtureMode mode_ = FixtureMode::Digest;
    mutable std::mutex mu_;
    std::vector<Entry> ordered_;
    std::size_t cursor_ = 0;
    std::unordered_map<std::string, std::deque<std::size_t>> by_digest_;
    std::size_t served_ = 0;
};

// Appends one fixture line per completed call, so any live run can be
// replayed later through ScriptedBackend.
class RecordingBackend : public Backend {
public:
    RecordingBackend(Backend& inner, const std::string& fixture_path);

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return inner_.id(); }
    bool concurrent_safe() const override { return inner_.concurrent_safe(); }

private:
    Backend& inner_;
    std::string path_;
    std::mutex mu_;
    std::size_t seq_ = 0;
};

// Memoizes responses by request digest. Architect requests bypass the
// cache by default: they are sampled for diversity, so serving repeats
// would defeat the temperature. Optionally persists entries as JSONL.
class CachedBackend : public Backend {
public:
    explicit CachedBackend(Backend& inner, bool cache_architect = false,
                           const std::string& persist_path = "");

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return "cached(" + inner_.id() + ")"; }
    bool concurrent_safe() const override { return inner_.concurrent_safe(); }

    std::size_t hits() const;
    std::size_t misses() const;

private:
    Backend& inner_;
    bool cache_architect_;
    std::string persist_path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, ChatResponse> store_;
    std::size_t hits_ = 0, misses_ = 0;
};

// Counts calls per tag; used to verify evaluation budgets.
class CountingBackend : public Backend {
public:
    explicit CountingBackend(Backend& inner) : inner_(inner) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override { return inner_.id(); }
    bool concurrent_safe() const override { return inner_.concurrent_safe(); }

    std::int64_t calls(Tag tag) const;
    std::int64_t total_calls() const;

private:
    Backend& inner_;
    mutable std::mutex mu_;
    std::int64_t worker_calls_ = 0;
    std::int64_t architect_calls_ = 0;
};

struct RemoteConfig {
    std::string base_url;
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key;
    int attempts = 3;
    int backoff_ms = 250;
    int timeout_s = 120;
};

// Chat-completions wire client: posts {model, messages, temperature,
// top_p, max_tokens, stop} and reads choices[0].message.content plus
// usage counts (approximated when the endpoint omits usage).
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteConfig config);

    ChatResponse complete(const ChatRequest& request) override;
    std::string id() const override;

    nlohmann::json build_body(const ChatRequest& request) const;

private:
    RemoteConfig config_;
};

// Runs fn up to `attempts` times, sleeping backoff_ms and doubling it
// between tries; the final failure propagates.
template <typename Fn>
auto with_retries(int attempts, int backoff_ms, Fn&& fn) {
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const std::exception&) {
            if (attempt >= attempts) throw;
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
}

} // namespace apsf
