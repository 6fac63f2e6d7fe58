#include "apsf/gateway.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "apsf/factor.hpp"

namespace apsf {

const char* to_string(Tag tag) {
    return tag == Tag::Worker ? "worker" : "architect";
}

DecodingParams default_params(Tag tag) {
    DecodingParams params;
    if (tag == Tag::Worker) {
        params.temperature = 0.0;
        params.top_p = 1.0;
        params.max_tokens = 8192;
        params.stop = {"\n\n", "---"};
    } else {
        params.temperature = 0.7;
        params.top_p = 1.0;
        params.max_tokens = 8192;
        params.stop = {};
    }
    return params;
}

ChatRequest make_request(Tag tag, std::vector<ChatMessage> messages,
                         const DecodingParams& params) {
    ChatRequest request;
    request.messages = std::move(messages);
    request.temperature = params.temperature;
    request.top_p = params.top_p;
    request.max_tokens = params.max_tokens;
    request.stop = params.stop;
    request.tag = tag;
    return request;
}

ChatRequest make_request(Tag tag, const std::string& user_content,
                         const DecodingParams& params) {
    return make_request(tag, std::vector<ChatMessage>{{"user", user_content}}, params);
}

std::int64_t approx_token_count(const std::string& text) {
    std::int64_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::uint64_t fnv1a(const std::string& data, std::uint64_t state) {
    for (unsigned char c : data) {
        state ^= c;
        state *= 1099511628211ULL;
    }
    return state;
}

namespace {

std::string format_real(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

} // namespace

std::string request_digest(const ChatRequest& request) {
    std::string canon;
    canon += to_string(request.tag);
    canon += '\x1f';
    canon += format_real(request.temperature);
    canon += '\x1f';
    canon += format_real(request.top_p);
    canon += '\x1f';
    canon += std::to_string(request.max_tokens);
    for (const auto& s : request.stop) {
        canon += '\x1e';
        canon += s;
    }
    for (const auto& m : request.messages) {
        canon += '\x1d';
        canon += m.role;
        canon += '\x1c';
        canon += m.content;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canon)));
    return buf;
}

std::string request_summary(const ChatRequest& request) {
    std::string head = request.messages.empty() ? "" : request.messages.back().content;
    for (auto& c : head)
        if (c == '\n') c = ' ';
    if (head.size() > 80) head = head.substr(0, 77) + "...";
    return std::string(to_string(request.tag)) + ": " + head;
}

void TokenLedger::record(const ChatResponse& response, Tag tag, int step) {
    if (response.from_cache) return;
    std::lock_guard<std::mutex> lock(mu_);
    StepUsage& usage = steps_[step];
    if (tag == Tag::Worker) {
        worker_prompt_ += response.prompt_tokens;
        worker_completion_ += response.completion_tokens;
        usage.worker_prompt += response.prompt_tokens;
        usage.worker_completion += response.completion_tokens;
    } else {
        architect_prompt_ += response.prompt_tokens;
        architect_completion_ += response.completion_tokens;
        usage.architect_prompt += response.prompt_tokens;
        usage.architect_completion += response.completion_tokens;
    }
}

std::int64_t TokenLedger::prompt_total(Tag tag) const {
    std::lock_guard<std::mutex> lock(mu_);
    return tag == Tag::Worker ? worker_prompt_ : architect_prompt_;
}

std::int64_t TokenLedger::completion_total(Tag tag) const {
    std::lock_guard<std::mutex> lock(mu_);
    return tag == Tag::Worker ? worker_completion_ : architect_completion_;
}

std::int64_t TokenLedger::tag_total(Tag tag) const {
    std::lock_guard<std::mutex> lock(mu_);
    return tag == Tag::Worker ? worker_prompt_ + worker_completion_
                              : architect_prompt_ + architect_completion_;
}

std::int64_t TokenLedger::grand_total() const {
    std::lock_guard<std::mutex> lock(mu_);
    return worker_prompt_ + worker_completion_ + architect_prompt_ + architect_completion_;
}

std::map<int, StepUsage> TokenLedger::snapshots() const {
    std::lock_guard<std::mutex> lock(mu_);
    return steps_;
}

std::int64_t TokenLedger::step_total(int step) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = steps_.find(step);
    return it == steps_.end() ? 0 : it->second.total();
}

std::int64_t TokenLedger::cumulative_through_step(int step) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::int64_t sum = 0;
    for (const auto& [s, usage] : steps_) {
        if (s > step) break;
        sum += usage.total();
    }
    return sum;
}

nlohmann::json TokenLedger::to_json() const {
    std::lock_guard<std::mutex> lock(mu_);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& [step, usage] : steps_) {
        steps.push_back({{"step", step},
                         {"worker_prompt", usage.worker_prompt},
                         {"worker_completion", usage.worker_completion},
                         {"architect_prompt", usage.architect_prompt},
                         {"architect_completion", usage.architect_completion}});
    }
    return {{"worker_prompt", worker_prompt_},
            {"worker_completion", worker_completion_},
            {"architect_prompt", architect_prompt_},
            {"architect_completion", architect_completion_},
            {"steps", steps}};
}

TokenLedger::TokenLedger(const nlohmann::json& j) {
    worker_prompt_ = j.at("worker_prompt").get<std::int64_t>();
    worker_completion_ = j.at("worker_completion").get<std::int64_t>();
    architect_prompt_ = j.at("architect_prompt").get<std::int64_t>();
    architect_completion_ = j.at("architect_completion").get<std::int64_t>();
    for (const auto& entry : j.at("steps")) {
        StepUsage usage;
        usage.worker_prompt = entry.at("worker_prompt").get<std::int64_t>();
        usage.worker_completion = entry.at("worker_completion").get<std::int64_t>();
        usage.architect_prompt = entry.at("architect_prompt").get<std::int64_t>();
        usage.architect_completion = entry.at("architect_completion").get<std::int64_t>();
        steps_[entry.at("step").get<int>()] = usage;
    }
}

ChatResponse SyntheticBackend::complete(const ChatRequest& request) {
    ChatResponse response;
    response.text = reply_(request);
    std::int64_t prompt_tokens = 0;
    for (const auto& m : request.messages) prompt_tokens += approx_token_count(m.content);
    response.prompt_tokens = prompt_tokens;
    response.completion_tokens = approx_token_count(response.text);
    response.backend_id = id();
    return response;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open fixture " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace

void ScriptedBackend::init(std::vector<Entry> entries, std::optional<FixtureMode> mode) {
    ordered_ = std::move(entries);
    bool all_digests = true;
    for (const auto& entry : ordered_)
        if (entry.digest.empty()) all_digests = false;
    mode_ = mode.value_or(all_digests ? FixtureMode::Digest : FixtureMode::Sequence);
    if (mode_ == FixtureMode::Digest) {
        if (!all_digests)
            throw Error(ErrorKind::ConfigError, "fixture " + name_ + " lacks digests");
        for (std::size_t i = 0; i < ordered_.size(); ++i)
            by_digest_[ordered_[i].digest].push_back(i);
    }
}

std::vector<ScriptedBackend::Entry> ScriptedBackend::parse(const std::vector<std::string>& lines,
                                                           const std::string& name) {
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ConfigError,
                        "fixture " + name + " line " + std::to_string(i + 1) + ": " + e.what());
        }
        Entry entry;
        if (j.contains("digest")) entry.digest = j.at("digest").get<std::string>();
        entry.response = j.at("response").get<std::string>();
        entry.prompt_tokens = j.value("prompt_tokens", std::int64_t(0));
        entry.completion_tokens = j.value("completion_tokens", std::int64_t(0));
        entry.from_cache = j.value("from_cache", false);
        entries.push_back(std::move(entry));
    }
    return entries;
}

ScriptedBackend::ScriptedBackend(const std::string& path, std::optional<FixtureMode> mode)
    : name_(path) {
    init(parse(read_lines(path), path), mode);
}

ScriptedBackend::ScriptedBackend(const std::vector<std::string>& lines,
                                 std::optional<FixtureMode> mode, const std::string& name)
    : name_(name) {
    init(parse(lines, name), mode);
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::lock_guard<std::mutex> lock(mu_);
    const Entry* entry = nullptr;
    if (mode_ == FixtureMode::Digest) {
        std::string digest = request_digest(request);
        auto it = by_digest_.find(digest);
        if (it == by_digest_.end() || it->second.empty())
            throw Error(ErrorKind::FixtureMiss, digest + " (" + request_summary(request) + ")");
        entry = &ordered_[it->second.front()];
        it->second.pop_front();
    } else {
        if (cursor_ >= ordered_.size())
            throw Error(ErrorKind::FixtureMiss,
                        "sequence exhausted at " + std::to_string(cursor_) + " (" +
                            request_summary(request) + ")");
        entry = &ordered_[cursor_++];
    }
    ++served_;
    ChatResponse response;
    response.text = entry->response;
    response.prompt_tokens = entry->prompt_tokens;
    response.completion_tokens = entry->completion_tokens;
    response.from_cache = entry->from_cache;
    response.backend_id = id();
    return response;
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ordered_.size() - served_;
}

void ScriptedBackend::assert_exhausted() const {
    std::size_t left = remaining();
    if (left > 0)
        throw Error(ErrorKind::FixtureLeftover,
                    std::to_string(left) + " unused entries in " + name_);
}

RecordingBackend::RecordingBackend(Backend& inner, const std::string& fixture_path)
    : inner_(inner), path_(fixture_path) {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write fixture " + path_);
}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse response = inner_.complete(request);
    nlohmann::json j = {{"seq", 0},
                        {"digest", request_digest(request)},
                        {"request_summary", request_summary(request)},
                        {"response", response.text},
                        {"prompt_tokens", response.prompt_tokens},
                        {"completion_tokens", response.completion_tokens}};
    // Cache hits must replay as cache hits or replayed ledgers drift.
    if (response.from_cache) j["from_cache"] = true;
    std::lock_guard<std::mutex> lock(mu_);
    j["seq"] = seq_++;
    std::ofstream out(path_, std::ios::app);
    out << j.dump() << '\n';
    return response;
}

CachedBackend::CachedBackend(Backend& inner, bool cache_architect,
                             const std::string& persist_path)
    : inner_(inner), cache_architect_(cache_architect), persist_path_(persist_path) {
    if (persist_path_.empty()) return;
    std::ifstream in(persist_path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ChatResponse response;
        response.text = j.at("response").get<std::string>();
        response.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
        response.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
        response.backend_id = id();
        store_[j.at("digest").get<std::string>()] = std::move(response);
    }
}

ChatResponse CachedBackend::complete(const ChatRequest& request) {
    if (request.tag == Tag::Architect && !cache_architect_) return inner_.complete(request);
    std::string digest = request_digest(request);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = store_.find(digest);
        if (it != store_.end()) {
            ++hits_;
            ChatResponse hit = it->second;
            hit.from_cache = true;
            return hit;
        }
    }
    ChatResponse response = inner_.complete(request);
    std::lock_guard<std::mutex> lock(mu_);
    ++misses_;
    store_[digest] = response;
    if (!persist_path_.empty()) {
        std::ofstream out(persist_path_, std::ios::app);
        out << nlohmann::json({{"digest", digest},
                               {"response", response.text},
                               {"prompt_tokens", response.prompt_tokens},
                               {"completion_tokens", response.completion_tokens}})
                   .dump()
            << '\n';
    }
    return response;
}

std::size_t CachedBackend::hits() const {
    std::lock_guard<std::mutex> lock(mu_);
    return hits_;
}

std::size_t CachedBackend::misses() const {
    std::lock_guard<std::mutex> lock(mu_);
    return misses_;
}

ChatResponse CountingBackend::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (request.tag == Tag::Worker)
            ++worker_calls_;
        else
            ++architect_calls_;
    }
    return inner_.complete(request);
}

std::int64_t CountingBackend::calls(Tag tag) const {
    std::lock_guard<std::mutex> lock(mu_);
    return tag == Tag::Worker ? worker_calls_ : architect_calls_;
}

std::int64_t CountingBackend::total_calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return worker_calls_ + architect_calls_;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty())
        throw Error(ErrorKind::ConfigError, "remote backend needs a base_url");
}

std::string RemoteBackend::id() const {
    return "remote:" + config_.model + "@" + config_.base_url;
}

nlohmann::json RemoteBackend::build_body(const ChatRequest& request) const {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json body = {{"model", config_.model},
                           {"messages", messages},
                           {"temperature", request.temperature},
                           {"top_p", request.top_p},
                           {"max_tokens", request.max_tokens}};
    if (!request.stop.empty()) body["stop"] = request.stop;
    return body;
}

ChatResponse RemoteBackend::complete(const ChatRequest& request) {
    std::string body = build_body(request).dump();
    return with_retries(config_.attempts, config_.backoff_ms, [&]() -> ChatResponse {
        httplib::Client client(config_.base_url);
        client.set_read_timeout(config_.timeout_s, 0);
        client.set_write_timeout(config_.timeout_s, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        auto result = client.Post(config_.path, headers, body, "application/json");
        if (!result)
            throw Error(ErrorKind::EndpointError,
                        "no response from " + config_.base_url + " (" +
                            httplib::to_string(result.error()) + ")");
        if (result->status < 200 || result->status >= 300)
            throw Error(ErrorKind::EndpointError,
                        "status " + std::to_string(result->status) + " from " + config_.base_url);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::EndpointError, std::string("bad response body: ") + e.what());
        }
        ChatResponse response;
        try {
            response.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::EndpointError, std::string("bad response shape: ") + e.what());
        }
        if (j.contains("usage")) {
            response.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t(0));
            response.completion_tokens = j["usage"].value("completion_tokens", std::int64_t(0));
        } else {
            std::int64_t prompt_tokens = 0;
            for (const auto& m : request.messages)
                prompt_tokens += approx_token_count(m.content);
            response.prompt_tokens = prompt_tokens;
            response.completion_tokens = approx_token_count(response.text);
        }
        response.backend_id = id();
        return response;
    });
}

} // namespace apsf
