#include "apsf/history.hpp"

#include "apsf/error.hpp"

namespace apsf {

SelectionHistory::SelectionHistory(std::size_t factor_count) : stats_(factor_count) {}

const FactorStats& SelectionHistory::stats(std::size_t k1) const {
    if (k1 < 1 || k1 > stats_.size())
        throw Error(ErrorKind::IndexOutOfRange, "factor " + std::to_string(k1));
    return stats_[k1 - 1];
}

void SelectionHistory::record_selection(std::size_t k1, int step, bool warm_start) {
    if (k1 < 1 || k1 > stats_.size())
        throw Error(ErrorKind::IndexOutOfRange, "factor " + std::to_string(k1));
    FactorStats& s = stats_[k1 - 1];
    if (warm_start) {
        s.warm_selections += 1;
    } else {
        s.selections += 1;
        post_steps_ += 1;
    }
    s.last_selected_step = step;
    pending_ = k1;
    pending_post_ = !warm_start;
}

void SelectionHistory::record_outcome(std::size_t k1, bool accepted, const Rational& gain) {
    if (k1 < 1 || k1 > stats_.size())
        throw Error(ErrorKind::IndexOutOfRange, "factor " + std::to_string(k1));
    FactorStats& s = stats_[k1 - 1];
    if (accepted) {
        s.accept_successes += 1;
        s.accepted_gain_sum += gain;
    } else {
        s.accept_failures += 1;
    }
    if (pending_post_ && pending_ == k1) {
        if (!accepted && streak_factor_ == k1) {
            streak_rejects_ += 1;
        } else if (!accepted) {
            streak_factor_ = k1;
            streak_rejects_ = 1;
        } else {
            streak_factor_ = 0;
            streak_rejects_ = 0;
        }
    }
    pending_ = 0;
    pending_post_ = false;
}

std::vector<std::size_t> SelectionHistory::overexplored() const {
    std::vector<std::size_t> out;
    if (post_steps_ == 0) return out;
    for (std::size_t i = 0; i < stats_.size(); ++i)
        if (2 * stats_[i].selections > post_steps_) out.push_back(i + 1);
    return out;
}

std::vector<std::size_t> SelectionHistory::underexplored() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < stats_.size(); ++i)
        if (stats_[i].selections == 0) out.push_back(i + 1);
    return out;
}

std::size_t SelectionHistory::excluded_factor() const {
    return streak_rejects_ >= 2 ? streak_factor_ : 0;
}

nlohmann::json SelectionHistory::to_json() const {
    nlohmann::json factors = nlohmann::json::array();
    for (const FactorStats& s : stats_) {
        factors.push_back({{"selections", s.selections},
                           {"warm_selections", s.warm_selections},
                           {"accept_successes", s.accept_successes},
                           {"accept_failures", s.accept_failures},
                           {"accepted_gain_sum", s.accepted_gain_sum.to_string()},
                           {"last_selected_step", s.last_selected_step}});
    }
    return {{"factors", factors},
            {"post_steps", post_steps_},
            {"streak_factor", streak_factor_},
            {"streak_rejects", streak_rejects_}};
}

SelectionHistory SelectionHistory::from_json(const nlohmann::json& j) {
    SelectionHistory h(j.at("factors").size());
    std::size_t i = 0;
    for (const nlohmann::json& f : j.at("factors")) {
        FactorStats& s = h.stats_[i++];
        s.selections = f.at("selections").get<int>();
        s.warm_selections = f.at("warm_selections").get<int>();
        s.accept_successes = f.at("accept_successes").get<int>();
        s.accept_failures = f.at("accept_failures").get<int>();
        s.accepted_gain_sum = Rational::parse(f.at("accepted_gain_sum").get<std::string>());
        s.last_selected_step = f.at("last_selected_step").get<int>();
    }
    h.post_steps_ = j.at("post_steps").get<int>();
    h.streak_factor_ = j.at("streak_factor").get<std::size_t>();
    h.streak_rejects_ = j.at("streak_rejects").get<int>();
    return h;
}

} // namespace apsf
