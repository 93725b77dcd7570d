// Domain types shared across the library: prompts, reward groups,
// zero-variance classification, and per-prompt reward-dynamics traces.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace greso {

/// Dataset-local prompt index, dense in [0, N).
using PromptId = std::uint32_t;

enum class ZeroVarianceClass : std::uint8_t {
    Effective,         // rewards in the group differ
    EasyZeroVariance,  // all identical and equal to the maximum legal reward
    HardZeroVariance,  // all identical but below the maximum legal reward
};

inline bool is_zero_variance(ZeroVarianceClass cls) {
    return cls != ZeroVarianceClass::Effective;
}

/// Classify one reward group. Rewards come from a finite legal set, so exact
/// scalar equality is the correct identity test (no tolerance). A group where
/// every response earns the same partial credit (e.g. all 0.1) counts as hard:
/// "easy" means solved, not merely uniform.
inline ZeroVarianceClass classify_group(const std::vector<double>& rewards, double max_reward) {
    if (rewards.empty()) {
        throw std::invalid_argument("classify_group: empty reward group");
    }
    for (std::size_t i = 1; i < rewards.size(); ++i) {
        if (rewards[i] != rewards[0]) {
            return ZeroVarianceClass::Effective;
        }
    }
    return rewards[0] == max_reward ? ZeroVarianceClass::EasyZeroVariance
                                    : ZeroVarianceClass::HardZeroVariance;
}

/// The G scalar rewards from one rollout of one prompt, plus when it happened
/// and what it classified as.
struct RewardGroup {
    std::vector<double> rewards;
    std::uint64_t epoch = 0;
    std::uint64_t step = 0;
    ZeroVarianceClass cls = ZeroVarianceClass::Effective;

    RewardGroup() = default;
    RewardGroup(std::vector<double> r, std::uint64_t epoch_, std::uint64_t step_, double max_reward)
        : rewards(std::move(r)), epoch(epoch_), step(step_), cls(classify_group(rewards, max_reward)) {}
};

struct StreakInfo {
    std::uint64_t length = 0;
    std::optional<ZeroVarianceClass> cls;  // class of the most recent entry when length >= 1
};

/// Chronological record of reward groups for one prompt. Append-only; entries
/// must arrive in strictly increasing step order.
class DynamicsTrace {
public:
    DynamicsTrace() = default;

    /// cap == 0 keeps the full history; otherwise the oldest entries are
    /// dropped once size exceeds cap. Dropping old entries cannot change any
    /// suffix-based quantity as long as cap stays above the longest streak of
    /// interest.
    explicit DynamicsTrace(std::size_t cap) : capacity_(cap) {}

    void append(RewardGroup group) {
        if (!entries_.empty() && group.step <= entries_.back().step) {
            throw std::invalid_argument("DynamicsTrace: entries must be in increasing step order");
        }
        entries_.push_back(std::move(group));
        if (capacity_ != 0 && entries_.size() > capacity_) {
            entries_.erase(entries_.begin());
        }
    }

    const std::vector<RewardGroup>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const RewardGroup& back() const { return entries_.back(); }

private:
    std::vector<RewardGroup> entries_;
    std::size_t capacity_ = 0;
};

/// Length of the maximal all-zero-variance suffix of the trace, and the class
/// of the most recent entry when that suffix is nonempty. The count is over
/// recorded rollouts; epochs in which the prompt was skipped leave no entry
/// and therefore do not extend or reset the streak.
inline StreakInfo streak_length(const DynamicsTrace& trace) {
    StreakInfo info;
    const auto& entries = trace.entries();
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (!is_zero_variance(it->cls)) break;
        ++info.length;
    }
    if (info.length > 0) {
        info.cls = entries.back().cls;
    }
    return info;
}

/// One dataset prompt: identity, latent difficulty, and its full trace.
/// Difficulty is fixed at dataset creation; the trace grows only when the
/// trainer actually rolls the prompt out.
struct PromptRecord {
    PromptId id = 0;
    double difficulty = 0.0;
    DynamicsTrace trace;
};

}  // namespace greso
