// Sampling strategies for filling a training batch with effective prompts:
//
//   vanilla — roll the next B_t prompts of the epoch order and train on them
//             regardless of outcome class;
//   ds      — oversample at a fixed rollout batch size, drop zero-variance
//             groups after rollout, repeat until B_t effective collected;
//   ds_abs  — ds plus an adaptive rollout batch size for refill rounds;
//   greso   — ds_abs plus probabilistic pre-rollout filtering driven by each
//             prompt's reward-dynamics trace, with a self-adjusting base
//             exploration probability per zero-variance class;
//   backoff — ds_abs plus a deterministic linear-backoff pre-rollout filter
//             (a prompt zero-variance in its last k rollouts sits out the
//             next k epochs).
//
// A streaked prompt is skipped with probability  p_f = 1 - p_e^z  where z is
// the current zero-variance streak and p_e the base exploration probability
// of the streak's class. Skipping never touches the trace, so z stays frozen
// until the prompt is actually rolled out again.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "greso/core.hpp"
#include "greso/env.hpp"
#include "greso/rng.hpp"

namespace greso {

enum class Strategy : std::uint8_t { Vanilla, Ds, DsAbs, Greso, Backoff };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Vanilla: return "vanilla";
        case Strategy::Ds: return "ds";
        case Strategy::DsAbs: return "ds_abs";
        case Strategy::Greso: return "greso";
        case Strategy::Backoff: return "backoff";
    }
    return "?";
}

inline Strategy strategy_from_name(const std::string& name) {
    if (name == "vanilla") return Strategy::Vanilla;
    if (name == "ds") return Strategy::Ds;
    if (name == "ds_abs") return Strategy::DsAbs;
    if (name == "greso") return Strategy::Greso;
    if (name == "backoff") return Strategy::Backoff;
    throw std::invalid_argument("unknown strategy: " + name);
}

inline bool uses_adaptive_batch(Strategy s) {
    return s == Strategy::Greso || s == Strategy::DsAbs || s == Strategy::Backoff;
}

inline bool filters_zero_variance(Strategy s) { return s != Strategy::Vanilla; }

struct SelectorConfig {
    double p_initial = 0.5;    // initial base exploration probability
    double p_min = 0.05;       // exploration floor
    double delta_p = 0.01;     // controller step size
    double alpha_easy = 0.25 / 3.0;       // targeted easy zero-variance share
    double alpha_hard = 2.0 * 0.25 / 3.0; // targeted hard zero-variance share
    double beta = 1.25;        // adaptive-batch safety factor

    void validate() const {
        if (!(p_min > 0.0) || p_min > 1.0) throw std::invalid_argument("selector.p_min must be in (0, 1]");
        if (p_initial < p_min || p_initial > 1.0) {
            throw std::invalid_argument("selector.p_initial must be in [p_min, 1]");
        }
        if (delta_p < 0.0) throw std::invalid_argument("selector.delta_p must be >= 0");
        if (alpha_easy < 0.0 || alpha_hard < 0.0) throw std::invalid_argument("selector alphas must be >= 0");
        if (!(beta > 0.0)) throw std::invalid_argument("selector.beta must be positive");
    }
};

/// Mutable controller state: the two base exploration probabilities plus the
/// per-iteration zero-variance counters they are adjusted from.
struct SelectorState {
    double p_easy = 0.5;
    double p_hard = 0.5;
    double p_min = 0.05;
    double delta_p = 0.01;
    double alpha_easy = 0.25 / 3.0;
    double alpha_hard = 2.0 * 0.25 / 3.0;
    std::uint64_t n_easy = 0;
    std::uint64_t n_hard = 0;
    std::uint64_t n_total = 0;

    static SelectorState from_config(const SelectorConfig& cfg) {
        cfg.validate();
        SelectorState s;
        s.p_easy = cfg.p_initial;
        s.p_hard = cfg.p_initial;
        s.p_min = cfg.p_min;
        s.delta_p = cfg.delta_p;
        s.alpha_easy = cfg.alpha_easy;
        s.alpha_hard = cfg.alpha_hard;
        return s;
    }

    void reset_counters() { n_easy = n_hard = n_total = 0; }
};

/// Skip probability for one prompt:  p_f = 1 - p_e^z  with z the current
/// zero-variance streak. z == 0 (fresh prompt, or latest rollout effective)
/// gives p_f = 0, so an effective prompt is never skipped. The class of the
/// most recent entry decides whether p_easy or p_hard applies.
inline double filter_probability(const DynamicsTrace& trace, const SelectorState& state) {
    const StreakInfo streak = streak_length(trace);
    if (streak.length == 0) return 0.0;
    const double p_e =
        (*streak.cls == ZeroVarianceClass::EasyZeroVariance) ? state.p_easy : state.p_hard;
    return 1.0 - std::pow(p_e, static_cast<double>(streak.length));
}

/// Per-iteration feedback step: whichever observed zero-variance share sits at
/// or above its target gets less exploration, below gets more; both
/// probabilities clamp to [p_min, 1]. n_total == 0 means no rollout evidence
/// this iteration, so probabilities stay put. Counters reset either way.
inline void adjust_exploration(SelectorState& state) {
    if (state.n_total > 0) {
        const double total = static_cast<double>(state.n_total);
        const double easy_share = static_cast<double>(state.n_easy) / total;
        const double hard_share = static_cast<double>(state.n_hard) / total;
        state.p_easy += (easy_share >= state.alpha_easy) ? -state.delta_p : state.delta_p;
        state.p_hard += (hard_share >= state.alpha_hard) ? -state.delta_p : state.delta_p;
        state.p_easy = std::min(1.0, std::max(state.p_min, state.p_easy));
        state.p_hard = std::min(1.0, std::max(state.p_min, state.p_hard));
    }
    state.reset_counters();
}

/// Rollout batch size for a refill round:  min(B_default, ceil(beta * B_delta
/// / (1 - alpha)))  where B_delta is the number of effective prompts still
/// missing and alpha the zero-variance ratio observed so far this iteration.
/// alpha == 1 would blow up the quotient, and the min() caps at B_default
/// anyway, so that case returns B_default directly. Rounding is upward and the
/// result is at least 1: undersampling risks an extra round, which defeats the
/// safety factor.
inline int adaptive_rollout_batch(int b_default, int b_delta, double alpha, double beta) {
    if (b_delta < 0) throw std::invalid_argument("adaptive_rollout_batch: B_delta must be >= 0");
    if (b_delta == 0) return 0;
    if (alpha >= 1.0 - 1e-9) return b_default;
    const double raw = beta * static_cast<double>(b_delta) / (1.0 - alpha);
    const int sized = static_cast<int>(std::ceil(raw));
    return std::min(b_default, std::max(1, sized));
}

struct PostFilterResult {
    std::vector<std::size_t> effective_indices;  // positions within the rollout result
    int easy_count = 0;
    int hard_count = 0;
};

/// Partition one rollout round by zero-variance class. The counts feed the
/// SelectorState counters.
inline PostFilterResult post_rollout_filter(const RolloutResult& result) {
    PostFilterResult out;
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
        switch (result.outcomes[i].group.cls) {
            case ZeroVarianceClass::Effective:
                out.effective_indices.push_back(i);
                break;
            case ZeroVarianceClass::EasyZeroVariance:
                ++out.easy_count;
                break;
            case ZeroVarianceClass::HardZeroVariance:
                ++out.hard_count;
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Linear backoff baseline
// ---------------------------------------------------------------------------

/// Per-prompt deferral state for the linear-backoff filter.
struct BackoffEntry {
    std::uint64_t k = 0;             // consecutive zero-variance rollouts
    std::uint64_t resume_epoch = 0;  // first epoch eligible again
};

class BackoffState {
public:
    explicit BackoffState(std::size_t num_prompts = 0) : entries_(num_prompts) {}

    const BackoffEntry& entry(PromptId id) const { return entries_[id]; }

    /// After a rollout of `id`: a zero-variance group schedules the prompt to
    /// sit out the next `streak` epochs; an effective group clears the state.
    void record_rollout(PromptId id, bool zero_variance, std::uint64_t streak, std::uint64_t epoch) {
        BackoffEntry& e = entries_[id];
        if (zero_variance) {
            e.k = streak;
            e.resume_epoch = epoch + streak + 1;
        } else {
            e.k = 0;
            e.resume_epoch = 0;
        }
    }

private:
    std::vector<BackoffEntry> entries_;
};

inline bool backoff_decision(const BackoffState& state, const PromptRecord& prompt,
                             std::uint64_t epoch) {
    return epoch < state.entry(prompt.id).resume_epoch;
}

// ---------------------------------------------------------------------------
// Epoch-ordered prompt stream
// ---------------------------------------------------------------------------

/// Infinite stream over the dataset in per-epoch shuffled order. Drawing a
/// prompt consumes its slot for the epoch whether it ends up rolled out or
/// skipped; exhausting the order reshuffles and starts the next epoch.
class PromptStream {
public:
    PromptStream(std::size_t num_prompts, std::uint64_t seed)
        : seed_(seed), order_(num_prompts) {
        if (num_prompts == 0) throw std::invalid_argument("PromptStream: empty dataset");
        for (std::size_t i = 0; i < num_prompts; ++i) order_[i] = static_cast<PromptId>(i);
        reshuffle();
    }

    std::uint64_t epoch() const { return epoch_; }
    std::size_t position() const { return pos_; }

    PromptDraw next() {
        if (pos_ == order_.size()) {
            ++epoch_;
            pos_ = 0;
            reshuffle();
        }
        return PromptDraw{order_[pos_++], epoch_};
    }

private:
    void reshuffle() {
        Rng rng = Rng::substream(seed_, rng_tag::shuffle, epoch_);
        deterministic_shuffle(order_, rng);
    }

    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
    std::vector<PromptId> order_;
};

struct SelectionRound {
    std::vector<PromptDraw> accepted;  // exactly `needed` prompts, stream order
    std::vector<PromptDraw> skipped;   // consumed but not rolled out
};

/// Draw prompts from the stream until `needed` have been accepted, skipping
/// each candidate according to `should_skip(record, epoch)`. Skipped prompts
/// keep their epoch slot but are not rolled out and their traces stay
/// untouched.
template <typename SkipFn>
SelectionRound select_for_rollout(PromptStream& stream, const std::vector<PromptRecord>& records,
                                  int needed, SkipFn&& should_skip) {
    SelectionRound round;
    round.accepted.reserve(static_cast<std::size_t>(needed));
    while (round.accepted.size() < static_cast<std::size_t>(needed)) {
        const PromptDraw draw = stream.next();
        if (should_skip(records[draw.id], draw.epoch)) {
            round.skipped.push_back(draw);
        } else {
            round.accepted.push_back(draw);
        }
    }
    return round;
}

/// GRESO pre-rollout selection: each candidate is skipped with an independent
/// Bernoulli draw of probability filter_probability, from a substream keyed on
/// (seed, prompt, epoch) so the decision does not depend on draw order.
inline SelectionRound pre_rollout_select(PromptStream& stream,
                                         const std::vector<PromptRecord>& records, int needed,
                                         const SelectorState& state, std::uint64_t seed) {
    return select_for_rollout(stream, records, needed,
                              [&](const PromptRecord& rec, std::uint64_t epoch) {
                                  const double p_f = filter_probability(rec.trace, state);
                                  if (p_f <= 0.0) return false;
                                  Rng rng = Rng::substream(seed, rng_tag::skip, rec.id, epoch);
                                  return rng.bernoulli(p_f);
                              });
}

}  // namespace greso
