// Synthetic prompt population and reward generator. Two modes:
//   closed_loop — rewards come from sampling the trainable tabular policy and
//                 scoring answers against each prompt's designated solution,
//                 so the full GRPO feedback loop is exercised;
//   open_loop   — per-response correctness is Bernoulli(sigmoid(skill -
//                 difficulty)) with a scalar skill that drifts upward as
//                 training consumes effective prompts, giving an analytically
//                 controllable stand-in for a model getting stronger.
//
// Incorrect responses earn the extraction reward except for an occasional
// extraction failure worth 0.0, so "all rewards identical" is not trivially
// the same event as "all incorrect".

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "greso/core.hpp"
#include "greso/grpo.hpp"
#include "greso/rng.hpp"

namespace greso {

enum class EnvMode : std::uint8_t { OpenLoop, ClosedLoop };

enum class DifficultyKind : std::uint8_t { Uniform, Bimodal, Custom };

/// uniform(lo, hi) | bimodal(easy_mass, hard_mass) | custom list.
/// Bimodal places easy_mass near easy_center and hard_mass near hard_center
/// (each a band of +-mode_width), with any remaining mass spread uniformly
/// between the two bands.
struct DifficultyDistribution {
    DifficultyKind kind = DifficultyKind::Uniform;
    double lo = 0.0;
    double hi = 1.0;
    double easy_mass = 0.45;
    double hard_mass = 0.45;
    double easy_center = 0.0;
    double hard_center = 8.0;
    double mode_width = 0.5;
    std::vector<double> values;

    static DifficultyDistribution uniform(double lo, double hi) {
        DifficultyDistribution d;
        d.kind = DifficultyKind::Uniform;
        d.lo = lo;
        d.hi = hi;
        return d;
    }

    static DifficultyDistribution bimodal(double easy_mass, double hard_mass) {
        DifficultyDistribution d;
        d.kind = DifficultyKind::Bimodal;
        d.easy_mass = easy_mass;
        d.hard_mass = hard_mass;
        return d;
    }

    static DifficultyDistribution custom(std::vector<double> values) {
        DifficultyDistribution d;
        d.kind = DifficultyKind::Custom;
        d.values = std::move(values);
        return d;
    }

    void validate() const {
        switch (kind) {
            case DifficultyKind::Uniform:
                if (!(lo < hi)) throw std::invalid_argument("difficulty.uniform: lo must be < hi");
                break;
            case DifficultyKind::Bimodal:
                if (easy_mass < 0.0 || hard_mass < 0.0 || easy_mass + hard_mass > 1.0) {
                    throw std::invalid_argument("difficulty.bimodal: masses must be >= 0 and sum to <= 1");
                }
                if (!(mode_width > 0.0)) {
                    throw std::invalid_argument("difficulty.bimodal: mode_width must be positive");
                }
                if (!(easy_center + mode_width <= hard_center - mode_width)) {
                    throw std::invalid_argument("difficulty.bimodal: mode bands overlap");
                }
                break;
            case DifficultyKind::Custom:
                if (values.empty()) throw std::invalid_argument("difficulty.custom: empty value list");
                break;
        }
    }
};

struct EnvConfig {
    int num_prompts = 2000;
    int group_size = 8;  // G responses per prompt
    DifficultyDistribution difficulty;
    EnvMode mode = EnvMode::OpenLoop;
    double skill_init = 0.0;           // open_loop
    double skill_drift_rate = 0.0;     // open_loop
    double reward_correct = 1.0;
    double reward_extracted = 0.1;
    double extraction_failure_prob = 0.05;
    int num_clusters = 16;   // closed_loop policy shape
    int answer_vocab = 8;

    void validate() const {
        if (num_prompts < 1) throw std::invalid_argument("env.num_prompts must be >= 1");
        if (group_size < 2) throw std::invalid_argument("env.group_size must be >= 2");
        if (!(reward_correct > reward_extracted) || reward_extracted < 0.0) {
            throw std::invalid_argument("env rewards: need reward_correct > reward_extracted >= 0");
        }
        if (extraction_failure_prob < 0.0 || extraction_failure_prob >= 1.0) {
            throw std::invalid_argument("env.extraction_failure_prob must be in [0, 1)");
        }
        if (num_clusters < 1 || answer_vocab < 2) {
            throw std::invalid_argument("env: need num_clusters >= 1 and answer_vocab >= 2");
        }
        difficulty.validate();
    }
};

/// One prompt pulled from the epoch stream: which prompt, and during which
/// epoch traversal it was drawn. The epoch feeds the RNG substream so a prompt
/// re-drawn in a later epoch gets fresh randomness.
struct PromptDraw {
    PromptId id = 0;
    std::uint64_t epoch = 0;
};

/// Everything observed from rolling out one prompt once.
struct RolloutOutcome {
    RewardGroup group;
    std::vector<int> answers;      // closed_loop only
    std::vector<double> old_probs; // sampling-time probabilities; 1.0 in open_loop
};

struct RolloutResult {
    std::vector<RolloutOutcome> outcomes;  // aligned with the request
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Per-response probability that an open-loop response is correct.
inline double correctness_probability(double skill, double difficulty) {
    return sigmoid(skill - difficulty);
}

class SyntheticEnv {
public:
    SyntheticEnv(EnvConfig config, std::uint64_t seed) : cfg_(config), seed_(seed) {
        cfg_.validate();
        skill_ = cfg_.skill_init;
    }

    const EnvConfig& config() const { return cfg_; }
    double skill() const { return skill_; }
    double max_reward() const { return cfg_.reward_correct; }

    /// Deterministic for a fixed seed: difficulties drawn from the configured
    /// distribution, traces empty.
    std::vector<PromptRecord> build_dataset(std::size_t trace_capacity = 0) const {
        std::vector<PromptRecord> records;
        records.reserve(static_cast<std::size_t>(cfg_.num_prompts));
        for (int i = 0; i < cfg_.num_prompts; ++i) {
            PromptRecord rec;
            rec.id = static_cast<PromptId>(i);
            rec.difficulty = draw_difficulty(rec.id);
            rec.trace = DynamicsTrace(trace_capacity);
            records.push_back(std::move(rec));
        }
        return records;
    }

    int cluster_of(PromptId id) const { return static_cast<int>(id % static_cast<PromptId>(cfg_.num_clusters)); }

    /// The designated solution for a prompt in closed_loop mode.
    int correct_answer(PromptId id) const {
        return static_cast<int>(mix_keys({seed_, rng_tag::answer, id}) %
                                static_cast<std::uint64_t>(cfg_.answer_vocab));
    }

    /// Produce G rewards per requested prompt. Does not touch traces; the
    /// trainer owns trace writes. Each prompt draws from its own substream
    /// keyed on (seed, id, step, epoch), so results are independent of request
    /// order and of how work is split across workers.
    RolloutResult rollout(const std::vector<PromptDraw>& request,
                          const std::vector<PromptRecord>& records, const ToyPolicy& policy,
                          std::uint64_t step) const {
        RolloutResult result;
        result.outcomes.reserve(request.size());
        for (const PromptDraw& draw : request) {
            if (draw.id >= records.size()) {
                throw std::out_of_range("rollout: unknown prompt id " + std::to_string(draw.id));
            }
            Rng rng = Rng::substream(seed_, rng_tag::rollout, draw.id, step, draw.epoch);
            result.outcomes.push_back(roll_one(records[draw.id], policy, rng, step, draw.epoch));
        }
        return result;
    }

    /// Scalar skill drifts in proportion to how much effective data the last
    /// training batch contained.
    void advance_skill(int batch_effective_count, int training_batch_size) {
        if (cfg_.mode != EnvMode::OpenLoop || training_batch_size <= 0) return;
        skill_ += cfg_.skill_drift_rate * static_cast<double>(batch_effective_count) /
                  static_cast<double>(training_batch_size);
    }

private:
    double draw_difficulty(PromptId id) const {
        Rng rng = Rng::substream(seed_, rng_tag::dataset, id);
        const DifficultyDistribution& d = cfg_.difficulty;
        switch (d.kind) {
            case DifficultyKind::Uniform:
                return rng.uniform(d.lo, d.hi);
            case DifficultyKind::Bimodal: {
                const double u = rng.next_unit();
                if (u < d.easy_mass) {
                    return rng.uniform(d.easy_center - d.mode_width, d.easy_center + d.mode_width);
                }
                if (u < d.easy_mass + d.hard_mass) {
                    return rng.uniform(d.hard_center - d.mode_width, d.hard_center + d.mode_width);
                }
                return rng.uniform(d.easy_center + d.mode_width, d.hard_center - d.mode_width);
            }
            case DifficultyKind::Custom:
                return d.values[id % d.values.size()];
        }
        return 0.0;  // unreachable
    }

    RolloutOutcome roll_one(const PromptRecord& rec, const ToyPolicy& policy, Rng& rng,
                            std::uint64_t step, std::uint64_t epoch) const {
        const int g = cfg_.group_size;
        std::vector<double> rewards(static_cast<std::size_t>(g));
        RolloutOutcome out;

        if (cfg_.mode == EnvMode::ClosedLoop) {
            const int cluster = cluster_of(rec.id);
            const int solution = correct_answer(rec.id);
            const std::vector<double> p = policy.probs(cluster);
            out.answers.resize(static_cast<std::size_t>(g));
            out.old_probs.resize(static_cast<std::size_t>(g));
            for (int k = 0; k < g; ++k) {
                const int answer = policy.sample_answer(cluster, rng);
                out.answers[static_cast<std::size_t>(k)] = answer;
                out.old_probs[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(answer)];
                rewards[static_cast<std::size_t>(k)] = score(answer == solution, rng);
            }
        } else {
            const double p_correct = correctness_probability(skill_, rec.difficulty);
            out.old_probs.assign(static_cast<std::size_t>(g), 1.0);
            for (int k = 0; k < g; ++k) {
                rewards[static_cast<std::size_t>(k)] = score(rng.bernoulli(p_correct), rng);
            }
        }

        out.group = RewardGroup(std::move(rewards), epoch, step, cfg_.reward_correct);
        return out;
    }

    double score(bool correct, Rng& rng) const {
        if (correct) return cfg_.reward_correct;
        if (cfg_.extraction_failure_prob > 0.0 && rng.bernoulli(cfg_.extraction_failure_prob)) {
            return 0.0;
        }
        return cfg_.reward_extracted;
    }

    EnvConfig cfg_;
    std::uint64_t seed_;
    double skill_ = 0.0;
};

}  // namespace greso
