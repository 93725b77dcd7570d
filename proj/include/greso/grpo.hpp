// Group-relative advantage computation and the clipped surrogate update,
// applied to a tabular softmax policy so the objective and its exact analytic
// gradient can be checked against finite differences.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "greso/core.hpp"
#include "greso/rng.hpp"

namespace greso {

enum class StdMode : std::uint8_t { Population, Sample };

/// Group-normalized advantages: (r_k - mean) / std. Population std by default,
/// which makes the two-point case come out exactly +/-1. A group of identical
/// rewards has no learning signal and maps to an all-zero vector rather than a
/// division error; identity is exact scalar equality (finite legal reward set),
/// so near-zero float residue in the mean can never explode the output.
inline std::vector<double> compute_advantages(std::span<const double> rewards,
                                              StdMode mode = StdMode::Population) {
    const std::size_t g = rewards.size();
    if (g == 0) return {};

    bool identical = true;
    for (std::size_t i = 1; i < g; ++i) {
        if (rewards[i] != rewards[0]) {
            identical = false;
            break;
        }
    }
    if (identical || g == 1) {
        return std::vector<double>(g, 0.0);
    }

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);

    double ss = 0.0;
    for (double r : rewards) ss += (r - mean) * (r - mean);
    const double denom = (mode == StdMode::Population) ? static_cast<double>(g)
                                                       : static_cast<double>(g - 1);
    const double sd = std::sqrt(ss / denom);
    if (sd == 0.0) {
        return std::vector<double>(g, 0.0);
    }

    std::vector<double> adv(g);
    for (std::size_t i = 0; i < g; ++i) {
        adv[i] = (rewards[i] - mean) / sd;
    }
    return adv;
}

/// Tabular softmax policy over a small answer vocabulary per prompt cluster.
class ToyPolicy {
public:
    ToyPolicy() = default;

    ToyPolicy(int num_clusters, int answer_vocab, double learning_rate)
        : num_clusters_(num_clusters),
          vocab_(answer_vocab),
          learning_rate_(learning_rate),
          logits_(static_cast<std::size_t>(num_clusters) * answer_vocab, 0.0) {
        if (num_clusters < 1 || answer_vocab < 2) {
            throw std::invalid_argument("ToyPolicy: need >= 1 cluster and vocab >= 2");
        }
        if (!(learning_rate > 0.0)) {
            throw std::invalid_argument("ToyPolicy: learning rate must be positive");
        }
    }

    int num_clusters() const { return num_clusters_; }
    int answer_vocab() const { return vocab_; }
    double learning_rate() const { return learning_rate_; }

    double logit(int cluster, int answer) const { return logits_[index(cluster, answer)]; }
    void set_logit(int cluster, int answer, double value) { logits_[index(cluster, answer)] = value; }

    std::span<const double> logits() const { return logits_; }

    /// Softmax row for one cluster (max-shifted for stability).
    std::vector<double> probs(int cluster) const {
        const double* row = &logits_[index(cluster, 0)];
        double mx = row[0];
        for (int v = 1; v < vocab_; ++v) mx = std::max(mx, row[v]);
        std::vector<double> p(static_cast<std::size_t>(vocab_));
        double z = 0.0;
        for (int v = 0; v < vocab_; ++v) {
            p[v] = std::exp(row[v] - mx);
            z += p[v];
        }
        for (int v = 0; v < vocab_; ++v) p[v] /= z;
        return p;
    }

    double prob(int cluster, int answer) const { return probs(cluster)[static_cast<std::size_t>(answer)]; }

    int sample_answer(int cluster, Rng& rng) const {
        const std::vector<double> p = probs(cluster);
        const double u = rng.next_unit();
        double acc = 0.0;
        for (int v = 0; v < vocab_ - 1; ++v) {
            acc += p[v];
            if (u < acc) return v;
        }
        return vocab_ - 1;
    }

    /// One gradient-ascent step; `gradient` has the same layout as logits().
    void apply_ascent(std::span<const double> gradient) {
        for (std::size_t i = 0; i < logits_.size(); ++i) {
            logits_[i] += learning_rate_ * gradient[i];
        }
    }

private:
    std::size_t index(int cluster, int answer) const {
        return static_cast<std::size_t>(cluster) * vocab_ + answer;
    }

    int num_clusters_ = 0;
    int vocab_ = 0;
    double learning_rate_ = 0.0;
    std::vector<double> logits_;
};

/// One trainable unit: a prompt's rollout group with the sampling-time
/// bookkeeping needed to form importance ratios.
struct BatchItem {
    PromptId prompt = 0;
    int cluster = 0;
    std::vector<int> answers;      // G sampled answer ids
    std::vector<double> rewards;   // G scalar rewards
    std::vector<double> old_probs; // G sampling-time probabilities, each in (0, 1]
};

struct TrainingBatch {
    std::vector<BatchItem> items;
};

struct GrpoConfig {
    double clip_eps = 0.2;
    double kl_beta = 0.0;  // KL-to-reference off by default
    double learning_rate = 0.1;
    StdMode std_mode = StdMode::Population;
};

namespace detail {

inline void check_item(const BatchItem& item, const ToyPolicy& policy) {
    const std::size_t g = item.rewards.size();
    if (g == 0 || item.answers.size() != g || item.old_probs.size() != g) {
        throw std::invalid_argument("grpo: batch item with inconsistent group arrays");
    }
    if (item.cluster < 0 || item.cluster >= policy.num_clusters()) {
        throw std::invalid_argument("grpo: batch item cluster out of range");
    }
    for (std::size_t k = 0; k < g; ++k) {
        if (item.answers[k] < 0 || item.answers[k] >= policy.answer_vocab()) {
            throw std::invalid_argument("grpo: batch item answer out of range");
        }
        if (!(item.old_probs[k] > 0.0)) {
            throw std::invalid_argument("grpo: old_prob must be positive");
        }
    }
}

inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& p_ref) {
    double kl = 0.0;
    for (std::size_t v = 0; v < p.size(); ++v) {
        kl += p[v] * std::log(p[v] / p_ref[v]);
    }
    return kl;
}

}  // namespace detail

/// Clipped surrogate objective, averaged over batch items:
///     (1/|B|) sum_items (1/G) sum_k min(rho_k A_k, clip(rho_k, 1-eps, 1+eps) A_k)
///       - kl_beta * (1/|B|) sum_items KL(policy(.|cluster) || reference(.|cluster))
/// with rho_k = policy(answer_k | cluster) / old_prob_k. The KL term is exact
/// over the discrete answer vocabulary; `reference` is the policy snapshot
/// taken at run start.
inline double grpo_objective(const ToyPolicy& policy, const ToyPolicy& reference,
                             const TrainingBatch& batch, double clip_eps, double kl_beta,
                             StdMode std_mode = StdMode::Population) {
    if (batch.items.empty()) return 0.0;
    if (!(clip_eps > 0.0)) throw std::invalid_argument("grpo: clip_eps must be positive");

    double total = 0.0;
    for (const BatchItem& item : batch.items) {
        detail::check_item(item, policy);
        const std::vector<double> p = policy.probs(item.cluster);
        const std::vector<double> adv = compute_advantages(item.rewards, std_mode);
        const std::size_t g = item.rewards.size();

        double item_sum = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            const double rho = p[static_cast<std::size_t>(item.answers[k])] / item.old_probs[k];
            const double clipped = std::min(std::max(rho, 1.0 - clip_eps), 1.0 + clip_eps);
            item_sum += std::min(rho * adv[k], clipped * adv[k]);
        }
        total += item_sum / static_cast<double>(g);

        if (kl_beta != 0.0) {
            total -= kl_beta * detail::kl_divergence(p, reference.probs(item.cluster));
        }
    }
    return total / static_cast<double>(batch.items.size());
}

/// Exact analytic gradient of grpo_objective w.r.t. the policy logits, in the
/// same layout as ToyPolicy::logits(). Rows of clusters absent from the batch
/// stay exactly zero. At the clip kinks we take the subgradient of whichever
/// branch the min() selected.
inline std::vector<double> grpo_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                                         const TrainingBatch& batch, double clip_eps, double kl_beta,
                                         StdMode std_mode = StdMode::Population) {
    std::vector<double> grad(policy.logits().size(), 0.0);
    if (batch.items.empty()) return grad;
    if (!(clip_eps > 0.0)) throw std::invalid_argument("grpo: clip_eps must be positive");

    const double inv_items = 1.0 / static_cast<double>(batch.items.size());
    const int vocab = policy.answer_vocab();

    for (const BatchItem& item : batch.items) {
        detail::check_item(item, policy);
        const std::vector<double> p = policy.probs(item.cluster);
        const std::vector<double> adv = compute_advantages(item.rewards, std_mode);
        const std::size_t g = item.rewards.size();
        double* row = &grad[static_cast<std::size_t>(item.cluster) * vocab];

        // d rho / d logit[w] = rho * (delta(w, answer) - p[w]); accumulate the
        // delta part per answer and the -p[w] part once per item.
        double coeff_sum = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            const double rho = p[static_cast<std::size_t>(item.answers[k])] / item.old_probs[k];
            const double clipped = std::min(std::max(rho, 1.0 - clip_eps), 1.0 + clip_eps);
            const double unclipped_term = rho * adv[k];
            const double clipped_term = clipped * adv[k];
            const double d_min_d_rho = (unclipped_term <= clipped_term) ? adv[k] : 0.0;
            const double coeff = inv_items * d_min_d_rho * rho / static_cast<double>(g);
            row[item.answers[k]] += coeff;
            coeff_sum += coeff;
        }
        for (int w = 0; w < vocab; ++w) {
            row[w] -= coeff_sum * p[static_cast<std::size_t>(w)];
        }

        if (kl_beta != 0.0) {
            // d KL(p || p_ref) / d logit[w] = p[w] * (log(p[w]/p_ref[w]) - KL)
            const std::vector<double> p_ref = reference.probs(item.cluster);
            const double kl = detail::kl_divergence(p, p_ref);
            for (int w = 0; w < vocab; ++w) {
                const std::size_t wi = static_cast<std::size_t>(w);
                row[w] -= kl_beta * inv_items * p[wi] * (std::log(p[wi] / p_ref[wi]) - kl);
            }
        }
    }
    return grad;
}

/// One ascent step on the clipped objective.
inline void policy_update(ToyPolicy& policy, const ToyPolicy& reference, const TrainingBatch& batch,
                          double clip_eps, double kl_beta, StdMode std_mode = StdMode::Population) {
    const std::vector<double> grad =
        grpo_gradient(policy, reference, batch, clip_eps, kl_beta, std_mode);
    policy.apply_ascent(grad);
}

}  // namespace greso
