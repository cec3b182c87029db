#ifndef PARTKIT_SAMPLER_HPP
#define PARTKIT_SAMPLER_HPP

#include <functional>
#include <map>
#include <tuple>

#include "partkit/metrics.hpp"
#include "partkit/types.hpp"

namespace partkit {

/// Abstract per-part token block standing in for a part latent.
struct LatentBlock {
    int part_id = 0;
    Eigen::MatrixXd tokens;  // token_count x dim
    bool frozen = false;
};

using LatentSet = std::vector<LatentBlock>;

enum class Branch { positive, negative };

/// The injected stand-in for the denoising network: maps (latents, time,
/// layout-control strength, CFG branch) to a velocity of the same shape.
using DenoiserFn =
    std::function<LatentSet(const LatentSet& latents, double t, double alpha_c, Branch branch)>;

struct KvSchedule {
    std::string name = "linear";  // "linear" or "constant"
    double lambda_start = 0.8;
    double constant_value = 0.5;
};

struct SamplerConfig {
    int steps = 50;
    double cfg_scale = 6.5;
    double anneal_beta = 0.99;
    double tsr_k = 0.98;
    int layers_per_pass = 1;  // layout cross-attention passes per step
    std::string negative_prompt = "Low-poly, minimal, blocky";
    KvSchedule kv_schedule;
};

/// Layout-control strength of the negative CFG branch. alpha_c is
/// always beta^applications.
struct AnnealState {
    double alpha_c = 1.0;
    long applications = 0;
};

AnnealState anneal_step(const AnnealState& state, double beta);

/// Euler step x' = x + dt * v, elementwise over all blocks.
LatentSet rf_step(const LatentSet& x, const LatentSet& v, double t, double dt);

/// v_neg + omega * (v_pos - v_neg).
LatentSet cfg_combine(const LatentSet& v_pos, const LatentSet& v_neg, double omega);

/// Replace masked parts' tokens with the reference tokens; unmasked
/// parts pass through. Throws missing-reference when a masked part has
/// no counterpart.
LatentSet apply_freeze(const LatentSet& latents, const LatentSet& reference,
                       const std::vector<bool>& mask);

using TsrCallback = std::function<LatentSet(const LatentSet& v, double k, double t)>;

/// Temporal rescaling hook: pass-through at k = 1; the shipped default
/// callback is a plain elementwise multiply by k; a custom callback
/// replaces it verbatim.
LatentSet apply_tsr(const LatentSet& v, double k, double t, const TsrCallback& callback = {});

double kv_schedule_lambda(int step, int total_steps, const KvSchedule& schedule);

struct KvPair {
    Eigen::MatrixXd keys;
    Eigen::MatrixXd values;
};

/// lambda * cached + (1 - lambda) * fresh for both matrices.
KvPair blend_kv(const KvPair& cached, const KvPair& fresh, double lambda_t);

/// Keyed by (step, layer, part).
struct KvCache {
    std::map<std::tuple<int, int, int>, KvPair> entries;
};

struct SamplerTraceRow {
    int step = 0;
    double t = 0.0;
    double alpha_positive = 1.0;
    std::vector<double> alpha_per_layer;  // negative branch, beta^(step*L + layer)
    double lambda_t = 0.0;
    std::vector<double> part_norms;  // Frobenius norms after the step
};

struct SampleResult {
    LatentSet final_latents;
    std::vector<LatentSet> states;  // states[0] = initial, states[i+1] after step i
    std::vector<SamplerTraceRow> trace;
    KvCache blended;  // populated when a cache and fresh source are given
};

struct SampleInputs {
    DenoiserFn denoiser;
    SamplerConfig config;
    Layout layout;  // conditioning context, forwarded to closures that capture it
    std::optional<std::vector<bool>> freeze_mask;
    const std::vector<LatentSet>* reference_states = nullptr;  // required with a mask
    const KvCache* kv_cache = nullptr;
    std::function<KvPair(int step, int layer, int part, const LatentSet& latents)> kv_fresh;
    TsrCallback tsr;
};

/// Full inference loop: per step, the positive branch runs at
/// alpha_c = 1, the negative branch at the annealed alpha_c (which
/// decays once per layer pass after use), the branches are combined
/// with cfg_scale, temporally rescaled, Euler-integrated, and frozen
/// parts restored from the reference trajectory.
SampleResult sample(const LatentSet& initial, const SampleInputs& inputs);

}  // namespace partkit

#endif
