#include "partkit/sampler.hpp"

#include <cmath>

namespace partkit {

namespace {

void check_same_shape(const LatentSet& a, const LatentSet& b, const char* what) {
    if (a.size() != b.size())
        throw Error(ErrorCode::mismatch, std::string(what) + ": block count mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].part_id != b[i].part_id)
            throw Error(ErrorCode::mismatch,
                        std::string(what) + ": part_id mismatch at block " + std::to_string(i));
        if (a[i].tokens.rows() != b[i].tokens.rows() || a[i].tokens.cols() != b[i].tokens.cols())
            throw Error(ErrorCode::mismatch,
                        std::string(what) + ": token shape mismatch at block " +
                            std::to_string(i));
    }
}

void check_finite(const LatentSet& set, const char* what) {
    for (const auto& block : set)
        if (!block.tokens.allFinite())
            throw Error(ErrorCode::invalid_argument,
                        std::string(what) + ": non-finite entries in part " +
                            std::to_string(block.part_id));
}

}  // namespace

AnnealState anneal_step(const AnnealState& state, double beta) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw Error(ErrorCode::invalid_argument, "anneal_step: beta must be in (0, 1]");
    return AnnealState{state.alpha_c * beta, state.applications + 1};
}

LatentSet rf_step(const LatentSet& x, const LatentSet& v, double t, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "rf_step: dt must be > 0");
    if (t + dt > 1.0 + 1e-9)
        throw Error(ErrorCode::invalid_argument, "rf_step: t + dt exceeds 1");
    check_same_shape(x, v, "rf_step");
    LatentSet out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].tokens += dt * v[i].tokens;
    return out;
}

LatentSet cfg_combine(const LatentSet& v_pos, const LatentSet& v_neg, double omega) {
    check_same_shape(v_pos, v_neg, "cfg_combine");
    LatentSet out = v_neg;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].tokens += omega * (v_pos[i].tokens - v_neg[i].tokens);
    return out;
}

LatentSet apply_freeze(const LatentSet& latents, const LatentSet& reference,
                       const std::vector<bool>& mask) {
    if (mask.size() != latents.size())
        throw Error(ErrorCode::mismatch, "apply_freeze: mask size mismatch");
    LatentSet out = latents;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask[i]) continue;
        if (i >= reference.size() || reference[i].part_id != out[i].part_id ||
            reference[i].tokens.rows() != out[i].tokens.rows() ||
            reference[i].tokens.cols() != out[i].tokens.cols())
            throw Error(ErrorCode::mismatch, "apply_freeze: missing reference for masked part " +
                                                 std::to_string(out[i].part_id));
        out[i].tokens = reference[i].tokens;
        out[i].frozen = true;
    }
    return out;
}

LatentSet apply_tsr(const LatentSet& v, double k, double t, const TsrCallback& callback) {
    if (!(k > 0.0 && k <= 1.0))
        throw Error(ErrorCode::invalid_argument, "apply_tsr: k must be in (0, 1]");
    if (callback) return callback(v, k, t);
    if (k == 1.0) return v;
    LatentSet out = v;
    for (auto& block : out) block.tokens *= k;
    return out;
}

double kv_schedule_lambda(int step, int total_steps, const KvSchedule& schedule) {
    if (step < 0 || step >= total_steps)
        throw Error(ErrorCode::invalid_argument, "kv_schedule: step out of range");
    if (schedule.name == "constant") return schedule.constant_value;
    if (schedule.name == "linear") {
        if (total_steps == 1) return schedule.lambda_start;
        return schedule.lambda_start *
               (1.0 - static_cast<double>(step) / static_cast<double>(total_steps - 1));
    }
    throw Error(ErrorCode::invalid_argument, "kv_schedule: unknown schedule " + schedule.name);
}

KvPair blend_kv(const KvPair& cached, const KvPair& fresh, double lambda_t) {
    if (!(lambda_t >= 0.0 && lambda_t <= 1.0))
        throw Error(ErrorCode::invalid_argument, "blend_kv: lambda must be in [0, 1]");
    if (cached.keys.rows() != fresh.keys.rows() || cached.keys.cols() != fresh.keys.cols() ||
        cached.values.rows() != fresh.values.rows() ||
        cached.values.cols() != fresh.values.cols())
        throw Error(ErrorCode::mismatch, "blend_kv: cached/fresh shape mismatch");
    KvPair out;
    out.keys = lambda_t * cached.keys + (1.0 - lambda_t) * fresh.keys;
    out.values = lambda_t * cached.values + (1.0 - lambda_t) * fresh.values;
    return out;
}

SampleResult sample(const LatentSet& initial, const SampleInputs& inputs) {
    const SamplerConfig& cfg = inputs.config;
    if (!inputs.denoiser) throw Error(ErrorCode::invalid_argument, "sample: no denoiser");
    if (cfg.steps < 1) throw Error(ErrorCode::invalid_argument, "sample: steps must be >= 1");
    if (cfg.layers_per_pass < 1)
        throw Error(ErrorCode::invalid_argument, "sample: layers_per_pass must be >= 1");
    if (cfg.cfg_scale < 0.0)
        throw Error(ErrorCode::invalid_argument, "sample: cfg_scale must be >= 0");
    check_finite(initial, "sample: initial latents");

    const bool freezing = inputs.freeze_mask.has_value();
    if (freezing) {
        if (!inputs.reference_states)
            throw Error(ErrorCode::invalid_argument,
                        "sample: freeze mask given without reference trajectory");
        if (inputs.reference_states->size() != static_cast<std::size_t>(cfg.steps) + 1)
            throw Error(ErrorCode::mismatch,
                        "sample: reference trajectory must hold steps + 1 states");
    }

    const double dt = 1.0 / static_cast<double>(cfg.steps);
    AnnealState anneal;  // alpha_c = 1 before the first pass

    SampleResult result;
    LatentSet x = initial;
    if (freezing) x = apply_freeze(x, (*inputs.reference_states)[0], *inputs.freeze_mask);
    result.states.push_back(x);

    for (int step = 0; step < cfg.steps; ++step) {
        try {
            const double t = static_cast<double>(step) * dt;

            SamplerTraceRow row;
            row.step = step;
            row.t = t;
            row.alpha_positive = 1.0;

            // The negative branch sees the strength of its first layer
            // pass this step; each pass then decays alpha once.
            row.alpha_per_layer.reserve(cfg.layers_per_pass);
            for (int layer = 0; layer < cfg.layers_per_pass; ++layer) {
                row.alpha_per_layer.push_back(anneal.alpha_c);
                anneal = anneal_step(anneal, cfg.anneal_beta);
            }

            const LatentSet v_pos = inputs.denoiser(x, t, row.alpha_positive, Branch::positive);
            check_same_shape(x, v_pos, "sample: positive velocity");
            const LatentSet v_neg =
                inputs.denoiser(x, t, row.alpha_per_layer.front(), Branch::negative);
            check_same_shape(x, v_neg, "sample: negative velocity");

            LatentSet v = cfg_combine(v_pos, v_neg, cfg.cfg_scale);
            v = apply_tsr(v, cfg.tsr_k, t, inputs.tsr);
            x = rf_step(x, v, t, dt);
            if (freezing)
                x = apply_freeze(x, (*inputs.reference_states)[step + 1], *inputs.freeze_mask);

            row.lambda_t = kv_schedule_lambda(step, cfg.steps, cfg.kv_schedule);
            if (inputs.kv_cache && inputs.kv_fresh) {
                for (int layer = 0; layer < cfg.layers_per_pass; ++layer)
                    for (std::size_t p = 0; p < x.size(); ++p) {
                        const auto key = std::make_tuple(step, layer, x[p].part_id);
                        const auto it = inputs.kv_cache->entries.find(key);
                        if (it == inputs.kv_cache->entries.end()) continue;
                        result.blended.entries[key] = blend_kv(
                            it->second, inputs.kv_fresh(step, layer, x[p].part_id, x),
                            row.lambda_t);
                    }
            }

            row.part_norms.reserve(x.size());
            for (const auto& block : x) row.part_norms.push_back(block.tokens.norm());
            result.trace.push_back(std::move(row));
            result.states.push_back(x);
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(step) + ": " + e.what());
        }
    }

    result.final_latents = x;
    return result;
}

}  // namespace partkit
