#include "partkit/scenario.hpp"

#include <random>

#include "partkit/rng.hpp"
#include "partkit/serialization.hpp"

namespace partkit {

namespace {

using nlohmann::json;

LatentSet constant_like(const LatentSet& shape, double value) {
    LatentSet out = shape;
    for (auto& block : out) block.tokens.setConstant(value);
    return out;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) throw Error(ErrorCode::schema, "scenario: unknown key " + where + "/" + key);
    }
}

}  // namespace

DenoiserFn make_field(const json& spec, const LatentSet& initial) {
    const std::string kind = spec.at("kind").get<std::string>();

    if (kind == "linear") {
        const double target = spec.value("target_value", 1.0);
        const LatentSet x0 = initial;
        return [x0, target](const LatentSet& x, double, double, Branch) {
            LatentSet v = x;
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i].tokens = Eigen::MatrixXd::Constant(x[i].tokens.rows(), x[i].tokens.cols(),
                                                        target) -
                              x0[i].tokens;
            return v;
        };
    }
    if (kind == "contracting") {
        return [](const LatentSet& x, double, double, Branch) {
            LatentSet v = x;
            for (auto& block : v) block.tokens = -block.tokens;
            return v;
        };
    }
    if (kind == "branch_affine") {
        const double pos = spec.value("positive_target", 1.0);
        const double neg = spec.value("negative_target", 0.0);
        return [pos, neg](const LatentSet& x, double, double, Branch branch) {
            const double target = branch == Branch::positive ? pos : neg;
            LatentSet v = x;
            for (auto& block : v)
                block.tokens =
                    Eigen::MatrixXd::Constant(block.tokens.rows(), block.tokens.cols(), target) -
                    block.tokens;
            return v;
        };
    }
    if (kind == "layout_pull") {
        const double target = spec.value("target_value", 1.0);
        return [target](const LatentSet& x, double, double alpha_c, Branch) {
            LatentSet v = x;
            for (auto& block : v)
                block.tokens =
                    alpha_c *
                    (Eigen::MatrixXd::Constant(block.tokens.rows(), block.tokens.cols(), target) -
                     block.tokens);
            return v;
        };
    }
    throw Error(ErrorCode::schema, "scenario: unknown field kind '" + kind + "'");
}

Scenario scenario_from_json(const json& j) {
    reject_unknown_keys(
        j, {"config", "parts", "init", "field", "reference_field", "freeze_mask", "layout"}, "");

    Scenario s;
    if (j.contains("config")) {
        const json& c = j.at("config");
        reject_unknown_keys(c,
                            {"steps", "cfg_scale", "anneal_beta", "tsr_k", "layers_per_pass",
                             "negative_prompt", "kv_blend_schedule", "kv_lambda_start",
                             "kv_constant_value"},
                            "/config");
        s.config.steps = c.value("steps", s.config.steps);
        s.config.cfg_scale = c.value("cfg_scale", s.config.cfg_scale);
        s.config.anneal_beta = c.value("anneal_beta", s.config.anneal_beta);
        s.config.tsr_k = c.value("tsr_k", s.config.tsr_k);
        s.config.layers_per_pass = c.value("layers_per_pass", s.config.layers_per_pass);
        s.config.negative_prompt = c.value("negative_prompt", s.config.negative_prompt);
        s.config.kv_schedule.name = c.value("kv_blend_schedule", s.config.kv_schedule.name);
        s.config.kv_schedule.lambda_start =
            c.value("kv_lambda_start", s.config.kv_schedule.lambda_start);
        s.config.kv_schedule.constant_value =
            c.value("kv_constant_value", s.config.kv_schedule.constant_value);
    }

    const json& parts = j.at("parts");
    if (!parts.is_array() || parts.empty())
        throw Error(ErrorCode::schema, "scenario: parts must be a nonempty array");
    for (const auto& p : parts) {
        reject_unknown_keys(p, {"part_id", "token_count", "dim"}, "/parts[]");
        LatentBlock block;
        block.part_id = p.at("part_id").get<int>();
        const int rows = p.at("token_count").get<int>();
        const int cols = p.at("dim").get<int>();
        if (rows < 1 || cols < 1)
            throw Error(ErrorCode::schema, "scenario: token_count and dim must be >= 1");
        block.tokens = Eigen::MatrixXd::Zero(rows, cols);
        s.initial.push_back(std::move(block));
    }

    if (j.contains("init")) {
        const json& init = j.at("init");
        reject_unknown_keys(init, {"kind", "value", "seed"}, "/init");
        const std::string kind = init.value("kind", "zeros");
        if (kind == "zeros") {
            // already zeroed
        } else if (kind == "constant") {
            s.initial = constant_like(s.initial, init.value("value", 0.0));
        } else if (kind == "random") {
            std::mt19937_64 rng(init.value("seed", std::uint64_t{0}));
            for (auto& block : s.initial)
                for (Eigen::Index r = 0; r < block.tokens.rows(); ++r)
                    for (Eigen::Index c = 0; c < block.tokens.cols(); ++c)
                        block.tokens(r, c) = 2.0 * uniform_double(rng) - 1.0;
        } else {
            throw Error(ErrorCode::schema, "scenario: unknown init kind '" + kind + "'");
        }
    }

    s.field_spec = j.at("field");
    if (j.contains("freeze_mask")) {
        const json& mask = j.at("freeze_mask");
        if (!mask.is_array() || mask.size() != s.initial.size())
            throw Error(ErrorCode::schema, "scenario: freeze_mask size must match parts");
        std::vector<bool> m;
        for (const auto& b : mask) m.push_back(b.get<bool>());
        s.freeze_mask = std::move(m);
        if (!j.contains("reference_field"))
            throw Error(ErrorCode::schema,
                        "scenario: freeze_mask requires a reference_field to freeze against");
    }
    if (j.contains("reference_field")) s.reference_field_spec = j.at("reference_field");
    if (j.contains("layout")) s.layout = layout_from_json(j.at("layout"));
    return s;
}

ScenarioOutcome run_scenario(const Scenario& scenario) {
    ScenarioOutcome outcome;

    std::vector<LatentSet> reference_states;
    if (scenario.freeze_mask) {
        SampleInputs ref_inputs;
        ref_inputs.denoiser = make_field(scenario.reference_field_spec, scenario.initial);
        ref_inputs.config = scenario.config;
        ref_inputs.layout = scenario.layout;
        outcome.reference = sample(scenario.initial, ref_inputs);
        reference_states = outcome.reference->states;
    }

    SampleInputs inputs;
    inputs.denoiser = make_field(scenario.field_spec, scenario.initial);
    inputs.config = scenario.config;
    inputs.layout = scenario.layout;
    if (scenario.freeze_mask) {
        inputs.freeze_mask = scenario.freeze_mask;
        inputs.reference_states = &reference_states;
    }
    outcome.result = sample(scenario.initial, inputs);
    return outcome;
}

}  // namespace partkit
