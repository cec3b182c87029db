#ifndef PARTKIT_SCENARIO_HPP
#define PARTKIT_SCENARIO_HPP

#include <nlohmann/json.hpp>

#include "partkit/sampler.hpp"

namespace partkit {

/// A declarative sampling run: analytic velocity field, sampler config,
/// block shapes, initial latents, optional freezing against a reference
/// field. This is how the simulator runs without any network.
struct Scenario {
    SamplerConfig config;
    LatentSet initial;
    nlohmann::json field_spec;
    nlohmann::json reference_field_spec;  // null unless freezing
    std::optional<std::vector<bool>> freeze_mask;
    Layout layout;
};

Scenario scenario_from_json(const nlohmann::json& j);

/// Build the analytic velocity field named by `spec`:
///  - "linear":        v = target - x0 (constant; exact for Euler)
///  - "contracting":   v = -x
///  - "branch_affine": v = target_branch - x (per CFG branch)
///  - "layout_pull":   v = alpha_c * (target - x)
DenoiserFn make_field(const nlohmann::json& spec, const LatentSet& initial);

struct ScenarioOutcome {
    SampleResult result;
    std::optional<SampleResult> reference;
};

ScenarioOutcome run_scenario(const Scenario& scenario);

}  // namespace partkit

#endif
