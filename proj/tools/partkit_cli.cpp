// Command-line front end over the partkit C API. Exit codes: 0 success
// (shape rejections are not errors), 1 internal/processing error,
// 2 config or schema error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "partkit.h"

namespace {

struct ContextDeleter {
    void operator()(pk_context* ctx) const { pk_context_destroy(ctx); }
};
using ContextPtr = std::unique_ptr<pk_context, ContextDeleter>;

struct StringDeleter {
    void operator()(char* s) const { pk_string_free(s); }
};
using ApiString = std::unique_ptr<char, StringDeleter>;

int exit_code_for(pk_status status) {
    if (status == PK_OK) return 0;
    if (status == PK_ERROR_SCHEMA) return 2;
    return 1;
}

int report_failure(const pk_context* ctx, pk_status status, const std::string& what) {
    std::fprintf(stderr, "error (%s): %s: %s\n", pk_status_name(status), what.c_str(),
                 pk_context_error(ctx));
    return exit_code_for(status);
}

ContextPtr make_context(const std::string& config_path) {
    ContextPtr ctx(pk_context_create(config_path.empty() ? nullptr : config_path.c_str()));
    if (!ctx) {
        std::fprintf(stderr, "error (schema): config failed to load: %s\n", config_path.c_str());
    }
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"part-aware 3D shape processing toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "pipeline config JSON")->envname("PARTKIT_CONFIG");

    // segment
    auto* segment = app.add_subcommand("segment", "run the dataset pipeline over mesh files");
    std::vector<std::string> segment_inputs;
    std::string segment_out;
    segment->add_option("inputs", segment_inputs, "input mesh files (.obj/.gltf/.glb)");
    segment->add_option("--out", segment_out, "output directory")->required();

    // obb
    auto* obb = app.add_subcommand("obb", "minimum OBBs of every mesh in a file");
    std::string obb_input, obb_out;
    obb->add_option("input", obb_input, "mesh file")->required();
    obb->add_option("--out", obb_out, "write layout JSON here instead of stdout");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "layout metrics for a record");
    std::string metrics_record, metrics_layout, metrics_out;
    metrics->add_option("--record", metrics_record, "record JSON")->required();
    metrics->add_option("--layout", metrics_layout, "layout JSON")->required();
    metrics->add_option("--out", metrics_out, "write metrics JSON here instead of stdout");

    // stats
    auto* stats = app.add_subcommand("stats", "corpus statistics over record JSONs");
    std::vector<std::string> stats_records;
    int stats_bins = 20;
    std::string stats_out;
    stats->add_option("records", stats_records, "record JSON files")->required();
    stats->add_option("--bins", stats_bins, "histogram bins");
    stats->add_option("--out", stats_out, "write stats JSON here instead of stdout");

    // optimize
    auto* optimize = app.add_subcommand("optimize", "beam-search layout optimization");
    std::string opt_record, opt_layout, opt_out;
    optimize->add_option("--record", opt_record, "record JSON")->required();
    optimize->add_option("--layout", opt_layout, "layout JSON")->required();
    optimize->add_option("--out", opt_out, "output directory")->required();

    // clean
    auto* clean = app.add_subcommand("clean", "remove floating artifacts outside control boxes");
    std::string clean_record, clean_layout, clean_out;
    clean->add_option("--record", clean_record, "record JSON")->required();
    clean->add_option("--layout", clean_layout, "layout JSON")->required();
    clean->add_option("--out", clean_out, "output directory")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "denoiser-agnostic sampler simulation");
    std::string sim_scenario, sim_out;
    simulate->add_option("--scenario", sim_scenario, "scenario JSON")->required();
    simulate->add_option("--out", sim_out, "output directory")->required();

    // caption
    auto* caption = app.add_subcommand("caption", "caption a record via the external service");
    std::string cap_record;
    std::vector<std::string> cap_images;
    bool cap_mock = false;
    caption->add_option("--record", cap_record, "record JSON")->required();
    caption->add_option("--image", cap_images, "pre-rendered view (repeatable, up to 4)");
    caption->add_flag("--mock", cap_mock, "force deterministic mock captions");

    CLI11_PARSE(app, argc, argv);

    ContextPtr ctx = make_context(config_path);
    if (!ctx) return 2;

    if (segment->parsed()) {
        // Directories expand to the mesh files they contain, sorted for
        // deterministic batch order.
        {
            std::vector<std::string> expanded;
            for (const auto& input : segment_inputs) {
                std::error_code ec;
                if (std::filesystem::is_directory(input, ec)) {
                    std::vector<std::string> found;
                    for (const auto& entry : std::filesystem::directory_iterator(input)) {
                        const std::string ext = entry.path().extension().string();
                        if (ext == ".obj" || ext == ".gltf" || ext == ".glb")
                            found.push_back(entry.path().string());
                    }
                    std::sort(found.begin(), found.end());
                    expanded.insert(expanded.end(), found.begin(), found.end());
                } else {
                    expanded.push_back(input);
                }
            }
            segment_inputs = std::move(expanded);
        }

        // Shapes are independent; process up to the configured degree in
        // parallel, one context per worker, and report in input order.
        const int jobs = std::max(1, pk_parallelism(ctx.get()));
        struct ShapeOutcome {
            pk_status status = PK_OK;
            std::string text;
            std::string error;
        };
        std::vector<ShapeOutcome> outcomes(segment_inputs.size());
        std::atomic<size_t> cursor{0};
        auto worker = [&]() {
            ContextPtr local = make_context(config_path);
            if (!local) return;
            for (;;) {
                const size_t index = cursor.fetch_add(1);
                if (index >= segment_inputs.size()) break;
                char* result = nullptr;
                outcomes[index].status = pk_segment(local.get(),
                                                    segment_inputs[index].c_str(),
                                                    segment_out.c_str(), &result);
                ApiString owned(result);
                if (outcomes[index].status == PK_OK)
                    outcomes[index].text = owned.get();
                else
                    outcomes[index].error = pk_context_error(local.get());
            }
        };
        std::vector<std::thread> pool;
        for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        int worst = 0;
        size_t accepted = 0, rejected = 0;
        for (size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].status != PK_OK) {
                std::fprintf(stderr, "error (%s): %s: %s\n",
                             pk_status_name(outcomes[i].status), segment_inputs[i].c_str(),
                             outcomes[i].error.c_str());
                worst = std::max(worst, exit_code_for(outcomes[i].status));
                continue;
            }
            const bool was_accepted =
                outcomes[i].text.find("\"accepted\": true") != std::string::npos;
            was_accepted ? ++accepted : ++rejected;
            std::printf("%s\n", outcomes[i].text.c_str());
        }
        std::fprintf(stderr, "segment: %zu accepted, %zu rejected, %zu inputs\n", accepted,
                     rejected, segment_inputs.size());
        return worst;
    }

    auto emit = [&](pk_status status, char* result, const std::string& out_path,
                    const std::string& what) {
        ApiString owned(result);
        if (status != PK_OK) return report_failure(ctx.get(), status, what);
        if (out_path.empty()) {
            std::printf("%s\n", owned.get());
        } else {
            std::FILE* f = std::fopen(out_path.c_str(), "wb");
            if (!f) {
                std::fprintf(stderr, "error (io): cannot write %s\n", out_path.c_str());
                return 1;
            }
            std::fputs(owned.get(), f);
            std::fputc('\n', f);
            std::fclose(f);
        }
        return 0;
    };

    if (obb->parsed()) {
        char* result = nullptr;
        const pk_status status = pk_obb(ctx.get(), obb_input.c_str(), &result);
        return emit(status, result, obb_out, obb_input);
    }
    if (metrics->parsed()) {
        char* result = nullptr;
        const pk_status status =
            pk_metrics(ctx.get(), metrics_record.c_str(), metrics_layout.c_str(), &result);
        return emit(status, result, metrics_out, metrics_record);
    }
    if (stats->parsed()) {
        std::vector<const char*> paths;
        for (const auto& r : stats_records) paths.push_back(r.c_str());
        char* result = nullptr;
        const pk_status status =
            pk_stats(ctx.get(), paths.data(), paths.size(), stats_bins, &result);
        return emit(status, result, stats_out, "stats");
    }
    if (optimize->parsed()) {
        char* result = nullptr;
        const pk_status status = pk_optimize(ctx.get(), opt_record.c_str(), opt_layout.c_str(),
                                             opt_out.c_str(), &result);
        return emit(status, result, "", opt_record);
    }
    if (clean->parsed()) {
        char* result = nullptr;
        const pk_status status = pk_clean(ctx.get(), clean_record.c_str(), clean_layout.c_str(),
                                          clean_out.c_str(), &result);
        return emit(status, result, "", clean_record);
    }
    if (simulate->parsed()) {
        char* result = nullptr;
        const pk_status status =
            pk_simulate(ctx.get(), sim_scenario.c_str(), sim_out.c_str(), &result);
        return emit(status, result, "", sim_scenario);
    }
    if (caption->parsed()) {
        if (cap_mock) setenv("CAPTION_MOCK", "1", 1);
        std::vector<const char*> images;
        for (const auto& i : cap_images) images.push_back(i.c_str());
        char* result = nullptr;
        const pk_status status = pk_caption(ctx.get(), cap_record.c_str(),
                                            images.empty() ? nullptr : images.data(),
                                            images.size(), &result);
        ApiString owned(result);
        if (status == PK_ERROR_UNAVAILABLE) {
            // The record proceeds with a null prompt; not a hard failure.
            std::fprintf(stderr, "caption unavailable: %s\n", pk_context_error(ctx.get()));
            std::printf("null\n");
            return 0;
        }
        if (status != PK_OK) return report_failure(ctx.get(), status, cap_record);
        std::printf("%s\n", owned.get());
        return 0;
    }
    return 0;
}
