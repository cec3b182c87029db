#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "partkit.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Ctx {
    pk_context* ptr;
    explicit Ctx(const char* config = nullptr) : ptr(pk_context_create(config)) {}
    ~Ctx() { pk_context_destroy(ptr); }
};

struct Owned {
    char* s = nullptr;
    ~Owned() { pk_string_free(s); }
};

fs::path scratch(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("partkit_capi_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One OBJ with a tabletop and four legs: accepted by default filters.
void write_table_obj(const fs::path& path) {
    std::ostringstream obj;
    auto box = [&](double cx, double cy, double cz, double sx, double sy, double sz,
                   int base) {
        const double hx = sx / 2, hy = sy / 2, hz = sz / 2;
        for (int i = 0; i < 8; ++i)
            obj << "v " << cx + ((i & 1) ? hx : -hx) << " " << cy + ((i & 2) ? hy : -hy) << " "
                << cz + ((i & 4) ? hz : -hz) << "\n";
        const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                                 {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
        for (const auto& q : quads) {
            obj << "f " << base + q[0] + 1 << " " << base + q[1] + 1 << " " << base + q[2] + 1
                << "\n";
            obj << "f " << base + q[0] + 1 << " " << base + q[2] + 1 << " " << base + q[3] + 1
                << "\n";
        }
        return base + 8;
    };
    int base = 0;
    base = box(0, 0.95, 0, 2.0, 0.1, 2.0, base);
    for (double sx : {-0.8, 0.8})
        for (double sz : {-0.8, 0.8}) base = box(sx, 0.45, sz, 0.3, 0.9, 0.3, base);
    std::ofstream out(path);
    out << obj.str();
}

const char* kUnitCubeJson =
    R"({"center":[0,0,0],"half_extents":[0.5,0.5,0.5],"rotation":[0,0,0,1]})";
const char* kShiftedCubeJson =
    R"({"center":[0.5,0,0],"half_extents":[0.5,0.5,0.5],"rotation":[0,0,0,1]})";

}  // namespace

TEST_CASE("context lifecycle, version, status names") {
    Ctx ctx;
    REQUIRE(ctx.ptr != nullptr);
    CHECK(std::string(pk_context_error(ctx.ptr)).empty());
    CHECK(std::string(pk_version()).find('.') != std::string::npos);
    CHECK(std::string(pk_status_name(PK_OK)) == "ok");
    CHECK(std::string(pk_status_name(PK_ERROR_SCHEMA)) == "schema");

    Owned hash;
    REQUIRE(pk_config_hash(ctx.ptr, &hash.s) == PK_OK);
    CHECK(std::string(hash.s).size() == 16);
}

TEST_CASE("context creation fails cleanly on a bad config") {
    const auto dir = scratch("badcfg");
    std::ofstream(dir / "bad.json") << R"({"no_such_key": 1})";
    pk_context* ctx = pk_context_create((dir / "bad.json").string().c_str());
    CHECK(ctx == nullptr);
}

TEST_CASE("pk_obb_iou reproduces analytic values") {
    Ctx ctx;
    double iou = 0.0;
    REQUIRE(pk_obb_iou(ctx.ptr, kUnitCubeJson, kUnitCubeJson, &iou) == PK_OK);
    CHECK(iou == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(pk_obb_iou(ctx.ptr, kUnitCubeJson, kShiftedCubeJson, &iou) == PK_OK);
    CHECK(iou == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    CHECK(pk_obb_iou(ctx.ptr, "{", kUnitCubeJson, &iou) == PK_ERROR_SCHEMA);
    CHECK(std::string(pk_context_error(ctx.ptr)).size() > 0);
    CHECK(pk_obb_iou(ctx.ptr, nullptr, kUnitCubeJson, &iou) == PK_ERROR_ARGUMENT);
}

TEST_CASE("pk_segment writes a record and reports acceptance; reruns are byte-identical") {
    Ctx ctx;
    const auto dir = scratch("segment");
    write_table_obj(dir / "table.obj");

    Owned first;
    REQUIRE(pk_segment(ctx.ptr, (dir / "table.obj").string().c_str(),
                       (dir / "out").string().c_str(), &first.s) == PK_OK);
    const json report = json::parse(first.s);
    CHECK(report.at("accepted").get<bool>());
    const fs::path record_path = report.at("record_path").get<std::string>();
    CHECK(fs::exists(record_path));
    const std::string record_bytes = slurp(record_path);

    Owned second;
    REQUIRE(pk_segment(ctx.ptr, (dir / "table.obj").string().c_str(),
                       (dir / "out2").string().c_str(), &second.s) == PK_OK);
    const json report2 = json::parse(second.s);
    CHECK(slurp(report2.at("record_path").get<std::string>()) == record_bytes);

    // The record carries the context's config hash.
    Owned hash;
    pk_config_hash(ctx.ptr, &hash.s);
    CHECK(record_bytes.find(hash.s) != std::string::npos);
}

TEST_CASE("pk_segment surfaces io errors") {
    Ctx ctx;
    const auto dir = scratch("segment_missing");
    Owned out;
    CHECK(pk_segment(ctx.ptr, "/does/not/exist.obj", dir.string().c_str(), &out.s) ==
          PK_ERROR_IO);
    CHECK(std::string(pk_context_error(ctx.ptr)).find("load") != std::string::npos);
}

TEST_CASE("pk_obb, pk_metrics and pk_optimize agree on a perfect record") {
    Ctx ctx;
    const auto dir = scratch("metrics");
    write_table_obj(dir / "table.obj");
    Owned seg;
    REQUIRE(pk_segment(ctx.ptr, (dir / "table.obj").string().c_str(),
                       (dir / "out").string().c_str(), &seg.s) == PK_OK);
    const std::string record_path = json::parse(seg.s).at("record_path").get<std::string>();

    // Layout = the record's own boxes, so everything aligns perfectly.
    const json record = json::parse(slurp(record_path));
    json layout;
    layout["prompt"] = "table";
    layout["boxes"] = record.at("obbs");
    std::ofstream(dir / "layout.json") << layout.dump();

    Owned metrics;
    REQUIRE(pk_metrics(ctx.ptr, record_path.c_str(), (dir / "layout.json").string().c_str(),
                       &metrics.s) == PK_OK);
    const json m = json::parse(metrics.s);
    CHECK(m.at("mean_part_iou").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    // Whole-object box vs union of thin part boxes: well below 1 for a
    // table, but strictly positive and bounded.
    CHECK(m.at("object_iou").get<double>() > 0.05);
    CHECK(m.at("object_iou").get<double>() <= 1.0);
    CHECK(m.at("object_iou_stderr").get<double>() < 0.01);
    CHECK(m.at("voxel_iou").get<double>() >= 0.5);
    CHECK(m.at("part_iou").size() == record.at("obbs").size());

    Owned opt;
    REQUIRE(pk_optimize(ctx.ptr, record_path.c_str(), (dir / "layout.json").string().c_str(),
                        (dir / "opt").string().c_str(), &opt.s) == PK_OK);
    const json o = json::parse(opt.s);
    CHECK(o.at("final_score").get<double>() >= o.at("initial_score").get<double>() - 1e-12);
    CHECK(fs::exists(dir / "opt" / "transform.json"));
    CHECK(fs::exists(dir / "opt" / "trace.csv"));
    CHECK(fs::exists(dir / "opt" / "part_000.obj"));
}

TEST_CASE("pk_stats aggregates record statistics") {
    Ctx ctx;
    const auto dir = scratch("stats");
    write_table_obj(dir / "table.obj");
    Owned seg;
    REQUIRE(pk_segment(ctx.ptr, (dir / "table.obj").string().c_str(),
                       (dir / "out").string().c_str(), &seg.s) == PK_OK);
    const std::string record_path = json::parse(seg.s).at("record_path").get<std::string>();
    const char* paths[2] = {record_path.c_str(), record_path.c_str()};

    Owned stats;
    REQUIRE(pk_stats(ctx.ptr, paths, 2, 10, &stats.s) == PK_OK);
    const json s = json::parse(stats.s);
    CHECK(s.at("sample_count").get<int>() == 2);
    CHECK(s.at("mean_part_iou").at("threshold").get<double>() == 0.10);
    CHECK(s.at("largest_rest_ratio").at("threshold").get<double>() == 3.0);
}

TEST_CASE("pk_clean removes a planted floater through the C surface") {
    Ctx ctx;
    const auto dir = scratch("clean");

    // Record with one part: slab inside its box plus a distant floater.
    json box = json::parse(kUnitCubeJson);
    json record;
    {
        std::ostringstream obj;
        obj << "v -0.5 -0.5 -0.5\nv 0.5 -0.5 -0.5\nv -0.5 0.5 -0.5\nv 0.5 0.5 -0.5\n"
            << "v -0.5 -0.5 0.5\nv 0.5 -0.5 0.5\nv -0.5 0.5 0.5\nv 0.5 0.5 0.5\n"
            << "f 1 5 7\nf 1 7 3\nf 2 4 8\nf 2 8 6\nf 1 2 6\nf 1 6 5\n"
            << "f 3 7 8\nf 3 8 4\nf 1 3 4\nf 1 4 2\nf 5 6 8\nf 5 8 7\n"
            // floater far outside
            << "v 2.0 0 0\nv 2.1 0 0\nv 2.0 0.1 0\nv 2.0 0 0.1\n"
            << "f 9 10 11\nf 9 11 12\nf 9 12 10\nf 10 12 11\n";
        std::ofstream(dir / "part_000.obj") << obj.str();
        record["parts"] = {"part_000.obj"};
        record["obbs"] = {box};
        record["prompt"] = nullptr;
        std::ofstream(dir / "record.json") << record.dump();
    }
    json layout;
    layout["prompt"] = "";
    layout["boxes"] = {box};
    std::ofstream(dir / "layout.json") << layout.dump();

    Owned report;
    REQUIRE(pk_clean(ctx.ptr, (dir / "record.json").string().c_str(),
                     (dir / "layout.json").string().c_str(), (dir / "cleaned").string().c_str(),
                     &report.s) == PK_OK);
    const json r = json::parse(report.s);
    CHECK(r.at("parts").at(0).at("components_before").get<int>() == 2);
    CHECK(r.at("parts").at(0).at("removed_components").get<int>() == 1);
    const std::string cleaned = slurp(dir / "cleaned" / "part_000.obj");
    CHECK(cleaned.find("2.1") == std::string::npos);  // floater gone
}

TEST_CASE("pk_simulate runs a linear-field scenario end to end") {
    Ctx ctx;
    const auto dir = scratch("simulate");
    json scenario = {
        {"parts", json::array({{{"part_id", 0}, {"token_count", 8}, {"dim", 4}}})},
        {"config", {{"steps", 50}, {"tsr_k", 1.0}}},
        {"field", {{"kind", "linear"}, {"target_value", 1.0}}},
    };
    std::ofstream(dir / "scenario.json") << scenario.dump();

    Owned summary;
    REQUIRE(pk_simulate(ctx.ptr, (dir / "scenario.json").string().c_str(),
                        (dir / "run").string().c_str(), &summary.s) == PK_OK);
    const json s = json::parse(summary.s);
    // Endpoint = target 1.0 in every entry: Frobenius norm sqrt(32).
    CHECK(s.at("final_norms").at(0).get<double>() ==
          doctest::Approx(std::sqrt(32.0)).epsilon(1e-6));
    CHECK(fs::exists(dir / "run" / "trace.csv"));
    CHECK(fs::exists(dir / "run" / "latents.bin"));

    const std::string trace = slurp(dir / "run" / "trace.csv");
    CHECK(trace.rfind("step,t,alpha_c,lambda_t,norm_part0", 0) == 0);

    json bad = scenario;
    bad["field"]["kind"] = "warp";
    std::ofstream(dir / "bad.json") << bad.dump();
    Owned bad_summary;
    CHECK(pk_simulate(ctx.ptr, (dir / "bad.json").string().c_str(),
                      (dir / "run2").string().c_str(), &bad_summary.s) == PK_ERROR_SCHEMA);
}

TEST_CASE("pk_caption mock mode is deterministic; live mode talks HTTP and retries") {
    const auto dir = scratch("caption");
    write_table_obj(dir / "table.obj");
    Ctx ctx;
    Owned seg;
    REQUIRE(pk_segment(ctx.ptr, (dir / "table.obj").string().c_str(),
                       (dir / "out").string().c_str(), &seg.s) == PK_OK);
    const std::string record_path = json::parse(seg.s).at("record_path").get<std::string>();

    setenv("CAPTION_MOCK", "1", 1);
    Owned mock1, mock2;
    REQUIRE(pk_caption(ctx.ptr, record_path.c_str(), nullptr, 0, &mock1.s) == PK_OK);
    REQUIRE(pk_caption(ctx.ptr, record_path.c_str(), nullptr, 0, &mock2.s) == PK_OK);
    CHECK(std::string(mock1.s) == std::string(mock2.s));
    CHECK(std::string(mock1.s).find("mock caption") != std::string::npos);
    unsetenv("CAPTION_MOCK");

    // Canned-response server.
    httplib::Server server;
    std::atomic<int> failures_left{2};
    server.Post("/caption", [&](const httplib::Request& req, httplib::Response& res) {
        if (failures_left.fetch_sub(1) > 0) {
            res.status = 500;
            return;
        }
        const json body = json::parse(req.body);
        REQUIRE(body.at("images").size() == 1);
        res.set_content(json{{"caption", "a sturdy four-legged table"}}.dump(),
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    while (!server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    // Tiny placeholder image file.
    std::ofstream(dir / "view.png") << "not really a png";
    const std::string image_path = (dir / "view.png").string();
    const char* images[1] = {image_path.c_str()};

    // Config: endpoint + fast backoff so the two 500s retry quickly.
    std::ofstream(dir / "cfg.json") << json{
        {"caption",
         {{"endpoint", "http://127.0.0.1:" + std::to_string(port) + "/caption"},
          {"retries", 3},
          {"backoff_ms", 10}}}}.dump();
    Ctx live((dir / "cfg.json").string().c_str());
    REQUIRE(live.ptr != nullptr);

    Owned caption;
    REQUIRE(pk_caption(live.ptr, record_path.c_str(), images, 1, &caption.s) == PK_OK);
    CHECK(std::string(caption.s) == "a sturdy four-legged table");

    // A server that always fails exhausts the retries.
    failures_left.store(1000);
    Owned failed;
    CHECK(pk_caption(live.ptr, record_path.c_str(), images, 1, &failed.s) ==
          PK_ERROR_UNAVAILABLE);
    CHECK(std::string(pk_context_error(live.ptr)).find("caption-unavailable") !=
          std::string::npos);

    server.stop();
    server_thread.join();
}
