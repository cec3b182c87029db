#include "partkit/caption.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "partkit/rng.hpp"
#include "partkit/serialization.hpp"

namespace partkit {

namespace {

std::string base64_encode(const std::string& data) {
    static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < data.size()) {
        const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                           (static_cast<unsigned char>(data[i + 1]) << 8) |
                           static_cast<unsigned char>(data[i + 2]);
        out.push_back(table[(v >> 18) & 63]);
        out.push_back(table[(v >> 12) & 63]);
        out.push_back(table[(v >> 6) & 63]);
        out.push_back(table[v & 63]);
        i += 3;
    }
    if (i + 1 == data.size()) {
        const unsigned v = static_cast<unsigned char>(data[i]) << 16;
        out.push_back(table[(v >> 18) & 63]);
        out.push_back(table[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == data.size()) {
        const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                           (static_cast<unsigned char>(data[i + 1]) << 8);
        out.push_back(table[(v >> 18) & 63]);
        out.push_back(table[(v >> 12) & 63]);
        out.push_back(table[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw Error(ErrorCode::invalid_argument, "caption endpoint must include a scheme: " +
                                                     endpoint);
    const std::size_t path_start = endpoint.find('/', scheme + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

bool env_flag(const char* name) {
    const char* v = std::getenv(name);
    return v != nullptr && v[0] != '\0' && std::string(v) != "0";
}

}  // namespace

std::string mock_caption(const ShapeRecord& record) {
    // Hash the geometry-bearing fields so the placeholder is stable
    // across runs but distinct per shape.
    std::ostringstream key;
    key << record.provenance.source << "|" << record.stats.part_count;
    for (const auto& obb : record.obbs)
        key << "|" << obb.center.x() << "," << obb.center.y() << "," << obb.center.z() << ","
            << obb.half_extents.x() << "," << obb.half_extents.y() << ","
            << obb.half_extents.z();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(key.str())));
    std::ostringstream caption;
    caption << "An object composed of " << record.stats.part_count
            << (record.stats.part_count == 1 ? " part" : " parts") << " (mock caption " << hex
            << ")";
    return caption.str();
}

std::string caption_request(const ShapeRecord& record, const CaptionRequest& request,
                            const CaptionConfig& config) {
    if (config.mock || env_flag("CAPTION_MOCK")) return mock_caption(record);

    std::string endpoint = config.endpoint;
    if (const char* env = std::getenv("CAPTION_ENDPOINT"); env && env[0] != '\0') endpoint = env;
    if (endpoint.empty())
        throw Error(ErrorCode::invalid_argument,
                    "no caption endpoint configured (set CAPTION_ENDPOINT or caption.endpoint)");

    if (request.images.empty() || request.images.size() > 4)
        throw Error(ErrorCode::invalid_argument, "caption request needs 1..4 images");
    if (request.prompt_template.empty())
        throw Error(ErrorCode::invalid_argument, "caption request needs a prompt template");

    nlohmann::json body;
    body["prompt"] = request.prompt_template;
    body["images"] = nlohmann::json::array();
    for (const auto& image : request.images) {
        std::ifstream in(image, std::ios::binary);
        if (!in) throw Error(ErrorCode::io, "cannot open image: " + image.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        body["images"].push_back(base64_encode(ss.str()));
    }

    const auto [base, path] = split_endpoint(endpoint);
    std::string last_failure;
    for (int attempt = 0; attempt < std::max(config.retries, 1); ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config.backoff_ms * (1 << (attempt - 1))));
        httplib::Client client(base);
        client.set_connection_timeout(5, 0);
        client.set_read_timeout(30, 0);
        auto response = client.Post(path, body.dump(), "application/json");
        if (!response) {
            last_failure = "connection failed";
            continue;
        }
        if (response->status != 200) {
            last_failure = "HTTP " + std::to_string(response->status);
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(response->body);
            return j.at("caption").get<std::string>();
        } catch (const std::exception& e) {
            last_failure = std::string("bad response body: ") + e.what();
        }
    }
    throw Error(ErrorCode::unavailable, "caption-unavailable after " +
                                            std::to_string(std::max(config.retries, 1)) +
                                            " attempts (" + last_failure + ")");
}

}  // namespace partkit
