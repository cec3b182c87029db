#ifndef PARTKIT_CAPTION_HPP
#define PARTKIT_CAPTION_HPP

#include <filesystem>

#include "partkit/config.hpp"
#include "partkit/segmentation.hpp"

namespace partkit {

/// Request payload for the external captioning service: up to four
/// pre-rendered views (the 2x2 collage convention) plus the prompt.
struct CaptionRequest {
    std::vector<std::filesystem::path> images;
    std::string prompt_template;
};

/// Deterministic stand-in caption derived from the record contents.
std::string mock_caption(const ShapeRecord& record);

/// POST {"images": [base64...], "prompt": template} to the endpoint and
/// return the response's "caption" field. Retries with exponential
/// backoff; after the final attempt throws unavailable so the caller
/// can proceed with a null prompt. Mock mode (config or CAPTION_MOCK=1)
/// never touches the network. CAPTION_ENDPOINT overrides the config
/// endpoint.
std::string caption_request(const ShapeRecord& record, const CaptionRequest& request,
                            const CaptionConfig& config);

}  // namespace partkit

#endif
