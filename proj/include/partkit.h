/* partkit C API: part-aware 3D shape processing behind a stable ABI.
 *
 * All entry points are thread-compatible: distinct contexts may be used
 * from distinct threads freely; a single context must not be shared
 * concurrently (it carries the last error message).
 *
 * Strings returned through char** out-parameters are heap-allocated and
 * must be released with pk_string_free.
 */
#ifndef PARTKIT_H
#define PARTKIT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pk_status {
    PK_OK = 0,
    PK_ERROR_IO = 1,         /* file unreadable/unwritable */
    PK_ERROR_FORMAT = 2,     /* mesh or container parse failure */
    PK_ERROR_SCHEMA = 3,     /* config/JSON schema violation */
    PK_ERROR_DEGENERATE = 4, /* geometry without usable extent */
    PK_ERROR_ARGUMENT = 5,   /* precondition violated */
    PK_ERROR_UNAVAILABLE = 6,/* external service did not answer */
    PK_ERROR_INTERNAL = 7
} pk_status;

typedef struct pk_context pk_context;

/* config_json_path may be NULL for built-in defaults. On failure returns
 * NULL (the config file did not parse or validate). */
pk_context* pk_context_create(const char* config_json_path);
void pk_context_destroy(pk_context* ctx);

/* Last error message recorded on this context; empty string if none.
 * Owned by the context, valid until the next call on it. */
const char* pk_context_error(const pk_context* ctx);

const char* pk_status_name(pk_status status);
const char* pk_version(void);
void pk_string_free(char* s);

/* Hash of the context's effective config, as embedded in provenance. */
pk_status pk_config_hash(pk_context* ctx, char** hash_out);

/* Configured parallelism degree (>= 1): how many shapes a batch caller
 * may process concurrently. Each concurrent worker needs its own
 * context. */
int pk_parallelism(const pk_context* ctx);

/* Dataset pipeline over one input mesh file (.obj/.gltf/.glb). On
 * acceptance writes record.json plus part_NNN.obj under out_dir and
 * reports {"accepted":true,...}; on rejection writes nothing and
 * reports {"accepted":false,"reasons":[...],...}. */
pk_status pk_segment(pk_context* ctx, const char* input_path, const char* out_dir,
                     char** result_json_out);

/* Minimum OBBs of every mesh in a file, as a layout JSON. */
pk_status pk_obb(pk_context* ctx, const char* mesh_path, char** layout_json_out);

/* Metric suite for a record against a layout:
 * {"part_iou":[...],"mean_part_iou":..,"object_iou":..,
 *  "object_iou_stderr":..,"voxel_iou":..}. */
pk_status pk_metrics(pk_context* ctx, const char* record_json_path,
                     const char* layout_json_path, char** metrics_json_out);

/* Corpus statistics over several record JSONs. */
pk_status pk_stats(pk_context* ctx, const char* const* record_paths, size_t record_count,
                   int bins, char** stats_json_out);

/* Beam-search layout optimization; writes transformed parts, the
 * transform JSON and a per-iteration trace CSV under out_dir. */
pk_status pk_optimize(pk_context* ctx, const char* record_json_path,
                      const char* layout_json_path, const char* out_dir,
                      char** result_json_out);

/* Artifact filtering; writes cleaned parts under out_dir. */
pk_status pk_clean(pk_context* ctx, const char* record_json_path, const char* layout_json_path,
                   const char* out_dir, char** report_json_out);

/* Sampler simulation from a scenario JSON; writes trace.csv and
 * latents.bin under out_dir. */
pk_status pk_simulate(pk_context* ctx, const char* scenario_json_path, const char* out_dir,
                      char** summary_json_out);

/* Caption for a record. image_paths may be NULL/0 in mock mode. On
 * PK_ERROR_UNAVAILABLE the caller should proceed with a null prompt. */
pk_status pk_caption(pk_context* ctx, const char* record_json_path,
                     const char* const* image_paths, size_t image_count, char** caption_out);

/* Exact box-box IoU of two Obb JSON strings; the numeric surface used
 * by API-level tests. */
pk_status pk_obb_iou(pk_context* ctx, const char* obb_a_json, const char* obb_b_json,
                     double* iou_out);

#ifdef __cplusplus
}
#endif

#endif /* PARTKIT_H */
