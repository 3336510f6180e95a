/* tal — temporal action localization pipeline, C API.
 *
 * The pipeline operates on a workspace directory driven by a JSON config
 * file. Handles are opaque; every call returns a status code and the last
 * error message is retained on the handle.
 */
#ifndef TAL_TAL_H
#define TAL_TAL_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tal_status {
  TAL_OK = 0,
  TAL_ERROR = 1,             /* generic failure (I/O, malformed data) */
  TAL_CONFIG_ERROR = 2,      /* bad config file or bad usage */
  TAL_MISSING_ARTIFACT = 3,  /* stage prerequisite not present */
  TAL_NUMERIC_ERROR = 4      /* non-finite loss or similar */
} tal_status;

typedef struct tal_pipeline tal_pipeline;

/* config_path may be NULL when the handle is only used for tal_pipeline_report. */
tal_status tal_pipeline_create(const char* config_path, const char* workspace_dir,
                               tal_pipeline** out);
void tal_pipeline_destroy(tal_pipeline* p);

tal_status tal_pipeline_set_seed(tal_pipeline* p, unsigned long long seed);
tal_status tal_pipeline_set_force(tal_pipeline* p, int force);

/* stage: "synth", "train-prob", "propose", "train-rank", "rank", "eval" or "all". */
tal_status tal_pipeline_run(tal_pipeline* p, const char* stage);

/* Comparison tables across every eval report in the workspace. The returned
 * string is malloc'd; release it with tal_free. */
tal_status tal_pipeline_report(tal_pipeline* p, char** out_text);

const char* tal_pipeline_last_error(const tal_pipeline* p);
void tal_free(char* ptr);
const char* tal_version(void);

#ifdef __cplusplus
}
#endif

#endif /* TAL_TAL_H */
