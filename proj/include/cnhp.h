#ifndef CNHP_H
#define CNHP_H

/* C interface to the coupled innovation-attention forecasting toolkit.
 *
 * All entry points return a cnhp_status; on failure cnhp_last_error() holds
 * a thread-local description of what went wrong. Strings handed back through
 * out-parameters are heap allocations owned by the caller and must be
 * released with cnhp_string_free().
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cnhp_status {
    CNHP_OK = 0,
    CNHP_ERR_RUNTIME = 1, /* I/O failures, malformed documents, internal errors */
    CNHP_ERR_USAGE = 2    /* unknown subcommands, bad options, invalid windows */
} cnhp_status;

/* Library version as a static "major.minor.patch" string. */
const char* cnhp_version(void);

/* Message describing the most recent failure on the calling thread, or an
 * empty string after a success. The pointer stays valid until the next call
 * into the library from the same thread. */
const char* cnhp_last_error(void);

/* Frees a string returned through any out-parameter. NULL is ignored. */
void cnhp_string_free(char* s);

/* Runs one subcommand (ingest, fit, evaluate, ablate, bootstrap, semisynth,
 * regime, stability, report). `options_json` is a JSON object with the
 * subcommand's flags; NULL or "" means no options. On success
 * `*summary_json_out` (if non-NULL) receives the machine-readable run
 * summary. Artifacts are written under the "out" option. */
cnhp_status cnhp_run(const char* subcommand, const char* options_json,
                     char** summary_json_out);

/* Newline-separated list of the available subcommands. */
cnhp_status cnhp_subcommands(char** list_out);

/* Opaque handle to a fitted coupled model loaded from a model document. */
typedef struct cnhp_model cnhp_model;

/* Loads a model document produced by the fit subcommand. */
cnhp_status cnhp_model_load(const char* path, cnhp_model** model_out);

/* JSON summary of a loaded model: training length, configuration, objective
 * trace, and the active coupling structure. */
cnhp_status cnhp_model_info(const cnhp_model* model, char** info_json_out);

/* Forecasts months [begin, end) of the panel in `counts_csv`, projecting the
 * response through a transform refit on the first `transform_months` months
 * of `trends_csv` (pass 0 to use the whole panel). Returns a JSON object
 * with "begin", "count_total", and "response" arrays; response entries
 * inside the feature warmup are null. */
cnhp_status cnhp_model_forecast(const cnhp_model* model, const char* counts_csv,
                                const char* trends_csv, int transform_months, int begin,
                                int end, char** forecast_json_out);

void cnhp_model_free(cnhp_model* model);

#ifdef __cplusplus
}
#endif

#endif /* CNHP_H */
