/* C interface to the causalcast library.
 *
 * Every object is an opaque handle released with its *_free function.
 * Every fallible call returns a cc_status; on failure the message is
 * available from cc_last_error_message() on the calling thread until the
 * next failing call on that thread. */
#ifndef CAUSALCAST_H
#define CAUSALCAST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CAUSALCAST_BUILDING_LIBRARY)
#    define CC_API __declspec(dllexport)
#  else
#    define CC_API __declspec(dllimport)
#  endif
#else
#  define CC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cc_status {
  CC_OK = 0,
  CC_ERROR_CONFIG = 1,
  CC_ERROR_DATA = 2,
  CC_ERROR_NUMERICAL = 3,
  CC_ERROR_INVALID_ARGUMENT = 4,
  CC_ERROR_INTERNAL = 5
} cc_status;

typedef struct cc_frame cc_frame;
typedef struct cc_graph cc_graph;
typedef struct cc_model cc_model;
typedef struct cc_pipeline cc_pipeline;

typedef void (*cc_log_fn)(const char* line, void* user_data);

CC_API const char* cc_version(void);
CC_API const char* cc_status_name(cc_status status);
CC_API const char* cc_last_error_message(void);

/* Frames. `cadence` is "daily", "monthly" or NULL to infer. The loaded
 * frame accepts any variable columns. */
CC_API cc_status cc_frame_load_csv(const char* path, const char* cadence, cc_frame** out);
CC_API cc_status cc_frame_impute(const cc_frame* frame, cc_frame** out);
CC_API size_t cc_frame_rows(const cc_frame* frame);
CC_API size_t cc_frame_cols(const cc_frame* frame);
/* Missing cells read as NaN. */
CC_API cc_status cc_frame_value(const cc_frame* frame, size_t row, size_t col, double* out);
CC_API const char* cc_frame_variable_name(const cc_frame* frame, size_t col);
CC_API cc_status cc_frame_write_csv(const cc_frame* frame, const char* path);
CC_API void cc_frame_free(cc_frame* frame);

/* Discovery on an imputed frame; the frame is z-scored internally.
 * `correction` is "none" or "benjamini-hochberg". */
CC_API cc_status cc_discover_mvgc(const cc_frame* frame, int order, double alpha, const char* correction,
                                  cc_graph** out);
CC_API cc_status cc_discover_pcmciplus(const cc_frame* frame, int tau_max, double alpha_pc,
                                       double alpha_mci, int contemporaneous, cc_graph** out);
CC_API size_t cc_graph_edge_count(const cc_graph* graph);
CC_API cc_status cc_graph_write_edges(const cc_graph* graph, const char* path);
/* Writes the newline-separated feature list for `target` into `buffer`
 * (NUL-terminated) when it fits. `required` receives the needed size
 * including the terminator. */
CC_API cc_status cc_graph_select_features(const cc_graph* graph, const char* target, char* buffer,
                                          size_t capacity, size_t* required);
CC_API void cc_graph_free(cc_graph* graph);

/* Forecaster checkpoints. `window` is lookback x features, row-major, in
 * physical units; the prediction is in physical units of the target. */
CC_API cc_status cc_model_load(const char* path, cc_model** out);
CC_API int cc_model_lookback(const cc_model* model);
CC_API size_t cc_model_feature_count(const cc_model* model);
CC_API int64_t cc_model_parameter_count(const cc_model* model);
CC_API cc_status cc_model_predict(const cc_model* model, const double* window, size_t rows, size_t cols,
                                  double* out);
CC_API void cc_model_free(cc_model* model);

/* Trainable parameter count of the default-width forecaster over
 * `features` inputs. */
CC_API int64_t cc_parameter_count(int features);

/* rmse, mae and r2 of two equal-length arrays. */
CC_API cc_status cc_metrics(const double* actual, const double* predicted, size_t n, double* rmse,
                            double* mae, double* r2);

/* Pipeline driven by a JSON configuration file. */
CC_API cc_status cc_pipeline_open(const char* config_path, cc_pipeline** out);
CC_API void cc_pipeline_set_log(cc_pipeline* pipeline, cc_log_fn fn, void* user_data);
CC_API cc_status cc_pipeline_set_seed(cc_pipeline* pipeline, uint64_t seed);
CC_API cc_status cc_pipeline_set_output_dir(cc_pipeline* pipeline, const char* dir);
/* `command` is preprocess, discover, train, evaluate, forecast, synth or run;
 * `variant` may be NULL. */
CC_API cc_status cc_pipeline_run(cc_pipeline* pipeline, const char* command, const char* variant);
CC_API void cc_pipeline_free(cc_pipeline* pipeline);

#ifdef __cplusplus
}
#endif

#endif /* CAUSALCAST_H */
