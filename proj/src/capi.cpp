#include "causalcast/causalcast.h"

#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "causalcast/checkpoint.hpp"
#include "causalcast/error.hpp"
#include "causalcast/graph.hpp"
#include "causalcast/metrics.hpp"
#include "causalcast/pcmci.hpp"
#include "causalcast/pipeline.hpp"
#include "causalcast/var.hpp"

struct cc_frame {
  causalcast::TimeSeriesFrame frame;
};

struct cc_graph {
  causalcast::CausalGraph graph;
};

struct cc_model {
  causalcast::Checkpoint checkpoint;
};

struct cc_pipeline {
  causalcast::Pipeline pipeline;
  cc_log_fn log_fn = nullptr;
  void* log_user = nullptr;
};

namespace {

thread_local std::string g_last_error;

cc_status set_error(cc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

cc_status to_status(causalcast::ErrorKind kind) {
  switch (kind) {
    case causalcast::ErrorKind::config: return CC_ERROR_CONFIG;
    case causalcast::ErrorKind::data: return CC_ERROR_DATA;
    case causalcast::ErrorKind::numerical: return CC_ERROR_NUMERICAL;
    case causalcast::ErrorKind::invalid_argument: return CC_ERROR_INVALID_ARGUMENT;
  }
  return CC_ERROR_INTERNAL;
}

template <class F>
cc_status guard(F&& f) {
  try {
    f();
    return CC_OK;
  } catch (const causalcast::Error& e) {
    return set_error(to_status(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(CC_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(CC_ERROR_INTERNAL, e.what());
  } catch (...) {
    return set_error(CC_ERROR_INTERNAL, "unknown exception");
  }
}

#define CC_REQUIRE(cond, what)                                        \
  do {                                                                \
    if (!(cond)) return set_error(CC_ERROR_INVALID_ARGUMENT, (what)); \
  } while (0)

}  // namespace

extern "C" {

const char* cc_version(void) { return "0.1.0"; }

const char* cc_status_name(cc_status status) {
  switch (status) {
    case CC_OK: return "ok";
    case CC_ERROR_CONFIG: return "config";
    case CC_ERROR_DATA: return "data";
    case CC_ERROR_NUMERICAL: return "numerical";
    case CC_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case CC_ERROR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cc_last_error_message(void) { return g_last_error.c_str(); }

cc_status cc_frame_load_csv(const char* path, const char* cadence, cc_frame** out) {
  CC_REQUIRE(path && out, "cc_frame_load_csv: null argument");
  *out = nullptr;
  return guard([&] {
    std::optional<causalcast::Cadence> c;
    if (cadence) c = causalcast::parse_cadence(cadence);
    auto frame = causalcast::load_csv(path, {}, c);
    *out = new cc_frame{std::move(frame)};
  });
}

cc_status cc_frame_impute(const cc_frame* frame, cc_frame** out) {
  CC_REQUIRE(frame && out, "cc_frame_impute: null argument");
  *out = nullptr;
  return guard([&] { *out = new cc_frame{causalcast::impute_linear(frame->frame)}; });
}

size_t cc_frame_rows(const cc_frame* frame) { return frame ? frame->frame.rows() : 0; }
size_t cc_frame_cols(const cc_frame* frame) { return frame ? frame->frame.cols() : 0; }

cc_status cc_frame_value(const cc_frame* frame, size_t row, size_t col, double* out) {
  CC_REQUIRE(frame && out, "cc_frame_value: null argument");
  CC_REQUIRE(row < frame->frame.rows() && col < frame->frame.cols(), "cc_frame_value: index out of range");
  *out = frame->frame.values()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  return CC_OK;
}

const char* cc_frame_variable_name(const cc_frame* frame, size_t col) {
  if (!frame || col >= frame->frame.cols()) return nullptr;
  return frame->frame.variables()[col].name.c_str();
}

cc_status cc_frame_write_csv(const cc_frame* frame, const char* path) {
  CC_REQUIRE(frame && path, "cc_frame_write_csv: null argument");
  return guard([&] { causalcast::write_csv(frame->frame, path); });
}

void cc_frame_free(cc_frame* frame) { delete frame; }

cc_status cc_discover_mvgc(const cc_frame* frame, int order, double alpha, const char* correction,
                           cc_graph** out) {
  CC_REQUIRE(frame && out, "cc_discover_mvgc: null argument");
  *out = nullptr;
  return guard([&] {
    const auto corr = correction ? causalcast::parse_correction(correction) : causalcast::Correction::none;
    const auto z = causalcast::normalize(frame->frame).first;
    *out = new cc_graph{causalcast::mvgc_graph(z, order, alpha, corr)};
  });
}

cc_status cc_discover_pcmciplus(const cc_frame* frame, int tau_max, double alpha_pc, double alpha_mci,
                                int contemporaneous, cc_graph** out) {
  CC_REQUIRE(frame && out, "cc_discover_pcmciplus: null argument");
  *out = nullptr;
  return guard([&] {
    causalcast::PcmciOptions o;
    o.tau_max = tau_max;
    o.alpha_pc = alpha_pc;
    o.alpha_mci = alpha_mci;
    o.contemporaneous = contemporaneous != 0;
    const auto z = causalcast::normalize(frame->frame).first;
    *out = new cc_graph{causalcast::pcmciplus_run(z, o)};
  });
}

size_t cc_graph_edge_count(const cc_graph* graph) { return graph ? graph->graph.edges.size() : 0; }

cc_status cc_graph_write_edges(const cc_graph* graph, const char* path) {
  CC_REQUIRE(graph && path, "cc_graph_write_edges: null argument");
  return guard([&] { causalcast::write_edge_list(graph->graph, path); });
}

cc_status cc_graph_select_features(const cc_graph* graph, const char* target, char* buffer, size_t capacity,
                                   size_t* required) {
  CC_REQUIRE(graph && target && required, "cc_graph_select_features: null argument");
  return guard([&] {
    std::string text;
    for (const auto& f : causalcast::feature_select(graph->graph, target)) text += f + "\n";
    *required = text.size() + 1;
    if (buffer && capacity >= text.size() + 1) std::memcpy(buffer, text.c_str(), text.size() + 1);
    else if (buffer && capacity > 0) buffer[0] = '\0';
  });
}

void cc_graph_free(cc_graph* graph) { delete graph; }

cc_status cc_model_load(const char* path, cc_model** out) {
  CC_REQUIRE(path && out, "cc_model_load: null argument");
  *out = nullptr;
  return guard([&] { *out = new cc_model{causalcast::load_checkpoint(path)}; });
}

int cc_model_lookback(const cc_model* model) { return model ? model->checkpoint.model.arch.lookback : 0; }

size_t cc_model_feature_count(const cc_model* model) {
  return model ? model->checkpoint.features.size() : 0;
}

int64_t cc_model_parameter_count(const cc_model* model) {
  return model ? causalcast::parameter_count(model->checkpoint.model.arch) : 0;
}

cc_status cc_model_predict(const cc_model* model, const double* window, size_t rows, size_t cols, double* out) {
  CC_REQUIRE(model && window && out, "cc_model_predict: null argument");
  const auto& ck = model->checkpoint;
  CC_REQUIRE(rows == static_cast<size_t>(ck.model.arch.lookback) && cols == ck.features.size(),
             "cc_model_predict: window must be lookback x features");
  return guard([&] {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t c = 0; c < cols; ++c) {
      const auto i = static_cast<Eigen::Index>(ck.normalization.index_of(ck.features[c]));
      for (size_t r = 0; r < rows; ++r) {
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            (window[r * cols + c] - ck.normalization.mean(i)) / ck.normalization.stddev(i);
      }
    }
    *out = ck.normalization.denormalize(ck.target, causalcast::forward_one(ck.model, w));
  });
}

void cc_model_free(cc_model* model) { delete model; }

int64_t cc_parameter_count(int features) {
  if (features < 1) return 0;
  causalcast::Architecture arch;
  arch.input_size = features;
  return causalcast::parameter_count(arch);
}

cc_status cc_metrics(const double* actual, const double* predicted, size_t n, double* rmse, double* mae,
                     double* r2) {
  CC_REQUIRE(actual && predicted, "cc_metrics: null argument");
  return guard([&] {
    std::span<const double> a(actual, n), p(predicted, n);
    if (rmse) *rmse = causalcast::rmse(a, p);
    if (mae) *mae = causalcast::mae(a, p);
    if (r2) *r2 = causalcast::r_squared(a, p);
  });
}

cc_status cc_pipeline_open(const char* config_path, cc_pipeline** out) {
  CC_REQUIRE(config_path && out, "cc_pipeline_open: null argument");
  *out = nullptr;
  return guard([&] {
    auto config = causalcast::PipelineConfig::load(config_path);
    auto* p = new cc_pipeline{causalcast::Pipeline(std::move(config)), nullptr, nullptr};
    p->pipeline = causalcast::Pipeline(p->pipeline.config(), [p](std::string_view line) {
      if (p->log_fn) p->log_fn(std::string(line).c_str(), p->log_user);
    });
    *out = p;
  });
}

void cc_pipeline_set_log(cc_pipeline* pipeline, cc_log_fn fn, void* user_data) {
  if (!pipeline) return;
  pipeline->log_fn = fn;
  pipeline->log_user = user_data;
}

cc_status cc_pipeline_set_seed(cc_pipeline* pipeline, uint64_t seed) {
  CC_REQUIRE(pipeline, "cc_pipeline_set_seed: null pipeline");
  return guard([&] { pipeline->pipeline.set_seed(seed); });
}

cc_status cc_pipeline_set_output_dir(cc_pipeline* pipeline, const char* dir) {
  CC_REQUIRE(pipeline && dir, "cc_pipeline_set_output_dir: null argument");
  return guard([&] { pipeline->pipeline.set_output_dir(dir); });
}

cc_status cc_pipeline_run(cc_pipeline* pipeline, const char* command, const char* variant) {
  CC_REQUIRE(pipeline && command, "cc_pipeline_run: null argument");
  return guard([&] {
    std::optional<std::string> v;
    if (variant) v = variant;
    pipeline->pipeline.run(command, v);
  });
}

void cc_pipeline_free(cc_pipeline* pipeline) { delete pipeline; }

}  // extern "C"
