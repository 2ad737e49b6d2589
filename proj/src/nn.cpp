#include "causalcast/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalcast/error.hpp"

namespace causalcast {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

MatrixXd tanh_m(const MatrixXd& a) { return a.array().tanh().matrix(); }

void glorot(MatrixXd& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index c = 0; c < w.cols(); ++c)
    for (Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
}

void check_finite(const MatrixXd& m, const char* layer, int step) {
  if (!m.allFinite()) {
    std::string where = std::string("non-finite activation in ") + layer;
    if (step >= 0) where += " at timestep " + std::to_string(step);
    fail(ErrorKind::numerical, where);
  }
}

void check_shape(const Eigen::MatrixXd& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorKind::invalid_argument, what + " has shape " + std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()) + ", expected " +
                                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

void Architecture::validate() const {
  if (input_size < 1 || gru_units < 1 || lstm_units < 1 || dense_units < 1 || lookback < 1) {
    fail(ErrorKind::config, "architecture sizes must all be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorKind::config, "dropout must lie in [0, 1)");
}

std::int64_t parameter_count(const Architecture& a) {
  const std::int64_t d = a.input_size, g = a.gru_units, l = a.lstm_units, n = a.dense_units;
  return 3 * (g * d + g * g + 2 * g) + 4 * (l * g + l * l + l) + (n * l + n) + (n + 1);
}

GruParams GruParams::zeros(int input_size, int units) {
  GruParams p;
  for (auto* w : {&p.w_z, &p.w_r, &p.w_h}) *w = MatrixXd::Zero(units, input_size);
  for (auto* u : {&p.u_z, &p.u_r, &p.u_h}) *u = MatrixXd::Zero(units, units);
  for (auto* b : {&p.bw_z, &p.bw_r, &p.bw_h, &p.bu_z, &p.bu_r, &p.bu_h}) *b = VectorXd::Zero(units);
  return p;
}

LstmParams LstmParams::zeros(int input_size, int units) {
  LstmParams p;
  for (auto* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) *w = MatrixXd::Zero(units, input_size);
  for (auto* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_g}) *u = MatrixXd::Zero(units, units);
  for (auto* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_g}) *b = VectorXd::Zero(units);
  return p;
}

VectorXd gru_step(const GruParams& p, const VectorXd& x, const VectorXd& h) {
  if (x.size() != p.input_size() || h.size() != p.units()) {
    fail(ErrorKind::invalid_argument, "gru_step: shape mismatch");
  }
  const VectorXd z = sigmoid(p.w_z * x + p.u_z * h + p.bw_z + p.bu_z);
  const VectorXd r = sigmoid(p.w_r * x + p.u_r * h + p.bw_r + p.bu_r);
  const VectorXd cand = tanh_m(p.w_h * x + p.u_h * r.cwiseProduct(h) + p.bw_h + p.bu_h);
  return (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(cand);
}

LstmState lstm_step(const LstmParams& p, const VectorXd& x, const VectorXd& h, const VectorXd& c) {
  if (x.size() != p.input_size() || h.size() != p.units() || c.size() != p.units()) {
    fail(ErrorKind::invalid_argument, "lstm_step: shape mismatch");
  }
  const VectorXd i = sigmoid(p.w_i * x + p.u_i * h + p.b_i);
  const VectorXd f = sigmoid(p.w_f * x + p.u_f * h + p.b_f);
  const VectorXd o = sigmoid(p.w_o * x + p.u_o * h + p.b_o);
  const VectorXd g = tanh_m(p.w_g * x + p.u_g * h + p.b_g);
  LstmState s;
  s.c = f.cwiseProduct(c) + i.cwiseProduct(g);
  s.h = o.cwiseProduct(s.c.array().tanh().matrix());
  return s;
}

// --- parameter containers --------------------------------------------------

ParameterSet ParameterSet::zeros(const Architecture& a) {
  ParameterSet p;
  p.gru = GruParams::zeros(a.input_size, a.gru_units);
  p.lstm = LstmParams::zeros(a.gru_units, a.lstm_units);
  p.dense_w = MatrixXd::Zero(a.dense_units, a.lstm_units);
  p.dense_b = VectorXd::Zero(a.dense_units);
  p.out_w = MatrixXd::Zero(1, a.dense_units);
  p.out_b = VectorXd::Zero(1);
  return p;
}

std::vector<NamedTensor> ParameterSet::tensors() {
  auto m = [](std::string_view n, MatrixXd& x) { return NamedTensor{n, &x, nullptr}; };
  auto v = [](std::string_view n, VectorXd& x) { return NamedTensor{n, nullptr, &x}; };
  return {
      m("gru.w_z", gru.w_z),    m("gru.w_r", gru.w_r),    m("gru.w_h", gru.w_h),
      m("gru.u_z", gru.u_z),    m("gru.u_r", gru.u_r),    m("gru.u_h", gru.u_h),
      v("gru.bw_z", gru.bw_z),  v("gru.bw_r", gru.bw_r),  v("gru.bw_h", gru.bw_h),
      v("gru.bu_z", gru.bu_z),  v("gru.bu_r", gru.bu_r),  v("gru.bu_h", gru.bu_h),
      m("lstm.w_i", lstm.w_i),  m("lstm.w_f", lstm.w_f),  m("lstm.w_o", lstm.w_o),
      m("lstm.w_g", lstm.w_g),  m("lstm.u_i", lstm.u_i),  m("lstm.u_f", lstm.u_f),
      m("lstm.u_o", lstm.u_o),  m("lstm.u_g", lstm.u_g),  v("lstm.b_i", lstm.b_i),
      v("lstm.b_f", lstm.b_f),  v("lstm.b_o", lstm.b_o),  v("lstm.b_g", lstm.b_g),
      m("dense.w", dense_w),    v("dense.b", dense_b),    m("out.w", out_w),
      v("out.b", out_b),
  };
}

std::int64_t ParameterSet::size() const {
  std::int64_t n = 0;
  for (const auto& t : const_cast<ParameterSet*>(this)->tensors()) n += t.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z = *this;
  for (auto& t : z.tensors()) std::fill(t.data(), t.data() + t.size(), 0.0);
  return z;
}

ForecastModel ForecastModel::zeros(const Architecture& arch) {
  arch.validate();
  return ForecastModel{arch, ParameterSet::zeros(arch)};
}

ForecastModel ForecastModel::initialize(const Architecture& arch, std::uint64_t seed) {
  auto model = zeros(arch);
  std::mt19937_64 rng(seed);
  for (auto& t : model.params.tensors())
    if (t.matrix) glorot(*t.matrix, rng);
  model.params.lstm.b_f.setOnes();
  return model;
}

// --- forward / backward ----------------------------------------------------

DropoutMasks DropoutMasks::identity(const Architecture& a, Index batch) {
  DropoutMasks m;
  m.gru_outputs.assign(static_cast<std::size_t>(a.lookback), MatrixXd::Ones(a.gru_units, batch));
  m.lstm_final = MatrixXd::Ones(a.lstm_units, batch);
  return m;
}

DropoutMasks DropoutMasks::sample(const Architecture& a, Index batch, std::mt19937_64& rng) {
  auto m = identity(a, batch);
  if (a.dropout <= 0.0) return m;
  const double keep_scale = 1.0 / (1.0 - a.dropout);
  std::bernoulli_distribution keep(1.0 - a.dropout);
  auto fill = [&](MatrixXd& mask) {
    for (Index c = 0; c < mask.cols(); ++c)
      for (Index r = 0; r < mask.rows(); ++r) mask(r, c) = keep(rng) ? keep_scale : 0.0;
  };
  for (auto& step : m.gru_outputs) fill(step);
  fill(m.lstm_final);
  return m;
}

ForwardCache forward_with_masks(const ForecastModel& model,
                                std::span<const Eigen::MatrixXd* const> windows,
                                DropoutMasks masks) {
  const auto& a = model.arch;
  const auto& p = model.params;
  const Index batch = static_cast<Index>(windows.size());
  if (batch == 0) fail(ErrorKind::invalid_argument, "forward: empty batch");
  const int steps = a.lookback;
  for (const auto* w : windows) check_shape(*w, steps, a.input_size, "input window");
  if (static_cast<int>(masks.gru_outputs.size()) != steps) {
    fail(ErrorKind::invalid_argument, "dropout mask length mismatch");
  }

  ForwardCache c;
  c.batch = batch;
  c.inputs.resize(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    MatrixXd x(a.input_size, batch);
    for (Index b = 0; b < batch; ++b) x.col(b) = windows[static_cast<std::size_t>(b)]->row(t).transpose();
    c.inputs[static_cast<std::size_t>(t)] = std::move(x);
  }

  const VectorXd gb_z = p.gru.bw_z + p.gru.bu_z;
  const VectorXd gb_r = p.gru.bw_r + p.gru.bu_r;
  const VectorXd gb_h = p.gru.bw_h + p.gru.bu_h;
  MatrixXd h = MatrixXd::Zero(a.gru_units, batch);
  for (int t = 0; t < steps; ++t) {
    const auto& x = c.inputs[static_cast<std::size_t>(t)];
    MatrixXd z = sigmoid((p.gru.w_z * x + p.gru.u_z * h).colwise() + gb_z);
    MatrixXd r = sigmoid((p.gru.w_r * x + p.gru.u_r * h).colwise() + gb_r);
    MatrixXd cand = tanh_m((p.gru.w_h * x + p.gru.u_h * r.cwiseProduct(h)).colwise() + gb_h);
    MatrixXd h_next = h + z.cwiseProduct(cand - h);
    check_finite(h_next, "GRU", t);
    c.g_h_prev.push_back(std::move(h));
    c.g_z.push_back(std::move(z));
    c.g_r.push_back(std::move(r));
    c.g_cand.push_back(std::move(cand));
    h = std::move(h_next);
    c.l_in.push_back(h.cwiseProduct(masks.gru_outputs[static_cast<std::size_t>(t)]));
  }

  MatrixXd lh = MatrixXd::Zero(a.lstm_units, batch);
  MatrixXd lc = MatrixXd::Zero(a.lstm_units, batch);
  for (int t = 0; t < steps; ++t) {
    const auto& x = c.l_in[static_cast<std::size_t>(t)];
    MatrixXd i = sigmoid((p.lstm.w_i * x + p.lstm.u_i * lh).colwise() + p.lstm.b_i);
    MatrixXd f = sigmoid((p.lstm.w_f * x + p.lstm.u_f * lh).colwise() + p.lstm.b_f);
    MatrixXd o = sigmoid((p.lstm.w_o * x + p.lstm.u_o * lh).colwise() + p.lstm.b_o);
    MatrixXd g = tanh_m((p.lstm.w_g * x + p.lstm.u_g * lh).colwise() + p.lstm.b_g);
    MatrixXd c_next = f.cwiseProduct(lc) + i.cwiseProduct(g);
    MatrixXd tc = tanh_m(c_next);
    MatrixXd h_next = o.cwiseProduct(tc);
    check_finite(h_next, "LSTM", t);
    c.l_h_prev.push_back(std::move(lh));
    c.l_c_prev.push_back(std::move(lc));
    c.l_i.push_back(std::move(i));
    c.l_f.push_back(std::move(f));
    c.l_o.push_back(std::move(o));
    c.l_g.push_back(std::move(g));
    c.l_tanh_c.push_back(std::move(tc));
    c.l_c.push_back(c_next);
    lh = std::move(h_next);
    lc = std::move(c_next);
  }

  c.lstm_dropped = lh.cwiseProduct(masks.lstm_final);
  c.dense_pre = (p.dense_w * c.lstm_dropped).colwise() + p.dense_b;
  c.dense_act = c.dense_pre.cwiseMax(0.0);
  check_finite(c.dense_act, "dense", -1);
  c.prediction = ((p.out_w * c.dense_act).array() + p.out_b(0)).matrix();
  check_finite(c.prediction, "output", -1);
  c.masks = std::move(masks);
  return c;
}

ForwardCache forward(const ForecastModel& model, std::span<const Eigen::MatrixXd* const> windows,
                     Mode mode, std::mt19937_64* rng) {
  const auto batch = static_cast<Index>(windows.size());
  if (mode == Mode::train) {
    if (!rng) fail(ErrorKind::invalid_argument, "train-mode forward needs a dropout RNG");
    return forward_with_masks(model, windows, DropoutMasks::sample(model.arch, batch, *rng));
  }
  return forward_with_masks(model, windows, DropoutMasks::identity(model.arch, batch));
}

double forward_one(const ForecastModel& model, const Eigen::MatrixXd& window) {
  const Eigen::MatrixXd* ptr = &window;
  return forward(model, std::span<const Eigen::MatrixXd* const>(&ptr, 1), Mode::eval).prediction(0);
}

ParameterSet backward(const ForecastModel& model, const ForwardCache& c,
                      const Eigen::RowVectorXd& d_pred) {
  const auto& p = model.params;
  const int steps = model.arch.lookback;
  if (d_pred.size() != c.batch || static_cast<int>(c.l_i.size()) != steps ||
      c.dense_act.rows() != p.dense_w.rows() || c.l_in.empty() ||
      c.l_in.front().rows() != p.lstm.w_i.cols()) {
    fail(ErrorKind::invalid_argument, "backward: cache does not match the model");
  }
  ParameterSet gr = p.zeros_like();

  // Output and dense layers.
  gr.out_w = d_pred * c.dense_act.transpose();
  gr.out_b(0) = d_pred.sum();
  MatrixXd d_dense = p.out_w.transpose() * d_pred;
  d_dense = d_dense.cwiseProduct((c.dense_pre.array() > 0.0).cast<double>().matrix());
  gr.dense_w = d_dense * c.lstm_dropped.transpose();
  gr.dense_b = d_dense.rowwise().sum();
  MatrixXd dh = (p.dense_w.transpose() * d_dense).cwiseProduct(c.masks.lstm_final);

  // LSTM, backpropagation through time.
  MatrixXd dc = MatrixXd::Zero(dh.rows(), dh.cols());
  std::vector<MatrixXd> d_gru_out(static_cast<std::size_t>(steps));
  for (int t = steps - 1; t >= 0; --t) {
    const auto s = static_cast<std::size_t>(t);
    const auto &i = c.l_i[s], &f = c.l_f[s], &o = c.l_o[s], &g = c.l_g[s], &tc = c.l_tanh_c[s];
    dc += dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
    const MatrixXd da_o = dh.cwiseProduct(tc).cwiseProduct((o.array() * (1.0 - o.array())).matrix());
    const MatrixXd da_i = dc.cwiseProduct(g).cwiseProduct((i.array() * (1.0 - i.array())).matrix());
    const MatrixXd da_f =
        dc.cwiseProduct(c.l_c_prev[s]).cwiseProduct((f.array() * (1.0 - f.array())).matrix());
    const MatrixXd da_g = dc.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());
    const auto& x = c.l_in[s];
    const auto& hp = c.l_h_prev[s];
    gr.lstm.w_i.noalias() += da_i * x.transpose();
    gr.lstm.w_f.noalias() += da_f * x.transpose();
    gr.lstm.w_o.noalias() += da_o * x.transpose();
    gr.lstm.w_g.noalias() += da_g * x.transpose();
    gr.lstm.u_i.noalias() += da_i * hp.transpose();
    gr.lstm.u_f.noalias() += da_f * hp.transpose();
    gr.lstm.u_o.noalias() += da_o * hp.transpose();
    gr.lstm.u_g.noalias() += da_g * hp.transpose();
    gr.lstm.b_i += da_i.rowwise().sum();
    gr.lstm.b_f += da_f.rowwise().sum();
    gr.lstm.b_o += da_o.rowwise().sum();
    gr.lstm.b_g += da_g.rowwise().sum();
    MatrixXd dx = p.lstm.w_i.transpose() * da_i;
    dx.noalias() += p.lstm.w_f.transpose() * da_f;
    dx.noalias() += p.lstm.w_o.transpose() * da_o;
    dx.noalias() += p.lstm.w_g.transpose() * da_g;
    d_gru_out[s] = dx.cwiseProduct(c.masks.gru_outputs[s]);
    MatrixXd dh_prev = p.lstm.u_i.transpose() * da_i;
    dh_prev.noalias() += p.lstm.u_f.transpose() * da_f;
    dh_prev.noalias() += p.lstm.u_o.transpose() * da_o;
    dh_prev.noalias() += p.lstm.u_g.transpose() * da_g;
    dh = std::move(dh_prev);
    dc = dc.cwiseProduct(f);
  }

  // GRU, backpropagation through time.
  MatrixXd dg = MatrixXd::Zero(p.gru.units(), c.batch);
  for (int t = steps - 1; t >= 0; --t) {
    const auto s = static_cast<std::size_t>(t);
    dg += d_gru_out[s];
    const auto &z = c.g_z[s], &r = c.g_r[s], &cand = c.g_cand[s], &hp = c.g_h_prev[s];
    const auto& x = c.inputs[s];
    const MatrixXd dz = dg.cwiseProduct(cand - hp);
    MatrixXd dh_prev = dg - dg.cwiseProduct(z);
    const MatrixXd da_h = dg.cwiseProduct(z).cwiseProduct((1.0 - cand.array().square()).matrix());
    const MatrixXd rh = r.cwiseProduct(hp);
    gr.gru.w_h.noalias() += da_h * x.transpose();
    gr.gru.u_h.noalias() += da_h * rh.transpose();
    const VectorXd db_h = da_h.rowwise().sum();
    gr.gru.bw_h += db_h;
    gr.gru.bu_h += db_h;
    const MatrixXd d_rh = p.gru.u_h.transpose() * da_h;
    dh_prev += d_rh.cwiseProduct(r);
    const MatrixXd da_r = d_rh.cwiseProduct(hp).cwiseProduct((r.array() * (1.0 - r.array())).matrix());
    const MatrixXd da_z = dz.cwiseProduct((z.array() * (1.0 - z.array())).matrix());
    gr.gru.w_z.noalias() += da_z * x.transpose();
    gr.gru.w_r.noalias() += da_r * x.transpose();
    gr.gru.u_z.noalias() += da_z * hp.transpose();
    gr.gru.u_r.noalias() += da_r * hp.transpose();
    const VectorXd db_z = da_z.rowwise().sum(), db_r = da_r.rowwise().sum();
    gr.gru.bw_z += db_z;
    gr.gru.bu_z += db_z;
    gr.gru.bw_r += db_r;
    gr.gru.bu_r += db_r;
    dh_prev.noalias() += p.gru.u_z.transpose() * da_z;
    dh_prev.noalias() += p.gru.u_r.transpose() * da_r;
    dg = std::move(dh_prev);
  }
  return gr;
}

// --- optimisation ----------------------------------------------------------

AdamState AdamState::for_params(const ParameterSet& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_step(AdamState& state, ParameterSet& params, ParameterSet& grads) {
  auto pt = params.tensors();
  auto gt = grads.tensors();
  auto mt = state.m.tensors();
  auto vt = state.v.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    if (pt[k].size() != gt[k].size() || pt[k].size() != mt[k].size()) {
      fail(ErrorKind::invalid_argument, "adam_step: shape mismatch in " + std::string(pt[k].name));
    }
    const double* g = gt[k].data();
    for (Index e = 0; e < gt[k].size(); ++e) {
      if (!std::isfinite(g[e])) {
        fail(ErrorKind::numerical, "non-finite gradient in " + std::string(pt[k].name));
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < pt.size(); ++k) {
    double* th = pt[k].data();
    const double* g = gt[k].data();
    double* m = mt[k].data();
    double* v = vt[k].data();
    for (Index e = 0; e < pt[k].size(); ++e) {
      m[e] = state.beta1 * m[e] + (1.0 - state.beta1) * g[e];
      v[e] = state.beta2 * v[e] + (1.0 - state.beta2) * g[e] * g[e];
      const double m_hat = m[e] / c1;
      const double v_hat = v[e] / c2;
      th[e] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorKind::config, "batch_size must be >= 1");
  if (max_epochs < 1) fail(ErrorKind::config, "max_epochs must be >= 1");
  if (patience < 0) fail(ErrorKind::config, "patience must be >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorKind::config, "learning_rate must be > 0");
}

namespace {

void check_windows(const ForecastModel& model, const SupervisedWindows& w, const char* what) {
  for (const auto& x : w.inputs) {
    if (x.rows() != model.arch.lookback || x.cols() != model.arch.input_size) {
      fail(ErrorKind::invalid_argument, std::string(what) + " windows do not match the model shape");
    }
  }
  if (w.targets.size() != static_cast<Index>(w.inputs.size())) {
    fail(ErrorKind::invalid_argument, std::string(what) + " windows/targets length mismatch");
  }
}

}  // namespace

Eigen::VectorXd predict(const ForecastModel& model, const SupervisedWindows& windows) {
  check_windows(model, windows, "prediction");
  VectorXd out(static_cast<Index>(windows.size()));
  constexpr std::size_t chunk = 256;
  std::vector<const MatrixXd*> ptrs;
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const std::size_t end = std::min(windows.size(), start + chunk);
    ptrs.clear();
    for (std::size_t s = start; s < end; ++s) ptrs.push_back(&windows.inputs[s]);
    const auto cache = forward(model, ptrs, Mode::eval);
    out.segment(static_cast<Index>(start), static_cast<Index>(end - start)) = cache.prediction.transpose();
  }
  return out;
}

double mse_loss(const ForecastModel& model, const SupervisedWindows& windows) {
  if (windows.empty()) fail(ErrorKind::invalid_argument, "mse_loss: no windows");
  return (predict(model, windows) - windows.targets).squaredNorm() /
         static_cast<double>(windows.size());
}

TrainHistory fit(ForecastModel& model, const SupervisedWindows& train,
                 const SupervisedWindows& validation, const TrainConfig& config) {
  config.validate();
  model.arch.validate();
  if (train.empty()) fail(ErrorKind::data, "fit: empty training set");
  check_windows(model, train, "training");
  check_windows(model, validation, "validation");

  std::mt19937_64 rng(config.seed);
  AdamState adam = AdamState::for_params(model.params, config.learning_rate);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  double best = std::numeric_limits<double>::infinity();
  ParameterSet best_params = model.params;
  int wait = 0;
  std::vector<const MatrixXd*> batch;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      Eigen::RowVectorXd y(static_cast<Index>(end - start));
      for (std::size_t s = start; s < end; ++s) {
        batch.push_back(&train.inputs[order[s]]);
        y(static_cast<Index>(s - start)) = train.targets(static_cast<Index>(order[s]));
      }
      const auto cache = forward(model, batch, Mode::train, &rng);
      const Eigen::RowVectorXd diff = cache.prediction - y;
      const double n = static_cast<double>(diff.size());
      const double loss = diff.squaredNorm() / n;
      if (!std::isfinite(loss)) {
        fail(ErrorKind::numerical, "non-finite training loss at epoch " + std::to_string(epoch));
      }
      total += loss * n;
      auto grads = backward(model, cache, (2.0 / n) * diff);
      adam_step(adam, model.params, grads);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    if (!validation.empty()) {
      rec.val_loss = mse_loss(model, validation);
      if (!std::isfinite(rec.val_loss)) {
        fail(ErrorKind::numerical, "non-finite validation loss at epoch " + std::to_string(epoch));
      }
    }
    history.epochs.push_back(rec);
    if (validation.empty()) {
      history.best_epoch = epoch;
      continue;
    }
    if (rec.val_loss < best - config.min_delta) {
      best = rec.val_loss;
      best_params = model.params;
      history.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= config.patience) {
      history.early_stopped = true;
      break;
    }
  }
  if (!validation.empty()) model.params = std::move(best_params);
  return history;
}

}  // namespace causalcast
