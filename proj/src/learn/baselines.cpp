#include "blinkflow/learn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "blinkflow/error.hpp"
#include "blinkflow/learn/nn.hpp"

namespace blinkflow::learn {

namespace {

std::vector<std::vector<double>> feature_rows(const Dataset& ds) {
  std::vector<std::vector<double>> rows;
  for (const auto& inst : ds.instances) {
    const auto* f = std::get_if<FeatureVector>(&inst.input);
    if (!f) fail(ErrorKind::InvalidInput, "method needs feature-vector instances");
    rows.push_back(f->values);
  }
  return rows;
}

const std::vector<double>& sequence_of(const LabeledInstance& inst) {
  const auto* s = std::get_if<Sequence>(&inst.input);
  if (!s) fail(ErrorKind::InvalidInput, "method needs timeseries instances");
  return s->values;
}

std::vector<std::size_t> labels_of(const Dataset& ds) {
  std::vector<std::size_t> y;
  for (const auto& inst : ds.instances) y.push_back(inst.label);
  return y;
}

double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
  return pred.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(pred.size());
}

// Fit/predict for one hyperparameter value.
using Candidate = std::function<std::vector<std::size_t>(const Dataset&, const Dataset&)>;

// Scores every candidate on an inner subject-wise holdout of train, then
// refits the best (first on ties) on the whole training set.
std::vector<std::size_t> grid_search(const std::vector<Candidate>& candidates, const Dataset& train,
                                     const Dataset& test, double holdout_frac,
                                     std::uint64_t seed) {
  if (candidates.empty()) fail(ErrorKind::Configuration, "empty hyperparameter grid");
  std::size_t best = 0;
  if (candidates.size() > 1) {
    const auto [inner_idx, val_idx] = inner_split(train, holdout_frac, seed);
    if (!val_idx.empty()) {
      const auto inner = train.subset(inner_idx);
      const auto val = train.subset(val_idx);
      const auto truth = labels_of(val);
      double best_acc = -1.0;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double acc = accuracy(candidates[c](inner, val), truth);
        if (acc > best_acc) {
          best_acc = acc;
          best = c;
        }
      }
    }
  }
  return candidates[best](train, test);
}

std::vector<std::size_t> fit_predict_knn(const Dataset& train, const Dataset& test, std::size_t k) {
  if (k == 0) fail(ErrorKind::Configuration, "k must be at least 1");
  if (k > train.size()) fail(ErrorKind::Configuration, "k exceeds the training set size");
  const auto raw = feature_rows(train);
  const auto scaler = Standardizer::fit(raw);
  std::vector<std::vector<double>> x;
  for (const auto& r : raw) x.push_back(scaler.apply(r));
  const auto y = labels_of(train);
  std::vector<std::size_t> out;
  for (const auto& q : feature_rows(test)) {
    out.push_back(knn_predict(x, y, scaler.apply(q), k, train.n_classes));
  }
  return out;
}

std::vector<std::size_t> fit_predict_svm(const Dataset& train, const Dataset& test, double lambda,
                                         std::size_t epochs, std::uint64_t seed) {
  const auto raw = feature_rows(train);
  const auto scaler = Standardizer::fit(raw);
  std::vector<std::vector<double>> x;
  for (const auto& r : raw) x.push_back(scaler.apply(r));
  LinearSvm svm;
  svm.fit(x, labels_of(train), train.n_classes, lambda, epochs, seed);
  std::vector<std::size_t> out;
  for (const auto& q : feature_rows(test)) out.push_back(svm.predict(scaler.apply(q)));
  return out;
}

std::vector<std::size_t> fit_predict_mlp(const Dataset& train, const Dataset& test,
                                         std::size_t hidden, TrainConfig cfg) {
  const std::size_t inputs = sequence_of(train.instances.front()).size();
  auto model = MlpModel::initialized(inputs, hidden, train.n_classes, cfg.seed);
  fit_adam(model.params, train.size(), cfg, [&](std::size_t i, std::span<double> grad) {
    return mlp_loss_grad(model, sequence_of(train.instances[i]), train.instances[i].label, grad);
  });
  std::vector<std::size_t> out;
  for (const auto& inst : test.instances) out.push_back(argmax(mlp_forward(model, sequence_of(inst))));
  return out;
}

std::vector<std::size_t> fit_predict_lstm1d(const Dataset& train, const Dataset& test,
                                            std::size_t hidden, TrainConfig cfg) {
  auto model = Lstm1dModel::initialized(hidden, train.n_classes, cfg.pooling, cfg.seed);
  fit_adam(model.params, train.size(), cfg, [&](std::size_t i, std::span<double> grad) {
    return lstm1d_loss_grad(model, sequence_of(train.instances[i]), train.instances[i].label, grad);
  });
  std::vector<std::size_t> out;
  for (const auto& inst : test.instances) {
    out.push_back(argmax(lstm1d_forward(model, sequence_of(inst))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::MdLstm2d: return "mdlstm2d";
    case Method::Knn: return "knn";
    case Method::LinearSvm: return "linear_svm";
    case Method::Mlp: return "mlp";
    case Method::Lstm1d: return "lstm1d";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorKind::Configuration, "unknown method '" + std::string(name) + "'");
}

InputKind input_kind(Method method) {
  switch (method) {
    case Method::MdLstm2d: return InputKind::Spectrogram;
    case Method::Knn:
    case Method::LinearSvm: return InputKind::Features;
    case Method::Mlp:
    case Method::Lstm1d: return InputKind::Timeseries;
  }
  return InputKind::Features;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) fail(ErrorKind::InsufficientData, "cannot standardize an empty set");
  const std::size_t d = rows.front().size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += r[k] / n;
  }
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < d; ++k) s.scale[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]) / n;
  }
  // Constant features are centred but not scaled.
  for (auto& v : s.scale) v = v > 0.0 ? std::sqrt(v) : 1.0;
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean[k]) / scale[k];
  return out;
}

std::size_t knn_predict(const std::vector<std::vector<double>>& train_x,
                        std::span<const std::size_t> train_y, std::span<const double> query,
                        std::size_t k, std::size_t n_classes) {
  if (k == 0 || k > train_x.size()) fail(ErrorKind::Configuration, "k must lie in [1, train size]");
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < train_x.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      d += (train_x[i][j] - query[j]) * (train_x[i][j] - query[j]);
    }
    dist.emplace_back(d, i);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<double> votes(n_classes, 0.0);
  for (std::size_t i = 0; i < k; ++i) votes[train_y[dist[i].second]] += 1.0;
  return argmax(votes);
}

void LinearSvm::fit(const std::vector<std::vector<double>>& x, std::span<const std::size_t> y,
                    std::size_t n_classes, double lambda, std::size_t epochs, std::uint64_t seed) {
  if (x.empty()) fail(ErrorKind::InsufficientData, "empty training set");
  if (!(lambda > 0.0)) fail(ErrorKind::Configuration, "lambda must be positive");
  dim_ = x.front().size();
  w_.assign(n_classes, std::vector<double>(dim_ + 1, 0.0));
  constexpr double kEta0 = 0.1;
  std::vector<std::size_t> order(x.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto rng = make_rng(seed, 0x53564D + c);
    std::iota(order.begin(), order.end(), 0);
    auto& w = w_[c];
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        const double eta = kEta0 / (1.0 + kEta0 * lambda * static_cast<double>(t++));
        const double target = y[i] == c ? 1.0 : -1.0;
        double margin = w[dim_];
        for (std::size_t k = 0; k < dim_; ++k) margin += w[k] * x[i][k];
        margin *= target;
        for (std::size_t k = 0; k < dim_; ++k) w[k] *= 1.0 - eta * lambda;
        if (margin < 1.0) {
          for (std::size_t k = 0; k < dim_; ++k) w[k] += eta * target * x[i][k];
          w[dim_] += eta * target;
        }
      }
    }
  }
}

std::vector<double> LinearSvm::scores(std::span<const double> x) const {
  std::vector<double> s(w_.size());
  for (std::size_t c = 0; c < w_.size(); ++c) {
    double z = w_[c][dim_];
    for (std::size_t k = 0; k < dim_; ++k) z += w_[c][k] * x[k];
    s[c] = z;
  }
  return s;
}

std::size_t LinearSvm::predict(std::span<const double> x) const { return argmax(scores(x)); }

MlpModel MlpModel::initialized(std::size_t inputs, std::size_t hidden, std::size_t n_classes,
                               std::uint64_t seed) {
  MlpModel m{inputs, hidden, n_classes, {}};
  m.params.assign(hidden * inputs + hidden + n_classes * hidden + n_classes, 0.0);
  auto rng = make_rng(seed, 0x4D4C50);
  const std::size_t first = hidden * inputs + hidden;
  init_uniform({m.params.data(), first}, inputs, rng);
  init_uniform({m.params.data() + first, m.params.size() - first}, hidden, rng);
  return m;
}

namespace {

struct MlpPass {
  std::vector<double> a1;  // hidden activations
  std::vector<double> probs;
};

MlpPass mlp_pass(const MlpModel& m, std::span<const double> x) {
  if (x.size() != m.inputs) fail(ErrorKind::InvalidInput, "MLP input length mismatch");
  const double* w1 = m.params.data();
  const double* b1 = w1 + m.hidden * m.inputs;
  const double* w2 = b1 + m.hidden;
  const double* b2 = w2 + m.n_classes * m.hidden;
  MlpPass p;
  p.a1.resize(m.hidden);
  for (std::size_t h = 0; h < m.hidden; ++h) {
    double z = b1[h];
    for (std::size_t k = 0; k < m.inputs; ++k) z += w1[h * m.inputs + k] * x[k];
    p.a1[h] = std::tanh(z);
  }
  std::vector<double> logits(m.n_classes);
  for (std::size_t c = 0; c < m.n_classes; ++c) {
    double z = b2[c];
    for (std::size_t h = 0; h < m.hidden; ++h) z += w2[c * m.hidden + h] * p.a1[h];
    logits[c] = z;
  }
  p.probs = softmax(logits);
  return p;
}

}  // namespace

std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> x) {
  return mlp_pass(m, x).probs;
}

double mlp_loss_grad(const MlpModel& m, std::span<const double> x, std::size_t target,
                     std::span<double> grad) {
  if (grad.size() != m.params.size()) fail(ErrorKind::InvalidInput, "gradient size mismatch");
  const auto p = mlp_pass(m, x);
  const std::size_t H = m.hidden;
  const std::size_t D = m.inputs;
  const double* w2 = m.params.data() + H * D + H;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + H * D;
  double* g_w2 = g_b1 + H;
  double* g_b2 = g_w2 + m.n_classes * H;

  std::vector<double> dz(p.probs);
  dz[target] -= 1.0;
  std::vector<double> da1(H, 0.0);
  for (std::size_t c = 0; c < m.n_classes; ++c) {
    g_b2[c] += dz[c];
    for (std::size_t h = 0; h < H; ++h) {
      g_w2[c * H + h] += dz[c] * p.a1[h];
      da1[h] += w2[c * H + h] * dz[c];
    }
  }
  for (std::size_t h = 0; h < H; ++h) {
    const double dz1 = da1[h] * (1.0 - p.a1[h] * p.a1[h]);
    g_b1[h] += dz1;
    for (std::size_t k = 0; k < D; ++k) g_w1[h * D + k] += dz1 * x[k];
  }
  return cross_entropy(p.probs, target);
}

Lstm1dModel Lstm1dModel::initialized(std::size_t hidden, std::size_t n_classes, Pooling pooling,
                                     std::uint64_t seed) {
  Lstm1dModel m{hidden, n_classes, pooling, {}};
  const std::size_t gates = 4 * hidden;
  const std::size_t first = gates + gates * hidden + gates;
  m.params.assign(first + n_classes * hidden + n_classes, 0.0);
  auto rng = make_rng(seed, 0x4C31);
  init_uniform({m.params.data(), first}, 1 + hidden, rng);
  init_uniform({m.params.data() + first, m.params.size() - first}, hidden, rng);
  return m;
}

namespace {

enum : std::size_t { kI = 0, kO, kG, kF };

struct Lstm1dPass {
  std::size_t steps = 0;
  std::vector<double> gates, cell, tanh_c, h;  // per step
  std::vector<double> pooled, probs;
};

Lstm1dPass lstm1d_pass(const Lstm1dModel& m, std::span<const double> x) {
  if (x.empty()) fail(ErrorKind::InvalidInput, "empty sequence");
  const std::size_t H = m.hidden;
  const std::size_t G = 4 * H;
  const double* wx = m.params.data();
  const double* wr = wx + G;
  const double* b = wr + G * H;
  const double* fw = b + G;
  const double* fb = fw + m.n_classes * H;

  Lstm1dPass p;
  p.steps = x.size();
  p.gates.resize(p.steps * G);
  p.cell.resize(p.steps * H);
  p.tanh_c.resize(p.steps * H);
  p.h.resize(p.steps * H);
  const std::vector<double> zeros(H, 0.0);
  std::vector<double> a(G);
  for (std::size_t t = 0; t < p.steps; ++t) {
    const double* hp = t > 0 ? &p.h[(t - 1) * H] : zeros.data();
    const double* cp = t > 0 ? &p.cell[(t - 1) * H] : zeros.data();
    for (std::size_t r = 0; r < G; ++r) {
      double z = b[r] + wx[r] * x[t];
      for (std::size_t k = 0; k < H; ++k) z += wr[r * H + k] * hp[k];
      a[r] = z;
    }
    for (std::size_t k = 0; k < H; ++k) {
      const double in = sigmoid(a[kI * H + k]);
      const double out = sigmoid(a[kO * H + k]);
      const double g = std::tanh(a[kG * H + k]);
      const double f = sigmoid(a[kF * H + k]);
      double* gate = &p.gates[t * G];
      gate[kI * H + k] = in;
      gate[kO * H + k] = out;
      gate[kG * H + k] = g;
      gate[kF * H + k] = f;
      const double c = in * g + f * cp[k];
      if (!std::isfinite(c)) fail(ErrorKind::NumericOverflow, "1D LSTM cell state overflow");
      p.cell[t * H + k] = c;
      p.tanh_c[t * H + k] = std::tanh(c);
      p.h[t * H + k] = out * p.tanh_c[t * H + k];
    }
  }
  p.pooled.assign(H, 0.0);
  if (m.pooling == Pooling::Mean) {
    for (std::size_t t = 0; t < p.steps; ++t) {
      for (std::size_t k = 0; k < H; ++k) p.pooled[k] += p.h[t * H + k] / static_cast<double>(p.steps);
    }
  } else {
    std::copy_n(&p.h[(p.steps - 1) * H], H, p.pooled.begin());
  }
  std::vector<double> logits(m.n_classes);
  for (std::size_t c = 0; c < m.n_classes; ++c) {
    double z = fb[c];
    for (std::size_t k = 0; k < H; ++k) z += fw[c * H + k] * p.pooled[k];
    logits[c] = z;
  }
  p.probs = softmax(logits);
  return p;
}

}  // namespace

std::vector<double> lstm1d_forward(const Lstm1dModel& m, std::span<const double> x) {
  return lstm1d_pass(m, x).probs;
}

double lstm1d_loss_grad(const Lstm1dModel& m, std::span<const double> x, std::size_t target,
                        std::span<double> grad) {
  if (grad.size() != m.params.size()) fail(ErrorKind::InvalidInput, "gradient size mismatch");
  const auto p = lstm1d_pass(m, x);
  const std::size_t H = m.hidden;
  const std::size_t G = 4 * H;
  const std::size_t T = p.steps;
  const double* wr = m.params.data() + G;
  const double* fw = wr + G * H + G;
  double* g_wx = grad.data();
  double* g_wr = g_wx + G;
  double* g_b = g_wr + G * H;
  double* g_fw = g_b + G;
  double* g_fb = g_fw + m.n_classes * H;

  std::vector<double> dz(p.probs);
  dz[target] -= 1.0;
  std::vector<double> dpooled(H, 0.0);
  for (std::size_t c = 0; c < m.n_classes; ++c) {
    g_fb[c] += dz[c];
    for (std::size_t k = 0; k < H; ++k) {
      g_fw[c * H + k] += dz[c] * p.pooled[k];
      dpooled[k] += fw[c * H + k] * dz[c];
    }
  }

  const std::vector<double> zeros(H, 0.0);
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), da(G);
  for (std::size_t t = T; t-- > 0;) {
    const double* gate = &p.gates[t * G];
    const double* tc = &p.tanh_c[t * H];
    const double* hp = t > 0 ? &p.h[(t - 1) * H] : zeros.data();
    const double* cp = t > 0 ? &p.cell[(t - 1) * H] : zeros.data();
    for (std::size_t k = 0; k < H; ++k) {
      double dh = dh_next[k];
      if (m.pooling == Pooling::Mean) dh += dpooled[k] / static_cast<double>(T);
      else if (t == T - 1) dh += dpooled[k];
      const double in = gate[kI * H + k];
      const double out = gate[kO * H + k];
      const double g = gate[kG * H + k];
      const double f = gate[kF * H + k];
      const double dc = dh * out * (1.0 - tc[k] * tc[k]) + dc_next[k];
      da[kO * H + k] = dh * tc[k] * out * (1.0 - out);
      da[kI * H + k] = dc * g * in * (1.0 - in);
      da[kG * H + k] = dc * in * (1.0 - g * g);
      da[kF * H + k] = dc * cp[k] * f * (1.0 - f);
      dc_next[k] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < G; ++r) {
      g_wx[r] += da[r] * x[t];
      g_b[r] += da[r];
      for (std::size_t k = 0; k < H; ++k) {
        g_wr[r * H + k] += da[r] * hp[k];
        dh_next[k] += wr[r * H + k] * da[r];
      }
    }
  }
  return cross_entropy(p.probs, target);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> inner_split(
    const Dataset& ds, double holdout_frac, std::uint64_t seed) {
  auto subjects = ds.subjects();
  std::vector<std::size_t> inner, val;
  if (subjects.size() < 2) {
    inner.resize(ds.size());
    std::iota(inner.begin(), inner.end(), 0);
    return {inner, val};
  }
  auto rng = make_rng(seed, 0x494E);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  auto n_val = static_cast<std::size_t>(std::lround(holdout_frac * static_cast<double>(subjects.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, subjects.size() - 1);
  const std::set<std::string> held(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_val));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (held.count(ds.instances[i].subject_id) ? val : inner).push_back(i);
  }
  return {inner, val};
}

std::vector<std::size_t> baseline_fit_predict(Method method, const Dataset& train,
                                              const Dataset& test, const BaselineConfig& cfg,
                                              std::uint64_t seed) {
  if (train.size() == 0) fail(ErrorKind::InsufficientData, "empty training set");
  std::vector<Candidate> candidates;
  switch (method) {
    case Method::Knn: {
      if (cfg.knn_k) {
        const std::size_t k = *cfg.knn_k;
        return fit_predict_knn(train, test, k);
      }
      for (std::size_t k : cfg.knn_grid) {
        candidates.push_back([k](const Dataset& tr, const Dataset& te) {
          // Grid values larger than an inner training set fall back to its size.
          return fit_predict_knn(tr, te, std::min(k, tr.size()));
        });
      }
      break;
    }
    case Method::LinearSvm:
      for (double lambda : cfg.svm_lambda_grid) {
        candidates.push_back([lambda, &cfg, seed](const Dataset& tr, const Dataset& te) {
          return fit_predict_svm(tr, te, lambda, cfg.svm_epochs, seed);
        });
      }
      break;
    case Method::Mlp:
    case Method::Lstm1d: {
      const auto& grid = method == Method::Mlp ? cfg.mlp_hidden_grid : cfg.lstm_hidden_grid;
      for (std::size_t hidden : grid) {
        candidates.push_back([hidden, method, &cfg, seed](const Dataset& tr, const Dataset& te) {
          TrainConfig nn = cfg.nn;
          nn.seed = seed;
          nn.hidden = hidden;
          return method == Method::Mlp ? fit_predict_mlp(tr, te, hidden, nn)
                                       : fit_predict_lstm1d(tr, te, hidden, nn);
        });
      }
      break;
    }
    case Method::MdLstm2d:
      fail(ErrorKind::Configuration, "the 2D LSTM is not a baseline");
  }
  return grid_search(candidates, train, test, cfg.inner_holdout_frac, seed);
}

}  // namespace blinkflow::learn
