#include "blinkflow/learn/mdlstm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "blinkflow/error.hpp"
#include "blinkflow/format.hpp"
#include "blinkflow/learn/nn.hpp"

namespace blinkflow::learn {

namespace {

const Matrix& spectrogram_input(const LabeledInstance& inst) {
  const auto* x = std::get_if<Matrix>(&inst.input);
  if (!x) fail(ErrorKind::InvalidInput, "2D LSTM needs spectrogram instances");
  return *x;
}

double quantize(double x) { return *parse_number(format_number(x)); }

}  // namespace

MdLstmModel::MdLstmModel(std::size_t hidden, std::size_t n_classes, Pooling pooling)
    : hidden_(hidden), n_classes_(n_classes), pooling_(pooling) {
  if (hidden == 0 || n_classes < 2) fail(ErrorKind::Configuration, "invalid 2D LSTM shape");
  params_.assign(off_fc_bias() + n_classes_, 0.0);
}

MdLstmModel MdLstmModel::initialized(std::size_t hidden, std::size_t n_classes, Pooling pooling,
                                     std::uint64_t seed) {
  MdLstmModel m(hidden, n_classes, pooling);
  auto rng = make_rng(seed, 0x4D44);
  auto& p = m.params_;
  const std::size_t G = kMdGates * hidden;
  // Each matrix uses its own fan-in: 1 for the scalar cell input, 2H for the
  // two predecessor states.
  init_uniform({p.data() + m.off_w_input(), G}, 1, rng);
  init_uniform({p.data() + m.off_w_recurrent(), G * 2 * hidden}, 2 * hidden, rng);
  init_uniform({p.data() + m.off_bias(), G}, 1 + 2 * hidden, rng);
  // Two forget gates near 0.5 each sum to about 1 and the cell state grows
  // along every lattice path; start them well below that.
  for (std::size_t k = 0; k < 2 * hidden; ++k) {
    p[m.off_bias() + kGateForgetTime * hidden + k] = kForgetBiasInit;
  }
  init_uniform({p.data() + m.off_fc_weight(), p.size() - m.off_fc_weight()}, hidden, rng);
  return m;
}

std::vector<double> mdlstm_forward(const MdLstmModel& m, const Matrix& x, MdLstmTrace* trace) {
  if (x.empty()) fail(ErrorKind::InvalidInput, "empty input grid");
  MdLstmTrace local;
  MdLstmTrace& tr = trace ? *trace : local;
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const std::size_t H = m.hidden();
  const std::size_t G = kMdGates * H;
  const std::size_t cells = rows * cols;
  tr.rows = rows;
  tr.cols = cols;
  tr.hidden = H;
  tr.gates.resize(cells * G);
  tr.cell.resize(cells * H);
  tr.tanh_c.resize(cells * H);
  tr.h.resize(cells * H);

  const auto wx = m.w_input();
  const auto wr = m.w_recurrent();
  const auto b = m.bias();
  std::vector<double> a(G);
  // Recurrent weights transposed to (2H x G) so the product is a sum of axpys.
  std::vector<double> wr_t(2 * H * G);
  for (std::size_t r = 0; r < G; ++r) {
    for (std::size_t k = 0; k < 2 * H; ++k) wr_t[k * G + r] = wr[r * 2 * H + k];
  }
  // [h(i-1,j), h(i,j-1)], zero outside the grid.
  std::vector<double> hcat(2 * H);
  const std::vector<double> zeros(H, 0.0);

  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t cell = i * cols + j;
      const double xv = x(i, j);
      if (!std::isfinite(xv)) fail(ErrorKind::InvalidInput, "non-finite input cell");
      const double* c_time = i > 0 ? &tr.cell[(cell - cols) * H] : zeros.data();
      const double* c_freq = j > 0 ? &tr.cell[(cell - 1) * H] : zeros.data();
      if (i > 0) {
        std::copy_n(&tr.h[(cell - cols) * H], H, hcat.begin());
      } else {
        std::fill_n(hcat.begin(), H, 0.0);
      }
      if (j > 0) {
        std::copy_n(&tr.h[(cell - 1) * H], H, hcat.begin() + static_cast<std::ptrdiff_t>(H));
      } else {
        std::fill_n(hcat.begin() + static_cast<std::ptrdiff_t>(H), H, 0.0);
      }

      double* __restrict acc = a.data();
      for (std::size_t r = 0; r < G; ++r) acc[r] = b[r] + wx[r] * xv;
      for (std::size_t k = 0; k < 2 * H; ++k) {
        const double hk = hcat[k];
        const double* __restrict col = &wr_t[k * G];
        for (std::size_t r = 0; r < G; ++r) acc[r] += col[r] * hk;
      }
      double* gate = &tr.gates[cell * G];
      double* c = &tr.cell[cell * H];
      double* tc = &tr.tanh_c[cell * H];
      double* h = &tr.h[cell * H];
      for (std::size_t r = 0; r < G; ++r) {
        gate[r] = r / H == kGateCell ? fast_tanh(a[r]) : sigmoid(a[r]);
      }
      bool finite = true;
      for (std::size_t k = 0; k < H; ++k) {
        c[k] = gate[kGateInput * H + k] * gate[kGateCell * H + k] +
               gate[kGateForgetTime * H + k] * c_time[k] + gate[kGateForgetFreq * H + k] * c_freq[k];
        finite = finite && std::isfinite(c[k]);
        tc[k] = fast_tanh(c[k]);
        h[k] = gate[kGateOutput * H + k] * tc[k];
      }
      if (!finite) {
        fail(ErrorKind::NumericOverflow, "2D LSTM cell state overflow at (" + std::to_string(i) +
                                             ", " + std::to_string(j) + ")");
      }
    }
  }

  tr.pooled.assign(H, 0.0);
  if (m.pooling() == Pooling::Mean) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      for (std::size_t k = 0; k < H; ++k) tr.pooled[k] += tr.h[cell * H + k];
    }
    for (auto& v : tr.pooled) v /= static_cast<double>(cells);
  } else {
    std::copy_n(&tr.h[(cells - 1) * H], H, tr.pooled.begin());
  }

  const auto fw = m.fc_weight();
  const auto fb = m.fc_bias();
  std::vector<double> logits(m.n_classes());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    double z = fb[c];
    for (std::size_t k = 0; k < H; ++k) z += fw[c * H + k] * tr.pooled[k];
    logits[c] = z;
  }
  tr.probs = softmax(logits);
  return tr.probs;
}

double mdlstm_loss_grad(const MdLstmModel& m, const Matrix& x, std::size_t target,
                        std::span<double> grad) {
  if (target >= m.n_classes()) fail(ErrorKind::InvalidInput, "target class out of range");
  if (grad.size() != m.param_count()) fail(ErrorKind::InvalidInput, "gradient size mismatch");
  thread_local MdLstmTrace tr;
  mdlstm_forward(m, x, &tr);
  const double loss = cross_entropy(tr.probs, target);

  const std::size_t rows = tr.rows;
  const std::size_t cols = tr.cols;
  const std::size_t cells = rows * cols;
  const std::size_t H = m.hidden();
  const std::size_t G = kMdGates * H;
  const std::size_t C = m.n_classes();

  // Softmax + cross-entropy: dL/dz = p - onehot.
  std::vector<double> dz(tr.probs);
  dz[target] -= 1.0;
  const auto fw = m.fc_weight();
  double* g_fw = grad.data() + m.off_fc_weight();
  double* g_fb = grad.data() + m.off_fc_bias();
  std::vector<double> dpooled(H, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    g_fb[c] += dz[c];
    for (std::size_t k = 0; k < H; ++k) {
      g_fw[c * H + k] += dz[c] * tr.pooled[k];
      dpooled[k] += fw[c * H + k] * dz[c];
    }
  }
  std::vector<double> dh_pool(H, 0.0);  // gradient reaching every cell (mean pooling)
  if (m.pooling() == Pooling::Mean) {
    for (std::size_t k = 0; k < H; ++k) dh_pool[k] = dpooled[k] / static_cast<double>(cells);
  }

  const auto wr = m.w_recurrent();
  double* g_wx = grad.data() + m.off_w_input();
  double* g_wr = grad.data() + m.off_w_recurrent();
  double* g_b = grad.data() + m.off_bias();

  const std::vector<double> zeros(H, 0.0);
  // Contributions flowing from row i+1 into row i, indexed by column.
  std::vector<double> dh_below(cols * H, 0.0), dc_below(cols * H, 0.0);
  std::vector<double> dh_above(cols * H, 0.0), dc_above(cols * H, 0.0);
  std::vector<double> dh_right(H), dc_right(H);
  std::vector<double> da(G);

  for (std::size_t ii = rows; ii-- > 0;) {
    std::fill(dh_above.begin(), dh_above.end(), 0.0);
    std::fill(dc_above.begin(), dc_above.end(), 0.0);
    std::fill(dh_right.begin(), dh_right.end(), 0.0);
    std::fill(dc_right.begin(), dc_right.end(), 0.0);
    for (std::size_t jj = cols; jj-- > 0;) {
      const std::size_t cell = ii * cols + jj;
      const double* gate = &tr.gates[cell * G];
      const double* tc = &tr.tanh_c[cell * H];
      const double* h_time = ii > 0 ? &tr.h[(cell - cols) * H] : zeros.data();
      const double* h_freq = jj > 0 ? &tr.h[(cell - 1) * H] : zeros.data();
      const double* c_time = ii > 0 ? &tr.cell[(cell - cols) * H] : zeros.data();
      const double* c_freq = jj > 0 ? &tr.cell[(cell - 1) * H] : zeros.data();
      const bool is_last = cell == cells - 1;

      for (std::size_t k = 0; k < H; ++k) {
        double dhk = dh_pool[k] + dh_below[jj * H + k] + dh_right[k];
        if (is_last && m.pooling() == Pooling::Last) dhk += dpooled[k];
        const double in = gate[kGateInput * H + k];
        const double out = gate[kGateOutput * H + k];
        const double g = gate[kGateCell * H + k];
        const double ft = gate[kGateForgetTime * H + k];
        const double ff = gate[kGateForgetFreq * H + k];
        const double dck = dhk * out * (1.0 - tc[k] * tc[k]) + dc_below[jj * H + k] + dc_right[k];
        da[kGateOutput * H + k] = dhk * tc[k] * out * (1.0 - out);
        da[kGateInput * H + k] = dck * g * in * (1.0 - in);
        da[kGateCell * H + k] = dck * in * (1.0 - g * g);
        da[kGateForgetTime * H + k] = dck * c_time[k] * ft * (1.0 - ft);
        da[kGateForgetFreq * H + k] = dck * c_freq[k] * ff * (1.0 - ff);
        // Cell-state paths to the predecessors.
        dc_above[jj * H + k] = dck * ft;
        dc_right[k] = dck * ff;
      }

      const double xv = x(ii, jj);
      std::fill(dh_right.begin(), dh_right.end(), 0.0);
      double* up = &dh_above[jj * H];
      for (std::size_t r = 0; r < G; ++r) {
        const double d = da[r];
        g_wx[r] += d * xv;
        g_b[r] += d;
        const double* row = &wr[r * 2 * H];
        double* g_row = &g_wr[r * 2 * H];
        for (std::size_t k = 0; k < H; ++k) {
          g_row[k] += d * h_time[k];
          up[k] += row[k] * d;
        }
        for (std::size_t k = 0; k < H; ++k) {
          g_row[H + k] += d * h_freq[k];
          dh_right[k] += row[H + k] * d;
        }
      }
    }
    std::swap(dh_below, dh_above);
    std::swap(dc_below, dc_above);
  }
  return loss;
}

std::size_t mdlstm_predict(const MdLstmModel& m, const Matrix& x) {
  const auto p = mdlstm_forward(m, x);
  return argmax(p);
}

MdLstmModel train_mdlstm(const Dataset& ds, const TrainConfig& cfg, TrainHistory* history) {
  cfg.validate();
  auto model = MdLstmModel::initialized(cfg.hidden, ds.n_classes, cfg.pooling, cfg.seed);
  for (const auto& inst : ds.instances) spectrogram_input(inst);
  auto result = fit_adam(model.params(), ds.size(), cfg, [&](std::size_t i, std::span<double> grad) {
    return mdlstm_loss_grad(model, spectrogram_input(ds.instances[i]), ds.instances[i].label, grad);
  });
  if (history) *history = std::move(result);
  return model;
}

void write_checkpoint(std::ostream& out, const MdLstmModel& m) {
  const auto arr = [](std::span<const double> v) {
    auto a = nlohmann::json::array();
    for (double x : v) a.push_back(quantize(x));
    return a;
  };
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["model"] = "mdlstm2d";
  j["hidden"] = m.hidden();
  j["n_classes"] = m.n_classes();
  j["pooling"] = std::string(to_string(m.pooling()));
  j["shapes"] = {{"w_input", {kMdGates * m.hidden()}},
                 {"w_recurrent", {kMdGates * m.hidden(), 2 * m.hidden()}},
                 {"bias", {kMdGates * m.hidden()}},
                 {"fc_weight", {m.n_classes(), m.hidden()}},
                 {"fc_bias", {m.n_classes()}}};
  j["weights"] = {{"w_input", arr(m.w_input())},
                  {"w_recurrent", arr(m.w_recurrent())},
                  {"bias", arr(m.bias())},
                  {"fc_weight", arr(m.fc_weight())},
                  {"fc_bias", arr(m.fc_bias())}};
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorKind::Io, "checkpoint write failure");
}

MdLstmModel read_checkpoint(std::istream& in) {
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError(0, "checkpoint is not a JSON object");
  try {
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw ParseError(0, "unsupported checkpoint version");
    }
    if (j.at("model").get<std::string>() != "mdlstm2d") throw ParseError(0, "not a 2D LSTM checkpoint");
    MdLstmModel m(j.at("hidden").get<std::size_t>(), j.at("n_classes").get<std::size_t>(),
                  parse_pooling(j.at("pooling").get<std::string>()));
    const auto& w = j.at("weights");
    const auto load = [&](const char* name, std::size_t offset, std::size_t count) {
      const auto v = w.at(name).get<std::vector<double>>();
      if (v.size() != count) throw ParseError(0, std::string("bad size for ") + name);
      std::copy(v.begin(), v.end(), m.params().begin() + static_cast<std::ptrdiff_t>(offset));
    };
    load("w_input", m.off_w_input(), m.w_input().size());
    load("w_recurrent", m.off_w_recurrent(), m.w_recurrent().size());
    load("bias", m.off_bias(), m.bias().size());
    load("fc_weight", m.off_fc_weight(), m.fc_weight().size());
    load("fc_bias", m.off_fc_bias(), m.fc_bias().size());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace blinkflow::learn
