#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "blinkflow/learn/dataset.hpp"
#include "blinkflow/learn/optim.hpp"
#include "blinkflow/matrix.hpp"

namespace blinkflow::learn {

// Gate rows inside the 5H pre-activation block. The two forget gates gate the
// predecessor cell along the time axis (i-1, j) and the frequency axis (i, j-1).
enum MdGate : std::size_t { kGateInput = 0, kGateOutput, kGateCell, kGateForgetTime, kGateForgetFreq };
inline constexpr std::size_t kMdGates = 5;
inline constexpr double kForgetBiasInit = -1.0;

// Single-direction 2D LSTM over a T x F grid of scalar cells, scanned from
// (0, 0), followed by pooling over the hidden states and a softmax layer.
//
// Flat parameter layout (H = hidden, C = classes):
//   w_input     5H        input weight per gate row
//   w_recurrent 5H x 2H   row r: [weights on h(i-1,j) | weights on h(i,j-1)]
//   bias        5H
//   fc_weight   C x H
//   fc_bias     C
class MdLstmModel {
 public:
  MdLstmModel() = default;
  // All parameters zero.
  MdLstmModel(std::size_t hidden, std::size_t n_classes, Pooling pooling = Pooling::Mean);

  // Uniform in +-1/sqrt(fan_in) per weight matrix; forget-gate biases start
  // at kForgetBiasInit.
  static MdLstmModel initialized(std::size_t hidden, std::size_t n_classes, Pooling pooling,
                                 std::uint64_t seed);

  std::size_t hidden() const { return hidden_; }
  std::size_t n_classes() const { return n_classes_; }
  Pooling pooling() const { return pooling_; }
  std::size_t param_count() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::span<const double> w_input() const { return view(off_w_input(), kMdGates * hidden_); }
  std::span<const double> w_recurrent() const {
    return view(off_w_recurrent(), kMdGates * hidden_ * 2 * hidden_);
  }
  std::span<const double> bias() const { return view(off_bias(), kMdGates * hidden_); }
  std::span<const double> fc_weight() const { return view(off_fc_weight(), n_classes_ * hidden_); }
  std::span<const double> fc_bias() const { return view(off_fc_bias(), n_classes_); }

  std::size_t off_w_input() const { return 0; }
  std::size_t off_w_recurrent() const { return kMdGates * hidden_; }
  std::size_t off_bias() const { return off_w_recurrent() + kMdGates * hidden_ * 2 * hidden_; }
  std::size_t off_fc_weight() const { return off_bias() + kMdGates * hidden_; }
  std::size_t off_fc_bias() const { return off_fc_weight() + n_classes_ * hidden_; }

  friend bool operator==(const MdLstmModel&, const MdLstmModel&) = default;

 private:
  std::span<const double> view(std::size_t off, std::size_t n) const { return {params_.data() + off, n}; }

  std::size_t hidden_ = 0;
  std::size_t n_classes_ = 0;
  Pooling pooling_ = Pooling::Mean;
  std::vector<double> params_;
};

// Activations kept from the forward scan for the reverse pass.
struct MdLstmTrace {
  std::size_t rows = 0, cols = 0, hidden = 0;
  std::vector<double> gates;   // rows*cols x 5H, post-activation
  std::vector<double> cell;    // rows*cols x H
  std::vector<double> tanh_c;  // rows*cols x H
  std::vector<double> h;       // rows*cols x H
  std::vector<double> pooled;  // H
  std::vector<double> probs;   // C
};

// Class probabilities. Throws NumericOverflow when a state stops being finite.
std::vector<double> mdlstm_forward(const MdLstmModel& m, const Matrix& x, MdLstmTrace* trace = nullptr);

// Cross-entropy loss of one example; its gradient is added to grad
// (length param_count()).
double mdlstm_loss_grad(const MdLstmModel& m, const Matrix& x, std::size_t target,
                        std::span<double> grad);

std::size_t mdlstm_predict(const MdLstmModel& m, const Matrix& x);

// Trains a freshly initialized model on the spectrogram instances of ds.
MdLstmModel train_mdlstm(const Dataset& ds, const TrainConfig& cfg, TrainHistory* history = nullptr);

inline constexpr int kCheckpointVersion = 1;

// Versioned JSON: shapes plus flat weight arrays at 9 significant digits.
void write_checkpoint(std::ostream& out, const MdLstmModel& m);
MdLstmModel read_checkpoint(std::istream& in);

}  // namespace blinkflow::learn
