#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blinkflow/learn/baselines.hpp"
#include "blinkflow/learn/dataset.hpp"
#include "blinkflow/learn/optim.hpp"
#include "blinkflow/matrix.hpp"

namespace blinkflow::learn {

struct FoldResult {
  std::string subject;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

struct EvalReport {
  std::string method;
  std::string labeling;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config;  // effective configuration echo

  std::vector<double> fold_accuracies() const;
  nlohmann::json to_json() const;
};

struct EvalConfig {
  TrainConfig mdlstm;
  BaselineConfig baseline;
  FeatureSet features;  // for knn / linear_svm
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Fits on train, predicts test. The seed is base seed + fold index.
using Predictor = std::function<std::vector<std::size_t>(const Dataset& train, const Dataset& test,
                                                         std::uint64_t seed)>;

// Leave-one-subject-out loop around any predictor.
EvalReport evaluate_with(const Dataset& ds, const Predictor& predictor, std::string method_id,
                         std::uint64_t seed);

// ds must carry the input kind the method consumes.
EvalReport evaluate(const Dataset& ds, Method method, const EvalConfig& cfg);

// Builds the matching dataset from blocks and evaluates.
EvalReport evaluate_blocks(const std::vector<BlockRecord>& blocks, Method method,
                           Labeling labeling, const EvalConfig& cfg,
                           const std::vector<std::string>& class_order = {});

}  // namespace blinkflow::learn
