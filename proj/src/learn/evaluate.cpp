#include "blinkflow/learn/evaluate.hpp"

#include <numeric>

#include "blinkflow/error.hpp"
#include "blinkflow/learn/mdlstm.hpp"

namespace blinkflow::learn {

namespace {

nlohmann::json train_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},     {"clip_norm", c.clip_norm},
          {"pooling", to_string(c.pooling)},  {"hidden", c.hidden},     {"beta1", c.beta1},
          {"beta2", c.beta2},                 {"adam_eps", c.adam_eps}};
}

}  // namespace

std::vector<double> EvalReport::fold_accuracies() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.accuracy);
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_fold = nlohmann::json::array();
  for (const auto& f : folds) {
    per_fold.push_back({{"subject", f.subject}, {"accuracy", f.accuracy}, {"confusion", f.confusion}});
  }
  return {{"method", method},     {"labeling", labeling}, {"per_fold", per_fold},
          {"mean_accuracy", mean_accuracy}, {"seed", seed}, {"config", config}};
}

nlohmann::json EvalConfig::to_json() const {
  nlohmann::json b = {{"knn_grid", baseline.knn_grid},
                      {"svm_lambda_grid", baseline.svm_lambda_grid},
                      {"svm_epochs", baseline.svm_epochs},
                      {"mlp_hidden_grid", baseline.mlp_hidden_grid},
                      {"lstm_hidden_grid", baseline.lstm_hidden_grid},
                      {"nn", train_json(baseline.nn)},
                      {"inner_holdout_frac", baseline.inner_holdout_frac}};
  if (baseline.knn_k) b["knn_k"] = *baseline.knn_k;
  return {{"mdlstm", train_json(mdlstm)},
          {"baseline", b},
          {"features", features.name()},
          {"fold_seed_rule", "seed + fold_index"},
          {"seed", seed}};
}

EvalReport evaluate_with(const Dataset& ds, const Predictor& predictor, std::string method_id,
                         std::uint64_t seed) {
  ds.validate();
  EvalReport report;
  report.method = std::move(method_id);
  report.labeling = std::string(to_string(ds.labeling));
  report.seed = seed;
  const auto folds = loso_folds(ds);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train = ds.subset(folds[f].train);
    const auto test = ds.subset(folds[f].test);
    const auto pred = predictor(train, test, seed + f);
    if (pred.size() != test.size()) fail(ErrorKind::InvalidInput, "prediction count mismatch");
    FoldResult r;
    r.subject = folds[f].subject;
    r.confusion.assign(ds.n_classes, std::vector<std::size_t>(ds.n_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const std::size_t truth = test.instances[i].label;
      if (pred[i] >= ds.n_classes) fail(ErrorKind::InvalidInput, "predicted class out of range");
      ++r.confusion[truth][pred[i]];
      correct += pred[i] == truth;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
    report.folds.push_back(std::move(r));
  }
  const auto acc = report.fold_accuracies();
  report.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
  return report;
}

EvalReport evaluate(const Dataset& ds, Method method, const EvalConfig& cfg) {
  Predictor predictor;
  if (method == Method::MdLstm2d) {
    predictor = [&cfg](const Dataset& train, const Dataset& test, std::uint64_t seed) {
      TrainConfig tc = cfg.mdlstm;
      tc.seed = seed;
      const auto model = train_mdlstm(train, tc);
      std::vector<std::size_t> out;
      for (const auto& inst : test.instances) {
        out.push_back(mdlstm_predict(model, std::get<Matrix>(inst.input)));
      }
      return out;
    };
  } else {
    predictor = [&cfg, method](const Dataset& train, const Dataset& test, std::uint64_t seed) {
      return baseline_fit_predict(method, train, test, cfg.baseline, seed);
    };
  }
  auto report = evaluate_with(ds, predictor, std::string(to_string(method)), cfg.seed);
  report.config = cfg.to_json();
  return report;
}

EvalReport evaluate_blocks(const std::vector<BlockRecord>& blocks, Method method,
                           Labeling labeling, const EvalConfig& cfg,
                           const std::vector<std::string>& class_order) {
  DatasetOptions opts;
  opts.input = input_kind(method);
  opts.features = cfg.features;
  opts.class_order = class_order;
  return evaluate(make_dataset(blocks, labeling, opts), method, cfg);
}

}  // namespace blinkflow::learn
