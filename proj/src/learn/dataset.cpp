#include "blinkflow/learn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "blinkflow/error.hpp"
#include "blinkflow/learn/kmeans.hpp"
#include "blinkflow/preprocess.hpp"

namespace blinkflow::learn {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void minmax_scale(std::vector<double>& v) {
  if (v.empty()) return;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo;
  const double range = *hi - *lo;
  for (auto& x : v) x = range > 0.0 ? (x - a) / range : 0.0;
}

InstanceInput project(const BlockRecord& b, const DatasetOptions& options) {
  switch (options.input) {
    case InputKind::Spectrogram: return b.spectrogram.power;
    case InputKind::Features: return FeatureVector{options.features.extract(b.metrics)};
    case InputKind::Timeseries: return Sequence{b.sequence};
  }
  fail(ErrorKind::Configuration, "unknown input kind");
}

}  // namespace

std::string_view to_string(Labeling labeling) {
  switch (labeling) {
    case Labeling::Event: return "event";
    case Labeling::Subjective: return "subjective";
    case Labeling::Objective: return "objective";
  }
  return "unknown";
}

Labeling parse_labeling(std::string_view name) {
  if (name == "event") return Labeling::Event;
  if (name == "subjective") return Labeling::Subjective;
  if (name == "objective") return Labeling::Objective;
  fail(ErrorKind::Configuration, "unknown labeling '" + std::string(name) + "'");
}

std::vector<double> resample(const BlinkSeries& series, double rate_hz, std::size_t length) {
  if (!(rate_hz > 0.0) || length == 0) fail(ErrorKind::Configuration, "invalid resampling grid");
  const auto s = series.samples();
  std::vector<double> out(length);
  std::size_t j = 0;
  for (std::size_t k = 0; k < length; ++k) {
    const double t = series.start_time() + static_cast<double>(k) / rate_hz;
    while (j + 1 < s.size() && s[j + 1].t <= t) ++j;
    if (j + 1 >= s.size()) {
      out[k] = s.back().v;
    } else {
      const double a = (t - s[j].t) / (s[j + 1].t - s[j].t);
      out[k] = s[j].v + std::clamp(a, 0.0, 1.0) * (s[j + 1].v - s[j].v);
    }
  }
  return out;
}

BlockRecord prepare_block(const BlinkSeries& raw, const PipelineConfig& cfg,
                          std::string class_name, AuxScalars aux) {
  BlockRecord b;
  b.subject_id = raw.subject_id();
  b.block_id = raw.block_id();
  b.class_name = class_name.empty() ? raw.block_id() : std::move(class_name);
  b.is_baseline = lowercase(b.class_name) == "baseline";
  b.aux = aux;
  const auto sp = build_spectrogram(raw, cfg.spectro);
  b.metrics = metric_vector(raw, sp, cfg.metrics);
  b.spectrogram = minmax_normalize(sp);
  b.sequence = resample(detrend(raw, cfg.spectro.detrend_width_s), cfg.resample_rate_hz,
                        cfg.resample_length);
  minmax_scale(b.sequence);
  return b;
}

std::vector<double> FeatureSet::extract(const MetricVector& m) const {
  std::vector<double> out;
  if (br) out.push_back(m.br);
  if (bd) out.push_back(m.bd);
  if (be) out.push_back(m.be);
  return out;
}

std::string FeatureSet::name() const {
  std::string out;
  const auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += n;
  };
  add(br, "br");
  add(bd, "bd");
  add(be, "be");
  return out;
}

std::vector<std::string> Dataset::subjects() const {
  std::set<std::string> s;
  for (const auto& inst : instances) s.insert(inst.subject_id);
  return {s.begin(), s.end()};
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.n_classes = n_classes;
  out.labeling = labeling;
  out.class_names = class_names;
  out.instances.reserve(indices.size());
  for (auto i : indices) out.instances.push_back(instances.at(i));
  return out;
}

void Dataset::validate() const {
  if (subjects().size() < 2) fail(ErrorKind::Configuration, "dataset needs at least 2 subjects");
  if (n_classes < 2) fail(ErrorKind::DegenerateLabeling, "dataset needs at least 2 classes");
  std::vector<bool> seen(n_classes, false);
  for (const auto& inst : instances) {
    if (inst.label >= n_classes) fail(ErrorKind::InvalidInput, "label out of range");
    seen[inst.label] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    fail(ErrorKind::DegenerateLabeling, "some class has no instances");
  }
}

Dataset make_dataset(const std::vector<BlockRecord>& blocks, Labeling labeling,
                     const DatasetOptions& options) {
  Dataset ds;
  ds.labeling = labeling;

  if (labeling == Labeling::Event) {
    if (options.class_order.empty()) {
      std::set<std::string> names;
      for (const auto& b : blocks) names.insert(b.class_name);
      ds.class_names.assign(names.begin(), names.end());
    } else {
      ds.class_names = options.class_order;
    }
    ds.n_classes = ds.class_names.size();
    for (const auto& b : blocks) {
      if (b.class_name.empty()) fail(ErrorKind::Labeling, "event labeling needs block ids");
      const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), b.class_name);
      if (it == ds.class_names.end()) fail(ErrorKind::Labeling, "unknown class '" + b.class_name + "'");
      ds.instances.push_back({project(b, options),
                              static_cast<std::size_t>(it - ds.class_names.begin()), b.subject_id,
                              b.block_id, b.aux});
    }
  } else {
    std::vector<const BlockRecord*> task;
    std::vector<double> scalars;
    for (const auto& b : blocks) {
      if (b.is_baseline) continue;
      const auto& value = labeling == Labeling::Subjective ? b.aux.perceived_difficulty
                                                           : b.aux.correct_rate;
      if (!value) {
        fail(ErrorKind::Labeling, "block " + b.subject_id + "/" + b.block_id + " lacks the " +
                                      std::string(to_string(labeling)) + " scalar");
      }
      task.push_back(&b);
      scalars.push_back(*value);
    }
    const auto split = kmeans_split(scalars);
    ds.class_names = {"low", "high"};
    ds.n_classes = 2;
    for (std::size_t i = 0; i < task.size(); ++i) {
      ds.instances.push_back({project(*task[i], options),
                              static_cast<std::size_t>(split.labels[i]), task[i]->subject_id,
                              task[i]->block_id, task[i]->aux});
    }
  }
  ds.validate();
  return ds;
}

std::vector<Fold> loso_folds(const Dataset& ds) {
  std::vector<Fold> folds;
  for (const auto& subject : ds.subjects()) {
    Fold f;
    f.subject = subject;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (ds.instances[i].subject_id == subject ? f.test : f.train).push_back(i);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace blinkflow::learn
