#pragma once

// Precision/recall scoring, latency benchmarking and the two training
// experiments (cross-illumination matrix, training-set-size sweep).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pitchlines/classifier.hpp"
#include "pitchlines/dataset.hpp"
#include "pitchlines/elsed.hpp"
#include "pitchlines/errors.hpp"
#include "pitchlines/pso.hpp"
#include "pitchlines/synthetic.hpp"

namespace pitchlines {

struct PrecisionRecall {
  int tp = 0, fp = 0, fn = 0;
  double precision = 1.0;
  double recall = 1.0;
  std::size_t n_lines = 0;  // records predicted positive
};

inline double safe_ratio(int num, int den) { return den == 0 ? 1.0 : static_cast<double>(num) / den; }

inline PrecisionRecall make_pr(int tp, int fp, int fn) {
  return {tp, fp, fn, safe_ratio(tp, tp + fp), safe_ratio(tp, tp + fn), static_cast<std::size_t>(tp + fp)};
}

/// Tallies predictions against human labels. `predictions[i]` belongs to `records[i]`.
inline PrecisionRecall score(std::span<const SegmentRecord> records, std::span<const Label> predictions,
                             Label positive = Label::FIELD_LINE) {
  if (records.size() != predictions.size()) throw InvalidParam("records and predictions differ in length");
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].human_label) throw UnlabeledRecord(i);
    const bool actual = is_positive(records[i], positive);
    const bool predicted = predictions[i] == positive;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
  }
  return make_pr(tp, fp, fn);
}

/// Classifies each record from its stored gradient and length.
inline std::vector<Label> predict(std::span<const SegmentRecord> records, const ClassifierConfig& config) {
  std::vector<Label> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(classify(r.gradient(), r.length, config).label);
  return out;
}

inline PrecisionRecall evaluate(std::span<const SegmentRecord> records, const Thresholds& t, const TransitionRef& ref,
                                Label positive = Label::FIELD_LINE, bool signed_match = false) {
  const ClassifierConfig config{{{ref, t, positive}}, signed_match};
  const auto preds = predict(records, config);
  return score(records, preds, positive);
}

struct TimingStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double median_ms = 0.0;
  std::size_t samples = 0;
};

inline TimingStats timing_stats(std::vector<double> ms) {
  TimingStats t;
  t.samples = ms.size();
  if (ms.empty()) return t;
  t.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  double ss = 0.0;
  for (double v : ms) ss += (v - t.mean_ms) * (v - t.mean_ms);
  t.std_ms = ms.size() > 1 ? std::sqrt(ss / static_cast<double>(ms.size() - 1)) : 0.0;
  std::sort(ms.begin(), ms.end());
  const std::size_t n = ms.size();
  t.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  return t;
}

struct BenchmarkResult {
  std::vector<TimingStats> per_image;
  TimingStats aggregate;
  std::string note = "timing covers detect+classify only; image decode excluded";
};

/// Times the full detect+classify pipeline per frame on the calling thread.
/// The first pass over all images is a warm-up and is discarded.
inline BenchmarkResult benchmark(std::span<const RgbImage> images, const DetectorParams& params,
                                 const ClassifierConfig& config, int repeat) {
  if (repeat < 3) throw InvalidParam("benchmark needs repeat >= 3");
  if (images.empty()) throw InvalidParam("benchmark needs at least one image");
  using clock = std::chrono::steady_clock;
  std::vector<std::vector<double>> per(images.size());
  std::vector<double> all;
  volatile std::size_t sink = 0;
  for (int r = 0; r < repeat; ++r) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto t0 = clock::now();
      sink = sink + detect_and_classify(images[i], params, config).size();
      const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      if (r == 0) continue;
      per[i].push_back(ms);
      all.push_back(ms);
    }
  }
  BenchmarkResult out;
  for (auto& v : per) out.per_image.push_back(timing_stats(std::move(v)));
  out.aggregate = timing_stats(std::move(all));
  return out;
}

/// Detects and classifies one synthetic scene, labelling each record from
/// the scene's ground truth.
inline std::vector<SegmentRecord> scene_records(const SyntheticScene& scene, const std::string& image_name,
                                                const DetectorParams& params, const ClassifierConfig& config) {
  std::vector<SegmentRecord> out;
  for (const ClassifiedSegment& c : detect_and_classify(scene.image, params, config)) {
    SegmentRecord r = to_record(c, image_name);
    r.human_label = std::string(to_string(truth_label(c.segment.pixels, scene)));
    out.push_back(std::move(r));
  }
  return out;
}

struct LightingCondition {
  std::string name;
  std::vector<SegmentRecord> train;
  std::vector<SegmentRecord> eval;
};

struct CrossIlluminationResult {
  std::vector<std::string> names;
  std::vector<Thresholds> trained;
  std::vector<std::vector<double>> precision;  // [train][eval]
};

inline CrossIlluminationResult cross_illumination(std::span<const LightingCondition> conditions,
                                                  const PsoConfig& pso, const TransitionRef& ref,
                                                  Label positive = Label::FIELD_LINE) {
  if (conditions.empty()) throw InvalidParam("cross_illumination needs at least one condition");
  CrossIlluminationResult out;
  for (const auto& c : conditions) {
    out.names.push_back(c.name);
    out.trained.push_back(train(c.train, pso, ref, positive).thresholds);
  }
  for (const Thresholds& t : out.trained) {
    auto& row = out.precision.emplace_back();
    for (const auto& c : conditions) row.push_back(evaluate(c.eval, t, ref, positive).precision);
  }
  return out;
}

struct SweepRow {
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  double precision = 1.0;
  double recall = 1.0;
};

/// Seeded subset of `records` holding max(1, round(fraction * n)) entries.
inline std::vector<SegmentRecord> sample_fraction(std::span<const SegmentRecord> records, double fraction,
                                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidParam("fraction must be in (0, 1]");
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(records.size()))));
  idx.resize(std::min(n, idx.size()));
  std::sort(idx.begin(), idx.end());
  std::vector<SegmentRecord> out;
  for (std::size_t i : idx) out.push_back(records[i]);
  return out;
}

/// One row per (fraction, seed): train on the sampled share, score on `eval`.
/// The trainer runs with `pso` as given, so rows differ only in the sample.
inline std::vector<SweepRow> set_size_sweep(std::span<const SegmentRecord> train_records,
                                            std::span<const SegmentRecord> eval_records,
                                            std::span<const double> fractions, std::span<const std::uint64_t> seeds,
                                            const PsoConfig& pso, const TransitionRef& ref,
                                            Label positive = Label::FIELD_LINE) {
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    for (std::uint64_t seed : seeds) {
      const auto subset = sample_fraction(train_records, f, seed);
      const TrainResult tr = train(subset, pso, ref, positive);
      const PrecisionRecall pr = evaluate(eval_records, tr.thresholds, ref, positive);
      rows.push_back({f, seed, subset.size(), pr.precision, pr.recall});
    }
  }
  return rows;
}

inline nlohmann::json to_json(const PrecisionRecall& pr) {
  return {{"tp", pr.tp},           {"fp", pr.fp},         {"fn", pr.fn},
          {"precision", pr.precision}, {"recall", pr.recall}, {"n_lines", pr.n_lines}};
}

inline nlohmann::json to_json(const TimingStats& t) {
  return {{"mean_ms", t.mean_ms}, {"std_ms", t.std_ms}, {"median_ms", t.median_ms}, {"samples", t.samples}};
}

inline std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "fraction,seed,n_train,precision,recall\n";
  for (const auto& r : rows) os << r.fraction << ',' << r.seed << ',' << r.n_train << ',' << r.precision << ',' << r.recall << '\n';
  return os.str();
}

inline std::string matrix_csv(const CrossIlluminationResult& m) {
  std::ostringstream os;
  os << "train\\eval";
  for (const auto& n : m.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    os << m.names[i];
    for (double p : m.precision[i]) os << ',' << p;
    os << '\n';
  }
  return os.str();
}

}  // namespace pitchlines
