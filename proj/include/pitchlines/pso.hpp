#pragma once

// Particle Swarm Optimization of the three classification thresholds
// (max angle, min projection, min length), maximizing TP - FP over
// human-labelled segment records.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pitchlines/classifier.hpp"
#include "pitchlines/dataset.hpp"
#include "pitchlines/errors.hpp"

namespace pitchlines {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct PsoConfig {
  std::size_t swarm_size = 30;
  std::size_t iterations = 200;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  std::uint64_t seed = 0;
  // angle_max_deg, proj_min, len_min; len upper bound is the 480x640 diagonal.
  std::array<Bounds, 3> bounds{{{1e-6, 90.0}, {0.0, 441.7}, {0.0, 800.0}}};

  void validate() const {
    if (swarm_size < 2) throw InvalidParam("swarm_size must be >= 2");
    if (iterations < 1) throw InvalidParam("iterations must be >= 1");
    if (!(inertia > 0.0 && inertia < 1.0)) throw InvalidParam("inertia must be in (0, 1)");
    if (!(cognitive > 0.0) || !(social > 0.0)) throw InvalidParam("c1 and c2 must be positive");
    for (const Bounds& b : bounds)
      if (!(b.hi > b.lo)) throw InvalidParam("each bound needs lo < hi");
    if (bounds[0].lo <= 0.0 || bounds[0].hi > 90.0) throw InvalidParam("angle bounds must lie in (0, 90]");
  }
};

struct Particle {
  std::array<double, 3> position{};
  std::array<double, 3> velocity{};
  std::array<double, 3> best_position{};
  int best_score = 0;
};

struct FitnessReport {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  int score = 0;  // tp - fp
  friend bool operator==(const FitnessReport&, const FitnessReport&) = default;
};

struct TrainResult {
  Thresholds thresholds;
  FitnessReport report;
  std::vector<int> history;  // global-best score after each iteration
};

inline Thresholds to_thresholds(const std::array<double, 3>& x) { return {x[0], x[1], x[2]}; }

inline bool is_positive(const SegmentRecord& r, Label positive) {
  return r.human_label && *r.human_label == to_string(positive);
}

/// Replays classification on stored features only and tallies the confusion
/// counts against the human labels.
inline FitnessReport fitness(std::span<const SegmentRecord> records, const Thresholds& thresholds,
                             const TransitionRef& ref, Label positive = Label::FIELD_LINE, bool signed_match = false) {
  const ClassifierConfig config{{{ref, thresholds, positive}}, signed_match};
  FitnessReport rep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SegmentRecord& r = records[i];
    if (!r.human_label) throw UnlabeledRecord(i);
    const bool predicted = classify(r.gradient(), r.length, config).label == positive;
    const bool actual = is_positive(r, positive);
    if (predicted && actual) ++rep.tp;
    else if (predicted) ++rep.fp;
    else if (actual) ++rep.fn;
    else ++rep.tn;
  }
  rep.score = rep.tp - rep.fp;
  return rep;
}

namespace detail {

struct Feature {
  Similarity sim;
  double length;
  bool positive;
};

inline int score_of(std::span<const Feature> feats, const Thresholds& t) {
  int s = 0;
  for (const Feature& f : feats)
    if (meets(t, f.sim, f.length)) s += f.positive ? 1 : -1;
  return s;
}

// How far a position sits towards the strict corner of the bounds (small
// angle_max, large proj_min and len_min), each dimension scaled to [0, 1].
inline double tightness(const std::array<double, 3>& x, const std::array<Bounds, 3>& b) {
  return (b[0].hi - x[0]) / (b[0].hi - b[0].lo) + (x[1] - b[1].lo) / (b[1].hi - b[1].lo) +
         (x[2] - b[2].lo) / (b[2].hi - b[2].lo);
}

// Equal scores prefer the tighter box: with few labeled negatives a loose
// dimension would accept unseen negatives.
inline bool better(int a_score, const std::array<double, 3>& a, int b_score, const std::array<double, 3>& b,
                   const std::array<Bounds, 3>& bounds) {
  if (a_score != b_score) return a_score > b_score;
  return tightness(a, bounds) > tightness(b, bounds);
}

}  // namespace detail

/// Canonical global-best PSO with synchronous updates. Deterministic for a
/// fixed seed; history is non-decreasing.
inline TrainResult train(std::span<const SegmentRecord> records, const PsoConfig& config, const TransitionRef& ref,
                         Label positive = Label::FIELD_LINE, bool signed_match = false) {
  config.validate();
  std::vector<detail::Feature> feats;
  feats.reserve(records.size());
  bool any_positive = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SegmentRecord& r = records[i];
    if (!r.human_label) throw UnlabeledRecord(i);
    const bool pos = is_positive(r, positive);
    any_positive = any_positive || pos;
    feats.push_back({similarity(r.gradient(), ref, signed_match), r.length, pos});
  }
  if (!any_positive) throw NoPositives();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto& bounds = config.bounds;

  std::vector<Particle> swarm(config.swarm_size);
  for (Particle& p : swarm) {
    for (std::size_t d = 0; d < 3; ++d) {
      const double range = bounds[d].hi - bounds[d].lo;
      p.position[d] = bounds[d].lo + u01(rng) * range;
      p.velocity[d] = (2.0 * u01(rng) - 1.0) * 0.1 * range;
    }
    p.best_position = p.position;
    p.best_score = detail::score_of(feats, to_thresholds(p.position));
  }
  std::size_t g = 0;
  for (std::size_t i = 1; i < swarm.size(); ++i)
    if (detail::better(swarm[i].best_score, swarm[i].best_position, swarm[g].best_score, swarm[g].best_position, bounds)) g = i;
  std::array<double, 3> gbest = swarm[g].best_position;
  int gbest_score = swarm[g].best_score;

  TrainResult result;
  result.history.reserve(config.iterations);
  std::vector<int> scores(swarm.size());
  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (Particle& p : swarm) {
      for (std::size_t d = 0; d < 3; ++d) {
        const double range = bounds[d].hi - bounds[d].lo;
        const double r1 = u01(rng), r2 = u01(rng);
        double v = config.inertia * p.velocity[d] + config.cognitive * r1 * (p.best_position[d] - p.position[d]) +
                   config.social * r2 * (gbest[d] - p.position[d]);
        v = std::clamp(v, -range, range);
        double x = p.position[d] + v;
        if (x < bounds[d].lo || x > bounds[d].hi) {
          x = std::clamp(x, bounds[d].lo, bounds[d].hi);
          v = 0.0;
        }
        p.position[d] = x;
        p.velocity[d] = v;
      }
    }
    // Evaluations are independent; the reduction below runs in particle order.
    for (std::size_t i = 0; i < swarm.size(); ++i) scores[i] = detail::score_of(feats, to_thresholds(swarm[i].position));
    for (std::size_t i = 0; i < swarm.size(); ++i) {
      Particle& p = swarm[i];
      if (detail::better(scores[i], p.position, p.best_score, p.best_position, bounds)) {
        p.best_score = scores[i];
        p.best_position = p.position;
      }
      if (detail::better(p.best_score, p.best_position, gbest_score, gbest, bounds)) {
        gbest_score = p.best_score;
        gbest = p.best_position;
      }
    }
    result.history.push_back(gbest_score);
  }

  result.thresholds = to_thresholds(gbest);
  result.report = fitness(records, result.thresholds, ref, positive, signed_match);
  return result;
}

}  // namespace pitchlines
