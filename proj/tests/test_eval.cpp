#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "gen.hpp"
#include "pitchlines/eval.hpp"

using namespace pitchlines;

namespace {

const TransitionRef kGW = TransitionRef::green_white();

SegmentRecord with_label(Label human) {
  SegmentRecord r;
  r.image = "a.png";
  r.human_label = std::string(to_string(human));
  return r;
}

PsoConfig small_pso(std::uint64_t seed = 0) {
  PsoConfig c;
  c.seed = seed;
  c.iterations = 80;
  return c;
}

double mean_byte(const RgbImage& img) {
  const auto b = img.bytes();
  return std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
}

}  // namespace

TEST(Score, WorkedExample) {
  // 3 true positives, 1 false positive, 1 missed line.
  std::vector<SegmentRecord> recs;
  std::vector<Label> pred;
  for (int i = 0; i < 3; ++i) recs.push_back(with_label(Label::FIELD_LINE)), pred.push_back(Label::FIELD_LINE);
  recs.push_back(with_label(Label::NONE)), pred.push_back(Label::FIELD_LINE);
  recs.push_back(with_label(Label::FIELD_LINE)), pred.push_back(Label::NONE);
  recs.push_back(with_label(Label::FIELD_BOUNDARY)), pred.push_back(Label::FIELD_BOUNDARY);
  const auto pr = score(recs, pred);
  EXPECT_EQ(pr.tp, 3);
  EXPECT_EQ(pr.fp, 1);
  EXPECT_EQ(pr.fn, 1);
  EXPECT_DOUBLE_EQ(pr.precision, 0.75);
  EXPECT_DOUBLE_EQ(pr.recall, 0.75);
  EXPECT_EQ(pr.n_lines, 4u);
}

TEST(Score, EmptyDenominatorsAreOne) {
  const std::vector<SegmentRecord> recs{with_label(Label::NONE), with_label(Label::NONE)};
  const std::vector<Label> pred{Label::NONE, Label::NONE};
  const auto pr = score(recs, pred);
  EXPECT_DOUBLE_EQ(pr.precision, 1.0);
  EXPECT_DOUBLE_EQ(pr.recall, 1.0);
  EXPECT_EQ(pr.n_lines, 0u);
  const auto empty = score({}, {});
  EXPECT_DOUBLE_EQ(empty.precision, 1.0);
}

TEST(Score, AllWrongIsZero) {
  const std::vector<SegmentRecord> recs{with_label(Label::NONE), with_label(Label::FIELD_LINE)};
  const std::vector<Label> pred{Label::FIELD_LINE, Label::NONE};
  const auto pr = score(recs, pred);
  EXPECT_DOUBLE_EQ(pr.precision, 0.0);
  EXPECT_DOUBLE_EQ(pr.recall, 0.0);
}

TEST(Score, RejectsMismatchAndUnlabeled) {
  std::vector<SegmentRecord> recs{with_label(Label::NONE)};
  const std::vector<Label> two{Label::NONE, Label::NONE};
  EXPECT_THROW(score(recs, two), InvalidParam);
  recs[0].human_label.reset();
  const std::vector<Label> one{Label::NONE};
  EXPECT_THROW(score(recs, one), UnlabeledRecord);
}

TEST(Score, InvariantUnderPermutation) {
  gen::Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<SegmentRecord> recs;
    std::vector<Label> pred;
    for (int i = 0, n = gen::integer(rng, 1, 60); i < n; ++i) {
      recs.push_back(gen::record(rng));
      pred.push_back(*parse_label(gen::label_name(rng)));
    }
    const auto a = score(recs, pred);
    std::vector<std::size_t> idx(recs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<SegmentRecord> r2;
    std::vector<Label> p2;
    for (std::size_t i : idx) r2.push_back(recs[i]), p2.push_back(pred[i]);
    const auto b = score(r2, p2);
    ASSERT_EQ(a.tp, b.tp);
    ASSERT_EQ(a.fp, b.fp);
    ASSERT_EQ(a.fn, b.fn);
    ASSERT_GE(a.precision, 0.0);
    ASSERT_LE(a.precision, 1.0);
    ASSERT_GE(a.recall, 0.0);
    ASSERT_LE(a.recall, 1.0);
  }
}

TEST(Evaluate, AgreesWithFitnessCounts) {
  gen::Rng rng(22);
  const auto recs = gen::separable(rng, 100, kGW, Label::FIELD_LINE);
  const Thresholds t{15, 90, 16};
  const auto pr = evaluate(recs, t, kGW);
  const auto fit = fitness(recs, t, kGW);
  EXPECT_EQ(pr.tp, fit.tp);
  EXPECT_EQ(pr.fp, fit.fp);
  EXPECT_EQ(pr.fn, fit.fn);
}

TEST(Timing, StatsOfKnownSamples) {
  const auto t = timing_stats({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(t.mean_ms, 2.5);
  EXPECT_DOUBLE_EQ(t.median_ms, 2.5);
  EXPECT_NEAR(t.std_ms, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(t.samples, 4u);
  EXPECT_DOUBLE_EQ(timing_stats({7.0, 1.0, 3.0}).median_ms, 3.0);
  EXPECT_EQ(timing_stats({}).samples, 0u);
}

TEST(Benchmark, RequiresThreeRepeats) {
  const std::vector<RgbImage> imgs{RgbImage(64, 64)};
  EXPECT_THROW(benchmark(imgs, {}, ClassifierConfig::defaults(), 2), InvalidParam);
  EXPECT_THROW(benchmark(std::vector<RgbImage>{}, {}, ClassifierConfig::defaults(), 5), InvalidParam);
}

TEST(Benchmark, DiscardsWarmupPass) {
  SceneSpec spec;
  spec.width = 160;
  spec.height = 120;
  spec.min_stroke_length = 40;
  spec.max_stroke_length = 90;
  spec.line_count = 2;
  const std::vector<RgbImage> imgs{generate_scene(1, spec).image, generate_scene(2, spec).image};
  const auto res = benchmark(imgs, {}, ClassifierConfig::defaults(), 4);
  ASSERT_EQ(res.per_image.size(), 2u);
  EXPECT_EQ(res.per_image[0].samples, 3u);
  EXPECT_EQ(res.aggregate.samples, 6u);
  EXPECT_GT(res.aggregate.median_ms, 0.0);
  EXPECT_NE(res.note.find("decode excluded"), std::string::npos);
}

TEST(Scene, SameSeedSameBytes) {
  SceneSpec spec;
  spec.boundary = true;
  spec.distractors = 2;
  spec.noise_sigma = 3.0;
  const auto a = generate_scene(77, spec);
  const auto b = generate_scene(77, spec);
  const auto c = generate_scene(78, spec);
  EXPECT_TRUE(std::ranges::equal(a.image.bytes(), b.image.bytes()));
  EXPECT_FALSE(std::ranges::equal(a.image.bytes(), c.image.bytes()));
  EXPECT_EQ(a.truth_lines.size(), 7u);
  EXPECT_EQ(a.truth_lines.front().cls, Label::FIELD_BOUNDARY);
  EXPECT_EQ(a.distractors.size(), 2u);
}

TEST(Scene, SingleCleanLineIsDetectedAndLabeled) {
  SceneSpec spec;
  spec.line_count = 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto scene = generate_scene(seed, spec);
    const auto segs = detect(scene.image);
    ASSERT_FALSE(segs.empty());
    EXPECT_TRUE(truth_matched(scene.truth_lines[0], segs)) << "seed " << seed;
    for (const auto& s : segs) EXPECT_EQ(truth_label(s.pixels, scene), Label::FIELD_LINE);
    const auto recs = scene_records(scene, "s.png", {}, ClassifierConfig::defaults());
    ASSERT_EQ(recs.size(), segs.size());
    for (const auto& r : recs) {
      EXPECT_EQ(r.human_label, "field_line");
      EXPECT_EQ(r.predicted, "field_line") << "grad " << r.grad_h[0] << "," << r.grad_h[1] << "," << r.grad_h[2];
    }
  }
}

TEST(Scene, BrightnessScalesPixels) {
  SceneSpec spec;
  spec.boundary = true;
  const auto base = generate_scene(5, spec);
  spec.lighting.brightness = 0.6;
  const auto dim = generate_scene(5, spec);
  EXPECT_NEAR(mean_byte(dim.image) / mean_byte(base.image), 0.6, 0.01);
  // Geometry does not depend on lighting.
  ASSERT_EQ(base.truth_lines.size(), dim.truth_lines.size());
  for (std::size_t i = 0; i < base.truth_lines.size(); ++i) EXPECT_EQ(base.truth_lines[i].a.x, dim.truth_lines[i].a.x);
}

TEST(Scene, TintScalesChannels) {
  SceneSpec spec;
  spec.line_count = 0;
  spec.lighting.tint = {1.0, 0.5, 1.0};
  const auto s = generate_scene(1, spec);
  const Rgb c = s.image.at(10, 10);
  EXPECT_EQ(c.r, spec.field_color.r);
  EXPECT_EQ(c.g, static_cast<std::uint8_t>(std::lround(spec.field_color.g * 0.5)));
}

TEST(Scene, InvalidSpecsRejected) {
  SceneSpec spec;
  spec.width = 32;
  EXPECT_THROW(generate_scene(0, spec), InvalidSpec);
  spec = {};
  spec.stroke_color = {10, 10, 10};
  EXPECT_THROW(generate_scene(0, spec), InvalidSpec);
  spec = {};
  spec.noise_sigma = -1;
  EXPECT_THROW(generate_scene(0, spec), InvalidSpec);
  spec = {};
  spec.line_count = 200;
  spec.allow_crossings = false;
  EXPECT_THROW(generate_scene(0, spec), InvalidSpec);
}

TEST(Scene, NonCrossingStrokesKeepApart) {
  SceneSpec spec;
  spec.allow_crossings = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_scene(seed, spec);
    for (std::size_t i = 0; i < s.truth_lines.size(); ++i)
      for (std::size_t j = i + 1; j < s.truth_lines.size(); ++j)
        EXPECT_GE(detail::segment_segment_distance(s.truth_lines[i].a, s.truth_lines[i].b, s.truth_lines[j].a,
                                                   s.truth_lines[j].b),
                  spec.stroke_width + 14);
  }
}

TEST(Truth, LabelsByEdgeProximity) {
  SyntheticScene scene;
  scene.truth_lines.push_back({{10, 50}, {110, 50}, 6.0, Label::FIELD_LINE});
  scene.truth_lines.push_back({{0, 10}, {200, 10}, 0.0, Label::FIELD_BOUNDARY});
  std::vector<Pixel> on_edge, on_boundary, far;
  for (int x = 20; x < 60; ++x) {
    on_edge.push_back({x, 47});
    on_boundary.push_back({x, 11});
    far.push_back({x, 30});
  }
  EXPECT_EQ(truth_label(on_edge, scene), Label::FIELD_LINE);
  EXPECT_EQ(truth_label(on_boundary, scene), Label::FIELD_BOUNDARY);
  EXPECT_EQ(truth_label(far, scene), Label::NONE);
  EXPECT_EQ(truth_label({}, scene), Label::NONE);
  // 70% near is below the 80% share.
  std::vector<Pixel> mixed(on_edge.begin(), on_edge.begin() + 28);
  mixed.insert(mixed.end(), far.begin(), far.begin() + 12);
  EXPECT_EQ(truth_label(mixed, scene), Label::NONE);
}

TEST(Truth, MatchedNeedsBothEndpoints) {
  const TruthLine t{{10, 50}, {110, 50}, 6.0, Label::FIELD_LINE};
  Segment s;
  s.x1 = 12, s.y1 = 47, s.x2 = 108, s.y2 = 47.5;
  EXPECT_TRUE(truth_matched(t, std::vector<Segment>{s}));
  s.y2 = 60;
  EXPECT_FALSE(truth_matched(t, std::vector<Segment>{s}));
}

TEST(SampleFraction, SizeOrderAndDeterminism) {
  gen::Rng rng(23);
  std::vector<SegmentRecord> recs;
  for (int i = 0; i < 101; ++i) {
    auto r = gen::record(rng);
    r.x1 = i;
    recs.push_back(r);
  }
  const auto full = sample_fraction(recs, 1.0, 9);
  ASSERT_EQ(full.size(), recs.size());
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_EQ(full[i].x1, recs[i].x1);
  const auto a = sample_fraction(recs, 0.3, 4);
  const auto b = sample_fraction(recs, 0.3, 4);
  const auto c = sample_fraction(recs, 0.3, 5);
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].x1, a[i].x1);
  bool same_ab = true, same_ac = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same_ab = same_ab && a[i].x1 == b[i].x1;
    same_ac = same_ac && a[i].x1 == c[i].x1;
  }
  EXPECT_TRUE(same_ab);
  EXPECT_FALSE(same_ac);
  EXPECT_EQ(sample_fraction(recs, 0.001, 1).size(), 1u);
  EXPECT_THROW(sample_fraction(recs, 0.0, 1), InvalidParam);
  EXPECT_THROW(sample_fraction(recs, 1.5, 1), InvalidParam);
}

TEST(Sweep, FullFractionEqualsPlainTraining) {
  gen::Rng rng(24);
  const auto train_set = gen::separable(rng, 120, kGW, Label::FIELD_LINE);
  const auto eval_set = gen::separable(rng, 120, kGW, Label::FIELD_LINE);
  const std::vector<double> fractions{0.5, 1.0};
  const std::vector<std::uint64_t> seeds{3, 4};
  const auto pso = small_pso(2);
  const auto rows = set_size_sweep(train_set, eval_set, fractions, seeds, pso, kGW);
  ASSERT_EQ(rows.size(), 4u);
  const auto direct = evaluate(eval_set, train(train_set, pso, kGW).thresholds, kGW);
  for (const auto& row : rows) {
    if (row.fraction != 1.0) {
      EXPECT_EQ(row.n_train, 60u);
      continue;
    }
    EXPECT_EQ(row.n_train, 120u);
    EXPECT_DOUBLE_EQ(row.precision, direct.precision);
    EXPECT_DOUBLE_EQ(row.recall, direct.recall);
  }
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.rfind("fraction,seed,n_train,precision,recall\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(CrossIllumination, SingleConditionAndRange) {
  gen::Rng rng(25);
  std::vector<LightingCondition> conds;
  conds.push_back({"only", gen::separable(rng, 100, kGW, Label::FIELD_LINE), gen::separable(rng, 100, kGW, Label::FIELD_LINE)});
  const auto one = cross_illumination(conds, small_pso(), kGW);
  ASSERT_EQ(one.precision.size(), 1u);
  ASSERT_EQ(one.precision[0].size(), 1u);
  EXPECT_EQ(one.precision[0][0], evaluate(conds[0].eval, one.trained[0], kGW).precision);

  conds.push_back({"two", gen::separable(rng, 100, kGW, Label::FIELD_LINE), gen::separable(rng, 100, kGW, Label::FIELD_LINE)});
  const auto two = cross_illumination(conds, small_pso(), kGW);
  ASSERT_EQ(two.precision.size(), 2u);
  for (const auto& row : two.precision) {
    ASSERT_EQ(row.size(), 2u);
    for (double p : row) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
  EXPECT_EQ(matrix_csv(two), "train\\eval,only,two\nonly," + [&] {
    std::ostringstream os;
    os << two.precision[0][0] << ',' << two.precision[0][1] << "\ntwo," << two.precision[1][0] << ','
       << two.precision[1][1] << '\n';
    return os.str();
  }());
  EXPECT_THROW(cross_illumination(std::vector<LightingCondition>{}, small_pso(), kGW), InvalidParam);
}

TEST(Json, PrecisionRecallKeys) {
  const auto j = to_json(make_pr(3, 1, 1));
  EXPECT_EQ(j["precision"], 0.75);
  EXPECT_EQ(j["n_lines"], 4);
  const auto t = to_json(timing_stats({1.0, 3.0}));
  EXPECT_EQ(t["median_ms"], 2.0);
  EXPECT_EQ(t["samples"], 2);
}
