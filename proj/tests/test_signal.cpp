#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "mdp_tcm/errors.hpp"
#include "mdp_tcm/rng.hpp"
#include "mdp_tcm/signal.hpp"

using namespace mdp_tcm;

namespace {

ChannelSeries series(const std::string& id, std::vector<double> samples, double fs = 1.0) {
  return {id, fs, std::move(samples)};
}

// spindle_rpm = 60 * fs / tw gives a window of exactly tw samples.
WindowSpec spec_for(std::size_t tw, double fs, std::optional<std::size_t> stride) {
  WindowSpec s;
  s.sampling_rate_hz = fs;
  s.spindle_rpm = 60.0 * fs / static_cast<double>(tw);
  s.stride = stride;
  return s;
}

FrameDataset toy_dataset(std::size_t n, std::size_t width = 3) {
  FrameDataset d;
  d.frames.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < n; ++i) {
    d.frames.row(static_cast<Eigen::Index>(i)).setConstant(static_cast<double>(i));
    d.state_labels.push_back(static_cast<int>(i % 4));
    d.wear_targets.push_back(static_cast<double>(i));
    d.run_ids.push_back(static_cast<int>(i / 10));
  }
  d.window_length = width;
  d.channel_ids = {"c"};
  return d;
}

}  // namespace

TEST(NormalizeChannel, AffineEndpoints) {
  const auto out = normalize_channel(series("f", {2, 4, 6}));
  EXPECT_EQ(out.samples, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(out.channel_id, "f");
}

TEST(NormalizeChannel, ConstantChannelIsZeroAndFlagged) {
  bool constant = false;
  const auto out = normalize_channel(series("f", {5, 5, 5}), &constant);
  EXPECT_EQ(out.samples, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_TRUE(constant);

  bool again = true;
  normalize_channel(series("f", {0.0, 1.0}), &again);
  EXPECT_FALSE(again);
}

TEST(NormalizeChannel, IdentityOnUnitEndpoints) {
  EXPECT_EQ(normalize_channel(series("f", {0.0, 1.0})).samples, (std::vector<double>{0.0, 1.0}));
}

TEST(NormalizeChannel, IdempotentAndBounded) {
  Rng rng = make_rng(11, "test");
  std::normal_distribution<double> g(3.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(50);
    for (auto& v : x) v = g(rng);
    const auto once = normalize_channel(series("a", x));
    const auto twice = normalize_channel(once);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_GE(once.samples[i], 0.0);
      EXPECT_LE(once.samples[i], 1.0);
      EXPECT_NEAR(twice.samples[i], once.samples[i], 1e-12);
    }
  }
}

TEST(NormalizeChannel, EmptyThrows) { EXPECT_THROW(normalize_channel(series("a", {})), std::invalid_argument); }

TEST(WindowSize, SamplesPerRotation) {
  WindowSpec s;
  s.spindle_rpm = 1200;
  s.sampling_rate_hz = 20000;
  EXPECT_EQ(compute_window_size(s), 1000u);
  s.spindle_rpm = 1650;
  EXPECT_EQ(compute_window_size(s), 727u);  // 727.27 rounds down
  s.spindle_rpm = 60;
  s.sampling_rate_hz = 1;
  EXPECT_EQ(compute_window_size(s), 1u);
  s.multiple = 3;
  EXPECT_EQ(compute_window_size(s), 3u);
}

TEST(WindowSize, DeskRate) {
  WindowSpec s;
  s.sampling_rate_hz = 200;
  EXPECT_EQ(compute_window_size(s), 7u);  // 7.27
}

TEST(WindowSize, InvalidSpecs) {
  WindowSpec s;
  s.spindle_rpm = 1e9;
  s.sampling_rate_hz = 1;
  EXPECT_THROW(compute_window_size(s), std::invalid_argument);
  WindowSpec z;
  z.multiple = 0;
  EXPECT_THROW(compute_window_size(z), std::invalid_argument);
  WindowSpec st;
  st.stride = 0;
  EXPECT_THROW(compute_window_size(st), std::invalid_argument);
}

TEST(LabelState, TableRows) {
  EXPECT_EQ(label_state(50), 0);
  EXPECT_EQ(label_state(250), 2);
  EXPECT_EQ(label_state(300), 3);
}

TEST(LabelState, Boundaries) {
  EXPECT_EQ(label_state(0), 0);
  EXPECT_EQ(label_state(100), 0);
  EXPECT_EQ(label_state(std::nextafter(100.0, 200.0)), 1);
  EXPECT_EQ(label_state(200), 1);
  EXPECT_EQ(label_state(std::nextafter(200.0, 300.0)), 2);
  EXPECT_EQ(label_state(std::nextafter(300.0, 0.0)), 2);
  EXPECT_EQ(label_state(1e6), 3);
  EXPECT_THROW(label_state(-1e-9), std::domain_error);
}

TEST(LabelState, TotalAndMonotone) {
  int prev = 0;
  for (double w = 0.0; w <= 500.0; w += 0.25) {
    const int s = label_state(w);
    EXPECT_GE(s, prev);
    EXPECT_GE(s, 0);
    EXPECT_LE(s, 3);
    prev = s;
  }
}

TEST(Window, CountAndFirstFrame) {
  std::vector<double> x(10), wear(10);
  std::iota(x.begin(), x.end(), 0.0);
  std::iota(wear.begin(), wear.end(), 95.0);
  const std::vector<ChannelSeries> ch{series("a", x)};
  const auto ds = window(ch, spec_for(4, 1.0, 1), wear);
  ASSERT_EQ(ds.size(), 7u);
  EXPECT_EQ(ds.feature_count(), 4u);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(ds.frames(0, j), j);
  // target is the wear at the last sample of the window
  EXPECT_EQ(ds.wear_targets[0], 98.0);
  EXPECT_EQ(ds.state_labels[0], 0);
  EXPECT_EQ(ds.wear_targets[6], 104.0);
  EXPECT_EQ(ds.state_labels[6], 1);
}

TEST(Window, StrideAndTwoChannels) {
  std::vector<double> a(10), b(10), wear(10, 1.0);
  std::iota(a.begin(), a.end(), 0.0);
  std::iota(b.begin(), b.end(), 100.0);
  const std::vector<ChannelSeries> ch{series("a", a), series("b", b)};
  const auto ds = window(ch, spec_for(4, 1.0, 3), wear);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.feature_count(), 8u);
  // channel-major: a[3..7) then b[3..7)
  EXPECT_EQ(ds.frames(1, 0), 3.0);
  EXPECT_EQ(ds.frames(1, 3), 6.0);
  EXPECT_EQ(ds.frames(1, 4), 103.0);
  EXPECT_EQ(ds.frames(1, 7), 106.0);
}

TEST(Window, SingleFullFrame) {
  std::vector<ChannelSeries> ch;
  for (int m = 0; m < 14; ++m) {
    std::vector<double> x(1000);
    for (int i = 0; i < 1000; ++i) x[static_cast<std::size_t>(i)] = m * 1000 + i;
    ch.push_back(series("c" + std::to_string(m), x, 20000));
  }
  WindowSpec s;
  s.spindle_rpm = 1200;
  s.sampling_rate_hz = 20000;
  s.stride = 1;
  const auto ds = window(ch, s, std::vector<double>(1000, 10.0));
  ASSERT_EQ(ds.size(), 1u);
  ASSERT_EQ(ds.feature_count(), 14000u);
  for (int j = 0; j < 14000; ++j) ASSERT_EQ(ds.frames(0, j), j);
}

TEST(Window, EnumerationOracle) {
  Rng rng = make_rng(5, "test");
  for (std::size_t tau : {5u, 9u, 16u}) {
    for (std::size_t tw : {1u, 2u, 5u}) {
      for (std::size_t stride : {1u, 2u, 3u}) {
        for (std::size_t m : {1u, 3u}) {
          if (tw > tau) continue;
          std::vector<ChannelSeries> ch;
          std::uniform_real_distribution<double> u(0.0, 1.0);
          for (std::size_t c = 0; c < m; ++c) {
            std::vector<double> x(tau);
            for (auto& v : x) v = u(rng);
            ch.push_back(series("c" + std::to_string(c), x));
          }
          const auto ds = window(ch, spec_for(tw, 1.0, stride), std::vector<double>(tau, 0.0));
          ASSERT_EQ(ds.size(), (tau - tw) / stride + 1);
          for (std::size_t t = 0; t < ds.size(); ++t) {
            for (std::size_t c = 0; c < m; ++c) {
              for (std::size_t k = 0; k < tw; ++k) {
                ASSERT_EQ(ds.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c * tw + k)),
                          ch[c].samples[t * stride + k]);
              }
            }
          }
        }
      }
    }
  }
}

TEST(Window, ShortSeriesIsDataError) {
  const std::vector<ChannelSeries> ch{series("a", {1, 2, 3})};
  EXPECT_THROW(window(ch, spec_for(4, 1.0, 1), std::vector<double>(3, 0.0)), DataError);
}

TEST(Window, DefaultStrideIsWindowLength) {
  std::vector<double> x(20, 0.5);
  const std::vector<ChannelSeries> ch{series("a", x)};
  const auto ds = window(ch, spec_for(4, 1.0, std::nullopt), std::vector<double>(20, 0.0));
  EXPECT_EQ(ds.size(), 5u);
}

TEST(PrepareRun, NormalizesThenWindows) {
  std::vector<std::string> warnings;
  const std::vector<ChannelSeries> ch{series("a", {0, 2, 4, 6, 8, 10, 12, 14}), series("dead", std::vector<double>(8, 3.0))};
  const auto ds = prepare_run(ch, spec_for(2, 1.0, std::nullopt), std::vector<double>(8, 150.0), 4, &warnings);
  ASSERT_EQ(ds.size(), 4u);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(ds.frames(3, 1), 1.0);
  EXPECT_EQ(ds.frames(3, 2), 0.0);
  for (int r : ds.run_ids) EXPECT_EQ(r, 4);
  for (int s : ds.state_labels) EXPECT_EQ(s, 1);
  EXPECT_GE(ds.frames.minCoeff(), 0.0);
  EXPECT_LE(ds.frames.maxCoeff(), 1.0);
}

TEST(Split, DefaultRatio) {
  const auto [train, test] = split(toy_dataset(100), SplitSpec{});
  EXPECT_EQ(train.size(), 85u);
  EXPECT_EQ(test.size(), 15u);
  std::set<double> seen;
  for (double w : train.wear_targets) seen.insert(w);
  for (double w : test.wear_targets) seen.insert(w);
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Split, Singleton) {
  const auto [train, test] = split(toy_dataset(1), SplitSpec{});
  EXPECT_EQ(train.size(), 1u);
  EXPECT_EQ(test.size(), 0u);
}

TEST(Split, DeterministicAndOrdered) {
  SplitSpec spec;
  spec.seed = 42;
  const auto a = split(toy_dataset(57), spec);
  const auto b = split(toy_dataset(57), spec);
  EXPECT_EQ(a.first.wear_targets, b.first.wear_targets);
  EXPECT_EQ(a.second.wear_targets, b.second.wear_targets);
  EXPECT_TRUE(std::is_sorted(a.second.wear_targets.begin(), a.second.wear_targets.end()));
  spec.seed = 43;
  const auto c = split(toy_dataset(57), spec);
  EXPECT_NE(a.second.wear_targets, c.second.wear_targets);
}

TEST(Split, Errors) {
  EXPECT_THROW(split(FrameDataset{}, SplitSpec{}), DataError);
  SplitSpec bad;
  bad.train_ratio = 1.0;
  EXPECT_THROW(split(toy_dataset(10), bad), std::invalid_argument);
}

TEST(SplitByRun, HoldsOutWholeRuns) {
  const std::vector<int> held{2};
  const auto [train, test] = split_by_run(toy_dataset(30), held);
  EXPECT_EQ(test.size(), 10u);
  for (int r : test.run_ids) EXPECT_EQ(r, 2);
  for (int r : train.run_ids) EXPECT_NE(r, 2);
}

TEST(Kfold, EvenDivision) {
  const auto folds = kfold_indices(10, 5, 1);
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) EXPECT_EQ(f.size(), 2u);
}

TEST(Kfold, Remainder) {
  const auto folds = kfold_indices(11, 5, 1);
  std::multiset<std::size_t> sizes;
  for (const auto& f : folds) sizes.insert(f.size());
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(Kfold, PartitionProperty) {
  for (std::size_t n = 5; n < 40; n += 3) {
    for (int k : {1, 2, 5}) {
      const auto folds = kfold_indices(n, k, n);
      std::vector<std::size_t> all;
      for (const auto& f : folds) all.insert(all.end(), f.begin(), f.end());
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> expect(n);
      std::iota(expect.begin(), expect.end(), 0u);
      EXPECT_EQ(all, expect);
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
      }
      EXPECT_LE(hi - lo, 1u);
    }
  }
  EXPECT_THROW(kfold_indices(3, 5, 0), DataError);
}

TEST(Kfold, DatasetPairs) {
  const auto pairs = kfold(toy_dataset(20), SplitSpec{});
  ASSERT_EQ(pairs.size(), 5u);
  for (const auto& [train, val] : pairs) {
    EXPECT_EQ(train.size() + val.size(), 20u);
    EXPECT_EQ(val.size(), 4u);
  }
}

TEST(SelectChannels, KeepsNamedBlocksInOrder) {
  std::vector<double> a(6, 0.0), b(6, 1.0), c(6, 0.5);
  const std::vector<ChannelSeries> ch{series("a", a), series("b", b), series("c", c)};
  const auto ds = window(ch, spec_for(2, 1.0, std::nullopt), std::vector<double>(6, 0.0));
  const std::vector<std::string> keep{"c", "a"};
  const auto sel = select_channels(ds, keep);
  EXPECT_EQ(sel.channel_ids, keep);
  ASSERT_EQ(sel.feature_count(), 4u);
  EXPECT_EQ(sel.frames(0, 0), 0.5);
  EXPECT_EQ(sel.frames(0, 2), 0.0);
  const std::vector<std::string> missing{"zz"};
  EXPECT_THROW(select_channels(ds, missing), DataError);
}

TEST(Concat, StacksRows) {
  std::vector<FrameDataset> parts{toy_dataset(3), toy_dataset(4)};
  const auto all = concat(parts);
  EXPECT_EQ(all.size(), 7u);
  EXPECT_NO_THROW(all.check_consistent());
}

TEST(InterpolateWear, LinearBetweenHeldOutside) {
  const std::vector<std::pair<std::size_t, double>> m{{2, 10.0}, {6, 50.0}};
  const auto w = interpolate_wear(m, 9);
  EXPECT_EQ(w, (std::vector<double>{10, 10, 10, 20, 30, 40, 50, 50, 50}));
  EXPECT_THROW(interpolate_wear({}, 3), DataError);
}
