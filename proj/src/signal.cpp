#include "mdp_tcm/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mdp_tcm/errors.hpp"
#include "mdp_tcm/rng.hpp"

namespace mdp_tcm {

FrameDataset FrameDataset::subset(std::span<const std::size_t> rows) const {
  FrameDataset out;
  out.channel_ids = channel_ids;
  out.window_length = window_length;
  out.frames.resize(static_cast<Eigen::Index>(rows.size()), frames.cols());
  out.state_labels.reserve(rows.size());
  out.wear_targets.reserve(rows.size());
  out.run_ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    if (src >= size()) throw std::out_of_range("FrameDataset::subset: row out of range");
    out.frames.row(static_cast<Eigen::Index>(r)) = frames.row(static_cast<Eigen::Index>(src));
    out.state_labels.push_back(state_labels[src]);
    out.wear_targets.push_back(wear_targets[src]);
    out.run_ids.push_back(run_ids.empty() ? 0 : run_ids[src]);
  }
  return out;
}

void FrameDataset::check_consistent() const {
  const auto n = static_cast<std::size_t>(frames.rows());
  if (state_labels.size() != n || wear_targets.size() != n ||
      (!run_ids.empty() && run_ids.size() != n)) {
    throw std::invalid_argument("FrameDataset: frames, labels and targets differ in length");
  }
  if (window_length * channel_ids.size() != static_cast<std::size_t>(frames.cols())) {
    throw std::invalid_argument("FrameDataset: frame width != window_length * channels");
  }
}

ChannelSeries normalize_channel(const ChannelSeries& series, bool* was_constant) {
  if (series.samples.empty()) {
    throw std::invalid_argument("normalize_channel: empty channel '" + series.channel_id + "'");
  }
  const auto [lo_it, hi_it] = std::minmax_element(series.samples.begin(), series.samples.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  ChannelSeries out{series.channel_id, series.sampling_rate_hz, {}};
  out.samples.resize(series.samples.size(), 0.0);
  if (was_constant) *was_constant = !(range > 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < series.samples.size(); ++i) {
      // Clamp guards the last ulp; the endpoints map to exactly 0 and 1.
      out.samples[i] = std::clamp((series.samples[i] - lo) / range, 0.0, 1.0);
    }
  }
  return out;
}

std::size_t compute_window_size(const WindowSpec& spec) {
  if (!(spec.spindle_rpm > 0.0) || !(spec.sampling_rate_hz > 0.0) || spec.multiple < 1) {
    throw std::invalid_argument("WindowSpec: rpm, sampling rate and multiple must be positive");
  }
  if (spec.stride && *spec.stride < 1) throw std::invalid_argument("WindowSpec: stride must be >= 1");
  const double tw = std::round(spec.multiple * spec.sampling_rate_hz * 60.0 / spec.spindle_rpm);
  if (!(tw >= 1.0)) {
    throw std::invalid_argument("WindowSpec: window shorter than one sample");
  }
  return static_cast<std::size_t>(tw);
}

int label_state(double wear_um) {
  if (!(wear_um >= 0.0)) throw std::domain_error("label_state: wear must be nonnegative");
  if (wear_um <= 100.0) return 0;
  if (wear_um <= 200.0) return 1;
  if (wear_um < 300.0) return 2;
  return 3;
}

const char* state_name(int state) {
  switch (state) {
    case 0: return "fresh";
    case 1: return "progressive";
    case 2: return "accelerated";
    case 3: return "worn";
    default: return "unknown";
  }
}

FrameDataset window(std::span<const ChannelSeries> channels, const WindowSpec& spec,
                    std::span<const double> wear_trajectory, int run_id) {
  if (channels.empty()) throw DataError("window: no channels");
  const std::size_t tw = compute_window_size(spec);
  const std::size_t stride = spec.stride.value_or(tw);
  const std::size_t tau = channels.front().samples.size();
  for (const auto& ch : channels) {
    if (ch.samples.size() != tau) throw DataError("window: channels differ in length");
    if (ch.sampling_rate_hz != channels.front().sampling_rate_hz) {
      throw DataError("window: channels differ in sampling rate");
    }
  }
  if (wear_trajectory.size() != tau) throw DataError("window: wear trajectory length mismatch");
  if (tau < tw) {
    throw DataError("window: series of " + std::to_string(tau) + " samples is shorter than window " +
                    std::to_string(tw));
  }

  const std::size_t count = (tau - tw) / stride + 1;
  const std::size_t m = channels.size();
  FrameDataset out;
  out.window_length = tw;
  out.frames.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(tw * m));
  for (const auto& ch : channels) out.channel_ids.push_back(ch.channel_id);
  out.state_labels.reserve(count);
  out.wear_targets.reserve(count);
  out.run_ids.assign(count, run_id);

  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t start = f * stride;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& s = channels[c].samples;
      for (std::size_t k = 0; k < tw; ++k) {
        out.frames(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(c * tw + k)) = s[start + k];
      }
    }
    const double wear = wear_trajectory[start + tw - 1];
    out.wear_targets.push_back(wear);
    out.state_labels.push_back(label_state(wear));
  }
  return out;
}

FrameDataset prepare_run(std::span<const ChannelSeries> channels, const WindowSpec& spec,
                         std::span<const double> wear_trajectory, int run_id,
                         std::vector<std::string>* warnings) {
  std::vector<ChannelSeries> normalized;
  normalized.reserve(channels.size());
  for (const auto& ch : channels) {
    bool constant = false;
    normalized.push_back(normalize_channel(ch, &constant));
    if (constant && warnings) {
      warnings->push_back("channel '" + ch.channel_id + "' is constant; normalized to zeros");
    }
  }
  return window(normalized, spec, wear_trajectory, run_id);
}

FrameDataset concat(std::span<const FrameDataset> parts) {
  if (parts.empty()) throw DataError("concat: nothing to concatenate");
  FrameDataset out;
  out.channel_ids = parts.front().channel_ids;
  out.window_length = parts.front().window_length;
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.channel_ids != out.channel_ids || p.window_length != out.window_length) {
      throw DataError("concat: datasets have different channel layouts");
    }
    rows += p.frames.rows();
  }
  out.frames.resize(rows, parts.front().frames.cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.frames.middleRows(at, p.frames.rows()) = p.frames;
    at += p.frames.rows();
    out.state_labels.insert(out.state_labels.end(), p.state_labels.begin(), p.state_labels.end());
    out.wear_targets.insert(out.wear_targets.end(), p.wear_targets.begin(), p.wear_targets.end());
    if (p.run_ids.empty()) {
      out.run_ids.insert(out.run_ids.end(), p.size(), 0);
    } else {
      out.run_ids.insert(out.run_ids.end(), p.run_ids.begin(), p.run_ids.end());
    }
  }
  return out;
}

FrameDataset select_channels(const FrameDataset& dataset, std::span<const std::string> channel_ids) {
  if (channel_ids.empty()) throw std::invalid_argument("select_channels: empty channel list");
  const std::size_t tw = dataset.window_length;
  std::vector<std::size_t> positions;
  for (const auto& id : channel_ids) {
    const auto it = std::find(dataset.channel_ids.begin(), dataset.channel_ids.end(), id);
    if (it == dataset.channel_ids.end()) throw DataError("channel '" + id + "' not in dataset");
    positions.push_back(static_cast<std::size_t>(it - dataset.channel_ids.begin()));
  }
  FrameDataset out;
  out.channel_ids.assign(channel_ids.begin(), channel_ids.end());
  out.window_length = tw;
  out.frames.resize(dataset.frames.rows(), static_cast<Eigen::Index>(tw * positions.size()));
  for (std::size_t c = 0; c < positions.size(); ++c) {
    out.frames.middleCols(static_cast<Eigen::Index>(c * tw), static_cast<Eigen::Index>(tw)) =
        dataset.frames.middleCols(static_cast<Eigen::Index>(positions[c] * tw), static_cast<Eigen::Index>(tw));
  }
  out.state_labels = dataset.state_labels;
  out.wear_targets = dataset.wear_targets;
  out.run_ids = dataset.run_ids;
  return out;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed, std::string_view stream) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, stream);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

std::pair<FrameDataset, FrameDataset> split(const FrameDataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw DataError("split: empty dataset");
  if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0)) {
    throw std::invalid_argument("split: train_ratio must lie in (0,1)");
  }
  const std::size_t n = dataset.size();
  const auto idx = shuffled_indices(n, spec.seed, "split");
  // The epsilon keeps products like 0.85 * 100 = 85.00000000000001 at 85.
  const auto n_train = std::min(
      n, static_cast<std::size_t>(std::ceil(spec.train_ratio * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

std::pair<FrameDataset, FrameDataset> split_by_run(const FrameDataset& dataset,
                                                   std::span<const int> test_runs) {
  if (dataset.empty()) throw DataError("split_by_run: empty dataset");
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int run = dataset.run_ids.empty() ? 0 : dataset.run_ids[i];
    const bool held_out = std::find(test_runs.begin(), test_runs.end(), run) != test_runs.end();
    (held_out ? test : train).push_back(i);
  }
  return {dataset.subset(train), dataset.subset(test)};
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 1) throw std::invalid_argument("kfold: folds must be positive");
  const auto k = static_cast<std::size_t>(folds);
  if (n < k) {
    throw DataError("kfold: " + std::to_string(n) + " frames cannot fill " + std::to_string(k) + " folds");
  }
  const auto idx = shuffled_indices(n, seed, "kfold");
  std::vector<std::vector<std::size_t>> out(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = n / k + (f < n % k ? 1 : 0);
    out[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(at),
                  idx.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += len;
  }
  return out;
}

std::vector<std::pair<FrameDataset, FrameDataset>> kfold(const FrameDataset& dataset,
                                                         const SplitSpec& spec) {
  const auto folds = kfold_indices(dataset.size(), spec.folds, spec.seed);
  std::vector<std::pair<FrameDataset, FrameDataset>> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    out.emplace_back(dataset.subset(train), dataset.subset(folds[f]));
  }
  return out;
}

std::vector<double> interpolate_wear(std::span<const std::pair<std::size_t, double>> measured,
                                     std::size_t sample_count) {
  if (measured.empty()) throw DataError("interpolate_wear: no measurements");
  std::vector<double> out(sample_count);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    while (seg + 1 < measured.size() && measured[seg + 1].first <= i) ++seg;
    const auto& [x0, y0] = measured[seg];
    // Held constant before the first and after the last measurement.
    if (i <= x0 || seg + 1 == measured.size()) {
      out[i] = y0;
      continue;
    }
    const auto& [x1, y1] = measured[seg + 1];
    const double t = static_cast<double>(i - x0) / static_cast<double>(x1 - x0);
    out[i] = y0 + t * (y1 - y0);
  }
  return out;
}

}  // namespace mdp_tcm
