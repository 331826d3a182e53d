#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mdp_tcm {

inline constexpr int kNumStates = 4;

/// One sensor channel sampled at a fixed rate.
struct ChannelSeries {
  std::string channel_id;
  double sampling_rate_hz = 0.0;
  std::vector<double> samples;
};

/// Window geometry. The window spans `multiple` full spindle rotations;
/// an unset stride means non-overlapping frames (stride == window length).
struct WindowSpec {
  double spindle_rpm = 1650.0;
  double sampling_rate_hz = 20000.0;
  int multiple = 1;
  std::optional<std::size_t> stride;
};

/// Windowed multichannel frames. Each row is one frame flattened
/// channel-major: all `window_length` samples of channel 0, then channel 1, ...
struct FrameDataset {
  Eigen::MatrixXd frames;
  std::vector<int> state_labels;
  std::vector<double> wear_targets;
  std::vector<std::string> channel_ids;
  std::size_t window_length = 0;
  /// Source run of each frame; frames of one run are stored in time order.
  std::vector<int> run_ids;

  std::size_t size() const { return state_labels.size(); }
  bool empty() const { return state_labels.empty(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(frames.cols()); }

  FrameDataset subset(std::span<const std::size_t> rows) const;
  /// Throws std::invalid_argument when the parallel arrays disagree.
  void check_consistent() const;
};

struct SplitSpec {
  double train_ratio = 0.85;
  int folds = 5;
  std::uint64_t seed = 0;
};

/// Min-max scaling to [0,1]. A constant channel maps to all zeros and sets
/// `*was_constant` when provided.
ChannelSeries normalize_channel(const ChannelSeries& series, bool* was_constant = nullptr);

/// Samples covering `multiple` spindle rotations: round(N * fs * 60 / rpm).
std::size_t compute_window_size(const WindowSpec& spec);

/// Class for a flank wear value in micrometers:
/// 0 Fresh (<=100), 1 Progressive (100,200], 2 Accelerated (200,300), 3 Worn (>=300).
int label_state(double wear_um);

const char* state_name(int state);

/// Cuts frames out of already-normalized channels. The wear target of a
/// frame is the wear at its last sample.
FrameDataset window(std::span<const ChannelSeries> channels, const WindowSpec& spec,
                    std::span<const double> wear_trajectory, int run_id = 0);

/// Normalizes every channel, then windows.
FrameDataset prepare_run(std::span<const ChannelSeries> channels, const WindowSpec& spec,
                         std::span<const double> wear_trajectory, int run_id = 0,
                         std::vector<std::string>* warnings = nullptr);

/// Row-wise concatenation; all parts must share channel layout.
FrameDataset concat(std::span<const FrameDataset> parts);

/// Keeps only the named channels (in the order given).
FrameDataset select_channels(const FrameDataset& dataset, std::span<const std::string> channel_ids);

/// Seeded uniform shuffle; the first ceil(train_ratio * n) shuffled frames
/// train. Both sides keep the original row order.
std::pair<FrameDataset, FrameDataset> split(const FrameDataset& dataset, const SplitSpec& spec);

/// Run-level split: every frame of a run listed in `test_runs` goes to test.
std::pair<FrameDataset, FrameDataset> split_by_run(const FrameDataset& dataset,
                                                   std::span<const int> test_runs);

/// Validation index sets of a seeded k-fold partition of [0, n).
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int folds, std::uint64_t seed);

std::vector<std::pair<FrameDataset, FrameDataset>> kfold(const FrameDataset& dataset,
                                                         const SplitSpec& spec);

/// Linear interpolation of sparse wear measurements onto sample indices.
/// `measured` holds (sample_index, wear_um) pairs sorted by index.
std::vector<double> interpolate_wear(std::span<const std::pair<std::size_t, double>> measured,
                                     std::size_t sample_count);

}  // namespace mdp_tcm
