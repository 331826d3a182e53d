#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mdp_tcm/signal.hpp"
#include "mdp_tcm/synth.hpp"

namespace mdp_tcm {

/// Channels and per-sample wear read back from a run CSV.
struct RunData {
  std::vector<ChannelSeries> channels;
  std::vector<double> wear_um;
};

/// Header: channel ids then `wear_um`; one row per sample, %.17g values.
std::string run_csv(const std::vector<ChannelSeries>& channels, const std::vector<double>& wear_um);
void write_run_csv(const std::filesystem::path& path, const SynthRun& run);

/// Parses a run CSV. The sampling rate is not stored in the file.
RunData parse_run_csv(const std::string& text, double sampling_rate_hz);
RunData read_run_csv(const std::filesystem::path& path, double sampling_rate_hz);

/// `key = value` lines, sorted by key, `#` comments allowed on read.
void write_key_value(const std::filesystem::path& path, const std::map<std::string, std::string>& values);
std::map<std::string, std::string> parse_key_value(const std::string& text);

/// Frame dump for inspection: frame_index,run,state,wear_um,f0..fN
std::string dataset_csv(const FrameDataset& dataset);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mdp_tcm
