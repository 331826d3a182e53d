#include "mdp_tcm/csv_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mdp_tcm/errors.hpp"

namespace mdp_tcm {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  return out;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string run_csv(const std::vector<ChannelSeries>& channels, const std::vector<double>& wear_um) {
  std::string out;
  for (const auto& ch : channels) {
    out += ch.channel_id;
    out += ',';
  }
  out += "wear_um\n";
  for (std::size_t i = 0; i < wear_um.size(); ++i) {
    for (const auto& ch : channels) {
      append_double(out, ch.samples.at(i));
      out += ',';
    }
    append_double(out, wear_um[i]);
    out += '\n';
  }
  return out;
}

void write_run_csv(const std::filesystem::path& path, const SynthRun& run) {
  write_text(path, run_csv(run.channels, run.wear_trajectory));
}

RunData parse_run_csv(const std::string& text, double sampling_rate_hz) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("run CSV is empty");
  const auto header = split_commas(line);
  std::ptrdiff_t wear_col = -1;
  RunData data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "wear_um") {
      wear_col = static_cast<std::ptrdiff_t>(c);
    } else {
      data.channels.push_back({header[c], sampling_rate_hz, {}});
    }
  }
  if (wear_col < 0) throw DataError("run CSV has no wear_um column");
  if (data.channels.empty()) throw DataError("run CSV has no channel columns");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const char* p = line.c_str();
    std::size_t ch = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw DataError("run CSV row " + std::to_string(row) + ": bad number in column " + header[c]);
      if (static_cast<std::ptrdiff_t>(c) == wear_col) {
        data.wear_um.push_back(v);
      } else {
        data.channels[ch++].samples.push_back(v);
      }
      p = end;
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (c + 1 < header.size()) {
        if (*p != ',') throw DataError("run CSV row " + std::to_string(row) + ": too few columns");
        ++p;
      }
    }
  }
  if (data.wear_um.empty()) throw DataError("run CSV has no samples");
  return data;
}

RunData read_run_csv(const std::filesystem::path& path, double sampling_rate_hz) {
  try {
    return parse_run_csv(read_text(path), sampling_rate_hz);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_key_value(const std::filesystem::path& path, const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  write_text(path, out);
}

std::map<std::string, std::string> parse_key_value(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("line " + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string dataset_csv(const FrameDataset& dataset) {
  std::string out = "frame_index,run,state,wear_um";
  for (Eigen::Index c = 0; c < dataset.frames.cols(); ++c) out += ",f" + std::to_string(c);
  out += '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out += std::to_string(i) + ',' + std::to_string(dataset.run_ids.empty() ? 0 : dataset.run_ids[i]) + ',' +
           std::to_string(dataset.state_labels[i]) + ',';
    append_double(out, dataset.wear_targets[i]);
    for (Eigen::Index c = 0; c < dataset.frames.cols(); ++c) {
      out += ',';
      append_double(out, dataset.frames(static_cast<Eigen::Index>(i), c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace mdp_tcm
