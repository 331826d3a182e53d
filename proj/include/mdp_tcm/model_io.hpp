#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdp_tcm/dbn.hpp"
#include "mdp_tcm/multistate.hpp"

namespace mdp_tcm {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { DbnClassifier, EcsDbn, DbnRegressor, MultiState };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Preprocessing the model expects its frames to have gone through.
struct WindowInfo {
  std::vector<std::string> channel_ids;
  double spindle_rpm = 0.0;
  double sampling_rate_hz = 0.0;
  int multiple = 1;
  std::size_t window_length = 0;
  std::size_t stride = 0;
};

/// Exactly one of the model members is set, matching `kind`.
struct ModelFile {
  ModelKind kind = ModelKind::MultiState;
  WindowInfo window;
  std::optional<DbnModel> classifier;
  std::optional<EcsDbnModel> ecs;
  std::optional<DbnModel> regressor;
  std::optional<MultiStateModel> multistate;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

/// Text container: a header (magic, version, kind, checksum) followed by
/// `key = value` body lines. Every double is written as the 16 hex digits of
/// its little-endian IEEE-754 bytes, so a load reproduces it bit for bit.
/// The checksum is FNV-1a 64 over the body bytes.
std::string serialize_model(const ModelFile& model);
/// Throws DataError on a bad magic, unsupported version, checksum mismatch
/// or malformed body.
ModelFile parse_model(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

/// Little-endian hex encoding of one double (16 lowercase hex digits).
std::string encode_f64(double v);
double decode_f64(std::string_view hex);

}  // namespace mdp_tcm
