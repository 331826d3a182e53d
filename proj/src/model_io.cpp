#include "mdp_tcm/model_io.hpp"

#include <bit>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mdp_tcm/csv_io.hpp"
#include "mdp_tcm/errors.hpp"

namespace mdp_tcm {

namespace {

constexpr std::string_view kMagic = "MDPTCM-MODEL";

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> tokens(const std::string& s, char sep = ' ') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

class BodyWriter {
 public:
  void put(const std::string& key, const std::string& value) { out_ += key + " = " + value + "\n"; }
  void put_f64(const std::string& key, double v) { put(key, encode_f64(v)); }
  void put_matrix(const std::string& key, const Eigen::MatrixXd& m) {
    std::string v = std::to_string(m.rows()) + " " + std::to_string(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) v += " " + encode_f64(m(r, c));
    }
    put(key, v);
  }
  void put_vector(const std::string& key, const Eigen::VectorXd& x) {
    std::string v = std::to_string(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) v += " " + encode_f64(x(i));
    put(key, v);
  }
  void put_dbn(const std::string& prefix, const DbnModel& m) {
    put(prefix + ".head", head_kind_name(m.head_kind));
    std::vector<std::string> sizes;
    for (auto s : m.layer_sizes) sizes.push_back(std::to_string(s));
    put(prefix + ".layer_sizes", join(sizes, ' '));
    put_f64(prefix + ".target_offset", m.target_offset);
    put_f64(prefix + ".target_scale", m.target_scale);
    for (std::size_t l = 0; l < m.hidden.size(); ++l) {
      put_matrix(prefix + ".hidden." + std::to_string(l) + ".weights", m.hidden[l].weights);
      put_vector(prefix + ".hidden." + std::to_string(l) + ".bias", m.hidden[l].bias);
    }
    put_matrix(prefix + ".output.weights", m.head.weights);
    put_vector(prefix + ".output.bias", m.head.bias);
  }
  void put_costs(const std::string& key, const CostVector& c) {
    put_vector(key, Eigen::Map<const Eigen::VectorXd>(c.costs.data(), static_cast<Eigen::Index>(c.size())));
  }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

class BodyReader {
 public:
  explicit BodyReader(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw DataError("model file: missing key '" + key + "'");
    return it->second;
  }
  double get_f64(const std::string& key) const { return decode_f64(get(key)); }
  std::size_t get_size(const std::string& key) const {
    try {
      return static_cast<std::size_t>(std::stoull(get(key)));
    } catch (const std::logic_error&) {
      throw DataError("model file: '" + key + "' is not an integer");
    }
  }
  Eigen::MatrixXd get_matrix(const std::string& key) const {
    const auto t = tokens(get(key));
    if (t.size() < 2) throw DataError("model file: malformed matrix '" + key + "'");
    const auto rows = static_cast<Eigen::Index>(std::stoll(t[0]));
    const auto cols = static_cast<Eigen::Index>(std::stoll(t[1]));
    if (t.size() != static_cast<std::size_t>(2 + rows * cols)) {
      throw DataError("model file: matrix '" + key + "' has wrong element count");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t at = 2;
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = decode_f64(t[at++]);
    }
    return m;
  }
  Eigen::VectorXd get_vector(const std::string& key) const {
    const auto t = tokens(get(key));
    if (t.empty()) throw DataError("model file: malformed vector '" + key + "'");
    const auto n = static_cast<Eigen::Index>(std::stoll(t[0]));
    if (t.size() != static_cast<std::size_t>(1 + n)) {
      throw DataError("model file: vector '" + key + "' has wrong element count");
    }
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = decode_f64(t[static_cast<std::size_t>(1 + i)]);
    return v;
  }
  DbnModel get_dbn(const std::string& prefix) const {
    DbnModel m;
    const std::string& head = get(prefix + ".head");
    if (head == "softmax") {
      m.head_kind = HeadKind::Softmax;
    } else if (head == "linear") {
      m.head_kind = HeadKind::Linear;
    } else {
      throw DataError("model file: unknown head '" + head + "'");
    }
    for (const auto& s : tokens(get(prefix + ".layer_sizes"))) m.layer_sizes.push_back(std::stoull(s));
    if (m.layer_sizes.size() < 3) throw DataError("model file: '" + prefix + "' needs at least three layers");
    m.target_offset = get_f64(prefix + ".target_offset");
    m.target_scale = get_f64(prefix + ".target_scale");
    for (std::size_t l = 0; l + 2 < m.layer_sizes.size(); ++l) {
      m.hidden.push_back({get_matrix(prefix + ".hidden." + std::to_string(l) + ".weights"),
                          get_vector(prefix + ".hidden." + std::to_string(l) + ".bias")});
    }
    m.head = {get_matrix(prefix + ".output.weights"), get_vector(prefix + ".output.bias")};
    try {
      m.check_shapes();
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
    return m;
  }
  CostVector get_costs(const std::string& key) const {
    const Eigen::VectorXd v = get_vector(key);
    return CostVector{std::vector<double>(v.data(), v.data() + v.size())};
  }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string body_of(const ModelFile& model) {
  BodyWriter w;
  const auto& win = model.window;
  w.put("window.channels", join(win.channel_ids, ','));
  w.put_f64("window.spindle_rpm", win.spindle_rpm);
  w.put_f64("window.sampling_rate_hz", win.sampling_rate_hz);
  w.put("window.multiple", std::to_string(win.multiple));
  w.put("window.length", std::to_string(win.window_length));
  w.put("window.stride", std::to_string(win.stride));
  switch (model.kind) {
    case ModelKind::DbnClassifier:
      if (!model.classifier) throw std::invalid_argument("serialize_model: classifier missing");
      w.put_dbn("classifier", *model.classifier);
      break;
    case ModelKind::EcsDbn:
      if (!model.ecs) throw std::invalid_argument("serialize_model: ecs-dbn missing");
      w.put_dbn("diagnoser", model.ecs->base);
      w.put_costs("diagnoser.costs", model.ecs->costs);
      break;
    case ModelKind::DbnRegressor:
      if (!model.regressor) throw std::invalid_argument("serialize_model: regressor missing");
      w.put_dbn("regressor", *model.regressor);
      break;
    case ModelKind::MultiState: {
      if (!model.multistate) throw std::invalid_argument("serialize_model: multistate model missing");
      const auto& ms = *model.multistate;
      w.put_dbn("diagnoser", ms.diagnoser.base);
      w.put_costs("diagnoser.costs", ms.diagnoser.costs);
      std::vector<std::string> routes;
      for (int s = 0; s < kNumStates; ++s) {
        routes.push_back(std::to_string(s) + ":" + (ms.regressors.count(s) ? "state" : "fallback"));
      }
      w.put("routing", join(routes, ' '));
      for (const auto& [s, reg] : ms.regressors) w.put_dbn("regressor." + std::to_string(s), reg);
      w.put_dbn("fallback", ms.fallback);
      w.put("smoothing_window", std::to_string(ms.smoothing_window));
      w.put("sticky_count", std::to_string(ms.sticky_count));
      break;
    }
  }
  for (const auto& [k, v] : model.config_echo) w.put("config." + k, v);
  return w.str();
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::DbnClassifier: return "dbn-classifier";
    case ModelKind::EcsDbn: return "ecs-dbn";
    case ModelKind::DbnRegressor: return "dbn-regressor";
    case ModelKind::MultiState: return "multistate";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "dbn-classifier") return ModelKind::DbnClassifier;
  if (name == "ecs-dbn") return ModelKind::EcsDbn;
  if (name == "dbn-regressor") return ModelKind::DbnRegressor;
  if (name == "multistate") return ModelKind::MultiState;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_f64(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int byte = 0; byte < 8; ++byte) {
    const auto b = static_cast<unsigned>((bits >> (8 * byte)) & 0xffU);
    out[static_cast<std::size_t>(2 * byte)] = kHex[b >> 4];
    out[static_cast<std::size_t>(2 * byte + 1)] = kHex[b & 0xfU];
  }
  return out;
}

double decode_f64(std::string_view hex) {
  if (hex.size() != 16) throw DataError("model file: float field must have 16 hex digits");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    throw DataError("model file: bad hex digit");
  };
  std::uint64_t bits = 0;
  for (int byte = 0; byte < 8; ++byte) {
    const std::uint64_t b = nibble(hex[static_cast<std::size_t>(2 * byte)]) << 4 |
                            nibble(hex[static_cast<std::size_t>(2 * byte + 1)]);
    bits |= b << (8 * byte);
  }
  return std::bit_cast<double>(bits);
}

std::string serialize_model(const ModelFile& model) {
  const std::string body = body_of(model);
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  std::string out(kMagic);
  out += "\nversion = " + std::to_string(kModelFormatVersion) + "\n";
  out += std::string("kind = ") + model_kind_name(model.kind) + "\n";
  out += std::string("checksum = fnv1a64:") + sum + "\n";
  return out + body;
}

ModelFile parse_model(const std::string& text) {
  std::size_t at = 0;
  auto next_line = [&]() {
    const auto nl = text.find('\n', at);
    if (nl == std::string::npos) throw DataError("model file: truncated header");
    std::string line = text.substr(at, nl - at);
    at = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw DataError("model file: bad magic");
  const auto header = parse_key_value(next_line() + "\n" + next_line() + "\n" + next_line() + "\n");
  auto field = [&](const std::string& k) {
    const auto it = header.find(k);
    if (it == header.end()) throw DataError("model file: header lacks '" + k + "'");
    return it->second;
  };
  if (field("version") != std::to_string(kModelFormatVersion)) {
    throw DataError("model file: unsupported format version " + field("version"));
  }
  const std::string body = text.substr(at);
  char sum[32];
  std::snprintf(sum, sizeof sum, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  if (field("checksum") != sum) throw DataError("model file: checksum mismatch");

  ModelFile model;
  try {
    model.kind = parse_model_kind(field("kind"));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }

  std::map<std::string, std::string> values;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DataError("model file: malformed body line");
    const std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 3);
    if (key.starts_with("config.")) {
      model.config_echo.emplace_back(key.substr(7), value);
    } else {
      values[key] = std::move(value);
    }
  }
  const BodyReader r(std::move(values));
  auto& win = model.window;
  win.channel_ids = tokens(r.get("window.channels"), ',');
  win.spindle_rpm = r.get_f64("window.spindle_rpm");
  win.sampling_rate_hz = r.get_f64("window.sampling_rate_hz");
  win.multiple = static_cast<int>(r.get_size("window.multiple"));
  win.window_length = r.get_size("window.length");
  win.stride = r.get_size("window.stride");

  switch (model.kind) {
    case ModelKind::DbnClassifier:
      model.classifier = r.get_dbn("classifier");
      break;
    case ModelKind::EcsDbn:
      model.ecs = EcsDbnModel{r.get_dbn("diagnoser"), r.get_costs("diagnoser.costs")};
      break;
    case ModelKind::DbnRegressor:
      model.regressor = r.get_dbn("regressor");
      break;
    case ModelKind::MultiState: {
      MultiStateModel ms;
      ms.diagnoser = EcsDbnModel{r.get_dbn("diagnoser"), r.get_costs("diagnoser.costs")};
      for (const auto& route : tokens(r.get("routing"))) {
        const auto colon = route.find(':');
        if (colon == std::string::npos) throw DataError("model file: malformed routing entry");
        const int state = std::stoi(route.substr(0, colon));
        if (route.substr(colon + 1) == "state") ms.regressors.emplace(state, r.get_dbn("regressor." + std::to_string(state)));
      }
      ms.fallback = r.get_dbn("fallback");
      ms.smoothing_window = r.get_size("smoothing_window");
      ms.sticky_count = static_cast<int>(r.get_size("sticky_count"));
      model.multistate = std::move(ms);
      break;
    }
  }
  return model;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  write_text(path, serialize_model(model));
}

ModelFile load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace mdp_tcm
