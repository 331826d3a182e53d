#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "mdp_tcm/cli.hpp"
#include "mdp_tcm/csv_io.hpp"
#include "mdp_tcm/errors.hpp"
#include "mdp_tcm/experiments.hpp"
#include "mdp_tcm/model_io.hpp"

namespace fs = std::filesystem;

namespace mdp_tcm::cli {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

fs::path require_path(const RunConfig& cfg, const std::string& key) {
  const std::string& v = cfg.get(key);
  if (v.empty()) throw UsageError("--" + key + " is required");
  return v;
}

/// Runs fn(i) for i in [0, n) on up to worker_count(n) threads. Results are
/// indexed, so the output never depends on scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = worker_count(n);
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---- data loading ----

std::vector<fs::path> run_files(const fs::path& data) {
  if (fs::is_regular_file(data)) return {data};
  if (!fs::is_directory(data)) throw DataError(data.string() + ": no such file or directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(data)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError(data.string() + ": no run CSV files");
  return out;
}

std::map<std::string, std::string> sidecar_for(const fs::path& csv) {
  fs::path meta = csv;
  meta.replace_extension(".meta");
  if (!fs::exists(meta)) return {};
  try {
    return parse_key_value(read_text(meta));
  } catch (const std::invalid_argument& e) {
    throw DataError(meta.string() + ": " + e.what());
  }
}

/// Window geometry for a dataset: explicit options win over the first
/// run's sidecar, which wins over the desk-scale default.
WindowSpec data_window_spec(const RunConfig& cfg, const fs::path& first_run) {
  WindowSpec spec = window_spec(cfg);
  const auto meta = sidecar_for(first_run);
  auto from_meta = [&](const char* key, double& field) {
    const auto it = meta.find(key);
    if (it == meta.end() || cfg.from_file.count(key) || cfg.from_flags.count(key)) return;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (*end != '\0' || !(v > 0.0)) throw DataError(first_run.string() + ": bad sidecar value for " + key);
    field = v;
  };
  from_meta("sampling_rate_hz", spec.sampling_rate_hz);
  from_meta("spindle_rpm", spec.spindle_rpm);
  return spec;
}

std::vector<std::string> expand_channels(const std::vector<std::string>& tokens,
                                         const std::vector<std::string>& available) {
  std::vector<std::string> out;
  for (const auto& token : tokens) {
    if (token == "all") {
      out.insert(out.end(), available.begin(), available.end());
      continue;
    }
    if (token == "vibration") {
      for (const auto& id : sensor_group("vibration")) out.push_back(id);
      continue;
    }
    out.push_back(token);
  }
  std::vector<std::string> unique;
  for (const auto& id : out) {
    if (std::find(unique.begin(), unique.end(), id) != unique.end()) continue;
    if (std::find(available.begin(), available.end(), id) == available.end()) {
      throw DataError("channel '" + id + "' not in dataset (available: " + join(available) + ")");
    }
    unique.push_back(id);
  }
  if (unique.empty()) throw UsageError("empty channel selection");
  return unique;
}

struct Loaded {
  FrameDataset data;
  WindowSpec spec;
};

Loaded load_frames(const fs::path& path, WindowSpec spec) {
  const auto files = run_files(path);
  std::vector<FrameDataset> parts;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const RunData run = read_run_csv(files[i], spec.sampling_rate_hz);
    std::vector<std::string> warnings;
    parts.push_back(prepare_run(run.channels, spec, run.wear_um, static_cast<int>(i), &warnings));
    for (const auto& w : warnings) std::cerr << "warning: " << files[i].string() << ": " << w << "\n";
  }
  return {concat(parts), spec};
}

Loaded load_dataset(const RunConfig& cfg) {
  const fs::path path = require_path(cfg, "data");
  const auto files = run_files(path);
  Loaded out = load_frames(path, data_window_spec(cfg, files.front()));
  const auto channels = expand_channels(cfg.get_list("channels"), out.data.channel_ids);
  if (channels != out.data.channel_ids) out.data = select_channels(out.data, channels);
  return out;
}

std::pair<FrameDataset, FrameDataset> split_for(const RunConfig& cfg, const FrameDataset& data, std::uint64_t seed) {
  const double ratio = cfg.get_double("train_ratio");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw UsageError("train_ratio must lie in (0,1]");
  if (ratio == 1.0) return {data, data.subset(std::vector<std::size_t>{})};
  const std::string& mode = cfg.get("split");
  if (mode == "frame") {
    SplitSpec spec;
    spec.train_ratio = ratio;
    spec.seed = derive_seed(seed, "split");
    return split(data, spec);
  }
  if (mode != "run") throw UsageError("split must be 'frame' or 'run'");
  const std::set<int> ids(data.run_ids.begin(), data.run_ids.end());
  const int runs = static_cast<int>(ids.size());
  int held = cfg.get("test_runs").empty()
                 ? runs - static_cast<int>(std::ceil(ratio * runs - 1e-9))
                 : static_cast<int>(cfg.get_int("test_runs"));
  held = std::max(held, 1);
  if (held >= runs) {
    throw DataError("run split needs at least " + std::to_string(held + 1) + " runs, dataset has " +
                    std::to_string(runs));
  }
  const auto test_runs = last_runs(data, held);
  return split_by_run(data, test_runs);
}

void require_frames(const FrameDataset& part, const char* which, std::size_t minimum) {
  if (part.size() < minimum) {
    throw DataError(std::string(which) + " split has " + std::to_string(part.size()) + " frames, at least " +
                    std::to_string(minimum) + " required");
  }
}

// ---- training and evaluation ----

struct Trained {
  ModelFile model;
  std::vector<std::pair<std::string, std::vector<double>>> losses;
  std::optional<DeResult> de;
  std::vector<int> fallback_states;
};

WindowInfo window_info(const WindowSpec& spec, const FrameDataset& data) {
  WindowInfo w;
  w.channel_ids = data.channel_ids;
  w.spindle_rpm = spec.spindle_rpm;
  w.sampling_rate_hz = spec.sampling_rate_hz;
  w.multiple = spec.multiple;
  w.window_length = compute_window_size(spec);
  w.stride = spec.stride.value_or(w.window_length);
  return w;
}

Trained train_kind(ModelKind kind, const MdpConfig& mdp, const FrameDataset& train) {
  Trained out;
  out.model.kind = kind;
  switch (kind) {
    case ModelKind::DbnClassifier: {
      FinetuneResult fit = train_classifier(train.frames, train.state_labels, kNumStates, mdp.classifier);
      out.model.classifier = std::move(fit.model);
      out.losses.emplace_back("classifier", std::move(fit.epoch_loss));
      break;
    }
    case ModelKind::EcsDbn: {
      MdpTrainReport report;
      out.model.ecs = train_ecs_dbn(train, mdp, &report);
      out.losses.emplace_back("classifier", std::move(report.classifier_loss));
      if (mdp.evolve_costs) out.de = std::move(report.de);
      break;
    }
    case ModelKind::DbnRegressor: {
      FinetuneResult fit = train_regressor(train.frames, train.wear_targets, mdp.regressor);
      out.model.regressor = std::move(fit.model);
      out.losses.emplace_back("regressor", std::move(fit.epoch_loss));
      break;
    }
    case ModelKind::MultiState: {
      MdpTrainResult fit = train_mdp(train, mdp);
      out.model.multistate = std::move(fit.model);
      out.losses.emplace_back("classifier", std::move(fit.report.classifier_loss));
      out.losses.emplace_back("fallback", std::move(fit.report.fallback_loss));
      for (auto& [state, loss] : fit.report.regressor_loss) {
        out.losses.emplace_back("state" + std::to_string(state), std::move(loss));
      }
      if (mdp.evolve_costs) out.de = std::move(fit.report.de);
      out.fallback_states = fit.report.fallback_states;
      break;
    }
  }
  return out;
}

struct Evaluation {
  MetricsReport report;
  std::optional<MetricsReport> smoothed;
};

std::vector<std::vector<std::size_t>> rows_by_run(const FrameDataset& data) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) groups[data.run_ids.empty() ? 0 : data.run_ids[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [run, rows] : groups) out.push_back(std::move(rows));
  return out;
}

void check_input_width(const ModelFile& model, const FrameDataset& data) {
  std::size_t expected = 0;
  if (model.classifier) expected = model.classifier->input_size();
  if (model.ecs) expected = model.ecs->base.input_size();
  if (model.regressor) expected = model.regressor->input_size();
  if (model.multistate) expected = model.multistate->diagnoser.base.input_size();
  if (data.feature_count() != expected) {
    throw DataError("model expects " + std::to_string(expected) + " inputs per frame, data has " +
                    std::to_string(data.feature_count()));
  }
}

Evaluation evaluate_model(const ModelFile& model, const FrameDataset& test) {
  check_input_width(model, test);
  Evaluation out;
  switch (model.kind) {
    case ModelKind::DbnClassifier:
    case ModelKind::EcsDbn: {
      const DbnModel& base = model.ecs ? model.ecs->base : *model.classifier;
      const CostVector costs = model.ecs ? model.ecs->costs : CostVector::uniform(kNumStates);
      const auto predicted = predict_cs_batch(predict_proba_batch(base, test.frames), costs);
      out.report = classification_report(test.state_labels, predicted, kNumStates);
      break;
    }
    case ModelKind::DbnRegressor: {
      const Eigen::VectorXd p = predict_regression_batch(*model.regressor, test.frames);
      add_regression(out.report, test.wear_targets, std::vector<double>(p.data(), p.data() + p.size()));
      break;
    }
    case ModelKind::MultiState: {
      std::vector<double> truth, raw, smoothed;
      std::vector<int> states, diagnosed;
      for (const auto& rows : rows_by_run(test)) {
        const FrameDataset part = test.subset(rows);
        const WearEstimate est = estimate_wear(*model.multistate, part.frames);
        truth.insert(truth.end(), part.wear_targets.begin(), part.wear_targets.end());
        raw.insert(raw.end(), est.raw.begin(), est.raw.end());
        smoothed.insert(smoothed.end(), est.smoothed.begin(), est.smoothed.end());
        states.insert(states.end(), part.state_labels.begin(), part.state_labels.end());
        diagnosed.insert(diagnosed.end(), est.states.begin(), est.states.end());
      }
      out.report = classification_report(states, diagnosed, kNumStates);
      out.smoothed = out.report;
      add_regression(out.report, truth, raw);
      add_regression(*out.smoothed, truth, smoothed);
      break;
    }
  }
  return out;
}

ModelKind kind_from(const RunConfig& cfg) {
  try {
    return parse_model_kind(cfg.get("kind"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, v] : cfg.values) {
    if (k == "out" || k == "data" || k == "model" || k == "run") continue;
    out.emplace_back(k, v);
  }
  return out;
}

std::string loss_csv(const Trained& t) {
  std::string out = "network,epoch,loss\n";
  char buf[64];
  for (const auto& [name, loss] : t.losses) {
    for (std::size_t e = 0; e < loss.size(); ++e) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g\n", e + 1, loss[e]);
      out += name + buf;
    }
  }
  return out;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

std::string state_counts_line(const FrameDataset& data) {
  const auto counts = state_counts(data);
  std::string out;
  for (int s = 0; s < kNumStates; ++s) {
    if (s) out += ", ";
    out += std::string(state_name(s)) + " " + std::to_string(counts[static_cast<std::size_t>(s)]);
  }
  return out;
}

std::string summary_value(const std::vector<double>& values) {
  std::vector<double> finite;
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) return "nan";
  if (values.size() == 1) return fmt(finite.front());
  const auto [mean, sd] = mean_std(finite);
  return fmt(mean) + " ± " + fmt(sd);
}

/// `key = mean ± std` over trials (plain value for a single trial).
std::string summary_text(const std::vector<MetricsReport>& reports, const std::string& prefix = "") {
  std::string out;
  for (std::size_t k = 0; k < kMetricKeys.size(); ++k) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.values()[k]);
    out += prefix + kMetricKeys[k] + " = " + summary_value(v) + "\n";
  }
  return out;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  std::array<double, 8> sum{};
  for (const auto& r : reports) {
    const auto v = r.values();
    for (std::size_t k = 0; k < v.size(); ++k) sum[k] += v[k];
  }
  for (double& s : sum) s /= static_cast<double>(reports.size());
  MetricsReport m;
  m.accuracy = sum[0];
  m.gmean = sum[1];
  m.precision = sum[2];
  m.recall = sum[3];
  m.f1 = sum[4];
  m.rmse = sum[5];
  m.r2score = sum[6];
  m.mape = sum[7];
  return m;
}

// ---- commands ----

int cmd_generate(const RunConfig& cfg) {
  const long long runs = cfg.get_int("runs");
  if (runs < 1) throw UsageError("--runs must be >= 1");
  const fs::path out = require_path(cfg, "out");
  const SynthConfig synth = synth_config(cfg);
  const auto fleet = generate_fleet(synth, static_cast<int>(runs));

  WindowSpec spec = window_spec(cfg);
  spec.sampling_rate_hz = synth.sampling_rate_hz;
  std::vector<FrameDataset> parts;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    write_run_csv(out / (std::string(name) + ".csv"), fleet[i]);
    write_key_value(out / (std::string(name) + ".meta"), fleet[i].metadata);
    parts.push_back(prepare_run(fleet[i].channels, spec, fleet[i].wear_trajectory, static_cast<int>(i)));
  }
  const FrameDataset all = concat(parts);
  std::cout << "wrote " << fleet.size() << " runs to " << out.string() << "\n";
  std::cout << "frames per state (window " << compute_window_size(spec) << "): " << state_counts_line(all) << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  const ModelKind kind = kind_from(cfg);
  const fs::path model_path = require_path(cfg, "model");
  const MdpConfig mdp = mdp_config(cfg);
  const Loaded loaded = load_dataset(cfg);
  auto [train, test] = split_for(cfg, loaded.data, cfg.get_seed("seed"));
  require_frames(train, "training", 2);
  std::cerr << "training " << model_kind_name(kind) << " on " << train.size() << " frames (" << state_counts_line(train)
            << ")\n";

  Trained t = train_kind(kind, mdp, train);
  t.model.window = window_info(loaded.spec, loaded.data);
  t.model.config_echo = config_echo(cfg);
  for (int s : t.fallback_states) {
    std::cerr << "state " << s << " (" << state_name(s) << ") has fewer than " << mdp.min_samples
              << " training frames; routed to the fallback regressor\n";
  }

  save_model(model_path, t.model);
  write_text(with_suffix(model_path, ".loss.csv"), loss_csv(t));
  if (t.de) write_text(with_suffix(model_path, ".de.csv"), de_history_csv(t.de->history));

  std::map<std::string, std::string> meta;
  meta["kind"] = model_kind_name(kind);
  meta["train_frames"] = std::to_string(train.size());
  meta["test_frames"] = std::to_string(test.size());
  meta["channels"] = join(loaded.data.channel_ids);
  std::vector<std::string> fb;
  for (int s : t.fallback_states) fb.push_back(std::to_string(s));
  meta["fallback_states"] = join(fb);
  if (t.model.ecs || t.model.multistate) {
    const CostVector& c = t.model.ecs ? t.model.ecs->costs : t.model.multistate->diagnoser.costs;
    std::vector<std::string> cs;
    for (double v : c.costs) cs.push_back(fmt(v));
    meta["costs"] = join(cs);
  }
  write_key_value(with_suffix(model_path, ".meta"), meta);
  std::cout << "saved " << model_kind_name(kind) << " model to " << model_path.string() << "\n";
  return kExitOk;
}

void write_reports(const fs::path& dir, const std::string& stem, const std::vector<MetricsReport>& reports,
                   const std::vector<std::uint64_t>& seeds) {
  write_text(dir / (stem + ".txt"), summary_text(reports));
  write_text(dir / (stem + ".csv"), csv_header() + "\n" + to_csv_row(mean_report(reports)) + "\n");
  if (reports.size() > 1) {
    std::string rows = "trial,seed," + csv_header() + "\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      rows += std::to_string(i) + "," + std::to_string(seeds[i]) + "," + to_csv_row(reports[i]) + "\n";
    }
    write_text(dir / (stem + "_trials.csv"), rows);
  }
}

int cmd_evaluate(const RunConfig& cfg) {
  const fs::path out = require_path(cfg, "out");
  const long long trials = cfg.get_int("trials");
  if (trials < 1) throw UsageError("--trials must be >= 1");

  std::vector<Evaluation> evals;
  std::vector<std::uint64_t> seeds;
  if (!cfg.get("model").empty()) {
    if (trials != 1) throw UsageError("--trials needs training; drop --model to run repeated trials");
    const ModelFile model = load_model(cfg.get("model"));
    WindowSpec spec = window_spec(cfg);
    spec.spindle_rpm = model.window.spindle_rpm;
    spec.sampling_rate_hz = model.window.sampling_rate_hz;
    spec.multiple = model.window.multiple;
    spec.stride = model.window.stride;
    Loaded loaded = load_frames(require_path(cfg, "data"), spec);
    if (cfg.from_file.count("channels") || cfg.from_flags.count("channels")) {
      const auto asked = expand_channels(cfg.get_list("channels"), loaded.data.channel_ids);
      if (asked != model.window.channel_ids) {
        throw DataError("model was trained on channels " + join(model.window.channel_ids) + ", not " + join(asked));
      }
    }
    loaded.data = select_channels(loaded.data, expand_channels(model.window.channel_ids, loaded.data.channel_ids));
    auto [train, test] = split_for(cfg, loaded.data, cfg.get_seed("seed"));
    const FrameDataset& eval_set = test.empty() ? loaded.data : test;
    evals.push_back(evaluate_model(model, eval_set));
    seeds.push_back(cfg.get_seed("seed"));
  } else {
    const ModelKind kind = kind_from(cfg);
    const Loaded loaded = load_dataset(cfg);
    const std::uint64_t base_seed = cfg.get_seed("seed");
    for (long long i = 0; i < trials; ++i) seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
    const MdpConfig base_mdp = mdp_config(cfg);
    evals = parallel_map<Evaluation>(seeds.size(), [&](std::size_t i) {
      auto [train, test] = split_for(cfg, loaded.data, seeds[i]);
      require_frames(train, "training", 2);
      require_frames(test, "test", 1);
      const Trained t = train_kind(kind, seeded_config(base_mdp, seeds[i]), train);
      return evaluate_model(t.model, test);
    });
  }

  std::vector<MetricsReport> reports, smoothed;
  for (const auto& e : evals) {
    reports.push_back(e.report);
    if (e.smoothed) smoothed.push_back(*e.smoothed);
  }
  write_reports(out, "report", reports, seeds);
  if (!smoothed.empty()) write_reports(out, "report_smoothed", smoothed, seeds);
  std::cout << summary_text(reports);
  if (!smoothed.empty()) std::cout << summary_text(smoothed, "smoothed.");
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg) {
  const ModelFile model = load_model(require_path(cfg, "model"));
  const fs::path run_path = require_path(cfg, "run");
  const RunData run = read_run_csv(run_path, model.window.sampling_rate_hz);

  std::vector<ChannelSeries> channels;
  for (const auto& id : model.window.channel_ids) {
    const auto it = std::find_if(run.channels.begin(), run.channels.end(),
                                 [&](const ChannelSeries& c) { return c.channel_id == id; });
    if (it == run.channels.end()) throw DataError(run_path.string() + ": missing channel '" + id + "' required by model");
    channels.push_back(*it);
  }
  WindowSpec spec;
  spec.spindle_rpm = model.window.spindle_rpm;
  spec.sampling_rate_hz = model.window.sampling_rate_hz;
  spec.multiple = model.window.multiple;
  spec.stride = model.window.stride;
  std::vector<std::string> warnings;
  const FrameDataset frames = prepare_run(channels, spec, run.wear_um, 0, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  check_input_width(model, frames);

  std::string csv;
  char buf[64];
  switch (model.kind) {
    case ModelKind::MultiState:
      csv = prediction_csv(estimate_wear(*model.multistate, frames.frames));
      break;
    case ModelKind::DbnClassifier:
    case ModelKind::EcsDbn: {
      const DbnModel& base = model.ecs ? model.ecs->base : *model.classifier;
      const CostVector costs = model.ecs ? model.ecs->costs : CostVector::uniform(kNumStates);
      const Eigen::MatrixXd post = predict_proba_batch(base, frames.frames);
      const auto states = predict_cs_batch(post, costs);
      csv = "frame_index,diagnosed_state";
      for (Eigen::Index k = 0; k < post.cols(); ++k) csv += ",posterior_" + std::to_string(k);
      csv += "\n";
      for (std::size_t i = 0; i < states.size(); ++i) {
        csv += std::to_string(i) + "," + std::to_string(states[i]);
        for (Eigen::Index k = 0; k < post.cols(); ++k) {
          std::snprintf(buf, sizeof buf, ",%.17g", post(static_cast<Eigen::Index>(i), k));
          csv += buf;
        }
        csv += "\n";
      }
      break;
    }
    case ModelKind::DbnRegressor: {
      const Eigen::VectorXd p = predict_regression_batch(*model.regressor, frames.frames);
      csv = "frame_index,wear_estimate_um\n";
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%td,%.17g\n", static_cast<std::ptrdiff_t>(i), p(i));
        csv += buf;
      }
      break;
    }
  }
  if (cfg.get("out").empty()) {
    std::cout << csv;
  } else {
    write_text(cfg.get("out"), csv);
  }
  return kExitOk;
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_subsets(const std::vector<std::string>& tokens,
                                                                           const std::vector<std::string>& available) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto& token : tokens) {
    if (token == "groups") {
      for (const char* g : {"force", "torque", "vibration"}) {
        out.emplace_back(g, expand_channels({g}, available));
      }
      out.emplace_back("force+torque", expand_channels({"force", "torque"}, available));
    } else if (token == "single") {
      for (const auto& id : available) out.emplace_back(id, std::vector<std::string>{id});
    } else {
      std::vector<std::string> parts;
      std::size_t start = 0;
      while (start <= token.size()) {
        const std::size_t plus = std::min(token.find('+', start), token.size());
        parts.push_back(token.substr(start, plus - start));
        start = plus + 1;
      }
      out.emplace_back(token, expand_channels(parts, available));
    }
  }
  if (out.empty()) throw UsageError("no channel subsets given");
  return out;
}

int cmd_ablate(const RunConfig& cfg) {
  const fs::path out = require_path(cfg, "out");
  const long long trials = cfg.get_int("trials");
  if (trials < 1) throw UsageError("--trials must be >= 1");
  const Loaded loaded = load_dataset(cfg);
  const auto subsets = parse_subsets(cfg.get_list("subsets"), loaded.data.channel_ids);
  const MdpConfig base_mdp = mdp_config(cfg);
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < trials; ++i) seeds.push_back(cfg.get_seed("seed") + static_cast<std::uint64_t>(i));

  const auto results = parallel_map<std::vector<SubsetResult>>(seeds.size(), [&](std::size_t i) {
    auto [train, test] = split_for(cfg, loaded.data, seeds[i]);
    require_frames(train, "training", 2);
    require_frames(test, "test", 1);
    return run_sensor_ablation(train, test, subsets, seeded_config(base_mdp, seeds[i]));
  });

  std::string csv = "subset,trial,seed,channels,accuracy,gmean,rmse,r2score,mape,rmse_smoothed,r2score_smoothed,mape_smoothed\n";
  std::string text;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    std::vector<double> rmse_raw, rmse_sm, r2, acc;
    for (std::size_t t = 0; t < results.size(); ++t) {
      const MultiStateTrial& tr = results[t][s].trial;
      csv += subsets[s].first + "," + std::to_string(t) + "," + std::to_string(seeds[t]) + "," +
             std::to_string(subsets[s].second.size()) + "," + fmt(tr.diagnosis.accuracy) + "," +
             fmt(tr.diagnosis.gmean) + "," + fmt(tr.mdp.rmse) + "," + fmt(tr.mdp.r2score) + "," + fmt(tr.mdp.mape) +
             "," + fmt(tr.mdp_smoothed.rmse) + "," + fmt(tr.mdp_smoothed.r2score) + "," + fmt(tr.mdp_smoothed.mape) +
             "\n";
      rmse_raw.push_back(tr.mdp.rmse);
      rmse_sm.push_back(tr.mdp_smoothed.rmse);
      r2.push_back(tr.mdp.r2score);
      acc.push_back(tr.diagnosis.accuracy);
    }
    const std::string& name = subsets[s].first;
    text += name + ".accuracy = " + summary_value(acc) + "\n";
    text += name + ".rmse = " + summary_value(rmse_raw) + "\n";
    text += name + ".r2score = " + summary_value(r2) + "\n";
    text += name + ".rmse_smoothed = " + summary_value(rmse_sm) + "\n";
  }
  write_text(out / "ablation.csv", csv);
  write_text(out / "ablation.txt", text);
  std::cout << text;
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg) {
  const fs::path out = require_path(cfg, "out");
  const long long trials = cfg.get_int("trials");
  if (trials < 1) throw UsageError("--trials must be >= 1");
  const Loaded loaded = load_dataset(cfg);
  const MdpConfig base_mdp = mdp_config(cfg);
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < trials; ++i) seeds.push_back(cfg.get_seed("seed") + static_cast<std::uint64_t>(i));

  const auto results = parallel_map<MultiStateTrial>(seeds.size(), [&](std::size_t i) {
    auto [train, test] = split_for(cfg, loaded.data, seeds[i]);
    require_frames(train, "training", 2);
    require_frames(test, "test", 1);
    return run_multistate_trial(train, test, seeded_config(base_mdp, seeds[i]));
  });

  const std::vector<std::pair<std::string, MetricsReport MultiStateTrial::*>> frameworks = {
      {"dbn", &MultiStateTrial::diagnosis_plain},  {"ecs-dbn", &MultiStateTrial::diagnosis},
      {"dbn-single", &MultiStateTrial::single},    {"dbn-single-smoothed", &MultiStateTrial::single_smoothed},
      {"mdp", &MultiStateTrial::mdp},              {"mdp-smoothed", &MultiStateTrial::mdp_smoothed},
  };
  std::string csv = "framework,trial,seed," + csv_header() + "\n";
  std::string text;
  for (const auto& [name, member] : frameworks) {
    std::vector<MetricsReport> reports;
    for (std::size_t t = 0; t < results.size(); ++t) {
      reports.push_back(results[t].*member);
      csv += name + "," + std::to_string(t) + "," + std::to_string(seeds[t]) + "," + to_csv_row(reports.back()) + "\n";
    }
    text += summary_text(reports, name + ".");
  }
  write_text(out / "comparison.csv", csv);
  write_text(out / "comparison.txt", text);
  std::cout << text;
  return kExitOk;
}

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help = {
      {"seed", "run seed; every random stream derives from it"},
      {"out", "output directory (generate, evaluate, ablate-sensors, compare-frameworks) or file (predict)"},
      {"data", "run CSV file or directory of run CSVs"},
      {"model", "model file path"},
      {"run", "run CSV to predict on"},
      {"runs", "number of synthetic runs"},
      {"kind", "multistate | ecs-dbn | dbn-classifier | dbn-regressor"},
      {"preset", "auto | diagnosis-default | prognosis-default | desk"},
      {"channels", "comma-separated channel ids, 'vibration' or 'all'"},
      {"subsets", "comma-separated subsets: all, groups, single or a+b channel lists"},
      {"trials", "repeated seeded trials (seed, seed+1, ...)"},
      {"desk_scale", "200 Hz synthetic sampling instead of 20 kHz"},
      {"run_seconds", "synthetic run duration"},
      {"imbalance_skew", "fresh-to-worn dwell ratio of synthetic runs"},
      {"wear_end_um", "final flank wear of synthetic runs"},
      {"spindle_rpm", "spindle speed"},
      {"sampling_rate_hz", "sampling rate (default: sidecar, else 200 Hz desk or 20 kHz)"},
      {"multiple", "spindle rotations per window"},
      {"stride", "window stride in samples (default: window length)"},
      {"split", "frame | run"},
      {"train_ratio", "training fraction; 1 trains on everything"},
      {"test_runs", "held-out runs for --split run"},
      {"de_population", "DE population size"},
      {"de_generations", "DE generations"},
      {"de_p", "DE p-best fraction"},
      {"de_c", "DE adaptation rate"},
      {"evolve_costs", "evolve class costs (false keeps uniform costs)"},
      {"min_samples", "minimum frames for a state-specific regressor"},
      {"smoothing_window", "trailing moving-average window in frames"},
      {"sticky_count", "consecutive agreeing diagnoses needed to switch state"},
      {"pretrain_epochs", "CD epochs per RBM"},
      {"finetune_epochs", "SGD epochs"},
      {"learning_rate", "learning rate for pretraining and fine-tuning"},
      {"batch_size", "mini-batch size"},
      {"hidden_min", "smallest drawn hidden layer"},
      {"hidden_max", "largest drawn hidden layer"},
      {"hidden_layers", "number of hidden layers"},
      {"hidden_sizes", "explicit hidden layer sizes, comma-separated"},
      {"gibbs_steps", "CD-k steps"},
      {"weight_decay", "L2 weight decay"},
  };
  return help;
}

bool is_bool_key(const std::string& key) { return key == "desk_scale" || key == "evolve_costs"; }

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"mdp-tcm: tool-state diagnosis and flank-wear prognosis"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
  };
  const std::vector<Command> commands = {
      {"generate", "write a synthetic run-to-failure fleet", cmd_generate},
      {"train", "train a model and save it", cmd_train},
      {"evaluate", "metric reports for a saved model or for seeded train/test trials", cmd_evaluate},
      {"predict", "per-frame state and wear estimates for one run", cmd_predict},
      {"ablate-sensors", "pipeline RMSE per channel subset", cmd_ablate},
      {"compare-frameworks", "DBN vs ECS-DBN diagnosis and single-state vs multi-state prognosis", cmd_compare},
  };

  struct Parsed {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<Parsed> parsed(commands.size());
  std::vector<std::string> keys;
  for (const auto& [k, v] : builtin_defaults()) keys.push_back(k);
  for (const auto& k : training_keys()) keys.push_back(k);

  for (std::size_t c = 0; c < commands.size(); ++c) {
    Parsed& p = parsed[c];
    p.app = app.add_subcommand(commands[c].name, commands[c].help);
    p.app->add_option("--config", p.config_path, "key = value config file");
    for (const auto& key : keys) {
      const auto it = key_help().find(key);
      CLI::Option* opt = p.app->add_option(flag_name(key), p.values[key], it == key_help().end() ? "" : it->second);
      if (is_bool_key(key)) opt->expected(0, 1);
      p.options[key] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (std::size_t c = 0; c < commands.size(); ++c) {
      Parsed& p = parsed[c];
      if (!p.app->parsed()) continue;
      std::map<std::string, std::string> file_values;
      if (!p.config_path.empty()) {
        try {
          file_values = parse_key_value(read_text(p.config_path));
        } catch (const std::invalid_argument& e) {
          throw UsageError(p.config_path + ": " + e.what());
        }
      }
      std::map<std::string, std::string> flags;
      for (const auto& [key, opt] : p.options) {
        if (opt->count() == 0) continue;
        flags[key] = is_bool_key(key) && p.values[key].empty() ? "true" : p.values[key];
      }
      return commands[c].fn(resolve_config(file_values, flags));
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace mdp_tcm::cli
