#include "mdp_tcm/adaptive_de.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "mdp_tcm/errors.hpp"
#include "mdp_tcm/metrics.hpp"

namespace mdp_tcm {

void DeConfig::validate() const {
  if (population_size < 4) throw std::invalid_argument("DeConfig: population_size must be >= 4");
  if (max_generations < 0) throw std::invalid_argument("DeConfig: max_generations must be >= 0");
  if (!(p_best_fraction > 0.0 && p_best_fraction <= 1.0)) {
    throw std::invalid_argument("DeConfig: p_best_fraction must lie in (0,1]");
  }
  if (!(adaptation_rate >= 0.0 && adaptation_rate <= 1.0)) {
    throw std::invalid_argument("DeConfig: adaptation_rate must lie in [0,1]");
  }
}

DeState init_population(std::size_t dims, const DeConfig& config) {
  config.validate();
  if (dims < 1) throw std::invalid_argument("init_population: need at least one dimension");
  DeState state{{}, {}, 0.5, 0.5, 0, {}, config, make_rng(config.seed, "de")};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  state.population.resize(static_cast<std::size_t>(config.population_size));
  for (auto& x : state.population) {
    x.resize(dims);
    for (auto& v : x) v = unit(state.rng);
  }
  return state;
}

void evaluate_population(DeState& state, const DeObjective& objective) {
  state.fitness.resize(state.population.size());
  for (std::size_t i = 0; i < state.population.size(); ++i) state.fitness[i] = objective(state.population[i]);
}

DeState step(DeState state, const DeObjective& objective) {
  const std::size_t np = state.population.size();
  if (state.fitness.size() != np) throw std::logic_error("step: population has not been evaluated");
  if (np < 4) throw std::invalid_argument("step: population must hold at least 4 individuals");
  const std::size_t dims = state.population.front().size();
  Rng& rng = state.rng;

  std::vector<std::size_t> ranked(np);
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return state.fitness[a] > state.fitness[b]; });
  const auto top = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(state.config.p_best_fraction * static_cast<double>(np))), 1, np);

  std::cauchy_distribution<double> cauchy(state.mu_f, 0.1);
  std::normal_distribution<double> normal(state.mu_cr, 0.1);
  std::uniform_int_distribution<std::size_t> pick_top(0, top - 1);
  std::uniform_int_distribution<std::size_t> pick_pop(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, dims - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> next = state.population;
  std::vector<double> next_fitness = state.fitness;
  std::vector<double> good_f, good_cr;
  std::vector<std::vector<double>> replaced;

  for (std::size_t i = 0; i < np; ++i) {
    double f = 0.0;
    do {
      f = cauchy(rng);
    } while (f <= 0.0);
    f = std::min(f, 1.0);
    const double cr = std::clamp(normal(rng), 0.0, 1.0);

    const auto& xi = state.population[i];
    const auto& pbest = state.population[ranked[pick_top(rng)]];
    std::size_t r1 = 0;
    do {
      r1 = pick_pop(rng);
    } while (r1 == i);
    const std::size_t pool = np + state.archive.size();
    std::uniform_int_distribution<std::size_t> pick_pool(0, pool - 1);
    std::size_t r2 = 0;
    do {
      r2 = pick_pool(rng);
    } while (r2 == i || r2 == r1);
    const auto& x1 = state.population[r1];
    const auto& x2 = r2 < np ? state.population[r2] : state.archive[r2 - np];

    std::vector<double> child = xi;
    const std::size_t forced = pick_dim(rng);
    for (std::size_t d = 0; d < dims; ++d) {
      if (d == forced || unit(rng) < cr) {
        const double mutant = xi[d] + f * (pbest[d] - xi[d]) + f * (x1[d] - x2[d]);
        child[d] = std::clamp(mutant, 0.0, 1.0);
      }
    }
    const double child_fitness = objective(child);
    if (child_fitness > state.fitness[i]) {
      replaced.push_back(xi);
      next[i] = std::move(child);
      next_fitness[i] = child_fitness;
      good_f.push_back(f);
      good_cr.push_back(cr);
    }
  }

  state.archive.insert(state.archive.end(), replaced.begin(), replaced.end());
  while (state.archive.size() > np) {
    std::uniform_int_distribution<std::size_t> victim(0, state.archive.size() - 1);
    const std::size_t v = victim(rng);
    state.archive[v] = std::move(state.archive.back());
    state.archive.pop_back();
  }

  if (!good_f.empty()) {
    const double c = state.config.adaptation_rate;
    double sum = 0.0, sum_sq = 0.0;
    for (double f : good_f) {
      sum += f;
      sum_sq += f * f;
    }
    const double lehmer = sum_sq / sum;
    const double mean_cr = std::accumulate(good_cr.begin(), good_cr.end(), 0.0) / static_cast<double>(good_cr.size());
    state.mu_f = (1.0 - c) * state.mu_f + c * lehmer;
    state.mu_cr = (1.0 - c) * state.mu_cr + c * mean_cr;
  }
  state.population = std::move(next);
  state.fitness = std::move(next_fitness);
  ++state.generation;
  return state;
}

DeResult evolve(std::size_t dims, const DeConfig& config, const DeObjective& objective) {
  DeState state = init_population(dims, config);
  evaluate_population(state, objective);
  DeResult result;
  auto record = [&]() {
    const auto best = static_cast<std::size_t>(
        std::max_element(state.fitness.begin(), state.fitness.end()) - state.fitness.begin());
    if (result.history.empty() || state.fitness[best] > result.best_fitness) {
      result.best = state.population[best];
      result.best_fitness = state.fitness[best];
    }
    result.history.push_back({state.generation, result.best_fitness, state.mu_f, state.mu_cr});
  };
  record();
  for (int g = 0; g < config.max_generations; ++g) {
    state = step(std::move(state), objective);
    record();
  }
  return result;
}

double evaluate_fitness(const CostVector& costs, const Eigen::MatrixXd& posteriors, const std::vector<int>& labels) {
  if (labels.empty()) throw DataError("evaluate_fitness: empty training set");
  const std::vector<int> predicted = predict_cs_batch(posteriors, costs);
  return weighted_gmean(confusion(labels, predicted, static_cast<int>(posteriors.cols())));
}

double evaluate_fitness(const CostVector& costs, const DbnModel& model, const Eigen::MatrixXd& frames,
                        const std::vector<int>& labels) {
  if (labels.empty()) throw DataError("evaluate_fitness: empty training set");
  return evaluate_fitness(costs, predict_proba_batch(model, frames), labels);
}

CostEvolution evolve_costs(const DbnModel& model, const Eigen::MatrixXd& frames, const std::vector<int>& labels,
                           const DeConfig& config) {
  if (labels.empty()) throw DataError("evolve_costs: empty training set");
  const Eigen::MatrixXd posteriors = predict_proba_batch(model, frames);
  DeResult de = evolve(model.output_size(), config, [&](const std::vector<double>& c) {
    return evaluate_fitness(CostVector{c}, posteriors, labels);
  });
  return {CostVector{de.best}, std::move(de)};
}

std::string de_history_csv(const std::vector<DeGenerationRecord>& history) {
  std::string out = "generation,best_fitness,mu_f,mu_cr\n";
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.generation, r.best_fitness, r.mu_f, r.mu_cr);
    out += buf;
  }
  return out;
}

}  // namespace mdp_tcm
