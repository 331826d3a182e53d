#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mdp_tcm/cost_sensitive.hpp"
#include "mdp_tcm/dbn.hpp"
#include "mdp_tcm/rng.hpp"

namespace mdp_tcm {

struct DeConfig {
  int population_size = 30;
  int max_generations = 50;
  double p_best_fraction = 0.1;
  double adaptation_rate = 0.1;  // JADE's c
  std::uint64_t seed = 0;

  void validate() const;
};

/// JADE population. Candidates live in [0,1]^K and are maximized.
struct DeState {
  std::vector<std::vector<double>> population;
  std::vector<double> fitness;
  double mu_f = 0.5;
  double mu_cr = 0.5;
  int generation = 0;
  std::vector<std::vector<double>> archive;
  DeConfig config;
  Rng rng;
};

using DeObjective = std::function<double(const std::vector<double>&)>;

/// NP uniform draws from [0,1]^K; fitness is left empty until evaluate_population.
DeState init_population(std::size_t dims, const DeConfig& config);

void evaluate_population(DeState& state, const DeObjective& objective);

/// One generation of current-to-pbest/1 with archive, binomial crossover,
/// greedy selection and Lehmer/arithmetic mean adaptation of mu_f/mu_cr.
DeState step(DeState state, const DeObjective& objective);

struct DeGenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mu_f = 0.5;
  double mu_cr = 0.5;
};

struct DeResult {
  std::vector<double> best;
  double best_fitness = 0.0;
  std::vector<DeGenerationRecord> history;  // generation 0 is the initial population
};

/// init + max_generations steps; keeps the best individual ever seen.
DeResult evolve(std::size_t dims, const DeConfig& config, const DeObjective& objective);

/// Weighted multiclass G-mean of predict_cs over cached posteriors.
double evaluate_fitness(const CostVector& costs, const Eigen::MatrixXd& posteriors, const std::vector<int>& labels);
double evaluate_fitness(const CostVector& costs, const DbnModel& model, const Eigen::MatrixXd& frames,
                        const std::vector<int>& labels);

struct CostEvolution {
  CostVector costs;
  DeResult de;
};

/// Evolves the per-class cost vector of a trained softmax DBN against its
/// training-set G-mean. Posteriors are computed once and reused.
CostEvolution evolve_costs(const DbnModel& model, const Eigen::MatrixXd& frames, const std::vector<int>& labels,
                           const DeConfig& config);

/// History as CSV: generation,best_fitness,mu_f,mu_cr
std::string de_history_csv(const std::vector<DeGenerationRecord>& history);

}  // namespace mdp_tcm
