#include "cfgtune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "cfgtune/error.hpp"
#include "cfgtune/rng.hpp"
#include "json_io.hpp"

namespace cfgtune {

void TunerParams::validate() const {
  if (population_size < 1) throw ValidationError("population_size must be >= 1");
  if (tournament_size < 1) throw ValidationError("tournament_size must be >= 1");
  if (art_candidates < 1) throw ValidationError("art_candidates must be >= 1");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw ValidationError("crossover_rate must be in [0, 1]");
  }
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    throw ValidationError("mutation_rate must be in [0, 1]");
  }
  if (budget_mb && !(*budget_mb > 0.0)) throw ValidationError("budget_mb must be > 0");
}

// ---------------------------------------------------------------------------
// Initialization

double normalized_distance(const Configuration& a, const Configuration& b,
                           const ConfigurationSpace& space) {
  const auto ea = encode(a, space, true);
  const auto eb = encode(b, space, true);
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const double d = ea.values[k] - eb.values[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<Configuration> adaptive_random_init(const ConfigurationSpace& space, std::size_t n,
                                                Rng& rng, std::size_t candidates,
                                                const std::optional<SizeConstraint>& budget) {
  std::vector<Configuration> chosen;
  std::vector<EncodedConfiguration> chosen_codes;
  chosen.reserve(n);
  auto draw = [&] { return correct(sample_raw(space, rng), space, rng, budget); };
  while (chosen.size() < n) {
    if (chosen.empty()) {
      chosen.push_back(draw());
      chosen_codes.push_back(encode(chosen.back(), space, true));
      continue;
    }
    Configuration best;
    double best_gap = -1.0;
    for (std::size_t k = 0; k < std::max<std::size_t>(candidates, 1); ++k) {
      auto cand = draw();
      const auto code = encode(cand, space, true);
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& other : chosen_codes) {
        double sum = 0.0;
        for (std::size_t j = 0; j < kNumDimensions; ++j) {
          const double d = code.values[j] - other.values[j];
          sum += d * d;
        }
        gap = std::min(gap, sum);
      }
      if (gap > best_gap) {
        best_gap = gap;
        best = std::move(cand);
      }
    }
    chosen_codes.push_back(encode(best, space, true));
    chosen.push_back(std::move(best));
  }
  return chosen;
}

std::vector<Configuration> adaptive_random_init(const ConfigurationSpace& space, std::size_t n,
                                                std::uint64_t seed) {
  Rng rng(seed);
  return adaptive_random_init(space, n, rng);
}

// ---------------------------------------------------------------------------
// Variation

std::pair<Configuration, Configuration> crossover_at(const Configuration& p1,
                                                     const Configuration& p2, std::size_t x1,
                                                     std::size_t x2) {
  if (!(x1 < x2 && x2 <= kNumDimensions)) {
    throw ValidationError("crossover cut points need 0 <= x1 < x2 <= 13");
  }
  Configuration c1 = p1;
  Configuration c2 = p2;
  for (std::size_t k = x1; k < x2; ++k) {
    c1.at(k) = p2.at(k);
    c2.at(k) = p1.at(k);
  }
  return {std::move(c1), std::move(c2)};
}

std::pair<Configuration, Configuration> two_point_crossover(const Configuration& p1,
                                                            const Configuration& p2, Rng& rng) {
  // Uniform over the 91 pairs x1 < x2 drawn from {0, ..., 13}.
  std::size_t x1 = 0;
  std::size_t x2 = 0;
  do {
    x1 = rng.uniform_index(kNumDimensions + 1);
    x2 = rng.uniform_index(kNumDimensions + 1);
  } while (x1 >= x2);
  return crossover_at(p1, p2, x1, x2);
}

Configuration boundary_random_mutation(const Configuration& config,
                                       const ConfigurationSpace& space, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("mutation rate must be in [0, 1]");
  Configuration out = config;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    if (rng.uniform01() < rate) {
      const auto& dim = space.dimensions()[k];
      out.at(k) = dim.value_at(rng.uniform_index(dim.size()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Selection

std::vector<Individual> tournament_select(std::span<const Individual> pool, std::size_t count,
                                          std::size_t tournament_size, Rng& rng) {
  if (pool.empty()) throw ValidationError("tournament selection needs a non-empty pool");
  const std::size_t size = std::clamp<std::size_t>(tournament_size, 1, pool.size());

  std::vector<ObjectiveVector> objectives;
  objectives.reserve(pool.size());
  for (const auto& ind : pool) objectives.push_back(ind.objectives);
  const auto crowding = crowding_distance(objectives);

  std::vector<std::size_t> indices(pool.size());
  std::vector<Individual> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    // Partial Fisher-Yates: the first `size` indices are the entrants.
    std::iota(indices.begin(), indices.end(), 0);
    for (std::size_t k = 0; k < size; ++k) {
      const std::size_t j = k + rng.uniform_index(pool.size() - k);
      std::swap(indices[k], indices[j]);
    }
    std::vector<std::size_t> front;
    for (std::size_t a = 0; a < size; ++a) {
      bool beaten = false;
      for (std::size_t b = 0; b < size && !beaten; ++b) {
        beaten = b != a && dominates(objectives[indices[b]], objectives[indices[a]]);
      }
      if (!beaten) front.push_back(indices[a]);
    }
    double widest = -1.0;
    std::vector<std::size_t> tied;
    for (std::size_t idx : front) {
      if (crowding[idx] > widest) {
        widest = crowding[idx];
        tied.assign(1, idx);
      } else if (crowding[idx] == widest) {
        tied.push_back(idx);
      }
    }
    out.push_back(pool[tied[rng.uniform_index(tied.size())]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Main loop

Individual evaluate_individual(const Configuration& config, const Indicator& indicator) {
  const auto prediction = indicator.predict(config);
  const double effectiveness = std::clamp(prediction.mean, 0.0, 1.0);
  Individual ind;
  ind.config = config;
  ind.objectives = {model_size_mb(config).total_mb(), forward_gflops(config), -effectiveness};
  ind.effectiveness_variance = prediction.variance;
  return ind;
}

namespace {

class Evaluator {
 public:
  Evaluator(const Indicator& indicator, TuneResult& result)
      : indicator_(indicator), result_(result) {}

  std::vector<Individual> operator()(std::span<const Configuration> configs) {
    std::vector<Individual> out;
    out.reserve(configs.size());
    for (const auto& c : configs) {
      auto it = cache_.find(c);
      if (it == cache_.end()) it = cache_.emplace(c, evaluate_individual(c, indicator_)).first;
      out.push_back(it->second);
      result_.evaluated.push_back(it->second.objectives);
      result_.visited.push_back(c);
      for (std::size_t m = 0; m < 3; ++m) {
        ref_[m] = std::max(ref_[m], it->second.objectives.as_array()[m]);
      }
    }
    return out;
  }

  ObjectiveVector reference() const { return {ref_[0], ref_[1], ref_[2]}; }

 private:
  const Indicator& indicator_;
  TuneResult& result_;
  std::map<Configuration, Individual> cache_;
  std::array<double, 3> ref_ = {-std::numeric_limits<double>::infinity(),
                                -std::numeric_limits<double>::infinity(),
                                -std::numeric_limits<double>::infinity()};
};

GenerationRecord record(std::size_t generation, const ParetoArchive& archive,
                        const ObjectiveVector& ref) {
  GenerationRecord r;
  r.generation = generation;
  r.archive_size = archive.size();
  r.archive = archive.objectives();
  r.hypervolume = hypervolume(r.archive, ref);
  if (!r.archive.empty()) {
    r.best = r.archive.front();
    for (const auto& o : r.archive) {
      r.best.size_mb = std::min(r.best.size_mb, o.size_mb);
      r.best.gflops = std::min(r.best.gflops, o.gflops);
      r.best.neg_effectiveness = std::min(r.best.neg_effectiveness, o.neg_effectiveness);
    }
  }
  return r;
}

}  // namespace

TuneResult tune(const ConfigurationSpace& space, const Indicator& indicator,
                const TunerParams& params) {
  params.validate();
  std::optional<SizeConstraint> budget;
  if (params.budget_mb) budget.emplace(*params.budget_mb);

  Rng init_rng(derive_seed(params.seed, "init"));
  Rng crossover_rng(derive_seed(params.seed, "crossover"));
  Rng mutation_rng(derive_seed(params.seed, "mutation"));
  Rng correction_rng(derive_seed(params.seed, "correction"));
  Rng selection_rng(derive_seed(params.seed, "selection"));

  TuneResult result;
  Evaluator evaluate(indicator, result);
  auto admit = [&](const std::vector<Individual>& inds) {
    for (const auto& ind : inds) {
      if (!budget || budget->admits(ind.config)) result.archive.insert(ind);
    }
  };

  const auto initial =
      adaptive_random_init(space, params.population_size, init_rng, params.art_candidates, budget);
  auto population = evaluate(initial);
  admit(population);
  result.history.push_back(record(0, result.archive, evaluate.reference()));

  const std::size_t n = params.population_size;
  std::vector<std::size_t> order(n);
  for (std::size_t gen = 1; gen <= params.generations; ++gen) {
    // Pair parents by a seeded shuffle; each pair crosses with crossover_rate.
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = n; k > 1; --k) {
      std::swap(order[k - 1], order[crossover_rng.uniform_index(k)]);
    }
    std::vector<Configuration> offspring;
    offspring.reserve(n);
    for (std::size_t k = 0; k + 1 < n; k += 2) {
      const auto& a = population[order[k]].config;
      const auto& b = population[order[k + 1]].config;
      if (crossover_rng.bernoulli(params.crossover_rate)) {
        auto [c1, c2] = two_point_crossover(a, b, crossover_rng);
        offspring.push_back(std::move(c1));
        offspring.push_back(std::move(c2));
      } else {
        offspring.push_back(a);
        offspring.push_back(b);
      }
    }
    if (n % 2 == 1) offspring.push_back(population[order[n - 1]].config);

    for (auto& child : offspring) {
      child = boundary_random_mutation(child, space, params.mutation_rate, mutation_rng);
      child = correct(child, space, correction_rng, budget);
    }

    auto evaluated = evaluate(offspring);
    admit(evaluated);

    std::vector<Individual> pool = std::move(population);
    pool.insert(pool.end(), evaluated.begin(), evaluated.end());
    population = tournament_select(pool, n, params.tournament_size, selection_rng);
    result.history.push_back(record(gen, result.archive, evaluate.reference()));
  }
  return result;
}

Individual select_deployment_config(std::span<const Individual> members, double target_mb) {
  if (members.empty()) throw ValidationError("no solutions: the Pareto front is empty");
  const Individual* best = &members.front();
  for (const auto& m : members) {
    const double d = std::fabs(m.objectives.size_mb - target_mb);
    const double db = std::fabs(best->objectives.size_mb - target_mb);
    if (d < db ||
        (d == db && (m.objectives.neg_effectiveness < best->objectives.neg_effectiveness ||
                     (m.objectives.neg_effectiveness == best->objectives.neg_effectiveness &&
                      m.objectives.gflops < best->objectives.gflops)))) {
      best = &m;
    }
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Files

std::string write_front(std::span<const Individual> members) {
  std::vector<const Individual*> sorted;
  for (const auto& m : members) sorted.push_back(&m);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Individual* a, const Individual* b) {
    return a->objectives < b->objectives;
  });
  std::string out;
  for (const auto* m : sorted) {
    detail::ordered_json line;
    line["config"] = detail::config_to_json(m->config);
    line["size_mb"] = m->objectives.size_mb;
    line["gflops"] = m->objectives.gflops;
    line["effectiveness"] = m->objectives.effectiveness();
    line["effectiveness_variance"] = m->effectiveness_variance;
    out += line.dump();
    out += '\n';
  }
  return out;
}

namespace {

Configuration loose_config(const detail::ordered_json& node) {
  if (!node.is_object()) throw ParseError("front record: config must be an object");
  Configuration out;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const std::string name(kDimensionNames[k]);
    auto it = node.find(name);
    if (it == node.end()) throw ParseError("front record: missing dimension '" + name + "'");
    if (it->is_number_integer()) {
      out.at(k) = it->get<std::int64_t>();
    } else if (it->is_number()) {
      out.at(k) = it->get<double>();
    } else if (it->is_string()) {
      out.at(k) = it->get<std::string>();
    } else {
      throw ParseError("front record: bad value for '" + name + "'");
    }
  }
  return out;
}

std::vector<Individual> read_front_impl(std::string_view document,
                                        const ConfigurationSpace* space) {
  std::vector<Individual> out;
  std::istringstream in{std::string(document)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto node = detail::ordered_json::parse(line);
      Individual ind;
      ind.config = space ? detail::config_from_json(node.at("config"), *space)
                         : loose_config(node.at("config"));
      ind.objectives.size_mb = node.at("size_mb").get<double>();
      ind.objectives.gflops = node.at("gflops").get<double>();
      ind.objectives.neg_effectiveness = -node.at("effectiveness").get<double>();
      ind.effectiveness_variance = node.value("effectiveness_variance", 0.0);
      out.push_back(std::move(ind));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("front file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<Individual> read_front(std::string_view document, const ConfigurationSpace& space) {
  return read_front_impl(document, &space);
}

std::vector<Individual> read_front(std::string_view document) {
  return read_front_impl(document, nullptr);
}

std::string generation_record_json(const GenerationRecord& record) {
  detail::ordered_json doc;
  doc["generation"] = record.generation;
  doc["archive_size"] = record.archive_size;
  doc["hypervolume"] = record.hypervolume;
  doc["best_size_mb"] = record.best.size_mb;
  doc["best_gflops"] = record.best.gflops;
  doc["best_effectiveness"] = record.best.effectiveness();
  return doc.dump();
}

}  // namespace cfgtune
