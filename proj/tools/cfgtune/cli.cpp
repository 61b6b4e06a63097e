#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "cfgtune/config_space.hpp"
#include "cfgtune/cost_models.hpp"
#include "cfgtune/error.hpp"
#include "cfgtune/oracle.hpp"
#include "cfgtune/pruner.hpp"
#include "cfgtune/rng.hpp"
#include "cfgtune/surrogate.hpp"
#include "cfgtune/tuner.hpp"

namespace cfgtune::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw IoError("cannot write '" + path + "'");
}

// Sibling of path with the extension replaced, e.g. front.jsonl -> front.log.jsonl.
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension(suffix);
  return p.string();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string fixed(double x, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

json parse_json_object(const std::string& text) { return json::parse(text); }

// ---------------------------------------------------------------------------

struct PruneArgs {
  std::string space;
  double budget_mb = 3.0;
  std::size_t partitions = 50;
  std::string out;
  std::string report;
};

int cmd_prune(const PruneArgs& a, std::ostream& out) {
  const auto space = parse_space(read_text(a.space));
  const SizeConstraint constraint(a.budget_mb);
  const auto pruned = prune(space, constraint, a.partitions);
  const auto report = make_prune_report(space, pruned, constraint, a.partitions);

  write_text(a.out, serialize_space(pruned) + "\n");
  const std::string report_path = a.report.empty() ? sibling(a.out, ".report.json") : a.report;
  write_text(report_path, prune_report_json(report) + "\n");

  out << "pruned space written to " << a.out << "\n";
  out << std::left << std::setw(30) << "dimension" << std::setw(34) << "original"
      << "retained\n";
  for (const auto& d : report.dimensions) {
    out << std::left << std::setw(30) << d.name << std::setw(34)
        << ("[" + d.original_min + ", " + d.original_max + "]") << "[" << d.retained_min << ", "
        << d.retained_max << "]\n";
  }
  out << "cardinality: " << to_string(report.original_cardinality) << " -> "
      << to_string(report.pruned_cardinality) << "\n";
  out << "cardinality ratio: " << fixed(100.0 * report.cardinality_ratio(), 2) << "%\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string space;
  std::string oracle = "synthetic";
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  std::string out;
  std::string audit;
};

std::string audit_jsonl(const AuditTable& table) {
  std::string text;
  for (std::size_t r = 0; r < table.configs.size(); ++r) {
    json line;
    line["config"] = parse_json_object(configuration_to_json(table.configs[r]));
    if (r < table.effectiveness.size()) {
      line["effectiveness"] = table.effectiveness[r];
    } else {
      line["effectiveness"] = nullptr;
    }
    text += line.dump() + "\n";
  }
  return text;
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const auto space = parse_space(read_text(a.space));
  const auto oracle = make_oracle(a.oracle, space, derive_seed(a.seed, "oracle"));
  const std::string audit_path = a.audit.empty() ? sibling(a.out, ".audit.jsonl") : a.audit;
  if (a.samples < kNumDimensions + 1) {
    err << "warning: " << a.samples << " samples for " << kNumDimensions
        << " features; the indicator is underdetermined and rests on its prior\n";
  }
  try {
    const auto build = build_indicator(space, *oracle, a.samples, derive_seed(a.seed, "fit"));
    write_text(a.out, build.model.to_json() + "\n");
    write_text(audit_path, audit_jsonl(build.table));
    out << "model written to " << a.out << " (" << build.model.sample_count() << " samples, "
        << build.model.iterations() << " iterations"
        << (build.model.converged() ? "" : ", not converged") << ")\n";
    out << "audit table written to " << audit_path << "\n";
    out << "alpha " << build.model.alpha() << ", beta " << build.model.beta() << "\n";
  } catch (const IndicatorBuildError& e) {
    write_text(audit_path, audit_jsonl(e.partial()));
    err << "partial audit table written to " << audit_path << "\n";
    throw;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TuneArgs {
  std::string space;
  std::string model;
  std::uint64_t seed = 0;
  TunerParams params;
  double budget_mb = 3.0;
  std::string out;
  std::string log;
  std::string manifest;
};

int cmd_tune(const TuneArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const std::string started = utc_now();
  const auto space = parse_space(read_text(a.space));
  auto model = SurrogateModel::from_json(read_text(a.model));
  if (model.space_checksum() != space.checksum()) {
    throw InfeasibleError("model was fitted for space " + model.space_checksum() +
                          " but the space file has checksum " + space.checksum());
  }
  TunerParams params = a.params;
  params.seed = derive_seed(a.seed, "tune");
  params.budget_mb = a.budget_mb;
  const SurrogateIndicator indicator(std::move(model), space);
  const auto result = tune(space, indicator, params);

  write_text(a.out, write_front(result.archive.members()));
  const std::string log_path = a.log.empty() ? sibling(a.out, ".log.jsonl") : a.log;
  std::string log;
  for (const auto& r : result.history) log += generation_record_json(r) + "\n";
  write_text(log_path, log);

  json manifest;
  manifest["tool"] = "cfgtune";
  manifest["version"] = CFGTUNE_VERSION;
  json args = json::array();
  for (const auto& s : argv) args.push_back(s);
  manifest["command"] = args;
  manifest["space_file"] = a.space;
  manifest["space_checksum"] = space.checksum();
  manifest["model_file"] = a.model;
  manifest["seed"] = a.seed;
  manifest["budget_mb"] = a.budget_mb;
  manifest["params"] = {{"population_size", params.population_size},
                        {"generations", params.generations},
                        {"crossover_rate", params.crossover_rate},
                        {"mutation_rate", params.mutation_rate},
                        {"tournament_size", params.tournament_size},
                        {"art_candidates", params.art_candidates},
                        {"derived_seed", params.seed}};
  manifest["front_file"] = a.out;
  manifest["log_file"] = log_path;
  manifest["front_size"] = result.archive.size();
  manifest["evaluations"] = result.evaluated.size();
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  const std::string manifest_path =
      a.manifest.empty() ? sibling(a.out, ".manifest.json") : a.manifest;
  write_text(manifest_path, manifest.dump(2) + "\n");

  const auto& last = result.history.back();
  out << "front of " << result.archive.size() << " configurations written to " << a.out << "\n";
  out << "generations " << params.generations << ", evaluations " << result.evaluated.size()
      << ", hypervolume " << last.hypervolume << "\n";
  out << "run log " << log_path << ", manifest " << manifest_path << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string front;
  double target_mb = 3.0;
  std::optional<double> runtime_hours;
  std::optional<double> power_kw;
  double carbon_intensity = kDefaultCarbonIntensity;
};

std::string short_value(const Value& v) { return to_string(v); }

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  auto members = read_front(read_text(a.front));
  if (members.empty()) {
    err << "no solutions: front file '" << a.front << "' is empty\n";
    return kConstraintError;
  }
  std::stable_sort(members.begin(), members.end(), [](const Individual& x, const Individual& y) {
    return x.objectives < y.objectives;
  });
  const auto pick = select_deployment_config(members, a.target_mb);

  out << "  " << std::left << std::setw(10) << "size_mb" << std::setw(10) << "gflops"
      << std::setw(8) << "eff" << std::setw(20) << "tokenizer" << std::setw(8) << "vocab"
      << std::setw(7) << "layers" << std::setw(7) << "hidden" << std::setw(7) << "inter"
      << std::setw(7) << "heads" << "seq\n";
  for (const auto& m : members) {
    const bool chosen = m.objectives == pick.objectives && m.config == pick.config;
    const auto& c = m.config;
    out << (chosen ? "* " : "  ") << std::left << std::setw(10) << fixed(m.objectives.size_mb, 3)
        << std::setw(10) << fixed(m.objectives.gflops, 3) << std::setw(8)
        << fixed(m.objectives.effectiveness(), 4) << std::setw(20)
        << short_value(c[Dim::tokenizer]) << std::setw(8) << short_value(c[Dim::vocab_size])
        << std::setw(7) << short_value(c[Dim::num_hidden_layers]) << std::setw(7)
        << short_value(c[Dim::hidden_size]) << std::setw(7)
        << short_value(c[Dim::intermediate_size]) << std::setw(7)
        << short_value(c[Dim::num_attention_heads])
        << short_value(c[Dim::max_sequence_length]) << "\n";
  }
  out << "\ndeployment pick (closest to " << a.target_mb << " MB): " << fixed(pick.objectives.size_mb, 3)
      << " MB, " << fixed(pick.objectives.gflops, 3) << " GFLOPs, effectiveness "
      << fixed(pick.objectives.effectiveness(), 4) << "\n";
  out << "  " << configuration_to_json(pick.config) << "\n";

  if (a.runtime_hours && a.power_kw) {
    const auto e = emissions(*a.runtime_hours, *a.power_kw, a.carbon_intensity);
    out << "\nemissions: " << fixed(e.energy_kwh, 4) << " kWh x " << a.carbon_intensity
        << " kg/kWh = " << fixed(e.co2_kg, 4) << " kg CO2\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Size-constrained configuration tuning for compressed code models", "cfgtune"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CFGTUNE_VERSION);

  PruneArgs prune_args;
  auto* prune_cmd = app.add_subcommand("prune", "Drop configuration values that cannot fit the budget");
  prune_cmd->add_option("--space", prune_args.space, "Space file (JSON)")->required();
  prune_cmd->add_option("--budget-mb", prune_args.budget_mb, "Model size budget in MB")
      ->check(CLI::PositiveNumber)->capture_default_str();
  prune_cmd->add_option("--partitions", prune_args.partitions, "Parallel subspaces")
      ->check(CLI::PositiveNumber)->capture_default_str();
  prune_cmd->add_option("--out", prune_args.out, "Pruned space file")->required();
  prune_cmd->add_option("--report", prune_args.report, "Report file (default <out>.report.json)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Sample configurations and fit the effectiveness indicator");
  fit_cmd->add_option("--space", fit_args.space, "Space file (JSON)")->required();
  fit_cmd->add_option("--oracle", fit_args.oracle,
                      "synthetic, synthetic:sigma=<x> or external:<command>")
      ->capture_default_str();
  fit_cmd->add_option("--samples", fit_args.samples, "Number of sampled configurations")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit_args.seed, "Run seed")->capture_default_str();
  fit_cmd->add_option("--out", fit_args.out, "Model file")->required();
  fit_cmd->add_option("--audit", fit_args.audit, "Audit table (default <out>.audit.jsonl)");

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "Search for size/FLOPs/effectiveness trade-offs");
  tune_cmd->add_option("--space", tune_args.space, "Space file (JSON)")->required();
  tune_cmd->add_option("--model", tune_args.model, "Model file from 'fit'")->required();
  tune_cmd->add_option("--seed", tune_args.seed, "Run seed")->capture_default_str();
  tune_cmd->add_option("--pop", tune_args.params.population_size, "Population size")
      ->capture_default_str();
  tune_cmd->add_option("--generations", tune_args.params.generations, "Generations")
      ->capture_default_str();
  tune_cmd->add_option("--crossover-rate", tune_args.params.crossover_rate, "Crossover rate")
      ->capture_default_str();
  tune_cmd->add_option("--mutation-rate", tune_args.params.mutation_rate, "Mutation rate")
      ->capture_default_str();
  tune_cmd->add_option("--budget-mb", tune_args.budget_mb, "Model size budget in MB")
      ->check(CLI::PositiveNumber)->capture_default_str();
  tune_cmd->add_option("--out", tune_args.out, "Pareto-front file (JSONL)")->required();
  tune_cmd->add_option("--log", tune_args.log, "Run log (default <out>.log.jsonl)");
  tune_cmd->add_option("--manifest", tune_args.manifest, "Manifest (default <out>.manifest.json)");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Summarize a Pareto-front file");
  report_cmd->add_option("--front", report_args.front, "Pareto-front file (JSONL)")->required();
  report_cmd->add_option("--target-mb", report_args.target_mb, "Deployment size target in MB")
      ->capture_default_str();
  report_cmd->add_option("--runtime-hours", report_args.runtime_hours, "Workload duration");
  report_cmd->add_option("--power-kw", report_args.power_kw, "Average power draw in kW");
  report_cmd->add_option("--carbon-intensity", report_args.carbon_intensity,
                         "kg CO2 per kWh")
      ->capture_default_str();

  std::vector<const char*> argv{"cfgtune"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << CFGTUNE_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }

  try {
    if (*prune_cmd) return cmd_prune(prune_args, out);
    if (*fit_cmd) return cmd_fit(fit_args, out, err);
    if (*tune_cmd) return cmd_tune(tune_args, args, out);
    if (*report_cmd) return cmd_report(report_args, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const InfeasibleError& e) {
    err << "constraint error: " << e.what() << "\n";
    return kConstraintError;
  } catch (const ValidationError& e) {
    err << "constraint error: " << e.what() << "\n";
    return kConstraintError;
  } catch (const OracleError& e) {
    err << "oracle error: " << e.what() << "\n";
    return kOracleError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace cfgtune::cli
