#include "cfgtune/oracle.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "cfgtune/rng.hpp"
#include "json_io.hpp"

extern char** environ;

namespace cfgtune {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Distillation loss

namespace {

std::vector<double> log_softmax(const std::vector<double>& logits, double temperature) {
  std::vector<double> z(logits.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    z[j] = logits[j] / temperature;
    peak = std::max(peak, z[j]);
  }
  double sum = 0.0;
  for (double x : z) sum += std::exp(x - peak);
  const double log_norm = peak + std::log(sum);
  for (double& x : z) x -= log_norm;
  return z;
}

}  // namespace

double kd_loss(const DistillationBatch& batch) {
  const double t = batch.temperature;
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("kd_loss: temperature must be > 0");
  if (batch.teacher_logits.empty()) throw ValidationError("kd_loss: empty batch");
  if (batch.teacher_logits.size() != batch.student_logits.size()) {
    throw ValidationError("kd_loss: teacher and student batch sizes differ");
  }
  double total = 0.0;
  for (std::size_t e = 0; e < batch.teacher_logits.size(); ++e) {
    const auto& p = batch.teacher_logits[e];
    const auto& q = batch.student_logits[e];
    if (p.size() != q.size()) throw ValidationError("kd_loss: logit shapes differ");
    if (p.size() < 2) throw ValidationError("kd_loss: need at least 2 classes");
    const auto lp = log_softmax(p, t);
    const auto lq = log_softmax(q, t);
    double cross = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) cross -= std::exp(lp[j]) * lq[j];
    total += cross * t * t;
  }
  return total / static_cast<double>(batch.teacher_logits.size());
}

// ---------------------------------------------------------------------------
// Oracles

double EffectivenessOracle::evaluate(const Configuration& config) const {
  return evaluate_batch(std::span<const Configuration>(&config, 1)).front();
}

double SyntheticOracle::Ramp::operator()(double x) const {
  if (hi <= lo) return 1.0;
  const double clamped = std::clamp(x, lo, hi);
  return std::log1p(clamped - lo) / std::log1p(hi - lo);
}

SyntheticOracle::SyntheticOracle(const ConfigurationSpace& space, double noise_sigma,
                                 std::uint64_t noise_seed)
    : noise_sigma_(noise_sigma), noise_seed_(noise_seed) {
  if (!(noise_sigma >= 0.0)) throw ValidationError("synthetic oracle: sigma must be >= 0");
  const auto& h = space.dimension(Dim::hidden_size);
  const auto& l = space.dimension(Dim::num_hidden_layers);
  const auto& i = space.dimension(Dim::intermediate_size);
  const auto& v = space.dimension(Dim::vocab_size);
  capacity_ = {h.min_code() * l.min_code(), h.max_code() * l.max_code()};
  intermediate_ = {i.min_code(), i.max_code()};
  vocab_ = {v.min_code(), v.max_code()};
  const auto& tok = space.dimension(Dim::tokenizer);
  for (std::uint64_t k = 0; k < tok.size(); ++k) tokenizers_.push_back(to_string(tok.value_at(k)));
}

double SyntheticOracle::accuracy(const Configuration& config) const {
  const double capacity =
      static_cast<double>(config.hidden_size()) * static_cast<double>(config.num_layers());
  double bonus = 0.0;
  const auto& tok = std::get<std::string>(config[Dim::tokenizer]);
  auto it = std::find(tokenizers_.begin(), tokenizers_.end(), tok);
  if (it != tokenizers_.end()) {
    const auto n = tokenizers_.size();
    bonus = n > 1 ? 1.0 - static_cast<double>(it - tokenizers_.begin()) / static_cast<double>(n - 1)
                  : 1.0;
  }
  double acc = kBase + kSpan * (0.5 * capacity_(capacity) +
                                0.3 * intermediate_(static_cast<double>(config.intermediate_size())) +
                                0.1 * vocab_(static_cast<double>(config.vocab_size())) + 0.1 * bonus);
  if (noise_sigma_ > 0.0) {
    Rng rng(splitmix64(noise_seed_ ^ fnv1a(configuration_to_json(config))));
    acc += noise_sigma_ * rng.normal();
  }
  return std::clamp(acc, 0.0, 1.0);
}

std::vector<double> SyntheticOracle::evaluate_batch(std::span<const Configuration> configs) const {
  std::vector<double> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(accuracy(c));
  return out;
}

std::string SyntheticOracle::describe() const {
  if (noise_sigma_ == 0.0) return "synthetic";
  std::ostringstream os;
  os << "synthetic:sigma=" << noise_sigma_;
  return os.str();
}

std::chrono::seconds oracle_timeout_from_env() {
  const char* raw = std::getenv(kOracleTimeoutEnv);
  if (raw == nullptr || *raw == '\0') return kDefaultOracleTimeout;
  char* end = nullptr;
  const long long secs = std::strtoll(raw, &end, 10);
  if (end == raw || *end != '\0' || secs <= 0) {
    throw ValidationError(std::string(kOracleTimeoutEnv) + " must be a positive integer");
  }
  return std::chrono::seconds(secs);
}

// ---------------------------------------------------------------------------
// External oracle

std::string write_oracle_request(std::span<const Configuration> configs,
                                 const ConfigurationSpace& space) {
  const auto checksum = space.checksum();
  std::string out;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    detail::ordered_json line;
    line["id"] = k;
    line["space_checksum"] = checksum;
    line["config"] = detail::config_to_json(configs[k]);
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<double> read_oracle_response(std::string_view document, std::size_t expected) {
  std::vector<double> values(expected, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(expected, false);
  std::istringstream in{std::string(document)};
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    detail::ordered_json node;
    try {
      node = detail::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw OracleResponseError("oracle response: malformed line: " + line);
    }
    auto id = node.find("id");
    auto eff = node.find("effectiveness");
    if (!node.is_object() || id == node.end() || eff == node.end() ||
        !id->is_number_unsigned() || !eff->is_number()) {
      throw OracleResponseError("oracle response: expected {\"id\", \"effectiveness\"}: " + line);
    }
    const auto k = id->get<std::size_t>();
    if (k >= expected) throw OracleResponseError("oracle response: unknown id " + std::to_string(k));
    if (seen[k]) throw OracleResponseError("oracle response: duplicate id " + std::to_string(k));
    const double x = eff->get<double>();
    if (!std::isfinite(x)) throw OracleResponseError("oracle response: non-finite effectiveness");
    seen[k] = true;
    values[k] = std::clamp(x, 0.0, 1.0);
    ++count;
  }
  if (count != expected) {
    throw OracleResponseError("oracle response: got " + std::to_string(count) + " of " +
                              std::to_string(expected) + " results");
  }
  return values;
}

namespace {

// Scratch directory removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("cfgtune-oracle-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void run_with_timeout(const std::string& command, const std::string& request,
                      const std::string& response, std::chrono::milliseconds timeout) {
  const std::string script = command + " \"$1\" \"$2\"";
  std::vector<std::string> args = {"sh", "-c", script, "sh", request, response};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  if (int rc = posix_spawn(&pid, "/bin/sh", nullptr, nullptr, argv.data(), environ); rc != 0) {
    throw OracleProcessError("oracle: cannot start '" + command + "': " + std::strerror(rc));
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) {
      throw OracleProcessError(std::string("oracle: waitpid failed: ") + std::strerror(errno));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw OracleTimeoutError("oracle: '" + command + "' timed out after " +
                               std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw OracleProcessError("oracle: '" + command + "' failed with status " +
                             std::to_string(code));
  }
}

}  // namespace

ExternalOracle::ExternalOracle(std::string command, ConfigurationSpace space,
                               std::chrono::milliseconds timeout)
    : command_(std::move(command)), space_(std::move(space)), timeout_(timeout) {
  if (command_.empty()) throw ValidationError("external oracle: empty command");
}

std::vector<double> ExternalOracle::evaluate_batch(std::span<const Configuration> configs) const {
  if (configs.empty()) return {};
  ScratchDir dir;
  const auto request = dir.path() / "request.jsonl";
  const auto response = dir.path() / "response.jsonl";
  {
    std::ofstream out(request);
    out << write_oracle_request(configs, space_);
    if (!out) throw OracleProcessError("oracle: cannot write " + request.string());
  }
  run_with_timeout(command_, request.string(), response.string(), timeout_);
  std::ifstream in(response);
  if (!in) throw OracleResponseError("oracle: evaluator wrote no response file");
  std::ostringstream text;
  text << in.rdbuf();
  return read_oracle_response(text.str(), configs.size());
}

std::unique_ptr<EffectivenessOracle> make_oracle(std::string_view spec,
                                                 const ConfigurationSpace& space,
                                                 std::uint64_t seed) {
  if (spec == "synthetic") return std::make_unique<SyntheticOracle>(space);
  constexpr std::string_view kSigma = "synthetic:sigma=";
  if (spec.starts_with(kSigma)) {
    const std::string raw(spec.substr(kSigma.size()));
    char* end = nullptr;
    const double sigma = std::strtod(raw.c_str(), &end);
    if (raw.empty() || *end != '\0' || !(sigma >= 0.0)) {
      throw ValidationError("oracle spec: bad sigma in '" + std::string(spec) + "'");
    }
    return std::make_unique<SyntheticOracle>(space, sigma, seed);
  }
  constexpr std::string_view kExternal = "external:";
  if (spec.starts_with(kExternal) && spec.size() > kExternal.size()) {
    return std::make_unique<ExternalOracle>(std::string(spec.substr(kExternal.size())), space,
                                            oracle_timeout_from_env());
  }
  throw ValidationError("oracle spec must be 'synthetic', 'synthetic:sigma=<x>' or "
                        "'external:<command>', got '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------
// Indicator construction

IndicatorBuild build_indicator(const ConfigurationSpace& space, const EffectivenessOracle& oracle,
                               std::size_t k, std::uint64_t seed, const FitOptions& options) {
  if (k < 2) throw ValidationError("indicator needs at least 2 samples");
  AuditTable table;
  table.configs = sample_uniform(space, k, seed);
  try {
    table.effectiveness = oracle.evaluate_batch(table.configs);
  } catch (const OracleError& e) {
    throw IndicatorBuildError(e.what(), std::move(table));
  }
  if (table.effectiveness.size() != k) {
    throw IndicatorBuildError("oracle returned the wrong number of results", std::move(table));
  }
  TrainingSet data;
  for (std::size_t r = 0; r < k; ++r) {
    const double y = table.effectiveness[r];
    if (!(y >= 0.0 && y <= 1.0)) throw OracleResponseError("effectiveness outside [0, 1]");
    data.add(encode(table.configs[r], space, false).view(), y);
  }
  auto model = fit(data, options);
  model.set_space_checksum(space.checksum());
  return {std::move(model), std::move(table)};
}

}  // namespace cfgtune
