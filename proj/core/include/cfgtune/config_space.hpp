#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cfgtune {

class Rng;

// Canonical dimensions, in the order that governs encoding and crossover.
enum class Dim : std::size_t {
  tokenizer = 0,
  vocab_size,
  num_hidden_layers,
  hidden_size,
  hidden_act,
  hidden_dropout_prob,
  intermediate_size,
  num_attention_heads,
  attention_probs_dropout_prob,
  max_sequence_length,
  position_embedding_type,
  learning_rate,
  batch_size,
};

inline constexpr std::size_t kNumDimensions = 13;

inline constexpr std::array<std::string_view, kNumDimensions> kDimensionNames = {
    "tokenizer",
    "vocab_size",
    "num_hidden_layers",
    "hidden_size",
    "hidden_act",
    "hidden_dropout_prob",
    "intermediate_size",
    "num_attention_heads",
    "attention_probs_dropout_prob",
    "max_sequence_length",
    "position_embedding_type",
    "learning_rate",
    "batch_size",
};

// Dimensions that enter the size and FLOPs formulas (plus the head count,
// which is integer-valued and constrained by hidden_size).
inline constexpr std::array<Dim, 6> kStructuralDims = {
    Dim::vocab_size,        Dim::num_hidden_layers,   Dim::hidden_size,
    Dim::intermediate_size, Dim::num_attention_heads, Dim::max_sequence_length,
};

// The five dimensions that change model size.
inline constexpr std::array<Dim, 5> kSizeDims = {
    Dim::vocab_size,        Dim::num_hidden_layers,   Dim::hidden_size,
    Dim::intermediate_size, Dim::max_sequence_length,
};

constexpr std::size_t index_of(Dim d) { return static_cast<std::size_t>(d); }
constexpr std::string_view name_of(Dim d) { return kDimensionNames[index_of(d)]; }
std::optional<Dim> dim_from_name(std::string_view name);
bool is_structural(Dim d);

// integer_range values are int64, discrete_numeric_set values are double,
// categorical values are the option string.
using Value = std::variant<std::int64_t, double, std::string>;

std::string to_string(const Value& value);

enum class DimensionKind { integer_range, discrete_numeric_set, categorical };

__extension__ typedef unsigned __int128 Count;

std::string to_string(Count count);
double to_double(Count count);

class Dimension {
 public:
  static Dimension integer_range(std::string name, std::int64_t lower, std::int64_t upper);
  static Dimension discrete_set(std::string name, std::vector<double> values);
  static Dimension categorical(std::string name, std::vector<std::string> options);

  const std::string& name() const { return name_; }
  DimensionKind kind() const { return kind_; }

  std::int64_t lower() const { return lower_; }
  std::int64_t upper() const { return upper_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& options() const { return options_; }

  std::uint64_t size() const;
  Value value_at(std::uint64_t index) const;
  std::optional<std::uint64_t> index_of(const Value& value) const;
  bool contains(const Value& value) const { return index_of(value).has_value(); }

  // True when every entry is an integer (ranges always are).
  bool is_integral() const;

  // Numeric code of a value: the value itself for numeric kinds, the option
  // index for categoricals.
  double code(const Value& value) const;
  double min_code() const;
  double max_code() const;

  // Inverse of code(); numeric codes snap to the nearest entry.
  Value from_code(double code) const;

  // Restriction to the entries with index in [first, last].
  Dimension slice(std::uint64_t first, std::uint64_t last) const;

  friend bool operator==(const Dimension&, const Dimension&) = default;

 private:
  Dimension() = default;

  std::string name_;
  DimensionKind kind_ = DimensionKind::integer_range;
  std::int64_t lower_ = 0;
  std::int64_t upper_ = 0;
  std::vector<double> values_;
  std::vector<std::string> options_;
};

class ConfigurationSpace {
 public:
  // Dimensions must be the 13 canonical ones in canonical order. Structural
  // dimensions must be integer-valued and non-negative.
  explicit ConfigurationSpace(std::vector<Dimension> dimensions);

  const Dimension& dimension(Dim d) const { return dimensions_[index_of(d)]; }
  std::span<const Dimension> dimensions() const { return dimensions_; }

  ConfigurationSpace with_dimension(Dim d, Dimension replacement) const;

  Count cardinality() const;

  // Canonical compact serialization and its FNV-1a hex digest.
  std::string checksum() const;

  friend bool operator==(const ConfigurationSpace&, const ConfigurationSpace&) = default;

 private:
  std::vector<Dimension> dimensions_;
};

// One value per canonical dimension.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::array<Value, kNumDimensions> values) : values_(std::move(values)) {}

  const Value& operator[](Dim d) const { return values_[index_of(d)]; }
  Value& operator[](Dim d) { return values_[index_of(d)]; }
  const Value& at(std::size_t i) const { return values_.at(i); }
  Value& at(std::size_t i) { return values_.at(i); }

  // Integer view of an integer-valued dimension.
  std::int64_t integer(Dim d) const;
  void set_integer(Dim d, std::int64_t value, const ConfigurationSpace& space);

  std::int64_t vocab_size() const { return integer(Dim::vocab_size); }
  std::int64_t num_layers() const { return integer(Dim::num_hidden_layers); }
  std::int64_t hidden_size() const { return integer(Dim::hidden_size); }
  std::int64_t intermediate_size() const { return integer(Dim::intermediate_size); }
  std::int64_t num_heads() const { return integer(Dim::num_attention_heads); }
  std::int64_t max_sequence_length() const { return integer(Dim::max_sequence_length); }

  const std::array<Value, kNumDimensions>& values() const { return values_; }

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration& a, const Configuration& b) {
    return a.values_ <=> b.values_;
  }

 private:
  std::array<Value, kNumDimensions> values_;
};

struct ValidityVerdict {
  std::vector<std::string> violations;

  bool valid() const { return violations.empty(); }
  explicit operator bool() const { return valid(); }
};

inline constexpr std::string_view kRuleOutOfRange = "out of range";
inline constexpr std::string_view kRuleDivisibility = "h divisible by a";

ValidityVerdict validate(const Configuration& config, const ConfigurationSpace& space);

struct EncodedConfiguration {
  std::array<double, kNumDimensions> values{};
  bool normalized = false;

  std::span<const double> view() const { return values; }
  friend bool operator==(const EncodedConfiguration&, const EncodedConfiguration&) = default;
};

// Throws ValidationError if config is not valid in space.
EncodedConfiguration encode(const Configuration& config, const ConfigurationSpace& space,
                            bool normalize);
Configuration decode(const EncodedConfiguration& encoded, const ConfigurationSpace& space);

// Independent uniform draw per dimension; no repair.
Configuration sample_raw(const ConfigurationSpace& space, Rng& rng);

// n uniformly drawn configurations with the divisibility correction applied.
std::vector<Configuration> sample_uniform(const ConfigurationSpace& space, std::size_t n,
                                          std::uint64_t seed);

// Space file (JSON): categorical dimensions as string arrays, integer ranges
// as {"min": .., "max": ..} and discrete numeric sets as number arrays.
ConfigurationSpace parse_space(std::string_view document);
std::string serialize_space(const ConfigurationSpace& space, int indent = 2);

// Configuration <-> JSON object text keyed by dimension name.
std::string configuration_to_json(const Configuration& config);
Configuration configuration_from_json(std::string_view object, const ConfigurationSpace& space);

}  // namespace cfgtune
