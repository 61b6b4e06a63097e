#include "cfgtune/config_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "cfgtune/correction.hpp"
#include "cfgtune/error.hpp"
#include "cfgtune/rng.hpp"
#include "json_io.hpp"

namespace cfgtune {

std::optional<Dim> dim_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    if (kDimensionNames[i] == name) return static_cast<Dim>(i);
  }
  return std::nullopt;
}

bool is_structural(Dim d) {
  return std::find(kStructuralDims.begin(), kStructuralDims.end(), d) != kStructuralDims.end();
}

std::string to_string(const Value& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  // Shortest text that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(value));
  return std::string(buf, res.ptr);
}

std::string to_string(Count count) {
  if (count == 0) return "0";
  std::string digits;
  while (count > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(count % 10)));
    count /= 10;
  }
  return {digits.rbegin(), digits.rend()};
}

double to_double(Count count) { return static_cast<double>(count); }

// ---------------------------------------------------------------------------
// Dimension

Dimension Dimension::integer_range(std::string name, std::int64_t lower, std::int64_t upper) {
  if (lower > upper) {
    throw ValidationError("dimension '" + name + "': malformed range, min " +
                          std::to_string(lower) + " > max " + std::to_string(upper));
  }
  Dimension d;
  d.name_ = std::move(name);
  d.kind_ = DimensionKind::integer_range;
  d.lower_ = lower;
  d.upper_ = upper;
  return d;
}

Dimension Dimension::discrete_set(std::string name, std::vector<double> values) {
  if (values.empty()) throw ValidationError("dimension '" + name + "': empty option list");
  std::set<double> seen;
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("dimension '" + name + "': non-finite value");
    if (!seen.insert(v).second) {
      throw ValidationError("dimension '" + name + "': duplicate value " + to_string(Value{v}));
    }
  }
  Dimension d;
  d.name_ = std::move(name);
  d.kind_ = DimensionKind::discrete_numeric_set;
  d.values_ = std::move(values);
  return d;
}

Dimension Dimension::categorical(std::string name, std::vector<std::string> options) {
  if (options.empty()) throw ValidationError("dimension '" + name + "': empty option list");
  std::set<std::string> seen;
  for (const auto& o : options) {
    if (!seen.insert(o).second) {
      throw ValidationError("dimension '" + name + "': duplicate option '" + o + "'");
    }
  }
  Dimension d;
  d.name_ = std::move(name);
  d.kind_ = DimensionKind::categorical;
  d.options_ = std::move(options);
  return d;
}

std::uint64_t Dimension::size() const {
  switch (kind_) {
    case DimensionKind::integer_range:
      return static_cast<std::uint64_t>(upper_ - lower_) + 1;
    case DimensionKind::discrete_numeric_set:
      return values_.size();
    case DimensionKind::categorical:
      return options_.size();
  }
  return 0;
}

Value Dimension::value_at(std::uint64_t index) const {
  switch (kind_) {
    case DimensionKind::integer_range:
      return lower_ + static_cast<std::int64_t>(index);
    case DimensionKind::discrete_numeric_set:
      return values_.at(index);
    case DimensionKind::categorical:
      return options_.at(index);
  }
  return {};
}

std::optional<std::uint64_t> Dimension::index_of(const Value& value) const {
  switch (kind_) {
    case DimensionKind::integer_range: {
      const auto* v = std::get_if<std::int64_t>(&value);
      if (v == nullptr || *v < lower_ || *v > upper_) return std::nullopt;
      return static_cast<std::uint64_t>(*v - lower_);
    }
    case DimensionKind::discrete_numeric_set: {
      const auto* v = std::get_if<double>(&value);
      if (v == nullptr) return std::nullopt;
      auto it = std::find(values_.begin(), values_.end(), *v);
      if (it == values_.end()) return std::nullopt;
      return static_cast<std::uint64_t>(it - values_.begin());
    }
    case DimensionKind::categorical: {
      const auto* v = std::get_if<std::string>(&value);
      if (v == nullptr) return std::nullopt;
      auto it = std::find(options_.begin(), options_.end(), *v);
      if (it == options_.end()) return std::nullopt;
      return static_cast<std::uint64_t>(it - options_.begin());
    }
  }
  return std::nullopt;
}

bool Dimension::is_integral() const {
  switch (kind_) {
    case DimensionKind::integer_range:
      return true;
    case DimensionKind::discrete_numeric_set:
      return std::all_of(values_.begin(), values_.end(),
                         [](double v) { return v == std::trunc(v) && std::fabs(v) < 0x1p53; });
    case DimensionKind::categorical:
      return false;
  }
  return false;
}

double Dimension::code(const Value& value) const {
  switch (kind_) {
    case DimensionKind::integer_range:
      return static_cast<double>(std::get<std::int64_t>(value));
    case DimensionKind::discrete_numeric_set:
      return std::get<double>(value);
    case DimensionKind::categorical: {
      auto idx = index_of(value);
      if (!idx) throw ValidationError("dimension '" + name_ + "': unknown option");
      return static_cast<double>(*idx);
    }
  }
  return 0.0;
}

double Dimension::min_code() const {
  switch (kind_) {
    case DimensionKind::integer_range:
      return static_cast<double>(lower_);
    case DimensionKind::discrete_numeric_set:
      return *std::min_element(values_.begin(), values_.end());
    case DimensionKind::categorical:
      return 0.0;
  }
  return 0.0;
}

double Dimension::max_code() const {
  switch (kind_) {
    case DimensionKind::integer_range:
      return static_cast<double>(upper_);
    case DimensionKind::discrete_numeric_set:
      return *std::max_element(values_.begin(), values_.end());
    case DimensionKind::categorical:
      return static_cast<double>(options_.size() - 1);
  }
  return 0.0;
}

Value Dimension::from_code(double code) const {
  switch (kind_) {
    case DimensionKind::integer_range: {
      const auto v = static_cast<std::int64_t>(std::llround(code));
      return std::clamp(v, lower_, upper_);
    }
    case DimensionKind::discrete_numeric_set: {
      std::size_t best = 0;
      for (std::size_t k = 1; k < values_.size(); ++k) {
        if (std::fabs(values_[k] - code) < std::fabs(values_[best] - code)) best = k;
      }
      return values_[best];
    }
    case DimensionKind::categorical: {
      const auto last = static_cast<std::int64_t>(options_.size()) - 1;
      const auto idx = std::clamp<std::int64_t>(std::llround(code), 0, last);
      return options_[static_cast<std::size_t>(idx)];
    }
  }
  return {};
}

Dimension Dimension::slice(std::uint64_t first, std::uint64_t last) const {
  if (first > last || last >= size()) {
    throw ValidationError("dimension '" + name_ + "': invalid slice");
  }
  const auto begin = static_cast<std::ptrdiff_t>(first);
  const auto end = static_cast<std::ptrdiff_t>(last) + 1;
  switch (kind_) {
    case DimensionKind::integer_range:
      return integer_range(name_, lower_ + begin, lower_ + end - 1);
    case DimensionKind::discrete_numeric_set:
      return discrete_set(name_, {values_.begin() + begin, values_.begin() + end});
    case DimensionKind::categorical:
      return categorical(name_, {options_.begin() + begin, options_.begin() + end});
  }
  return *this;
}

// ---------------------------------------------------------------------------
// ConfigurationSpace

ConfigurationSpace::ConfigurationSpace(std::vector<Dimension> dimensions)
    : dimensions_(std::move(dimensions)) {
  if (dimensions_.size() != kNumDimensions) {
    throw ValidationError("configuration space needs exactly " + std::to_string(kNumDimensions) +
                          " dimensions, got " + std::to_string(dimensions_.size()));
  }
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& dim = dimensions_[k];
    if (dim.name() != kDimensionNames[k]) {
      throw ValidationError("dimension " + std::to_string(k) + " must be '" +
                            std::string(kDimensionNames[k]) + "', got '" + dim.name() + "'");
    }
    const auto d = static_cast<Dim>(k);
    if (!is_structural(d)) continue;
    if (!dim.is_integral()) {
      throw ValidationError("dimension '" + dim.name() + "' must be integer-valued");
    }
    const std::int64_t floor = (d == Dim::num_hidden_layers) ? 0 : 1;
    if (dim.min_code() < static_cast<double>(floor)) {
      throw ValidationError("dimension '" + dim.name() + "' must be >= " + std::to_string(floor));
    }
    if (dim.kind() == DimensionKind::discrete_numeric_set &&
        !std::is_sorted(dim.values().begin(), dim.values().end())) {
      throw ValidationError("dimension '" + dim.name() + "' values must be ascending");
    }
  }
}

ConfigurationSpace ConfigurationSpace::with_dimension(Dim d, Dimension replacement) const {
  auto dims = dimensions_;
  dims[index_of(d)] = std::move(replacement);
  return ConfigurationSpace(std::move(dims));
}

Count ConfigurationSpace::cardinality() const {
  Count total = 1;
  for (const auto& dim : dimensions_) total *= dim.size();
  return total;
}

std::string ConfigurationSpace::checksum() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize_space(*this, -1))));
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

std::int64_t Configuration::integer(Dim d) const {
  const auto& v = (*this)[d];
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* x = std::get_if<double>(&v)) return static_cast<std::int64_t>(std::llround(*x));
  throw ValidationError("dimension '" + std::string(name_of(d)) + "' is not numeric");
}

void Configuration::set_integer(Dim d, std::int64_t value, const ConfigurationSpace& space) {
  if (space.dimension(d).kind() == DimensionKind::integer_range) {
    (*this)[d] = value;
  } else {
    (*this)[d] = static_cast<double>(value);
  }
}

ValidityVerdict validate(const Configuration& config, const ConfigurationSpace& space) {
  ValidityVerdict verdict;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& dim = space.dimensions()[k];
    if (!dim.contains(config.at(k))) {
      verdict.violations.push_back(dim.name() + ": " + std::string(kRuleOutOfRange));
    }
  }
  const auto& h = config[Dim::hidden_size];
  const auto& a = config[Dim::num_attention_heads];
  const bool numeric = !std::holds_alternative<std::string>(h) &&
                       !std::holds_alternative<std::string>(a);
  if (numeric) {
    const auto hv = config.integer(Dim::hidden_size);
    const auto av = config.integer(Dim::num_attention_heads);
    if (av <= 0 || hv % av != 0) verdict.violations.emplace_back(kRuleDivisibility);
  }
  return verdict;
}

EncodedConfiguration encode(const Configuration& config, const ConfigurationSpace& space,
                            bool normalize) {
  if (auto verdict = validate(config, space); !verdict) {
    throw ValidationError("cannot encode invalid configuration: " + verdict.violations.front());
  }
  EncodedConfiguration out;
  out.normalized = normalize;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& dim = space.dimensions()[k];
    double x = dim.code(config.at(k));
    if (normalize) {
      const double lo = dim.min_code();
      const double span = dim.max_code() - lo;
      x = span > 0.0 ? (x - lo) / span : 0.0;
    }
    out.values[k] = x;
  }
  return out;
}

Configuration decode(const EncodedConfiguration& encoded, const ConfigurationSpace& space) {
  Configuration out;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& dim = space.dimensions()[k];
    double x = encoded.values[k];
    if (encoded.normalized) x = dim.min_code() + x * (dim.max_code() - dim.min_code());
    out.at(k) = dim.from_code(x);
  }
  return out;
}

Configuration sample_raw(const ConfigurationSpace& space, Rng& rng) {
  Configuration out;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const auto& dim = space.dimensions()[k];
    out.at(k) = dim.value_at(rng.uniform_index(dim.size()));
  }
  return out;
}

std::vector<Configuration> sample_uniform(const ConfigurationSpace& space, std::size_t n,
                                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(correct(sample_raw(space, rng), space, rng));
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

ordered_json number_to_json(double x) {
  if (std::isfinite(x) && x == std::trunc(x) && std::fabs(x) < 0x1p53) {
    return static_cast<std::int64_t>(x);
  }
  return x;
}

ordered_json value_to_json(const Value& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  return number_to_json(std::get<double>(value));
}

Value value_from_json(const ordered_json& node, const Dimension& dim) {
  switch (dim.kind()) {
    case DimensionKind::integer_range:
      if (node.is_number_integer()) return node.get<std::int64_t>();
      if (node.is_number_float()) {
        const double x = node.get<double>();
        if (x == std::trunc(x)) return static_cast<std::int64_t>(x);
      }
      break;
    case DimensionKind::discrete_numeric_set:
      if (node.is_number()) return node.get<double>();
      break;
    case DimensionKind::categorical:
      if (node.is_string()) return node.get<std::string>();
      break;
  }
  throw ParseError("dimension '" + dim.name() + "': value " + node.dump() +
                   " has the wrong type");
}

ordered_json space_to_json(const ConfigurationSpace& space) {
  ordered_json doc = ordered_json::object();
  for (const auto& dim : space.dimensions()) {
    switch (dim.kind()) {
      case DimensionKind::integer_range: {
        ordered_json range = ordered_json::object();
        range["min"] = dim.lower();
        range["max"] = dim.upper();
        doc[dim.name()] = std::move(range);
        break;
      }
      case DimensionKind::discrete_numeric_set: {
        ordered_json values = ordered_json::array();
        for (double v : dim.values()) values.push_back(number_to_json(v));
        doc[dim.name()] = std::move(values);
        break;
      }
      case DimensionKind::categorical:
        doc[dim.name()] = dim.options();
        break;
    }
  }
  return doc;
}

ordered_json config_to_json(const Configuration& config) {
  ordered_json doc = ordered_json::object();
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    doc[std::string(kDimensionNames[k])] = value_to_json(config.at(k));
  }
  return doc;
}

Configuration config_from_json(const ordered_json& node, const ConfigurationSpace& space) {
  if (!node.is_object()) throw ParseError("configuration must be a JSON object");
  Configuration out;
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    const std::string name(kDimensionNames[k]);
    auto it = node.find(name);
    if (it == node.end()) throw ParseError("configuration is missing dimension '" + name + "'");
    out.at(k) = value_from_json(*it, space.dimensions()[k]);
  }
  return out;
}

}  // namespace detail

namespace {

Dimension parse_dimension(const std::string& name, const detail::ordered_json& node) {
  try {
    if (node.is_object()) {
      auto lo = node.find("min");
      auto hi = node.find("max");
      if (lo == node.end() || hi == node.end() || !lo->is_number_integer() ||
          !hi->is_number_integer() || node.size() != 2) {
        throw ParseError("dimension '" + name + "': malformed range " + node.dump() +
                         ", expected {\"min\": int, \"max\": int}");
      }
      return Dimension::integer_range(name, lo->get<std::int64_t>(), hi->get<std::int64_t>());
    }
    if (node.is_array()) {
      if (node.empty()) throw ParseError("dimension '" + name + "': empty option list");
      const bool all_strings =
          std::all_of(node.begin(), node.end(), [](const auto& e) { return e.is_string(); });
      const bool all_numbers =
          std::all_of(node.begin(), node.end(), [](const auto& e) { return e.is_number(); });
      if (all_strings) return Dimension::categorical(name, node.get<std::vector<std::string>>());
      if (all_numbers) return Dimension::discrete_set(name, node.get<std::vector<double>>());
      throw ParseError("dimension '" + name + "': options must be all strings or all numbers");
    }
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  throw ParseError("dimension '" + name + "': expected a range object or an option array");
}

}  // namespace

ConfigurationSpace parse_space(std::string_view document) {
  detail::ordered_json doc;
  try {
    doc = detail::ordered_json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("space document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("space document must be a JSON object");

  std::array<std::optional<Dimension>, kNumDimensions> slots;
  for (const auto& [key, node] : doc.items()) {
    auto d = dim_from_name(key);
    if (!d) throw ParseError("unknown dimension '" + key + "'");
    slots[index_of(*d)] = parse_dimension(key, node);
  }
  std::vector<Dimension> dims;
  dims.reserve(kNumDimensions);
  for (std::size_t k = 0; k < kNumDimensions; ++k) {
    if (!slots[k]) throw ParseError("missing dimension '" + std::string(kDimensionNames[k]) + "'");
    dims.push_back(std::move(*slots[k]));
  }
  try {
    return ConfigurationSpace(std::move(dims));
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

std::string serialize_space(const ConfigurationSpace& space, int indent) {
  return detail::space_to_json(space).dump(indent);
}

std::string configuration_to_json(const Configuration& config) {
  return detail::config_to_json(config).dump();
}

Configuration configuration_from_json(std::string_view object, const ConfigurationSpace& space) {
  try {
    return detail::config_from_json(detail::ordered_json::parse(object), space);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed configuration: ") + e.what());
  }
}

}  // namespace cfgtune
