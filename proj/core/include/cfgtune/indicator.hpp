#pragma once

#include "cfgtune/config_space.hpp"
#include "cfgtune/surrogate.hpp"

namespace cfgtune {

// Predicted effectiveness of a configuration, a fraction in [0, 1].
class Indicator {
 public:
  virtual ~Indicator() = default;
  virtual Prediction predict(const Configuration& config) const = 0;
};

// Surrogate fitted on raw (un-normalized) encodings of space.
class SurrogateIndicator final : public Indicator {
 public:
  SurrogateIndicator(SurrogateModel model, ConfigurationSpace space)
      : model_(std::move(model)), space_(std::move(space)) {}

  Prediction predict(const Configuration& config) const override {
    return model_.predict(encode(config, space_, false).view());
  }

  const SurrogateModel& model() const { return model_; }

 private:
  SurrogateModel model_;
  ConfigurationSpace space_;
};

}  // namespace cfgtune
