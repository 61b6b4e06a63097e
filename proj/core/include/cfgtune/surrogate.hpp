#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgtune {

struct TrainingSet {
  std::vector<std::vector<double>> features;
  std::vector<double> targets;

  void add(std::span<const double> x, double y) {
    features.emplace_back(x.begin(), x.end());
    targets.push_back(y);
  }
  std::size_t size() const { return targets.size(); }
};

struct FitOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;
  double alpha_init = 1.0;
  double beta_init = 1.0;
  // When false, weights are the posterior mean at alpha_init/beta_init.
  bool update_hyperparameters = true;
  // Shape and rate of the Gamma hyperpriors on alpha and beta. They keep
  // beta finite on noise-free data and alpha finite when the weights vanish.
  double hyperprior = 1e-6;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Bayesian linear regression with Gaussian weight prior (precision alpha)
// and Gaussian noise (precision beta). Features are min-max scaled with the
// fit-time ranges; the intercept is unpenalized.
class SurrogateModel {
 public:
  Prediction predict(std::span<const double> x) const;

  std::size_t feature_count() const { return weights_.size(); }
  // Weights on min-max scaled features.
  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const std::vector<double>& feature_min() const { return feature_min_; }
  const std::vector<double>& feature_max() const { return feature_max_; }
  std::size_t iterations() const { return iterations_; }
  bool converged() const { return converged_; }
  std::size_t sample_count() const { return n_samples_; }

  // Free-form tag recorded with the model, e.g. the checksum of the space
  // whose encoding the features follow.
  const std::string& space_checksum() const { return space_checksum_; }
  void set_space_checksum(std::string checksum) { space_checksum_ = std::move(checksum); }

  std::string to_json() const;
  static SurrogateModel from_json(std::string_view document);

  friend SurrogateModel fit(const TrainingSet& data, const FitOptions& options);

 private:
  std::vector<double> scaled(std::span<const double> x) const;

  std::vector<double> weights_;
  double intercept_ = 0.0;
  double alpha_ = 1.0;
  double beta_ = 1.0;
  std::vector<double> feature_min_;
  std::vector<double> feature_max_;
  std::vector<double> feature_mean_;  // of scaled training features
  std::vector<double> covariance_;    // row-major posterior covariance of weights
  std::size_t n_samples_ = 0;
  std::size_t iterations_ = 0;
  bool converged_ = false;
  std::string space_checksum_;
};

// Evidence maximization (MacKay fixed point). Throws ValidationError for
// fewer than 2 rows or ragged features, Error if alpha degenerates.
SurrogateModel fit(const TrainingSet& data, const FitOptions& options = {});

double r_squared(std::span<const double> predicted, std::span<const double> observed);

}  // namespace cfgtune
