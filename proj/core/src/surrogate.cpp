#include "cfgtune/surrogate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "cfgtune/error.hpp"
#include "json_io.hpp"

namespace cfgtune {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double scale_one(double x, double lo, double hi) {
  const double span = hi - lo;
  return span > 0.0 ? (x - lo) / span : 0.0;
}

bool relative_change_below(double before, double after, double tol) {
  return std::fabs(after - before) <= tol * std::fabs(before);
}

}  // namespace

SurrogateModel fit(const TrainingSet& data, const FitOptions& options) {
  const std::size_t n = data.size();
  if (n < 2) throw ValidationError("surrogate fit needs at least 2 rows, got " + std::to_string(n));
  if (data.features.size() != n) throw ValidationError("feature and target counts differ");
  const std::size_t d = data.features.front().size();
  if (d == 0) throw ValidationError("surrogate fit needs at least one feature");
  for (const auto& row : data.features) {
    if (row.size() != d) throw ValidationError("training rows have different lengths");
  }
  if (!(options.alpha_init > 0.0) || !(options.beta_init > 0.0)) {
    throw ValidationError("initial alpha and beta must be positive");
  }

  SurrogateModel model;
  model.n_samples_ = n;
  model.feature_min_.assign(d, 0.0);
  model.feature_max_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = data.features[0][j];
    double hi = lo;
    for (const auto& row : data.features) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    model.feature_min_[j] = lo;
    model.feature_max_[j] = hi;
  }

  MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          scale_one(data.features[r][j], model.feature_min_[j], model.feature_max_[j]);
    }
    y(static_cast<Eigen::Index>(r)) = data.targets[r];
  }

  // Centering marginalizes the unpenalized intercept.
  const VectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const MatrixXd xc = x.rowwise() - x_mean.transpose();
  const VectorXd yc = y.array() - y_mean;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(xc.transpose() * xc);
  const VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const MatrixXd& v = eig.eigenvectors();
  const VectorXd projected = v.transpose() * (xc.transpose() * yc);

  double alpha = options.alpha_init;
  double beta = options.beta_init;
  const double prior = options.hyperprior;
  auto posterior_mean = [&](double a, double b) -> VectorXd {
    const VectorXd gain = (b / (a + b * lambda.array())).matrix();
    return v * gain.cwiseProduct(projected);
  };

  VectorXd w = posterior_mean(alpha, beta);
  if (options.update_hyperparameters) {
    for (std::size_t it = 0; it < options.max_iter; ++it) {
      model.iterations_ = it + 1;
      const double rss = (yc - xc * w).squaredNorm();
      const double gamma = (beta * lambda.array() / (alpha + beta * lambda.array())).sum();
      const double next_alpha = (gamma + 2.0 * prior) / (w.squaredNorm() + 2.0 * prior);
      const double next_beta =
          (static_cast<double>(n) - gamma + 2.0 * prior) / (rss + 2.0 * prior);
      if (!(next_alpha > 0.0) || !std::isfinite(next_alpha)) {
        throw Error("surrogate fit: weight precision alpha degenerated");
      }
      if (!(next_beta > 0.0) || !std::isfinite(next_beta)) {
        throw Error("surrogate fit: noise precision beta degenerated");
      }
      const bool done = relative_change_below(alpha, next_alpha, options.tol) &&
                        relative_change_below(beta, next_beta, options.tol);
      alpha = next_alpha;
      beta = next_beta;
      w = posterior_mean(alpha, beta);
      if (done) {
        model.converged_ = true;
        break;
      }
    }
  } else {
    model.converged_ = true;
  }

  // Posterior covariance (alpha I + beta Xc^T Xc)^-1 in the eigenbasis.
  const VectorXd inv = (1.0 / (alpha + beta * lambda.array())).matrix();
  const MatrixXd cov = v * inv.asDiagonal() * v.transpose();

  model.alpha_ = alpha;
  model.beta_ = beta;
  model.weights_.assign(w.data(), w.data() + w.size());
  model.intercept_ = y_mean - x_mean.dot(w);
  model.feature_mean_.assign(x_mean.data(), x_mean.data() + x_mean.size());
  model.covariance_.resize(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      model.covariance_[r * d + c] = cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return model;
}

std::vector<double> SurrogateModel::scaled(std::span<const double> x) const {
  if (x.size() != weights_.size()) {
    throw ValidationError("surrogate expects " + std::to_string(weights_.size()) +
                          " features, got " + std::to_string(x.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = scale_one(x[j], feature_min_[j], feature_max_[j]);
  return out;
}

Prediction SurrogateModel::predict(std::span<const double> x) const {
  const auto xs = scaled(x);
  const std::size_t d = xs.size();
  Prediction out;
  out.mean = intercept_;
  for (std::size_t j = 0; j < d; ++j) out.mean += weights_[j] * xs[j];

  // 1/beta noise, weight uncertainty on the centered input, and the
  // intercept's own 1/(beta n).
  double quad = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    const double dr = xs[r] - feature_mean_[r];
    for (std::size_t c = 0; c < d; ++c) quad += dr * covariance_[r * d + c] * (xs[c] - feature_mean_[c]);
  }
  out.variance = 1.0 / beta_ + quad + 1.0 / (beta_ * static_cast<double>(n_samples_));
  return out;
}

std::string SurrogateModel::to_json() const {
  detail::ordered_json doc;
  doc["kind"] = "bayesian_ridge";
  doc["space_checksum"] = space_checksum_;
  doc["alpha"] = alpha_;
  doc["beta"] = beta_;
  doc["intercept"] = intercept_;
  doc["weights"] = weights_;
  doc["feature_min"] = feature_min_;
  doc["feature_max"] = feature_max_;
  doc["feature_mean"] = feature_mean_;
  doc["covariance"] = covariance_;
  doc["n_samples"] = n_samples_;
  doc["iterations"] = iterations_;
  doc["converged"] = converged_;
  return doc.dump(2);
}

SurrogateModel SurrogateModel::from_json(std::string_view document) {
  SurrogateModel m;
  try {
    const auto doc = detail::ordered_json::parse(document);
    if (doc.at("kind").get<std::string>() != "bayesian_ridge") {
      throw ParseError("model file: unsupported kind");
    }
    m.space_checksum_ = doc.at("space_checksum").get<std::string>();
    m.alpha_ = doc.at("alpha").get<double>();
    m.beta_ = doc.at("beta").get<double>();
    m.intercept_ = doc.at("intercept").get<double>();
    m.weights_ = doc.at("weights").get<std::vector<double>>();
    m.feature_min_ = doc.at("feature_min").get<std::vector<double>>();
    m.feature_max_ = doc.at("feature_max").get<std::vector<double>>();
    m.feature_mean_ = doc.at("feature_mean").get<std::vector<double>>();
    m.covariance_ = doc.at("covariance").get<std::vector<double>>();
    m.n_samples_ = doc.at("n_samples").get<std::size_t>();
    m.iterations_ = doc.at("iterations").get<std::size_t>();
    m.converged_ = doc.at("converged").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
  const std::size_t d = m.weights_.size();
  if (d == 0 || m.feature_min_.size() != d || m.feature_max_.size() != d ||
      m.feature_mean_.size() != d || m.covariance_.size() != d * d || m.n_samples_ < 2 ||
      !(m.alpha_ > 0.0) || !(m.beta_ > 0.0)) {
    throw ParseError("malformed model file: inconsistent dimensions or hyperparameters");
  }
  return m;
}

double r_squared(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size() || observed.empty()) {
    throw ValidationError("r_squared: length mismatch");
  }
  double mean = 0.0;
  for (double y : observed) mean += y;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    ss_res += (observed[k] - predicted[k]) * (observed[k] - predicted[k]);
    ss_tot += (observed[k] - mean) * (observed[k] - mean);
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

}  // namespace cfgtune
