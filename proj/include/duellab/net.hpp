#pragma once

// Shallow-exploration feature network.
//
//   f(x; theta, W) = theta^T phi(x; W)
//   phi(x; W)      = sqrt(m) * relu(W_L relu(... relu(W_1 x)))
//
// W_1 is m x d, the middle layers are m x m and W_L is d x m. ReLU follows
// every matrix, including the last. Training minimizes the variance-weighted
// log-likelihood
//
//   L(theta, W) = -sum_i log g(s_i * df_i) / zeta_i^2 + lambda/2 |theta - theta0|^2
//
// with s_i = +1 for outcome 1 and -1 for outcome 0, df_i the prediction
// difference of the recorded pair under the current parameters.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "duellab/core.hpp"
#include "duellab/matrix.hpp"
#include "duellab/rng.hpp"

namespace duellab {

struct NetworkShape {
  int d = 2;
  int m = 32;
  int hidden_layers = 2;

  int matrix_count() const noexcept { return hidden_layers + 1; }
  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

// Last-layer weights theta, the hidden weight stack, and theta at init.
// An empty layer stack means the identity feature map.
struct NetworkParams {
  Vector theta;
  std::vector<Matrix> layers;
  Vector theta0;

  std::size_t dim() const noexcept { return theta.size(); }
  std::size_t parameter_count() const noexcept;
  bool operator==(const NetworkParams&) const = default;
};

struct NetworkGradient {
  Vector theta;
  std::vector<Matrix> layers;
};

enum class Optimizer { PlainGd, Adam };

struct TrainConfig {
  double gamma = 0.01;
  int n_steps = 20;
  int episode_len = 1;
  bool refit_theta = false;
  Optimizer optimizer = Optimizer::Adam;
  double refit_tol = 1e-8;
  int refit_max_iters = 100;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct RefitResult {
  Vector theta;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

NetworkParams init_network(const NetworkShape& shape, Rng& rng);

// Parameters for the identity feature map: theta only, started at theta0.
NetworkParams identity_params(std::size_t d, Vector theta0 = {});

Vector feature_map(std::span<const Matrix> layers, std::span<const double> x);
double predict(const NetworkParams& params, std::span<const double> x);

// Gradient of f(x) with respect to every parameter, flattened as
// [theta, vec(W_1), ..., vec(W_L)] (row-major).
Vector parameter_gradient(const NetworkParams& params, std::span<const double> x);

double loss(const NetworkParams& params, std::span<const DuelRecord> history, double lambda);
NetworkGradient loss_gradient(const NetworkParams& params, std::span<const DuelRecord> history, double lambda);

// Loss and gradient from one shared forward pass.
double loss_and_gradient(const NetworkParams& params, std::span<const DuelRecord> history, double lambda,
                         NetworkGradient* grad);

RefitResult refit_theta(std::span<const Matrix> layers, std::span<const DuelRecord> history, double lambda,
                        std::span<const double> theta0, double tol, int max_iters,
                        std::span<const double> start = {});

struct TrainReport {
  bool refit_converged = true;
  int refit_iterations = 0;
};

NetworkParams train_episode(const NetworkParams& params, std::span<const DuelRecord> history, double lambda,
                            const TrainConfig& cfg, Rng& rng, TrainReport* report = nullptr);

// Versioned text checkpoint: shapes followed by row-major weights printed
// with 17 significant digits.
void write_checkpoint(std::ostream& out, const NetworkParams& params);
NetworkParams read_checkpoint(std::istream& in);

}  // namespace duellab
