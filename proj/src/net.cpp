#include "duellab/net.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "duellab/error.hpp"
#include "duellab/linalg.hpp"
#include "duellab/simd.hpp"

namespace duellab {

void NetworkShape::validate() const {
  if (d < 2 || d % 2 != 0) throw ShapeError("network: d must be even and >= 2, got " + std::to_string(d));
  if (m < 2 || m % 2 != 0) throw ShapeError("network: m must be even and >= 2, got " + std::to_string(m));
  if (hidden_layers < 1) throw ShapeError("network: hidden_layers must be >= 1");
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("train: gamma must be > 0");
  if (n_steps < 0) throw ConfigError("train: n_steps must be >= 0");
  if (episode_len < 1) throw ConfigError("train: episode_len must be >= 1");
  if (!(refit_tol > 0.0)) throw ConfigError("train: refit_tol must be > 0");
  if (refit_max_iters < 1) throw ConfigError("train: refit_max_iters must be >= 1");
}

std::size_t NetworkParams::parameter_count() const noexcept {
  std::size_t n = theta.size();
  for (const auto& w : layers) n += w.size();
  return n;
}

NetworkParams init_network(const NetworkShape& shape, Rng& rng) {
  shape.validate();
  const auto d = static_cast<std::size_t>(shape.d);
  const auto m = static_cast<std::size_t>(shape.m);
  const double hidden_sd = std::sqrt(4.0 / static_cast<double>(m));
  const double out_sd = std::sqrt(2.0 / static_cast<double>(m));

  NetworkParams p;
  // Hidden layers: diag(w, w) with one shared block w.
  for (int l = 0; l < shape.hidden_layers; ++l) {
    const std::size_t in = l == 0 ? d : m;
    Matrix w(m, in);
    const std::size_t br = m / 2;
    const std::size_t bc = in / 2;
    for (std::size_t r = 0; r < br; ++r) {
      for (std::size_t c = 0; c < bc; ++c) {
        const double v = rng.normal(0.0, hidden_sd);
        w(r, c) = v;
        w(r + br, c + bc) = v;
      }
    }
    p.layers.push_back(std::move(w));
  }
  // Output layer: columns (Omega, -Omega) so duplicated hidden halves cancel.
  Matrix out(d, m);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < m / 2; ++c) {
      const double v = rng.normal(0.0, out_sd);
      out(r, c) = v;
      out(r, c + m / 2) = -v;
    }
  }
  p.layers.push_back(std::move(out));

  const double theta_sd = std::sqrt(1.0 / static_cast<double>(d));
  p.theta.resize(d);
  for (auto& t : p.theta) t = rng.normal(0.0, theta_sd);
  p.theta0 = p.theta;
  return p;
}

NetworkParams identity_params(std::size_t d, Vector theta0) {
  if (theta0.empty()) theta0.assign(d, 0.0);
  if (theta0.size() != d) throw ShapeError("identity_params: theta0 dimension mismatch");
  NetworkParams p;
  p.theta = theta0;
  p.theta0 = std::move(theta0);
  return p;
}

namespace {

void check_layers(std::span<const Matrix> layers, std::size_t d) {
  if (layers.empty()) return;
  if (layers.front().cols() != d) {
    throw ShapeError("network: input has dimension " + std::to_string(d) + ", first layer expects " +
                     std::to_string(layers.front().cols()));
  }
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].cols() != layers[l - 1].rows()) throw ShapeError("network: inconsistent layer shapes");
  }
  if (layers.back().rows() != d) throw ShapeError("network: output layer must map back to d");
}

// out = w * in, with in stored as (w.cols() x batch). With split set, the two
// column halves are summed separately and added at the end, so a duplicated
// input against the output layer's (A, -A) pairing cancels to an exact 0.
// Block-diagonal layers need no such care: sequential sums already agree.
struct ProductScratch {
  Matrix left, right, tail;
};

void layer_product(const Matrix& w, const double* in, std::size_t batch, Matrix& out, ProductScratch& sc,
                   bool split) {
  const std::size_t rows = w.rows(), k = w.cols();
  out.resize(rows, batch);
  if (!split || k < 2 || k % 2 != 0) {
    simd::matmul_acc(w.data(), in, out.data(), rows, k, batch);
    return;
  }
  const std::size_t h = k / 2;
  sc.left.reshape(rows, h);
  sc.right.reshape(rows, h);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = w.data() + r * k;
    std::copy(src, src + h, sc.left.data() + r * h);
    std::copy(src + h, src + k, sc.right.data() + r * h);
  }
  sc.tail.resize(rows, batch);
  simd::matmul_acc(sc.left.data(), in, out.data(), rows, h, batch);
  simd::matmul_acc(sc.right.data(), in + h * batch, sc.tail.data(), rows, h, batch);
  simd::axpy(1.0, sc.tail.data(), out.data(), out.size());
}

// Forward/backward over a batch of inputs stored column-wise (dim x batch).
class BatchNet {
 public:
  void forward(std::span<const Matrix> layers, const Matrix& x) {
    input_ = &x;
    const std::size_t batch = x.cols();
    pre_.resize(layers.size());
    act_.resize(layers.size());
    const Matrix* prev = &x;
    scale_ = layers.empty() ? 1.0 : std::sqrt(static_cast<double>(layers.front().rows()));
    if (layers.empty()) phi_ = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Matrix& w = layers[l];
      const bool last = l + 1 == layers.size();
      layer_product(w, prev->data(), batch, pre_[l], scratch_, last);
      // the last activation is only needed scaled, as phi
      Matrix& a = last ? phi_ : act_[l];
      const double s = last ? scale_ : 1.0;
      a.reshape(w.rows(), batch);
      const double* src = pre_[l].data();
      double* dst = a.data();
      for (std::size_t i = 0, n = a.size(); i < n; ++i) dst[i] = std::max(src[i], 0.0) * s;
      prev = &a;
    }
  }

  // Feature matrix (dim x batch) of the last forward pass.
  const Matrix& phi() const { return phi_; }

  // Accumulates layer gradients for dL/df given per column (f = theta^T phi).
  void backward(std::span<const Matrix> layers, std::span<const double> theta, std::span<const double> df,
                std::vector<Matrix>& grads) {
    if (layers.empty()) return;
    const std::size_t batch = df.size();
    const std::size_t last = layers.size() - 1;
    Matrix& g = g_;
    g.resize(layers[last].rows(), batch);
    for (std::size_t r = 0; r < g.rows(); ++r) simd::axpy(theta[r], df.data(), g.row(r).data(), batch);
    simd::relu_backward(g.data(), pre_[last].data(), scale_, g.size());
    for (std::size_t l = last + 1; l-- > 0;) {
      const Matrix& below = l == 0 ? *input_ : act_[l - 1];
      dw_.resize(layers[l].rows(), layers[l].cols());
      simd::matmul_nt(g.data(), below.data(), dw_.data(), g.rows(), batch, below.rows());
      simd::axpy(1.0, dw_.data(), grads[l].data(), dw_.size());
      if (l == 0) break;
      gb_.resize(layers[l].cols(), batch);
      simd::matmul_tn_acc(layers[l].data(), g.data(), gb_.data(), layers[l].cols(), layers[l].rows(), batch);
      simd::relu_backward(gb_.data(), pre_[l - 1].data(), 1.0, gb_.size());
      std::swap(g_, gb_);
    }
  }

 private:
  const Matrix* input_ = nullptr;
  std::vector<Matrix> pre_;
  std::vector<Matrix> act_;
  Matrix phi_;
  double scale_ = 1.0;
  ProductScratch scratch_;
  Matrix g_, gb_, dw_;
};

// First contexts in columns [0, n), second contexts in [n, 2n).
Matrix pack_history(std::span<const DuelRecord> history, std::size_t d) {
  const std::size_t n = history.size();
  Matrix x(d, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = history[i];
    if (rec.x_first.size() != d || rec.x_second.size() != d) throw ShapeError("history: context dimension mismatch");
    if (!(rec.zeta > 0.0)) throw InvalidInput("history: zeta must be > 0");
    for (std::size_t r = 0; r < d; ++r) {
      x(r, i) = rec.x_first[r];
      x(r, n + i) = rec.x_second[r];
    }
  }
  return x;
}

double ridge(std::span<const double> theta, std::span<const double> theta0, double lambda) {
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) s += (theta[i] - theta0[i]) * (theta[i] - theta0[i]);
  return 0.5 * lambda * s;
}

// Loss over precomputed features; fills df (dL/df per column) if requested.
double duel_loss(const Matrix& phi, std::span<const DuelRecord> history, std::span<const double> theta,
                 Vector* df, Vector* theta_grad) {
  const std::size_t n = history.size();
  const std::size_t d = theta.size();
  Vector f(2 * n, 0.0);
  for (std::size_t r = 0; r < d; ++r) simd::axpy(theta[r], phi.row(r).data(), f.data(), 2 * n);
  double total = 0.0;
  Vector coef(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = f[i] - f[n + i];
    const double w = 1.0 / (history[i].zeta * history[i].zeta);
    const double s = history[i].outcome == 1 ? 1.0 : -1.0;
    total += softplus(-s * delta) * w;
    coef[i] = (sigmoid(delta) - static_cast<double>(history[i].outcome)) * w;
  }
  if (df != nullptr) {
    df->resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      (*df)[i] = coef[i];
      (*df)[n + i] = -coef[i];
    }
  }
  if (theta_grad != nullptr) {
    theta_grad->assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const double* row = phi.row(r).data();
      (*theta_grad)[r] = simd::dot(row, coef.data(), n) - simd::dot(row + n, coef.data(), n);
    }
  }
  return total;
}

// Evaluates the training objective over a fixed history, reusing buffers.
// The history is cut into fixed tiles of records; each tile runs forward,
// loss and backward while its activations are still in cache. The tile size
// is a constant, so results do not depend on anything but the inputs.
class Objective {
 public:
  static constexpr std::size_t kTile = 128;

  Objective(std::span<const DuelRecord> history, std::size_t d) : history_(history) {
    for (std::size_t a = 0; a < history.size(); a += kTile) {
      const std::size_t n = std::min(kTile, history.size() - a);
      tiles_.push_back(pack_history(history.subspan(a, n), d));
    }
  }

  double evaluate(const NetworkParams& p, double lambda, NetworkGradient* grad) {
    const std::size_t d = p.theta.size();
    if (grad != nullptr) {
      grad->layers.clear();
      for (const auto& w : p.layers) grad->layers.emplace_back(w.rows(), w.cols());
      grad->theta.assign(d, 0.0);
    }
    double value = 0.0;
    for (std::size_t t = 0; t < tiles_.size(); ++t) {
      const auto part = history_.subspan(t * kTile, tiles_[t].cols() / 2);
      net_.forward(p.layers, tiles_[t]);
      value += duel_loss(net_.phi(), part, p.theta, grad ? &df_ : nullptr, grad ? &tg_ : nullptr);
      if (grad != nullptr) {
        net_.backward(p.layers, p.theta, df_, grad->layers);
        for (std::size_t r = 0; r < d; ++r) grad->theta[r] += tg_[r];
      }
    }
    value += ridge(p.theta, p.theta0, lambda);
    if (!std::isfinite(value)) throw NumericalFailure("loss is not finite");
    if (grad != nullptr) {
      for (std::size_t r = 0; r < d; ++r) grad->theta[r] += lambda * (p.theta[r] - p.theta0[r]);
      for (double v : grad->theta)
        if (!std::isfinite(v)) throw NumericalFailure("gradient is not finite");
      for (const auto& w : grad->layers)
        for (double v : w.flat())
          if (!std::isfinite(v)) throw NumericalFailure("gradient is not finite");
    }
    return value;
  }

 private:
  std::span<const DuelRecord> history_;
  std::vector<Matrix> tiles_;
  BatchNet net_;
  Vector df_, tg_;
};

void check_params(const NetworkParams& p) {
  if (p.theta0.size() != p.theta.size()) throw ShapeError("network: theta0 dimension mismatch");
  check_layers(p.layers, p.theta.size());
}

}  // namespace

Vector feature_map(std::span<const Matrix> layers, std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidInput("feature_map: non-finite input");
  check_layers(layers, x.size());
  if (layers.empty()) return Vector(x.begin(), x.end());
  Vector h(x.begin(), x.end());
  Matrix next;
  ProductScratch sc;
  for (const auto& w : layers) {
    layer_product(w, h.data(), 1, next, sc, &w == &layers.back());
    simd::relu(next.data(), next.size());
    h.assign(next.flat().begin(), next.flat().end());
  }
  const double scale = std::sqrt(static_cast<double>(layers.front().rows()));
  for (auto& v : h) v *= scale;
  return h;
}

double predict(const NetworkParams& params, std::span<const double> x) {
  if (x.size() != params.theta.size()) throw ShapeError("predict: dimension mismatch");
  const Vector phi = feature_map(params.layers, x);
  return simd::dot(params.theta.data(), phi.data(), phi.size());
}

Vector parameter_gradient(const NetworkParams& params, std::span<const double> x) {
  check_params(params);
  if (x.size() != params.dim()) throw ShapeError("parameter_gradient: dimension mismatch");
  Matrix col(x.size(), 1);
  for (std::size_t r = 0; r < x.size(); ++r) col(r, 0) = x[r];
  BatchNet net;
  net.forward(params.layers, col);
  std::vector<Matrix> grads;
  for (const auto& w : params.layers) grads.emplace_back(w.rows(), w.cols());
  const double one = 1.0;
  net.backward(params.layers, params.theta, std::span<const double>(&one, 1), grads);
  Vector out;
  out.reserve(params.parameter_count());
  for (std::size_t r = 0; r < params.dim(); ++r) out.push_back(net.phi()(r, 0));
  for (const auto& g : grads) out.insert(out.end(), g.flat().begin(), g.flat().end());
  return out;
}

double loss_and_gradient(const NetworkParams& params, std::span<const DuelRecord> history, double lambda,
                         NetworkGradient* grad) {
  check_params(params);
  if (!(lambda > 0.0)) throw InvalidInput("loss: lambda must be > 0");
  Objective obj(history, params.dim());
  return obj.evaluate(params, lambda, grad);
}

double loss(const NetworkParams& params, std::span<const DuelRecord> history, double lambda) {
  return loss_and_gradient(params, history, lambda, nullptr);
}

NetworkGradient loss_gradient(const NetworkParams& params, std::span<const DuelRecord> history, double lambda) {
  NetworkGradient g;
  loss_and_gradient(params, history, lambda, &g);
  return g;
}

namespace {

struct GlmProblem {
  Matrix dphi;  // n x d feature differences under fixed weights
  Vector weight;
  Vector outcome;
  Vector theta0;
  double lambda;

  double value(std::span<const double> theta) const {
    double v = ridge(theta, theta0, lambda);
    for (std::size_t i = 0; i < dphi.rows(); ++i) {
      const double s = outcome[i] > 0.5 ? 1.0 : -1.0;
      v += softplus(-s * simd::dot(dphi.row(i).data(), theta.data(), theta.size())) * weight[i];
    }
    return v;
  }

  Vector gradient(std::span<const double> theta, Matrix* hessian) const {
    const std::size_t d = theta.size();
    Vector g(d);
    for (std::size_t r = 0; r < d; ++r) g[r] = lambda * (theta[r] - theta0[r]);
    if (hessian != nullptr) *hessian = Matrix::identity(d, lambda);
    for (std::size_t i = 0; i < dphi.rows(); ++i) {
      const double* row = dphi.row(i).data();
      const double p = sigmoid(simd::dot(row, theta.data(), d));
      simd::axpy((p - outcome[i]) * weight[i], row, g.data(), d);
      if (hessian != nullptr) simd::ger(p * (1.0 - p) * weight[i], row, row, hessian->data(), d, d);
    }
    return g;
  }
};

double norm2(std::span<const double> v) {
  return std::sqrt(simd::dot(v.data(), v.data(), v.size()));
}

}  // namespace

RefitResult refit_theta(std::span<const Matrix> layers, std::span<const DuelRecord> history, double lambda,
                        std::span<const double> theta0, double tol, int max_iters, std::span<const double> start) {
  if (!(lambda > 0.0)) throw InvalidInput("refit_theta: lambda must be > 0");
  const std::size_t d = theta0.size();
  check_layers(layers, d);

  GlmProblem prob{Matrix(history.size(), d), Vector(history.size()), Vector(history.size()),
                  Vector(theta0.begin(), theta0.end()), lambda};
  if (!history.empty()) {
    const Matrix x = pack_history(history, d);
    BatchNet net;
    net.forward(layers, x);
    const Matrix& phi = net.phi();
    const std::size_t n = history.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < d; ++r) prob.dphi(i, r) = phi(r, i) - phi(r, n + i);
      prob.weight[i] = 1.0 / (history[i].zeta * history[i].zeta);
      prob.outcome[i] = static_cast<double>(history[i].outcome);
    }
  }

  RefitResult res;
  res.theta = start.empty() ? prob.theta0 : Vector(start.begin(), start.end());
  if (res.theta.size() != d) throw ShapeError("refit_theta: start dimension mismatch");
  double fval = prob.value(res.theta);
  int it = 0;
  for (; it < max_iters; ++it) {
    Matrix hess;
    const Vector g = prob.gradient(res.theta, &hess);
    res.grad_norm = norm2(g);
    if (res.grad_norm <= tol) break;
    Vector dir;
    if (auto l = linalg::cholesky(hess)) {
      dir = linalg::cholesky_solve(*l, g);
      for (auto& v : dir) v = -v;
    } else {
      // Singular Newton system: plain gradient direction.
      dir = g;
      for (auto& v : dir) v = -v;
    }
    const double slope = simd::dot(g.data(), dir.data(), d);
    double step = 1.0;
    Vector trial(d);
    bool moved = false;
    for (int ls = 0; ls < 60 && !moved; ++ls, step *= 0.5) {
      for (std::size_t r = 0; r < d; ++r) trial[r] = res.theta[r] + step * dir[r];
      const double ft = prob.value(trial);
      if (ft <= fval + 1e-4 * step * slope) {
        res.theta = trial;
        fval = ft;
        moved = true;
      }
    }
    if (!moved) break;  // no representable decrease left
  }
  res.iterations = it;
  res.grad_norm = norm2(prob.gradient(res.theta, nullptr));
  res.converged = res.grad_norm <= tol;
  return res;
}

NetworkParams train_episode(const NetworkParams& params, std::span<const DuelRecord> history, double lambda,
                            const TrainConfig& cfg, Rng& /*rng*/, TrainReport* report) {
  check_params(params);
  cfg.validate();
  NetworkParams p = params;
  if (cfg.n_steps > 0) {
    Objective obj(history, p.dim());
    NetworkGradient grad;
    // Parameters viewed as one list of blocks: theta, then each layer.
    auto blocks = [](NetworkParams& q) {
      std::vector<std::span<double>> b{q.theta};
      for (auto& w : q.layers) b.push_back(w.flat());
      return b;
    };
    auto grad_blocks = [](NetworkGradient& g) {
      std::vector<std::span<double>> b{g.theta};
      for (auto& w : g.layers) b.push_back(w.flat());
      return b;
    };
    std::vector<Vector> m1;
    std::vector<Vector> m2;
    for (auto b : blocks(p)) {
      m1.emplace_back(b.size(), 0.0);
      m2.emplace_back(b.size(), 0.0);
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    for (int step = 1; step <= cfg.n_steps; ++step) {
      obj.evaluate(p, lambda, &grad);
      auto pb = blocks(p);
      auto gb = grad_blocks(grad);
      if (cfg.optimizer == Optimizer::PlainGd) {
        for (std::size_t k = 0; k < pb.size(); ++k) simd::axpy(-cfg.gamma, gb[k].data(), pb[k].data(), pb[k].size());
        continue;
      }
      const double bc1 = 1.0 - std::pow(beta1, step);
      const double bc2 = 1.0 - std::pow(beta2, step);
      const double step_size = cfg.gamma / bc1;
      const double bc2_sqrt = std::sqrt(bc2);
      for (std::size_t k = 0; k < pb.size(); ++k) {
        auto& mk = m1[k];
        auto& vk = m2[k];
        for (std::size_t i = 0; i < pb[k].size(); ++i) {
          const double g = gb[k][i];
          mk[i] = beta1 * mk[i] + (1.0 - beta1) * g;
          vk[i] = beta2 * vk[i] + (1.0 - beta2) * g * g;
          pb[k][i] -= step_size * mk[i] / (std::sqrt(vk[i]) / bc2_sqrt + eps);
        }
      }
    }
    // Reject a step sequence that ended in a non-finite state.
    obj.evaluate(p, lambda, nullptr);
  }
  if (cfg.refit_theta) {
    RefitResult r = refit_theta(p.layers, history, lambda, p.theta0, cfg.refit_tol, cfg.refit_max_iters, p.theta);
    p.theta = std::move(r.theta);
    if (report != nullptr) {
      report->refit_converged = r.converged;
      report->refit_iterations = r.iterations;
    }
  }
  return p;
}

void write_checkpoint(std::ostream& out, const NetworkParams& params) {
  out << "duellab-checkpoint v1\n" << std::setprecision(17);
  auto vec = [&](const char* tag, const Vector& v) {
    out << tag << ' ' << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    out << '\n';
  };
  vec("theta", params.theta);
  vec("theta0", params.theta0);
  out << "layers " << params.layers.size() << '\n';
  for (const auto& w : params.layers) {
    out << "matrix " << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) out << (c ? " " : "") << w(r, c);
      out << '\n';
    }
  }
  if (!out) throw IoError("checkpoint: write failed");
}

NetworkParams read_checkpoint(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "duellab-checkpoint" || version != "v1") {
    throw ParseError("checkpoint: missing 'duellab-checkpoint v1' header");
  }
  auto expect = [&](const std::string& tag) {
    std::string t;
    if (!(in >> t) || t != tag) throw ParseError("checkpoint: expected '" + tag + "'");
  };
  auto vec = [&](const std::string& tag) {
    expect(tag);
    std::size_t n = 0;
    if (!(in >> n)) throw ParseError("checkpoint: bad size for " + tag);
    Vector v(n);
    for (auto& x : v)
      if (!(in >> x)) throw ParseError("checkpoint: truncated " + tag);
    return v;
  };
  NetworkParams p;
  p.theta = vec("theta");
  p.theta0 = vec("theta0");
  expect("layers");
  std::size_t count = 0;
  if (!(in >> count)) throw ParseError("checkpoint: bad layer count");
  for (std::size_t l = 0; l < count; ++l) {
    expect("matrix");
    std::size_t r = 0, c = 0;
    if (!(in >> r >> c)) throw ParseError("checkpoint: bad matrix shape");
    Matrix w(r, c);
    for (auto& x : w.flat())
      if (!(in >> x)) throw ParseError("checkpoint: truncated matrix");
    p.layers.push_back(std::move(w));
  }
  check_params(p);
  return p;
}

}  // namespace duellab
