#include "duellab/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "duellab/error.hpp"

namespace duellab {

RoundTruth make_truth(std::vector<double> utilities) {
  if (utilities.empty()) throw InvalidInput("round truth: no arms");
  RoundTruth t;
  t.utilities = std::move(utilities);
  for (std::size_t k = 1; k < t.utilities.size(); ++k) {
    if (t.utilities[k] > t.utilities[static_cast<std::size_t>(t.best_arm)]) t.best_arm = static_cast<int>(k);
  }
  t.best_utility = t.utilities[static_cast<std::size_t>(t.best_arm)];
  return t;
}

int Environment::duel(const RoundTruth& truth, int k1, int k2, Rng& rng) const {
  const double p = win_probability(truth, k1, k2);
  return rng.bernoulli(p) ? 1 : 0;
}

double Environment::outcome_variance(const RoundTruth& truth, int k1, int k2) const {
  const double p = win_probability(truth, k1, k2);
  return p * (1.0 - p);
}

namespace {

void check_arms(const RoundTruth& truth, int k1, int k2) {
  const int k = static_cast<int>(truth.utilities.size());
  if (k1 < 0 || k1 >= k || k2 < 0 || k2 >= k) throw InvalidInput("duel: arm index out of range");
}

void normalize(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 0.0)) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

}  // namespace

std::string_view synthetic_kind_name(SyntheticKind k) noexcept {
  switch (k) {
    case SyntheticKind::Cosine:
      return "cosine";
    case SyntheticKind::Square:
      return "square";
    case SyntheticKind::Quadratic:
      return "quadratic";
    case SyntheticKind::Linear:
      return "linear";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(std::string_view s) {
  for (auto k : {SyntheticKind::Cosine, SyntheticKind::Square, SyntheticKind::Quadratic, SyntheticKind::Linear})
    if (s == synthetic_kind_name(k)) return k;
  throw ConfigError("unknown synthetic kind '" + std::string(s) + "'");
}

SyntheticEnv::SyntheticEnv(SyntheticKind kind, int dim, int arms, bool symmetrize, Rng& theta_rng, std::string name)
    : kind_(kind), dim_(dim), arms_(arms), symmetrize_(symmetrize), name_(std::move(name)) {
  if (dim < 1) throw ConfigError("synthetic env: dim must be >= 1");
  if (arms < 1) throw ConfigError("synthetic env: arms must be >= 1");
  theta_.resize(static_cast<std::size_t>(dim));
  for (auto& t : theta_) t = theta_rng.uniform(-1.0, 1.0);
  if (name_.empty()) name_ = std::string(synthetic_kind_name(kind));
}

SyntheticEnv::SyntheticEnv(SyntheticKind kind, std::vector<double> theta, int arms, bool symmetrize, std::string name)
    : kind_(kind),
      dim_(static_cast<int>(theta.size())),
      arms_(arms),
      symmetrize_(symmetrize),
      theta_(std::move(theta)),
      name_(std::move(name)) {
  if (dim_ < 1) throw ConfigError("synthetic env: dim must be >= 1");
  if (arms < 1) throw ConfigError("synthetic env: arms must be >= 1");
  if (name_.empty()) name_ = std::string(synthetic_kind_name(kind));
}

double SyntheticEnv::true_utility(std::span<const double> x) const {
  const std::size_t d = theta_.size();
  double proj = 0.0;
  if (x.size() == d) {
    for (std::size_t j = 0; j < d; ++j) proj += x[j] * theta_[j];
  } else if (x.size() == 2 * d) {
    // Symmetrized context (z, z) / (sqrt 2 |z|): utility of the unit latent z / |z|.
    for (std::size_t j = 0; j < d; ++j) proj += x[j] * theta_[j];
    proj *= std::sqrt(2.0);
  } else {
    throw ShapeError("true_utility: dimension mismatch");
  }
  switch (kind_) {
    case SyntheticKind::Cosine:
      return std::cos(3.0 * proj);
    case SyntheticKind::Square:
      return 10.0 * proj * proj;
    case SyntheticKind::Quadratic:
      return proj * proj;
    case SyntheticKind::Linear:
      return proj;
  }
  return 0.0;
}

std::pair<ContextSet, RoundTruth> SyntheticEnv::sample_contexts(int round, Rng& rng) const {
  if (round < 1) throw InvalidInput("sample_contexts: round must be >= 1");
  const auto d = static_cast<std::size_t>(dim_);
  ContextSet cs;
  cs.round = round;
  cs.vectors.resize(static_cast<std::size_t>(arms_), static_cast<std::size_t>(context_dim()));
  std::vector<double> util(static_cast<std::size_t>(arms_));
  Vector z(d);
  for (std::size_t k = 0; k < static_cast<std::size_t>(arms_); ++k) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto& v : z) {
        v = rng.uniform(-1.0, 1.0);
        sq += v * v;
      }
    } while (!(sq > 0.0));
    auto row = cs.vectors.row(k);
    if (symmetrize_) {
      const Vector x = symmetrize_context(z, 2 * d);
      std::copy(x.begin(), x.end(), row.begin());
    } else {
      std::copy(z.begin(), z.end(), row.begin());
      normalize(row);
    }
    util[k] = true_utility(row);
  }
  return {std::move(cs), make_truth(std::move(util))};
}

double SyntheticEnv::win_probability(const RoundTruth& truth, int k1, int k2) const {
  check_arms(truth, k1, k2);
  return sigmoid(truth.utilities[static_cast<std::size_t>(k1)] - truth.utilities[static_cast<std::size_t>(k2)]);
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

TabularData parse_tabular(std::istream& in, const TabularSchema& schema, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  int label_col = schema.label_column;
  std::size_t columns = 0;
  if (schema.has_header) {
    if (!std::getline(in, line)) throw ParseError(source + ": empty dataset");
    ++line_no;
    const auto names = split_line(line, schema.delimiter);
    columns = names.size();
    if (!schema.label_name.empty()) {
      const auto it = std::find(names.begin(), names.end(), schema.label_name);
      if (it == names.end()) throw ParseError(source + ": unknown label column '" + schema.label_name + "'");
      label_col = static_cast<int>(it - names.begin());
    }
  } else if (!schema.label_name.empty()) {
    throw ConfigError(source + ": a label column name requires a header row");
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line, schema.delimiter);
    if (columns == 0) columns = cells.size();
    if (cells.size() != columns) {
      throw ParseError(source + ": line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                       " columns, found " + std::to_string(cells.size()));
    }
    if (columns < 2) throw ParseError(source + ": need at least one feature column and a label column");
    const int lc = label_col < 0 ? static_cast<int>(columns) - 1 : label_col;
    if (lc >= static_cast<int>(columns)) {
      throw ParseError(source + ": label column " + std::to_string(lc) + " out of range");
    }
    std::vector<double> feats;
    feats.reserve(columns - 1);
    for (std::size_t c = 0; c < columns; ++c) {
      if (static_cast<int>(c) == lc) continue;
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        throw ParseError(source + ": line " + std::to_string(line_no) + ": non-numeric feature '" + cells[c] + "'");
      }
      feats.push_back(v);
    }
    if (cells[static_cast<std::size_t>(lc)].empty()) {
      throw ParseError(source + ": line " + std::to_string(line_no) + ": empty label");
    }
    rows.push_back(std::move(feats));
    raw_labels.push_back(cells[static_cast<std::size_t>(lc)]);
  }
  if (rows.empty()) throw ParseError(source + ": empty dataset");

  // Numeric labels sort numerically, anything else lexicographically.
  bool numeric = true;
  for (const auto& l : raw_labels) {
    double v;
    numeric = numeric && parse_double(l, v);
  }
  auto less = [numeric](const std::string& a, const std::string& b) {
    if (!numeric) return a < b;
    double x = 0, y = 0;
    parse_double(a, x);
    parse_double(b, y);
    return x < y;
  };
  std::map<std::string, int, decltype(less)> classes(less);
  for (const auto& l : raw_labels) classes.emplace(l, 0);
  int next = 0;
  for (auto& [_, id] : classes) id = next++;

  TabularData data;
  data.classes = next;
  const std::size_t dim = rows.front().size();
  data.col_min.assign(dim, std::numeric_limits<double>::infinity());
  data.col_max.assign(dim, -std::numeric_limits<double>::infinity());
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < dim; ++c) {
      data.col_min[c] = std::min(data.col_min[c], r[c]);
      data.col_max[c] = std::max(data.col_max[c], r[c]);
    }
  }
  for (auto& r : rows) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double span = data.col_max[c] - data.col_min[c];
      r[c] = span > 0.0 ? (r[c] - data.col_min[c]) / span : 0.0;
    }
  }
  data.features = std::move(rows);
  data.labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) data.labels.push_back(classes.at(l));
  return data;
}

TabularData load_tabular(const std::string& path, const TabularSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_tabular(in, schema, path);
}

TabularEnv::TabularEnv(std::shared_ptr<const TabularData> data, PreferenceMode mode, double margin, bool symmetrize,
                       std::string name)
    : data_(std::move(data)), mode_(mode), margin_(margin), scale_(0.0), symmetrize_(symmetrize), name_(std::move(name)) {
  if (!data_ || data_->features.empty()) throw ConfigError("tabular env: empty dataset");
  if (data_->classes < 1) throw ConfigError("tabular env: no classes");
  if (mode_ == PreferenceMode::Margin) {
    if (!(margin_ > 0.5 && margin_ < 1.0)) throw ConfigError("tabular env: margin must lie in (0.5, 1)");
    scale_ = std::log(margin_ / (1.0 - margin_));
  }
  if (name_.empty()) name_ = "tabular";
}

int TabularEnv::context_dim() const noexcept {
  const int base = data_->feature_dim() * data_->classes;
  return symmetrize_ ? 2 * base : base;
}

Vector TabularEnv::encode(std::size_t instance, int arm) const {
  const auto& f = data_->features.at(instance);
  const std::size_t block = f.size();
  Vector x(block * static_cast<std::size_t>(data_->classes), 0.0);
  std::copy(f.begin(), f.end(), x.begin() + static_cast<std::ptrdiff_t>(block * static_cast<std::size_t>(arm)));
  normalize(x);
  if (!symmetrize_) return x;
  double sq = 0.0;
  for (double v : x) sq += v * v;
  if (!(sq > 0.0)) return Vector(2 * x.size(), 0.0);
  return symmetrize_context(x, 2 * x.size());
}

double TabularEnv::true_utility(std::size_t instance, int arm) const {
  if (mode_ == PreferenceMode::Deterministic) return static_cast<double>(arm);
  return data_->labels.at(instance) == arm ? 1.0 : 0.0;
}

std::pair<ContextSet, RoundTruth> TabularEnv::sample_contexts(int round, Rng& rng) const {
  if (round < 1) throw InvalidInput("sample_contexts: round must be >= 1");
  const std::size_t instance = rng.index(data_->features.size());
  const int k = data_->classes;
  ContextSet cs;
  cs.round = round;
  cs.vectors.resize(static_cast<std::size_t>(k), static_cast<std::size_t>(context_dim()));
  std::vector<double> util(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    const Vector x = encode(instance, a);
    std::copy(x.begin(), x.end(), cs.vectors.row(static_cast<std::size_t>(a)).begin());
    util[static_cast<std::size_t>(a)] = true_utility(instance, a);
  }
  RoundTruth truth = make_truth(std::move(util));
  truth.instance = instance;
  return {std::move(cs), std::move(truth)};
}

double TabularEnv::win_probability(const RoundTruth& truth, int k1, int k2) const {
  check_arms(truth, k1, k2);
  const double du = truth.utilities[static_cast<std::size_t>(k1)] - truth.utilities[static_cast<std::size_t>(k2)];
  if (mode_ == PreferenceMode::Deterministic) return du > 0.0 ? 1.0 : (du < 0.0 ? 0.0 : 0.5);
  return sigmoid(scale_ * du);
}

}  // namespace duellab
