#include "adesens/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "adesens/rng.hpp"

namespace adesens {

std::string_view to_string(OutcomeType type) {
  return type == OutcomeType::kBinary ? "binary" : "continuous";
}

OutcomeType parse_outcome_type(std::string_view text) {
  if (text == "continuous") return OutcomeType::kContinuous;
  if (text == "binary") return OutcomeType::kBinary;
  throw ConfigError("unknown outcome type '" + std::string(text) +
                    "' (expected continuous or binary)");
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(Eigen::VectorXd y, Eigen::VectorXd a, CovariateMatrix x,
                 OutcomeType outcome_type)
    : y_(std::move(y)), a_(std::move(a)), x_(std::move(x)),
      outcome_type_(outcome_type) {
  if (y_.size() == 0) throw DomainError("empty dataset");
  if (a_.size() != y_.size() || x_.rows() != y_.size()) {
    throw DomainError("dataset columns have different lengths");
  }
  if (!y_.allFinite() || !a_.allFinite() || !x_.allFinite()) {
    throw DomainError("dataset contains non-finite values");
  }
  if (outcome_type_ == OutcomeType::kBinary) {
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] != 0.0 && y_[i] != 1.0) {
        throw DomainError("binary outcome must be 0 or 1 (row " +
                          std::to_string(i + 1) + ")");
      }
    }
  }
}

ObservedSample Dataset::sample(Eigen::Index i) const {
  return {y_[i], a_[i], x_.row(i)};
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m), a(m);
  CovariateMatrix x(m, x_.cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    y[k] = y_[rows[k]];
    a[k] = a_[rows[k]];
    x.row(k) = x_.row(rows[k]);
  }
  return Dataset(std::move(y), std::move(a), std::move(x), outcome_type_);
}

// -------------------------------------------------------------------- CSV

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::istream& in, OutcomeType outcome_type) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (auto cell : split_commas(line)) header.emplace_back(cell);
  int y_col = -1;
  int a_col = -1;
  std::vector<int> x_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string_view name = header[c];
    if (name == "y") {
      if (y_col >= 0) throw ParseError("duplicate column 'y'");
      y_col = c;
    } else if (name == "a") {
      if (a_col >= 0) throw ParseError("duplicate column 'a'");
      a_col = c;
    } else if (name.size() > 1 && name[0] == 'x') {
      int j = 0;
      const auto [ptr, ec] =
          std::from_chars(name.data() + 1, name.data() + name.size(), j);
      if (ec != std::errc() || ptr != name.data() + name.size() || j < 1) {
        throw ParseError("unexpected column '" + std::string(name) + "'");
      }
      if (static_cast<int>(x_cols.size()) < j) x_cols.resize(j, -1);
      if (x_cols[j - 1] >= 0) {
        throw ParseError("duplicate column '" + std::string(name) + "'");
      }
      x_cols[j - 1] = c;
    } else {
      throw ParseError("unexpected column '" + std::string(name) + "'");
    }
  }
  if (y_col < 0 || a_col < 0) throw ParseError("header must name columns y and a");
  for (std::size_t j = 0; j < x_cols.size(); ++j) {
    if (x_cols[j] < 0) {
      throw ParseError("covariate column x" + std::to_string(j + 1) + " missing");
    }
  }

  const auto d = static_cast<Eigen::Index>(x_cols.size());
  std::vector<double> ys, as, xs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    auto read = [&](int col) {
      double v = 0.0;
      if (!parse_double(cells[col], v)) {
        throw ParseError("row " + std::to_string(row) + ", column '" +
                         header[col] + "': missing or invalid value '" +
                         std::string(cells[col]) + "'");
      }
      return v;
    };
    const double y = read(y_col);
    if (outcome_type == OutcomeType::kBinary && y != 0.0 && y != 1.0) {
      throw DomainError("row " + std::to_string(row) +
                        ", column 'y': binary outcome must be 0 or 1");
    }
    ys.push_back(y);
    as.push_back(read(a_col));
    for (int c : x_cols) xs.push_back(read(c));
  }
  if (ys.empty()) throw ParseError("empty dataset");

  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(as.data(), n);
  CovariateMatrix x = Eigen::Map<CovariateMatrix>(xs.data(), n, d);
  return Dataset(std::move(y), std::move(a), std::move(x), outcome_type);
}

Dataset load_csv(const std::filesystem::path& path, OutcomeType outcome_type) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return parse_csv(in, outcome_type);
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) {
  out << "y,a";
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    put_double(out, data.y()[i]);
    out << ',';
    put_double(out, data.a()[i]);
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      out << ',';
      put_double(out, data.x()(i, j));
    }
    out << '\n';
  }
}

// -------------------------------------------------------------- GammaGrid

GammaGrid::GammaGrid(double gamma_lo, double gamma_hi, int n_points)
    : lo_(gamma_lo), hi_(gamma_hi), n_points_(n_points) {
  if (!(gamma_lo >= 0.0) || !std::isfinite(gamma_hi)) {
    throw ConfigError("gamma grid: gamma_lo must be >= 0");
  }
  if (!(gamma_hi >= gamma_lo)) throw ConfigError("gamma grid: gamma_hi < gamma_lo");
  if (n_points < 1) throw ConfigError("gamma grid: need at least one point");
  if (n_points == 1 && gamma_hi != gamma_lo) {
    throw ConfigError("gamma grid: a single point requires gamma_lo == gamma_hi");
  }
}

double GammaGrid::operator[](int i) const {
  if (n_points_ == 1) return lo_;
  if (i == n_points_ - 1) return hi_;
  return lo_ + (hi_ - lo_) * static_cast<double>(i) / (n_points_ - 1);
}

std::vector<double> GammaGrid::points() const {
  std::vector<double> out(n_points_);
  for (int i = 0; i < n_points_; ++i) out[i] = (*this)[i];
  return out;
}

// ------------------------------------------------------------------ folds

std::vector<int> make_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
  if (n < folds) {
    throw ConfigError("cannot split " + std::to_string(n) + " samples into " +
                      std::to_string(folds) + " folds");
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  CounterRng rng(seed, 0x666f6c6473ULL);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold(n);
  for (Eigen::Index pos = 0; pos < n; ++pos) {
    fold[order[pos]] = static_cast<int>(pos % folds);
  }
  return fold;
}

// ----------------------------------------------------------------- config

void RunConfig::validate() const {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (!(lse_t > 0.0)) throw ConfigError("lse_t must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(score_truncation > 0.0)) throw ConfigError("score_truncation must be > 0");
  if (learner.degree_a < 0 || learner.degree_x < 0 || learner.interaction_order < 0) {
    throw ConfigError("basis degrees must be >= 0");
  }
  if (!(learner.ridge >= 0.0)) throw ConfigError("ridge must be >= 0");
  if (learner.resmooth_bandwidth && !(*learner.resmooth_bandwidth > 0.0)) {
    throw ConfigError("resmooth_bandwidth must be > 0");
  }
  if (!(learner.variance_floor > 0.0)) throw ConfigError("variance_floor must be > 0");
  if (learner.median_iterations < 1) throw ConfigError("median_iterations must be >= 1");
  if (!(learner.median_step > 0.0)) throw ConfigError("median_step must be > 0");
}

namespace {

template <typename T>
T parse_value(std::string_view key, std::string_view text, int line) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config line " + std::to_string(line) + ": invalid value '" +
                     std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return v;
}

}  // namespace

ConfigFile parse_config(std::istream& in, ConfigScope scope, RunConfig defaults) {
  ConfigFile cfg{std::move(defaults), {}};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    auto& run = cfg.run;
    auto& learner = run.learner;
    if (key == "outcome_type") {
      run.outcome_type = parse_outcome_type(value);
    } else if (key == "folds") {
      run.folds = parse_value<int>(key, value, line_no);
    } else if (key == "lse_t") {
      run.lse_t = parse_value<double>(key, value, line_no);
    } else if (key == "alpha") {
      run.alpha = parse_value<double>(key, value, line_no);
    } else if (key == "seed") {
      run.seed = parse_value<std::uint64_t>(key, value, line_no);
    } else if (key == "score_truncation") {
      run.score_truncation = parse_value<double>(key, value, line_no);
    } else if (key == "degree_a") {
      learner.degree_a = parse_value<int>(key, value, line_no);
    } else if (key == "degree_x") {
      learner.degree_x = parse_value<int>(key, value, line_no);
    } else if (key == "interaction_order") {
      learner.interaction_order = parse_value<int>(key, value, line_no);
    } else if (key == "ridge") {
      learner.ridge = parse_value<double>(key, value, line_no);
    } else if (key == "resmooth_bandwidth") {
      learner.resmooth_bandwidth = parse_value<double>(key, value, line_no);
    } else if (key == "variance_floor") {
      learner.variance_floor = parse_value<double>(key, value, line_no);
    } else if (key == "median_iterations") {
      learner.median_iterations = parse_value<int>(key, value, line_no);
    } else if (key == "median_step") {
      learner.median_step = parse_value<double>(key, value, line_no);
    } else if (key == "dose" || key == "delta" || key == "zeta" || key == "eta" ||
               key == "n" || key == "reps") {
      if (scope == ConfigScope::kAnalysis) {
        throw ConfigError("config line " + std::to_string(line_no) + ": '" +
                          std::string(key) + "' is a simulation key, not valid for analyze");
      }
      auto& sim = cfg.simulation;
      if (key == "dose") sim.dose = std::string(value);
      if (key == "delta") sim.delta = parse_value<double>(key, value, line_no);
      if (key == "zeta") sim.zeta = parse_value<double>(key, value, line_no);
      if (key == "eta") sim.eta = parse_value<double>(key, value, line_no);
      if (key == "n") sim.n = parse_value<int>(key, value, line_no);
      if (key == "reps") sim.reps = parse_value<int>(key, value, line_no);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
  }
  cfg.run.validate();
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path, ConfigScope scope,
                       RunConfig defaults) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(in, scope, std::move(defaults));
}

}  // namespace adesens
