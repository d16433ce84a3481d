#include "dain/entity_importance.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "dain/errors.h"
#include "dain/random.h"

namespace dain {
namespace {

// Entity importance reports any cell that does not fit `dims` as a shape error.
void check_cell(std::span<const std::int64_t> index, const Dims& dims) {
  try {
    check_index(index, dims);
  } catch (const BoundsError& e) {
    throw ShapeError(e.what());
  }
}

}  // namespace

EntityImportance aggregate_entity_importance(const CellImportanceTable& cit, const Dims& dims) {
  if (cit.entries.empty()) throw ArgumentError("cell importance table is empty");
  position_count(dims);
  EntityImportance out;
  for (auto d : dims) out.per_dim.emplace_back(static_cast<std::size_t>(d), 0.0);
  for (const auto& e : cit.entries) {
    check_cell(e.index, dims);
    for (std::size_t n = 0; n < dims.size(); ++n) {
      out.per_dim[n][static_cast<std::size_t>(e.index[n])] += e.value;
    }
  }
  return out;
}

namespace {

double cp_loss(const CellImportanceTable& cit, const std::vector<std::vector<double>>& factors,
               double lambda) {
  double loss = 0.0;
  for (const auto& e : cit.entries) {
    double prod = 1.0;
    for (std::size_t n = 0; n < factors.size(); ++n) {
      prod *= factors[n][static_cast<std::size_t>(e.index[n])];
    }
    const double r = std::abs(e.value) - prod;
    loss += r * r;
  }
  for (const auto& f : factors) {
    for (double x : f) loss += lambda * x * x;
  }
  return loss;
}

}  // namespace

CpRank1Fit fit_cp_rank1(const CellImportanceTable& cit, const Dims& dims,
                        const CpRank1Options& options) {
  if (options.lambda < 0) throw ArgumentError("lambda must be nonnegative");
  if (options.epochs < 0) throw ArgumentError("epochs must be nonnegative");
  position_count(dims);
  for (const auto& e : cit.entries) check_cell(e.index, dims);

  const std::size_t N = dims.size();
  CpRank1Fit fit;
  auto rng = make_rng(options.seed, "cp");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto d : dims) {
    std::vector<double> f(static_cast<std::size_t>(d));
    for (auto& x : f) x = u(rng);
    fit.factors.push_back(std::move(f));
  }

  std::vector<std::vector<double>> grad(N);
  for (int step = 0; step < options.epochs; ++step) {
    const double loss = cp_loss(cit, fit.factors, options.lambda);
    if (!std::isfinite(loss)) {
      throw OptimizationError("rank-1 CP loss became non-finite at step " + std::to_string(step));
    }
    fit.loss_history.push_back(loss);

    for (std::size_t n = 0; n < N; ++n) {
      grad[n].assign(fit.factors[n].size(), 0.0);
      for (std::size_t i = 0; i < grad[n].size(); ++i) {
        grad[n][i] = 2.0 * options.lambda * fit.factors[n][i];
      }
    }
    for (const auto& e : cit.entries) {
      double prod = 1.0;
      for (std::size_t n = 0; n < N; ++n) prod *= fit.factors[n][static_cast<std::size_t>(e.index[n])];
      const double r = std::abs(e.value) - prod;
      for (std::size_t n = 0; n < N; ++n) {
        double others = 1.0;
        for (std::size_t m = 0; m < N; ++m) {
          if (m != n) others *= fit.factors[m][static_cast<std::size_t>(e.index[m])];
        }
        grad[n][static_cast<std::size_t>(e.index[n])] += -2.0 * r * others;
      }
    }
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < grad[n].size(); ++i) {
        fit.factors[n][i] -= options.learning_rate * grad[n][i];
      }
    }
  }
  const double final_loss = cp_loss(cit, fit.factors, options.lambda);
  if (!std::isfinite(final_loss)) throw OptimizationError("rank-1 CP loss became non-finite");
  fit.loss_history.push_back(final_loss);
  return fit;
}

EntityImportance cp_rank1_entity_importance(const CellImportanceTable& cit, const Dims& dims,
                                            const CpRank1Options& options) {
  auto fit = fit_cp_rank1(cit, dims, options);
  EntityImportance out;
  out.per_dim = std::move(fit.factors);
  for (auto& f : out.per_dim) {
    for (auto& x : f) x = std::max(0.0, x);
  }
  return out;
}

void save_entity_importance(const EntityImportance& importance, const std::string& prefix) {
  char buf[40];
  for (std::size_t n = 0; n < importance.order(); ++n) {
    const std::string path = prefix + std::to_string(n) + ".csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "entity,importance\n";
    for (std::size_t i = 0; i < importance.per_dim[n].size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", importance.per_dim[n][i]);
      out << i << ',' << buf << '\n';
    }
  }
}

EntityImportance load_entity_importance(const std::string& prefix, std::size_t order) {
  EntityImportance out;
  for (std::size_t n = 0; n < order; ++n) {
    const std::string path = prefix + std::to_string(n) + ".csv";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      try {
        if (comma == std::string::npos) throw std::invalid_argument("no comma");
        const auto entity = std::stoull(line.substr(0, comma));
        if (entity != values.size()) throw std::invalid_argument("entities out of order");
        values.push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        throw ParseError(path + " line " + std::to_string(line_no) + ": malformed row");
      }
    }
    out.per_dim.push_back(std::move(values));
  }
  return out;
}

}  // namespace dain
