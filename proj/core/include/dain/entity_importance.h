#ifndef DAIN_ENTITY_IMPORTANCE_H_
#define DAIN_ENTITY_IMPORTANCE_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dain/influence.h"
#include "dain/tensor.h"

namespace dain {

// per_dim[n][i] is the importance of entity i of dimension n.
struct EntityImportance {
  std::vector<std::vector<double>> per_dim;

  std::size_t order() const { return per_dim.size(); }
};

// alpha^(n)_i = sum of alpha_z over training cells z with z[n] == i.
// Entities that appear in no training cell get 0.
EntityImportance aggregate_entity_importance(const CellImportanceTable& cit, const Dims& dims);

struct CpRank1Options {
  double lambda = 0.01;
  int epochs = 500;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

struct CpRank1Fit {
  std::vector<std::vector<double>> factors;  // unclamped
  std::vector<double> loss_history;          // loss before each step, then final
};

// Full-batch gradient descent on
//   L = sum_z (|alpha_z| - prod_n a^(n)_{z_n})^2 + lambda sum_n ||a^(n)||^2
// from a seeded uniform[0,1) start. Throws OptimizationError on a
// non-finite loss.
CpRank1Fit fit_cp_rank1(const CellImportanceTable& cit, const Dims& dims,
                        const CpRank1Options& options);

// fit_cp_rank1 with negative factor entries clamped to zero.
EntityImportance cp_rank1_entity_importance(const CellImportanceTable& cit, const Dims& dims,
                                            const CpRank1Options& options);

// One CSV per dimension: <prefix><n>.csv with rows "entity,importance".
void save_entity_importance(const EntityImportance& importance, const std::string& prefix);
EntityImportance load_entity_importance(const std::string& prefix, std::size_t order);

}  // namespace dain

#endif  // DAIN_ENTITY_IMPORTANCE_H_
