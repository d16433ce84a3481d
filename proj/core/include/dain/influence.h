#ifndef DAIN_INFLUENCE_H_
#define DAIN_INFLUENCE_H_

#include <filesystem>
#include <span>
#include <vector>

#include "dain/tensor.h"
#include "dain/trainer.h"

namespace dain {

// Cell Importance Table: one nonnegative importance per training cell, in
// the order of the training list it was computed from. Cell::value holds
// the importance.
struct CellImportanceTable {
  std::vector<Cell> entries;

  std::size_t size() const { return entries.size(); }
};

// Per checkpoint, the sum of last-layer loss gradients over `val`.
// Result is K vectors of length D.
std::vector<std::vector<double>> validation_gradient_sums(const CheckpointSet& checkpoints,
                                                          std::span<const Cell> val);

// TracIn importance against the whole validation set, using precomputed
// validation gradient sums:
//   alpha_z = | sum_i eta_i <grad_i(z), val_sums[i]> |
// O(K D |train|). Training cells are split across `threads` workers; each
// cell's checkpoint sum runs in fixed order, so the result does not depend
// on the thread count.
CellImportanceTable cell_importance(const CheckpointSet& checkpoints, std::span<const Cell> train,
                                    const std::vector<std::vector<double>>& val_sums,
                                    int threads = 1);

// Reference form summing Inf(z, z') over every (train, val) pair
// explicitly, O(K D |train| |val|). Intended for small inputs.
CellImportanceTable naive_cell_importance(const CheckpointSet& checkpoints,
                                          std::span<const Cell> train, std::span<const Cell> val);

// CSV with a header row, then N index columns and the importance at 9
// significant digits.
void save_cell_importance(const CellImportanceTable& table, const std::filesystem::path& path);
CellImportanceTable load_cell_importance(const std::filesystem::path& path);

}  // namespace dain

#endif  // DAIN_INFLUENCE_H_
