#ifndef DAIN_TENSOR_H_
#define DAIN_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace dain {

using Index = std::vector<std::int64_t>;
using Dims = std::vector<std::int64_t>;

// One observed position of a sparse tensor. Indices are zero-based.
struct Cell {
  Index index;
  double value = 0.0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

// Throws ShapeError unless `index` has dims.size() components, each in range.
void check_index(std::span<const std::int64_t> index, const Dims& dims);

// Total number of positions in a tensor of the given shape. Throws
// ShapeError on non-positive dimensions or if the count overflows 63 bits.
std::uint64_t position_count(const Dims& dims);

// Hash set of index-vectors over a fixed shape. Index-vectors are keyed by
// their row-major linear offset.
class CellSet {
 public:
  explicit CellSet(Dims dims);

  // Returns false if the index-vector was already present.
  bool insert(std::span<const std::int64_t> index);
  bool contains(std::span<const std::int64_t> index) const;
  std::size_t size() const { return keys_.size(); }
  const Dims& dims() const { return dims_; }

  void insert_all(std::span<const Cell> cells);

 private:
  std::uint64_t key(std::span<const std::int64_t> index) const;

  Dims dims_;
  std::vector<std::uint64_t> strides_;
  std::unordered_set<std::uint64_t> keys_;
};

// Order-N coordinate-format tensor.
//
// Invariants (enforced by validate()): every index has order() components,
// each within dims, and no index-vector appears twice.
struct SparseTensor {
  Dims dims;
  std::vector<Cell> cells;
  std::string name;

  std::size_t order() const { return dims.size(); }
};

void validate(const SparseTensor& tensor);

// Reads the plain-text tensor format: one cell per line, `order` integer
// indices followed by a real value, separated by whitespace. Lines starting
// with '#' are comments; a "# dims: I1 I2 ..." comment (as written by
// save_tensor) fixes the shape. Explicit `dims` take precedence over both
// the comment and max-index inference.
SparseTensor load_tensor(const std::filesystem::path& path, std::size_t order,
                         const std::optional<Dims>& dims = std::nullopt);
SparseTensor read_tensor(std::istream& in, std::size_t order,
                         const std::optional<Dims>& dims = std::nullopt,
                         const std::string& name = "");

// Writes cells with values at 9 significant digits, preceded by optional
// '#' comment lines (given without the leading "# ") and a dims comment.
void write_cells(std::ostream& out, const Dims& dims, std::span<const Cell> cells,
                 std::span<const std::string> comments = {});
void save_tensor(const SparseTensor& tensor, const std::filesystem::path& path,
                 std::span<const std::string> comments = {});

struct DatasetSplit {
  Dims dims;
  std::vector<Cell> train;
  std::vector<Cell> val;
  std::vector<Cell> test;
  std::uint64_t seed = 0;
};

// Uniform random 72/18/10 train/val/test partition: 10% test, then 20% of
// the remainder for validation.
DatasetSplit split_dataset(const SparseTensor& tensor, std::uint64_t seed);

// Adds `count` zero-valued cells at uniformly drawn unobserved positions.
SparseTensor add_negative_samples(const SparseTensor& tensor, std::size_t count,
                                  std::uint64_t seed);

// Factor matrices of a CP model; matrices[n] is dims[n] x rank, row-major.
struct CpFactors {
  Dims dims;
  int rank = 0;
  std::vector<std::vector<double>> matrices;

  // Sum over r of the product of factor entries at `index`.
  double reconstruct(std::span<const std::int64_t> index) const;
};

CpFactors random_cp_factors(const Dims& dims, int rank, std::uint64_t seed);

struct SyntheticSpec {
  Dims dims;
  std::size_t nnz = 0;
  int rank = 1;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  // Replaces the seeded uniform[0,1) factors when set.
  std::optional<CpFactors> factors;
};

// Samples nnz distinct positions and sets each value to the rank-R CP
// reconstruction plus N(0, noise_std^2) noise.
SparseTensor generate_synthetic(const SyntheticSpec& spec);

}  // namespace dain

#endif  // DAIN_TENSOR_H_
