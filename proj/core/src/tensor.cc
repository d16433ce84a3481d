#include "dain/tensor.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dain/errors.h"
#include "dain/random.h"

namespace dain {
namespace {

std::string dims_to_string(const Dims& dims) {
  std::string s = "(";
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (n) s += ", ";
    s += std::to_string(dims[n]);
  }
  return s + ")";
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Parses the "dims: I1 I2 ..." payload of a comment line, if that is what it is.
std::optional<Dims> parse_dims_comment(std::string_view comment) {
  auto tokens = tokenize(comment);
  if (tokens.empty() || tokens[0] != "dims:") return std::nullopt;
  Dims dims;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    std::int64_t d = 0;
    if (!parse_number(tokens[i], d) || d <= 0) return std::nullopt;
    dims.push_back(d);
  }
  return dims;
}

}  // namespace

void check_index(std::span<const std::int64_t> index, const Dims& dims) {
  if (index.size() != dims.size()) {
    throw ShapeError("index has " + std::to_string(index.size()) +
                     " components, tensor order is " + std::to_string(dims.size()));
  }
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (index[n] < 0 || index[n] >= dims[n]) {
      throw BoundsError("index " + std::to_string(index[n]) + " out of range for dimension " +
                        std::to_string(n) + " of size " + std::to_string(dims[n]));
    }
  }
}

std::uint64_t position_count(const Dims& dims) {
  if (dims.empty()) throw ShapeError("tensor must have at least one dimension");
  std::uint64_t total = 1;
  for (auto d : dims) {
    if (d <= 0) throw ShapeError("dimensions must be positive, got " + dims_to_string(dims));
    if (total > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) /
                    static_cast<std::uint64_t>(d)) {
      throw ShapeError("tensor of shape " + dims_to_string(dims) + " has too many positions");
    }
    total *= static_cast<std::uint64_t>(d);
  }
  return total;
}

CellSet::CellSet(Dims dims) : dims_(std::move(dims)), strides_(dims_.size()) {
  position_count(dims_);
  std::uint64_t stride = 1;
  for (std::size_t n = dims_.size(); n-- > 0;) {
    strides_[n] = stride;
    stride *= static_cast<std::uint64_t>(dims_[n]);
  }
}

std::uint64_t CellSet::key(std::span<const std::int64_t> index) const {
  check_index(index, dims_);
  std::uint64_t k = 0;
  for (std::size_t n = 0; n < index.size(); ++n) {
    k += strides_[n] * static_cast<std::uint64_t>(index[n]);
  }
  return k;
}

bool CellSet::insert(std::span<const std::int64_t> index) { return keys_.insert(key(index)).second; }

bool CellSet::contains(std::span<const std::int64_t> index) const {
  return keys_.contains(key(index));
}

void CellSet::insert_all(std::span<const Cell> cells) {
  for (const auto& c : cells) insert(c.index);
}

void validate(const SparseTensor& tensor) {
  CellSet seen(tensor.dims);
  for (const auto& cell : tensor.cells) {
    if (!seen.insert(cell.index)) throw DuplicateError("duplicate cell in tensor " + tensor.name);
  }
}

SparseTensor read_tensor(std::istream& in, std::size_t order, const std::optional<Dims>& dims,
                         const std::string& name) {
  if (order == 0) throw ArgumentError("tensor order must be positive");
  SparseTensor tensor;
  tensor.name = name;
  std::optional<Dims> comment_dims;
  Dims max_index(order, -1);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens[0].front() == '#') {
      std::string_view rest = line;
      rest.remove_prefix(rest.find('#') + 1);
      if (auto d = parse_dims_comment(rest)) comment_dims = std::move(d);
      continue;
    }
    if (tokens.size() != order + 1) {
      throw ShapeError("line " + std::to_string(line_no) + ": expected " + std::to_string(order) +
                       " indices and a value, found " + std::to_string(tokens.size()) + " fields");
    }
    Cell cell;
    cell.index.resize(order);
    for (std::size_t n = 0; n < order; ++n) {
      if (!parse_number(tokens[n], cell.index[n])) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed index '" +
                         std::string(tokens[n]) + "'");
      }
      if (cell.index[n] < 0) {
        throw ParseError("line " + std::to_string(line_no) + ": negative index");
      }
      max_index[n] = std::max(max_index[n], cell.index[n]);
    }
    if (!parse_number(tokens[order], cell.value) || !std::isfinite(cell.value)) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed value '" +
                       std::string(tokens[order]) + "'");
    }
    tensor.cells.push_back(std::move(cell));
  }

  if (dims) {
    tensor.dims = *dims;
  } else if (comment_dims) {
    tensor.dims = *comment_dims;
  } else {
    tensor.dims.resize(order);
    for (std::size_t n = 0; n < order; ++n) tensor.dims[n] = std::max<std::int64_t>(1, max_index[n] + 1);
  }
  if (tensor.dims.size() != order) {
    throw ShapeError("dims " + dims_to_string(tensor.dims) + " do not match order " +
                     std::to_string(order));
  }

  CellSet seen(tensor.dims);
  for (std::size_t i = 0; i < tensor.cells.size(); ++i) {
    if (!seen.insert(tensor.cells[i].index)) {
      throw DuplicateError("duplicate cell at data row " + std::to_string(i + 1));
    }
  }
  return tensor;
}

SparseTensor load_tensor(const std::filesystem::path& path, std::size_t order,
                         const std::optional<Dims>& dims) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_tensor(in, order, dims, path.stem().string());
}

void write_cells(std::ostream& out, const Dims& dims, std::span<const Cell> cells,
                 std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "# dims:";
  for (auto d : dims) out << ' ' << d;
  out << '\n';
  char buf[64];
  for (const auto& cell : cells) {
    for (auto i : cell.index) out << i << ' ';
    std::snprintf(buf, sizeof(buf), "%.9g", cell.value);
    out << buf << '\n';
  }
}

void save_tensor(const SparseTensor& tensor, const std::filesystem::path& path,
                 std::span<const std::string> comments) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_cells(out, tensor.dims, tensor.cells, comments);
  if (!out) throw IoError("write failed for " + path.string());
}

DatasetSplit split_dataset(const SparseTensor& tensor, std::uint64_t seed) {
  const std::size_t total = tensor.cells.size();
  const auto n_test = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(total)));
  const auto n_val =
      static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(total - n_test)));
  if (total < 10 || n_test == 0 || n_val == 0 || n_test + n_val >= total) {
    throw SplitError("need at least 10 cells to split, got " + std::to_string(total));
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  split.dims = tensor.dims;
  split.seed = seed;
  split.test.reserve(n_test);
  split.val.reserve(n_val);
  split.train.reserve(total - n_test - n_val);
  for (std::size_t k = 0; k < total; ++k) {
    const Cell& cell = tensor.cells[order[k]];
    if (k < n_test) {
      split.test.push_back(cell);
    } else if (k < n_test + n_val) {
      split.val.push_back(cell);
    } else {
      split.train.push_back(cell);
    }
  }
  return split;
}

SparseTensor add_negative_samples(const SparseTensor& tensor, std::size_t count,
                                  std::uint64_t seed) {
  SparseTensor out = tensor;
  if (count == 0) return out;

  CellSet taken(tensor.dims);
  taken.insert_all(tensor.cells);
  auto rng = make_rng(seed, "negative");
  std::vector<std::uniform_int_distribution<std::int64_t>> pick;
  for (auto d : tensor.dims) pick.emplace_back(0, d - 1);

  const std::size_t budget = 100 * count;
  std::size_t added = 0;
  Index index(tensor.order());
  for (std::size_t draw = 0; draw < budget && added < count; ++draw) {
    for (std::size_t n = 0; n < index.size(); ++n) index[n] = pick[n](rng);
    if (taken.insert(index)) {
      out.cells.push_back(Cell{index, 0.0});
      ++added;
    }
  }
  if (added < count) {
    throw SaturationError("found only " + std::to_string(added) + " of " + std::to_string(count) +
                          " unobserved positions within " + std::to_string(budget) + " draws");
  }
  return out;
}

double CpFactors::reconstruct(std::span<const std::int64_t> index) const {
  double sum = 0.0;
  for (int r = 0; r < rank; ++r) {
    double prod = 1.0;
    for (std::size_t n = 0; n < matrices.size(); ++n) {
      prod *= matrices[n][static_cast<std::size_t>(index[n]) * rank + r];
    }
    sum += prod;
  }
  return sum;
}

CpFactors random_cp_factors(const Dims& dims, int rank, std::uint64_t seed) {
  if (rank < 1) throw ArgumentError("CP rank must be at least 1");
  position_count(dims);
  CpFactors f;
  f.dims = dims;
  f.rank = rank;
  auto rng = make_rng(seed, "factors");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto d : dims) {
    std::vector<double> m(static_cast<std::size_t>(d) * rank);
    for (auto& x : m) x = u(rng);
    f.matrices.push_back(std::move(m));
  }
  return f;
}

SparseTensor generate_synthetic(const SyntheticSpec& spec) {
  const std::uint64_t capacity = position_count(spec.dims);
  if (spec.nnz > capacity) {
    throw CapacityError("nnz " + std::to_string(spec.nnz) + " exceeds " + std::to_string(capacity) +
                        " positions");
  }
  if (spec.noise_std < 0) throw ArgumentError("noise_std must be nonnegative");
  CpFactors factors =
      spec.factors ? *spec.factors : random_cp_factors(spec.dims, spec.rank, spec.seed);
  if (factors.dims != spec.dims || factors.matrices.size() != spec.dims.size()) {
    throw ShapeError("override factors do not match dims " + dims_to_string(spec.dims));
  }

  const std::size_t order = spec.dims.size();
  auto rng = make_rng(spec.seed, "positions");
  std::vector<Index> positions;
  positions.reserve(spec.nnz);

  auto unravel = [&](std::uint64_t offset) {
    Index index(order);
    for (std::size_t n = order; n-- > 0;) {
      index[n] = static_cast<std::int64_t>(offset % static_cast<std::uint64_t>(spec.dims[n]));
      offset /= static_cast<std::uint64_t>(spec.dims[n]);
    }
    return index;
  };

  if (2 * static_cast<std::uint64_t>(spec.nnz) > capacity) {
    // Dense request: partial Fisher-Yates over all linear offsets.
    std::vector<std::uint64_t> offsets(capacity);
    std::iota(offsets.begin(), offsets.end(), std::uint64_t{0});
    for (std::size_t k = 0; k < spec.nnz; ++k) {
      std::uniform_int_distribution<std::uint64_t> pick(k, capacity - 1);
      std::swap(offsets[k], offsets[pick(rng)]);
      positions.push_back(unravel(offsets[k]));
    }
  } else {
    std::uniform_int_distribution<std::uint64_t> pick(0, capacity - 1);
    std::unordered_set<std::uint64_t> seen;
    while (positions.size() < spec.nnz) {
      std::uint64_t offset = pick(rng);
      if (seen.insert(offset).second) positions.push_back(unravel(offset));
    }
  }

  SparseTensor tensor;
  tensor.dims = spec.dims;
  tensor.name = "synthetic";
  tensor.cells.reserve(spec.nnz);
  auto noise_rng = make_rng(spec.seed, "noise");
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& index : positions) {
    double value = factors.reconstruct(index);
    if (spec.noise_std > 0) value += spec.noise_std * noise(noise_rng);
    tensor.cells.push_back(Cell{std::move(index), value});
  }
  return tensor;
}

}  // namespace dain
