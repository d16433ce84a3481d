#include "dain/influence.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dain/errors.h"
#include "parallel.h"

namespace dain {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

std::vector<std::vector<double>> validation_gradient_sums(const CheckpointSet& checkpoints,
                                                          std::span<const Cell> val) {
  checkpoints.validate();
  if (val.empty()) throw ArgumentError("validation set is empty");
  std::vector<std::vector<double>> sums;
  sums.reserve(checkpoints.size());
  for (const auto& snapshot : checkpoints.snapshots) {
    auto ws = snapshot.make_workspace();
    std::vector<double> sum(snapshot.last_layer_gradient_size(), 0.0);
    for (const auto& cell : val) {
      auto g = snapshot.last_layer_gradient(cell.index, cell.value, ws);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g[k];
    }
    sums.push_back(std::move(sum));
  }
  return sums;
}

CellImportanceTable cell_importance(const CheckpointSet& checkpoints, std::span<const Cell> train,
                                    const std::vector<std::vector<double>>& val_sums,
                                    int threads) {
  checkpoints.validate();
  if (val_sums.size() != checkpoints.size()) {
    throw ShapeError("expected " + std::to_string(checkpoints.size()) +
                     " validation gradient sums, got " + std::to_string(val_sums.size()));
  }
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (val_sums[i].size() != checkpoints.snapshots[i].last_layer_gradient_size()) {
      throw ShapeError("validation gradient sum " + std::to_string(i) + " has length " +
                       std::to_string(val_sums[i].size()) + ", expected " +
                       std::to_string(checkpoints.snapshots[i].last_layer_gradient_size()));
    }
  }

  CellImportanceTable table;
  table.entries.resize(train.size());
  internal::parallel_chunks(train.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<CompletionModel::Workspace> ws;
    for (const auto& s : checkpoints.snapshots) ws.push_back(s.make_workspace());
    for (std::size_t z = begin; z < end; ++z) {
      const Cell& cell = train[z];
      double total = 0.0;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        auto g = checkpoints.snapshots[i].last_layer_gradient(cell.index, cell.value, ws[i]);
        total += checkpoints.step_sizes[i] * dot(g, val_sums[i]);
      }
      table.entries[z] = Cell{cell.index, std::abs(total)};
    }
  });
  return table;
}

CellImportanceTable naive_cell_importance(const CheckpointSet& checkpoints,
                                          std::span<const Cell> train, std::span<const Cell> val) {
  checkpoints.validate();
  if (val.empty()) throw ArgumentError("validation set is empty");
  const std::size_t K = checkpoints.size();

  // grads[i][v] = gradient of validation cell v at checkpoint i.
  std::vector<std::vector<std::vector<double>>> val_grads(K);
  for (std::size_t i = 0; i < K; ++i) {
    for (const auto& cell : val) {
      val_grads[i].push_back(checkpoints.snapshots[i].last_layer_gradient(cell.index, cell.value));
    }
  }

  CellImportanceTable table;
  for (const auto& cell : train) {
    std::vector<std::vector<double>> train_grads;
    for (std::size_t i = 0; i < K; ++i) {
      train_grads.push_back(checkpoints.snapshots[i].last_layer_gradient(cell.index, cell.value));
    }
    double total = 0.0;
    for (std::size_t v = 0; v < val.size(); ++v) {
      double influence = 0.0;
      for (std::size_t i = 0; i < K; ++i) {
        if (train_grads[i].size() != val_grads[i][v].size()) {
          throw ShapeError("gradient length mismatch at checkpoint " + std::to_string(i));
        }
        influence += checkpoints.step_sizes[i] * dot(train_grads[i], val_grads[i][v]);
      }
      total += influence;
    }
    table.entries.push_back(Cell{cell.index, std::abs(total)});
  }
  return table;
}

void save_cell_importance(const CellImportanceTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t order = table.entries.empty() ? 0 : table.entries.front().index.size();
  for (std::size_t n = 0; n < order; ++n) out << "i" << n << ',';
  out << "importance\n";
  char buf[40];
  for (const auto& e : table.entries) {
    for (auto i : e.index) out << i << ',';
    std::snprintf(buf, sizeof(buf), "%.9g", e.value);
    out << buf << '\n';
  }
}

CellImportanceTable load_cell_importance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty cell importance file");
  const auto order = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  CellImportanceTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != order + 1) {
      throw ShapeError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(order + 1) + " fields");
    }
    Cell cell;
    cell.index.resize(order);
    try {
      for (std::size_t n = 0; n < order; ++n) cell.index[n] = std::stoll(fields[n]);
      cell.value = std::stod(fields[order]);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed row");
    }
    table.entries.push_back(std::move(cell));
  }
  return table;
}

}  // namespace dain
