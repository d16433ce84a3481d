#include "dain/model_io.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "dain/errors.h"

namespace dain {
namespace {

void expect_header(std::istream& in, const std::string& format) {
  std::string name;
  int version = 0;
  if (!(in >> name >> version) || name != format) {
    throw ParseError("expected '" + format + "' header");
  }
  if (version != kModelFormatVersion) {
    throw VersionError(format + " version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
}

void expect_key(std::istream& in, const std::string& key) {
  std::string got;
  if (!(in >> got) || got != key) throw ParseError("expected key '" + key + "', got '" + got + "'");
}

template <class T>
std::vector<T> read_list(std::istream& in, const std::string& key) {
  expect_key(in, key);
  std::size_t count = 0;
  if (!(in >> count)) throw ParseError("missing count for '" + key + "'");
  std::vector<T> values(count);
  for (auto& v : values) {
    if (!(in >> v)) throw ParseError("truncated list '" + key + "'");
  }
  return values;
}

template <class T>
void write_list(std::ostream& out, const std::string& key, const std::vector<T>& values) {
  out << key << ' ' << values.size();
  for (const auto& v : values) out << ' ' << v;
  out << '\n';
}

void write_params(std::ostream& out, std::span<const double> params) {
  out << "params " << params.size() << '\n';
  char buf[40];
  for (double p : params) {
    std::snprintf(buf, sizeof(buf), "%.17g", p);
    out << buf << '\n';
  }
}

void read_params(std::istream& in, std::span<double> params) {
  expect_key(in, "params");
  std::size_t count = 0;
  in >> count;
  if (count != params.size()) {
    throw ShapeError("parameter count " + std::to_string(count) + " does not match architecture (" +
                     std::to_string(params.size()) + ")");
  }
  std::string token;
  for (auto& p : params) {
    if (!(in >> token)) throw ParseError("truncated parameter block");
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), p);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError("malformed parameter '" + token + "'");
    }
  }
}

}  // namespace

void write_model(std::ostream& out, const CompletionModel& model) {
  out << "dain-model " << kModelFormatVersion << '\n';
  out << "kind mlp\n";
  write_list(out, "dims", model.dims());
  out << "embedding_len " << model.embedding_len() << '\n';
  write_list(out, "layers", model.layer_sizes());
  write_params(out, model.parameters());
}

CompletionModel read_model(std::istream& in) {
  expect_header(in, "dain-model");
  expect_key(in, "kind");
  std::string kind;
  in >> kind;
  if (kind != "mlp") throw ParseError("expected an mlp model, got '" + kind + "'");
  auto dims = read_list<std::int64_t>(in, "dims");
  expect_key(in, "embedding_len");
  int R = 0;
  in >> R;
  auto layers = read_list<int>(in, "layers");
  CompletionModel model(dims, R, layers, 0);
  read_params(in, model.parameters());
  return model;
}

void write_costco(std::ostream& out, const CostcoModel& model) {
  out << "dain-model " << kModelFormatVersion << '\n';
  out << "kind costco\n";
  write_list(out, "dims", model.dims());
  out << "embedding_len " << model.embedding_len() << '\n';
  out << "channels " << model.channels() << '\n';
  write_params(out, model.parameters());
}

CostcoModel read_costco(std::istream& in) {
  expect_header(in, "dain-model");
  expect_key(in, "kind");
  std::string kind;
  in >> kind;
  if (kind != "costco") throw ParseError("expected a costco model, got '" + kind + "'");
  auto dims = read_list<std::int64_t>(in, "dims");
  expect_key(in, "embedding_len");
  int R = 0;
  in >> R;
  expect_key(in, "channels");
  int C = 0;
  in >> C;
  CostcoModel model(dims, R, C, 0);
  read_params(in, model.parameters());
  return model;
}

void save_model(const CompletionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_model(out, model);
}

CompletionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_model(in);
}

void save_checkpoints(const CheckpointSet& checkpoints, const std::filesystem::path& path) {
  checkpoints.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "dain-checkpoints " << kModelFormatVersion << '\n';
  out << "count " << checkpoints.size() << '\n';
  char buf[40];
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", checkpoints.step_sizes[k]);
    out << "checkpoint " << checkpoints.epochs[k] << ' ' << buf << '\n';
    write_model(out, checkpoints.snapshots[k]);
  }
}

CheckpointSet load_checkpoints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  expect_header(in, "dain-checkpoints");
  expect_key(in, "count");
  std::size_t count = 0;
  in >> count;
  CheckpointSet set;
  for (std::size_t k = 0; k < count; ++k) {
    expect_key(in, "checkpoint");
    int epoch = 0;
    double eta = 0;
    if (!(in >> epoch >> eta)) throw ParseError("malformed checkpoint header");
    set.epochs.push_back(epoch);
    set.step_sizes.push_back(eta);
    set.snapshots.push_back(read_model(in));
  }
  set.validate();
  return set;
}

}  // namespace dain
