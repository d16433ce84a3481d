#ifndef DAIN_MODEL_IO_H_
#define DAIN_MODEL_IO_H_

#include <filesystem>
#include <iosfwd>

#include "dain/costco.h"
#include "dain/model.h"
#include "dain/trainer.h"

namespace dain {

// Structured-text model files. The first line is "<format> <version>"; a
// version other than kModelFormatVersion is rejected with VersionError.
// Parameters are written at 17 significant digits, so save/load is exact.
inline constexpr int kModelFormatVersion = 1;

void write_model(std::ostream& out, const CompletionModel& model);
CompletionModel read_model(std::istream& in);
void save_model(const CompletionModel& model, const std::filesystem::path& path);
CompletionModel load_model(const std::filesystem::path& path);

void write_costco(std::ostream& out, const CostcoModel& model);
CostcoModel read_costco(std::istream& in);

void save_checkpoints(const CheckpointSet& checkpoints, const std::filesystem::path& path);
CheckpointSet load_checkpoints(const std::filesystem::path& path);

}  // namespace dain

#endif  // DAIN_MODEL_IO_H_
