#include "dain/errors.h"

namespace dain {

Error::Error(std::string_view category, const std::string& message)
    : std::runtime_error(std::string(category) + ": " + message),
      category_(category) {}

}  // namespace dain
