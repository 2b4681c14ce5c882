#include "fsel/error.hpp"

namespace fsel {

StageError::StageError(std::string stage, Kind kind, const std::string& what)
    : std::runtime_error("stage '" + stage + "' failed: " + what),
      stage_(std::move(stage)),
      kind_(kind) {}

}  // namespace fsel
