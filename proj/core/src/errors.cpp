#include "avt/errors.hpp"

namespace avt {

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace avt
