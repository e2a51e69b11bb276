#include "hmsched/errors.hpp"

namespace hmsched {

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error([&] {
          std::string msg = "validation failed:";
          for (const auto& v : violations) {
              msg += "\n  - " + v;
          }
          return msg;
      }()),
      violations_(std::move(violations))
{
}

}  // namespace hmsched
