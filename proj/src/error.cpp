#include "phonocard/error.hpp"

#include <utility>

namespace phonocard {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

DivergenceError::DivergenceError(std::size_t epoch, std::size_t batch, const std::string& message)
    : Error("DivergenceError",
            message + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
      epoch_(epoch),
      batch_(batch) {}

} // namespace phonocard
