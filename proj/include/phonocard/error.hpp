#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phonocard {

/// Base class for every failure raised by the library. `kind()` is the
/// stable error-class name the CLI prints in its diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message);

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define PHONOCARD_DECLARE_ERROR(Name)                                      \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

PHONOCARD_DECLARE_ERROR(IoError);
PHONOCARD_DECLARE_ERROR(FormatError);
PHONOCARD_DECLARE_ERROR(UnsupportedChannels);
PHONOCARD_DECLARE_ERROR(EmptyRecording);
PHONOCARD_DECLARE_ERROR(LabelError);
PHONOCARD_DECLARE_ERROR(DuplicateRecord);
PHONOCARD_DECLARE_ERROR(InsufficientData);
PHONOCARD_DECLARE_ERROR(UpsampleUnsupported);
PHONOCARD_DECLARE_ERROR(SignalTooShort);
PHONOCARD_DECLARE_ERROR(NoCyclesFound);
PHONOCARD_DECLARE_ERROR(DomainError);
PHONOCARD_DECLARE_ERROR(ResolutionError);
PHONOCARD_DECLARE_ERROR(ShapeError);
PHONOCARD_DECLARE_ERROR(DegenerateBatch);
PHONOCARD_DECLARE_ERROR(StateError);
PHONOCARD_DECLARE_ERROR(ConfigError);
PHONOCARD_DECLARE_ERROR(ClassMissing);

#undef PHONOCARD_DECLARE_ERROR

/// Raised when the training loss becomes non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t epoch, std::size_t batch, const std::string& message);

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

} // namespace phonocard
