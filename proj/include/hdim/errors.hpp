#pragma once

#include <stdexcept>
#include <string>

namespace hdim {

// Every failure raised by the library carries a stable name so the CLI can
// report it and map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

    // Configuration errors exit with 2, numeric failures with 3.
    virtual bool is_config_error() const noexcept { return false; }

private:
    std::string name_;
};

#define HDIM_DEFINE_ERROR(Type)                                            \
    class Type : public Error {                                            \
    public:                                                                \
        explicit Type(const std::string& what) : Error(#Type, what) {}     \
    }

HDIM_DEFINE_ERROR(DomainError);
HDIM_DEFINE_ERROR(GeometryError);
HDIM_DEFINE_ERROR(ConvergenceError);
HDIM_DEFINE_ERROR(RootError);
HDIM_DEFINE_ERROR(EmptyPreimage);
HDIM_DEFINE_ERROR(NumericError);
HDIM_DEFINE_ERROR(ContractionError);
HDIM_DEFINE_ERROR(NoSignChange);
HDIM_DEFINE_ERROR(MonotonicityError);
HDIM_DEFINE_ERROR(DegenerateBound);
HDIM_DEFINE_ERROR(ValidationError);
HDIM_DEFINE_ERROR(ResolutionError);
HDIM_DEFINE_ERROR(ScaleError);

#undef HDIM_DEFINE_ERROR

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
    bool is_config_error() const noexcept override { return true; }
};

}  // namespace hdim
