#pragma once

#include <stdexcept>
#include <string>

namespace erp {

enum class ErrorCode {
    InvalidArgument,
    NoObservablePixels,
    InvalidModel,
    DegenerateFit,
    InvalidReference,
    CalibrationFailed,
    RateInfeasible,
    BootstrapRequired,
    FormatError,
    ReconstructionImpossible,
    BudgetViolation,
    Usage,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the simulator, the CLI) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace erp
