#ifndef SONOLOC_ERRORS_HPP
#define SONOLOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sonoloc {

// Base for all library errors. `code()` is a stable machine-readable
// identifier used by the CLI when emitting error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define SONOLOC_DEFINE_ERROR(Name, code_str)                 \
    class Name : public Error {                              \
    public:                                                  \
        explicit Name(const std::string& what)               \
            : Error(code_str, what) {}                       \
    }

SONOLOC_DEFINE_ERROR(InvalidParams, "invalid_params");
SONOLOC_DEFINE_ERROR(OutOfRange, "out_of_range");
SONOLOC_DEFINE_ERROR(InsufficientInput, "insufficient_input");
SONOLOC_DEFINE_ERROR(InvalidSpec, "invalid_spec");
SONOLOC_DEFINE_ERROR(WrongLevel, "wrong_level");
SONOLOC_DEFINE_ERROR(NoDetection, "no_detection");
SONOLOC_DEFINE_ERROR(EmptyCandidates, "empty_candidates");
SONOLOC_DEFINE_ERROR(DegenerateGeometry, "degenerate_geometry");
SONOLOC_DEFINE_ERROR(NonConvergence, "non_convergence");
SONOLOC_DEFINE_ERROR(NotConverged, "not_converged");
SONOLOC_DEFINE_ERROR(NoAnchor, "no_anchor");
SONOLOC_DEFINE_ERROR(AmbiguousEpoch, "ambiguous_epoch");
SONOLOC_DEFINE_ERROR(NegativeRange, "negative_range");
SONOLOC_DEFINE_ERROR(IoError, "io_error");
SONOLOC_DEFINE_ERROR(ConfigError, "config_error");

#undef SONOLOC_DEFINE_ERROR

}  // namespace sonoloc

#endif
