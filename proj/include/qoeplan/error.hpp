#ifndef QOEPLAN_ERROR_HPP
#define QOEPLAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qoeplan {

enum class Errc {
    missing_column,
    non_contiguous_epochs,
    negative_value,
    empty_trace,
    epoch_out_of_range,
    prefix_too_short,
    diverged_training,
    nonpositive_scale,
    weights_not_normalized,
    length_mismatch,
    infeasible_problem,
    grid_too_large,
    parse_error,
    io_error,
    invalid_argument,
};

const char* errc_name(Errc code);

// Domain error carrying a stable code plus a human-readable message that
// names the offending row/column/model where the contract requires it.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace qoeplan

#endif
