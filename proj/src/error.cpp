#include "qoeplan/error.hpp"

namespace qoeplan {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::missing_column: return "MissingColumn";
        case Errc::non_contiguous_epochs: return "NonContiguousEpochs";
        case Errc::negative_value: return "NegativeValue";
        case Errc::empty_trace: return "EmptyTrace";
        case Errc::epoch_out_of_range: return "EpochOutOfRange";
        case Errc::prefix_too_short: return "PrefixTooShort";
        case Errc::diverged_training: return "DivergedTraining";
        case Errc::nonpositive_scale: return "NonpositiveScale";
        case Errc::weights_not_normalized: return "WeightsNotNormalized";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::infeasible_problem: return "InfeasibleProblem";
        case Errc::grid_too_large: return "GridTooLarge";
        case Errc::parse_error: return "ParseError";
        case Errc::io_error: return "IoError";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "UnknownError";
}

}  // namespace qoeplan
