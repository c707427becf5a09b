#include "adaptloop/error.hpp"

namespace adaptloop {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::non_monotonic_id: return "NonMonotonicId";
        case Errc::invalid_run: return "InvalidRun";
        case Errc::malformed_store: return "MalformedStore";
        case Errc::schema_mismatch: return "SchemaMismatch";
        case Errc::io: return "IoError";
        case Errc::out_of_range: return "OutOfRange";
        case Errc::empty_window: return "EmptyWindow";
        case Errc::unknown_config: return "UnknownConfig";
        case Errc::duplicate_service: return "DuplicateService";
        case Errc::unknown_service: return "UnknownService";
        case Errc::clock_mismatch: return "ClockMismatch";
        case Errc::no_streamed_time: return "NoStreamedTime";
        case Errc::empty_input: return "EmptyInput";
        case Errc::mixed_scenarios: return "MixedScenarios";
        case Errc::preset_mismatch: return "PresetMismatch";
        case Errc::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace adaptloop
