#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adaptloop {

enum class Errc {
    invalid_argument,
    non_monotonic_id,
    invalid_run,
    malformed_store,
    schema_mismatch,
    io,
    out_of_range,
    empty_window,
    unknown_config,
    duplicate_service,
    unknown_service,
    clock_mismatch,
    no_streamed_time,
    empty_input,
    mixed_scenarios,
    preset_mismatch,
    invalid_config,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace adaptloop
