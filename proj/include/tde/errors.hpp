#pragma once

// Shared error type for user-facing configuration input (model files, graph
// files, CLI flag values). `field` names the offending key so callers can
// report it without parsing the message.

#include <stdexcept>
#include <string>
#include <utility>

namespace tde {

struct ConfigError : std::runtime_error {
    ConfigError(std::string field_, const std::string& message)
        : std::runtime_error("config field '" + field_ + "': " + message),
          field(std::move(field_)) {}
    std::string field;
};

} // namespace tde
