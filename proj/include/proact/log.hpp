#pragma once

#include <string>

#include "json.hpp"

// Structured line-JSON logging to stderr: one object per line with at least
// {"level", "event"} plus caller-supplied fields. Kept deliberately tiny —
// the gateway and harness just need greppable operational breadcrumbs.
namespace proact::logging {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

Level level_from_string(const std::string& name);  // throws std::invalid_argument
std::string to_string(Level level);

void set_level(Level level);
Level current_level();

/// Emits one JSON line to stderr when `level` clears the threshold.
/// `fields` must be an object (or null for none).
void emit(Level level, const std::string& event,
          const nlohmann::json& fields = nullptr);

}  // namespace proact::logging
