#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace proact {

/// Pulls the first balanced JSON object out of free-form model text.
///
/// Models wrap their JSON in prose, markdown fences, or single quotes, and
/// sometimes leave raw newlines inside string values. The scan tolerates all
/// of that: it finds balanced {...} spans (quote- and escape-aware), repairs
/// single-quoted strings and raw control characters, and parses each span in
/// order. When `required_keys` is non-empty, the first span containing every
/// key wins; otherwise the first parseable span wins. Returns nullopt when
/// nothing qualifies.
std::optional<nlohmann::json> extract_first_json_object(
    const std::string& text,
    const std::vector<std::string>& required_keys = {});

}  // namespace proact
