#include "proact/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <stdexcept>

namespace proact::logging {

namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_write_mutex;
}  // namespace

Level level_from_string(const std::string& name) {
    if (name == "debug") return Level::debug;
    if (name == "info") return Level::info;
    if (name == "warn") return Level::warn;
    if (name == "error") return Level::error;
    throw std::invalid_argument("unknown log level: " + name);
}

std::string to_string(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
    }
    return "info";
}

void set_level(Level level) { g_level.store(level); }

Level current_level() { return g_level.load(); }

void emit(Level level, const std::string& event, const nlohmann::json& fields) {
    if (level < g_level.load()) return;
    nlohmann::ordered_json line;
    line["level"] = to_string(level);
    line["event"] = event;
    if (fields.is_object()) {
        for (const auto& [key, value] : fields.items()) line[key] = value;
    }
    std::lock_guard<std::mutex> lock(g_write_mutex);
    std::cerr << line.dump() << "\n";
}

}  // namespace proact::logging
