#pragma once
// Process-wide diagnostic sink. Defaults to stderr; tests swap in a collector.

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

namespace fdescent::log {

enum class Level { debug, info, warn, error };

inline std::string_view to_string(Level l) noexcept {
    switch (l) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
    }
    return "?";
}

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {
struct State {
    std::mutex mu;
    Level threshold = Level::warn;
    Sink sink = [](Level l, std::string_view msg) { std::cerr << "[" << to_string(l) << "] " << msg << "\n"; };
};
inline State& state() {
    static State s;
    return s;
}
}  // namespace detail

inline void set_threshold(Level l) {
    std::lock_guard lock(detail::state().mu);
    detail::state().threshold = l;
}

// Returns the previous sink so callers can restore it.
inline Sink set_sink(Sink s) {
    std::lock_guard lock(detail::state().mu);
    return std::exchange(detail::state().sink, std::move(s));
}

inline void write(Level l, std::string_view msg) {
    auto& st = detail::state();
    std::lock_guard lock(st.mu);
    if (l < st.threshold || !st.sink) return;
    st.sink(l, msg);
}

inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }

}  // namespace fdescent::log
