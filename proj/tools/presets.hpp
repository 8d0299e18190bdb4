#pragma once

#include <span>
#include <string_view>

namespace nlobs::cli {

struct Preset {
    std::string_view name;
    std::string_view json;
};

/// Bundled configs, sorted by name.
std::span<const Preset> presets() noexcept;

}  // namespace nlobs::cli
