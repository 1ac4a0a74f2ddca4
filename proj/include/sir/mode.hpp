#pragma once

#include <string>
#include <string_view>

namespace sir {

/// sir: deep part over scale-fixed inputs plus the log-Kronecker wide part.
/// deep_only: the baseline, one deep stack over every item feature.
enum class Mode { sir, deep_only };

std::string to_string(Mode mode);
Mode parse_mode(std::string_view text);

}  // namespace sir
