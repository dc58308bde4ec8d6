#pragma once

#include <functional>
#include <string>

namespace splatsim {

/// Receives non-fatal warnings. The default handler prints "warning: <msg>" to stderr.
using WarningHandler = std::function<void(const std::string&)>;

/// Installs `handler` (an empty function restores the default) and returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace splatsim
