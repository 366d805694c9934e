#pragma once

#include <functional>
#include <string_view>

namespace acnnl {

// Non-fatal numerical warnings (rank deficiency, solver fallbacks) are routed
// through a process-wide handler. The default writes to stderr.
using DiagnosticHandler = std::function<void(std::string_view)>;

// Installs `handler` and returns the previous one. Passing an empty function
// restores the default.
DiagnosticHandler set_diagnostic_handler(DiagnosticHandler handler);

void emit_warning(std::string_view message);

}  // namespace acnnl
