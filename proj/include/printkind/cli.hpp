#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace printkind {

// Built-in defaults, one section per subcommand plus the global keys. printkind.json at the repo
// root mirrors this.
nlohmann::ordered_json default_config();

// Deep merge: objects merge key by key, anything else in `overlay` replaces `base`.
void merge_config(nlohmann::ordered_json& base, const nlohmann::ordered_json& overlay);

// Closest candidate within a small edit distance, or empty.
std::string suggest(std::string_view token, std::span<const std::string> candidates);

// args[0] is the program name. Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 numeric failure.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

} // namespace printkind
