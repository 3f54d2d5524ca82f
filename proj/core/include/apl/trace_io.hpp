#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apl/model_family.hpp"
#include "apl/pomdp.hpp"

namespace apl {

/// First line of every trace file.
inline constexpr std::string_view kTraceHeader = "#apl-trace v1";

/**
 * Text form of a trace: the header line, then one line per step
 * `<t>\t<action-name>\t<observation-name>` with t counting from 1.
 */
std::string write_trace(const DemoTrace& trace, const std::vector<std::string>& actions,
                        const std::vector<std::string>& observations);

/// Throws ParseError naming the offending line.
DemoTrace read_trace(std::string_view text, const std::vector<std::string>& actions,
                     const std::vector<std::string>& observations);

void save_trace(const DemoTrace& trace, const ParametricTemplate& tpl, const std::filesystem::path& path);
DemoTrace load_trace(const ParametricTemplate& tpl, const std::filesystem::path& path);

}  // namespace apl
