#include "apl/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "apl/errors.hpp"

namespace apl {

namespace {

Index lookup(std::string_view name, const std::vector<std::string>& names, std::size_t line, const char* kind) {
    for (Index i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw ParseError(line, std::string("unknown ") + kind + " name '" + std::string(name) + "'");
}

}  // namespace

std::string write_trace(const DemoTrace& trace, const std::vector<std::string>& actions,
                        const std::vector<std::string>& observations) {
    std::string out(kTraceHeader);
    out += '\n';
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const auto& step = trace.steps[t];
        out += std::to_string(t + 1);
        out += '\t';
        out += actions.at(step.action);
        out += '\t';
        out += observations.at(step.observation);
        out += '\n';
    }
    return out;
}

DemoTrace read_trace(std::string_view text, const std::vector<std::string>& actions,
                     const std::vector<std::string>& observations) {
    DemoTrace trace;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (!saw_header) {
            if (line != kTraceHeader) throw ParseError(line_no, "expected header '" + std::string(kTraceHeader) + "'");
            saw_header = true;
            continue;
        }
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos || line.find('\t', tab2 + 1) != std::string_view::npos)
            throw ParseError(line_no, "expected three tab-separated fields");
        const auto t_field = line.substr(0, tab1);
        std::size_t t = 0;
        const auto [ptr, ec] = std::from_chars(t_field.data(), t_field.data() + t_field.size(), t);
        if (ec != std::errc() || ptr != t_field.data() + t_field.size())
            throw ParseError(line_no, "malformed step index '" + std::string(t_field) + "'");
        if (t != trace.size() + 1)
            throw ParseError(line_no, "step index " + std::to_string(t) + " out of sequence");
        const Index a = lookup(line.substr(tab1 + 1, tab2 - tab1 - 1), actions, line_no, "action");
        const Index z = lookup(line.substr(tab2 + 1), observations, line_no, "observation");
        trace.steps.push_back({a, z});
    }
    if (!saw_header) throw ParseError(1, "empty trace file");
    return trace;
}

void save_trace(const DemoTrace& trace, const ParametricTemplate& tpl, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file " + path.string());
    out << write_trace(trace, tpl.action_names(), tpl.observation_names());
}

DemoTrace load_trace(const ParametricTemplate& tpl, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_trace(buf.str(), tpl.action_names(), tpl.observation_names());
}

}  // namespace apl
