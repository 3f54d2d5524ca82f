#include "apl/template_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apl/errors.hpp"

namespace apl {

using nlohmann::json;

namespace {

class ExprParser {
public:
    ExprParser(std::string_view text, const std::vector<Parameter>& params) : text_(text), params_(params) {}

    ParamExpr parse() {
        ParamExpr expr;
        skip_space();
        term(expr, 1.0, true);
        while (true) {
            skip_space();
            if (pos_ == text_.size()) break;
            const char op = text_[pos_];
            if (op != '+' && op != '-') fail("expected '+' or '-'");
            ++pos_;
            skip_space();
            term(expr, op == '-' ? -1.0 : 1.0, false);
        }
        return expr;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(0, "expression '" + std::string(text_) + "' at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    void term(ParamExpr& expr, double sign, bool first) {
        if (pos_ == text_.size()) fail("expected a term");
        const char c = text_[pos_];
        if (name_start(c)) {
            expr.terms.push_back({sign, name()});
            return;
        }
        const bool signed_number = first && (c == '-' || c == '+');
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || signed_number)) fail("expected a number or a name");
        const double value = sign * number();
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '*') {
            ++pos_;
            skip_space();
            if (pos_ == text_.size() || !name_start(text_[pos_])) fail("expected a parameter name after '*'");
            expr.terms.push_back({value, name()});
        } else {
            expr.constant += value;
        }
    }

    double number() {
        std::size_t start = pos_;
        double sign = 1.0;
        if (text_[pos_] == '-' || text_[pos_] == '+') {
            sign = text_[pos_] == '-' ? -1.0 : 1.0;
            ++pos_;
            start = pos_;
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + text_.size(), value);
        if (ec != std::errc() || ptr == text_.data() + start) fail("malformed number");
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return sign * value;
    }

    Index name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && name_char(text_[pos_])) ++pos_;
        const std::string_view id = text_.substr(start, pos_ - start);
        for (Index k = 0; k < params_.size(); ++k)
            if (params_[k].name == id) return k;
        fail("unknown parameter '" + std::string(id) + "'");
    }

    std::string_view text_;
    const std::vector<Parameter>& params_;
    std::size_t pos_ = 0;
};

std::vector<std::string> string_list(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_array()) throw ParseError(0, std::string("missing array '") + key + "'");
    std::vector<std::string> out;
    for (const auto& v : doc[key]) {
        if (!v.is_string()) throw ParseError(0, std::string("'") + key + "' must hold strings");
        out.push_back(v.get<std::string>());
    }
    if (out.empty()) throw ParseError(0, std::string("'") + key + "' is empty");
    return out;
}

ParamExpr entry(const json& v, const std::vector<Parameter>& params, const std::string& where) {
    if (v.is_number()) return ParamExpr::value(v.get<double>());
    if (v.is_string()) {
        try {
            return parse_expr(v.get<std::string>(), params);
        } catch (const ParseError& e) {
            throw ParseError(0, where + ": " + e.what());
        }
    }
    throw ParseError(0, where + ": entries must be expression strings or numbers");
}

const json& table(const json& doc, const char* key, std::size_t size) {
    if (!doc.contains(key) || !doc[key].is_array() || doc[key].size() != size)
        throw ParseError(0, std::string("table '") + key + "' must be an array of length " + std::to_string(size));
    return doc[key];
}

const json& sub(const json& v, std::size_t size, const std::string& where) {
    if (!v.is_array() || v.size() != size)
        throw ParseError(0, where + " must be an array of length " + std::to_string(size));
    return v;
}

}  // namespace

ParamExpr parse_expr(std::string_view text, const std::vector<Parameter>& params) {
    return ExprParser(text, params).parse();
}

std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string format_expr(const ParamExpr& expr, const std::vector<Parameter>& params) {
    std::string out;
    const bool has_constant = expr.constant != 0.0 || expr.terms.empty();
    if (has_constant) out = format_number(expr.constant);
    bool first = !has_constant;
    for (const auto& t : expr.terms) {
        const std::string& name = params.at(t.parameter).name;
        if (first) {
            out += t.coefficient == 1.0 ? name : format_number(t.coefficient) + "*" + name;
            first = false;
            continue;
        }
        out += t.coefficient < 0.0 ? " - " : " + ";
        const double mag = std::abs(t.coefficient);
        out += mag == 1.0 ? name : format_number(mag) + "*" + name;
    }
    return out;
}

ParametricTemplate template_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError(0, "template must be a JSON object");

    const auto states = string_list(doc, "states");
    const auto actions = string_list(doc, "actions");
    const auto observations = string_list(doc, "observations");
    if (!doc.contains("discount") || !doc["discount"].is_number()) throw ParseError(0, "missing number 'discount'");

    std::vector<Parameter> params;
    if (doc.contains("params")) {
        for (const auto& p : doc["params"]) {
            if (!p.contains("name") || !p["name"].is_string()) throw ParseError(0, "parameter without a name");
            Parameter param{p["name"].get<std::string>(), {}};
            auto pair = [&](const char* key) {
                const auto& v = p[key];
                if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                    throw ParseError(0, "parameter " + param.name + ": '" + key + "' must be [x, y]");
                return std::pair{v[0].get<double>(), v[1].get<double>()};
            };
            if (p.contains("beta")) {
                const auto [a, b] = pair("beta");
                param.prior = Prior::beta(a, b);
            } else if (p.contains("normal")) {
                const auto [mu, sigma] = pair("normal");
                param.prior = Prior::normal(mu, sigma);
            } else {
                throw ParseError(0, "parameter " + param.name + " needs a 'beta' or 'normal' prior");
            }
            params.push_back(std::move(param));
        }
    }

    const std::size_t S = states.size(), A = actions.size(), Z = observations.size();
    ParametricTemplate tpl(states, actions, observations, doc["discount"].get<double>(), params);

    const auto& T = table(doc, "transition", A);
    const auto& O = table(doc, "observation", A);
    const auto& R = table(doc, "reward", A);
    for (Index a = 0; a < A; ++a) {
        const std::string at = "[" + std::to_string(a) + "]";
        const auto& Ta = sub(T[a], S, "transition" + at);
        const auto& Oa = sub(O[a], S, "observation" + at);
        const auto& Ra = sub(R[a], S, "reward" + at);
        for (Index s = 0; s < S; ++s) {
            const std::string st = at + "[" + std::to_string(s) + "]";
            const auto& row = sub(Ta[s], S, "transition" + st);
            for (Index n = 0; n < S; ++n)
                tpl.set_transition(s, a, n, entry(row[n], params, "transition" + st + "[" + std::to_string(n) + "]"));
            const auto& orow = sub(Oa[s], Z, "observation" + st);
            for (Index z = 0; z < Z; ++z)
                tpl.set_observation(a, s, z, entry(orow[z], params, "observation" + st + "[" + std::to_string(z) + "]"));
            tpl.set_reward(s, a, entry(Ra[s], params, "reward" + st));
        }
    }
    const auto& init = table(doc, "initial", S);
    for (Index s = 0; s < S; ++s) tpl.set_initial(s, entry(init[s], params, "initial[" + std::to_string(s) + "]"));
    return tpl;
}

namespace {

using ojson = nlohmann::ordered_json;

bool is_flat(const ojson& v) {
    return std::none_of(v.begin(), v.end(), [](const ojson& e) { return e.is_structured(); });
}

// Like dump(2), but arrays and objects holding only scalars stay on one line.
void pretty(const ojson& v, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
    if (!v.is_structured() || v.empty()) {
        out += v.dump();
        return;
    }
    if (is_flat(v)) {
        out += v.is_array() ? "[" : "{";
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) out += ", ";
            first = false;
            if (v.is_object()) out += ojson(it.key()).dump() + ": ";
            out += it->dump();
        }
        out += v.is_array() ? "]" : "}";
        return;
    }
    out += v.is_array() ? "[\n" : "{\n";
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        if (v.is_object()) out += ojson(it.key()).dump() + ": ";
        pretty(*it, indent + 2, out);
    }
    out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + (v.is_array() ? "]" : "}");
}

}  // namespace

std::string template_to_json(const ParametricTemplate& tpl) {
    const std::size_t S = tpl.num_states(), A = tpl.num_actions(), Z = tpl.num_observations();
    const auto& params = tpl.params();
    ojson doc = ojson::object();
    doc["states"] = tpl.state_names();
    doc["actions"] = tpl.action_names();
    doc["observations"] = tpl.observation_names();
    doc["discount"] = tpl.discount();
    doc["params"] = ojson::array();
    for (const auto& p : params) {
        ojson entry{{"name", p.name}};
        entry[p.prior.is_beta() ? "beta" : "normal"] = {p.prior.a, p.prior.b};
        doc["params"].push_back(entry);
    }
    ojson T = ojson::array(), O = ojson::array(), R = ojson::array();
    for (Index a = 0; a < A; ++a) {
        ojson Ta = ojson::array(), Oa = ojson::array(), Ra = ojson::array();
        for (Index s = 0; s < S; ++s) {
            ojson row = ojson::array();
            for (Index n = 0; n < S; ++n) row.push_back(format_expr(tpl.transition(s, a, n), params));
            Ta.push_back(row);
            ojson orow = ojson::array();
            for (Index z = 0; z < Z; ++z) orow.push_back(format_expr(tpl.observation(a, s, z), params));
            Oa.push_back(orow);
            Ra.push_back(format_expr(tpl.reward(s, a), params));
        }
        T.push_back(Ta);
        O.push_back(Oa);
        R.push_back(Ra);
    }
    doc["transition"] = T;
    doc["observation"] = O;
    doc["reward"] = R;
    ojson init = ojson::array();
    for (Index s = 0; s < S; ++s) init.push_back(format_expr(tpl.initial(s), params));
    doc["initial"] = init;
    std::string out;
    pretty(doc, 0, out);
    return out + "\n";
}

ParametricTemplate load_template(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return template_from_json(buf.str());
}

void save_template(const ParametricTemplate& tpl, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write template file " + path.string());
    out << template_to_json(tpl);
}

ParametricTemplate resolve_template(const std::string& spec) {
    if (spec.empty() || spec == "builtin:tiger") return tiger_template();
    return load_template(spec);
}

}  // namespace apl
