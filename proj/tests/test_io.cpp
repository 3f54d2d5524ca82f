#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "apl/errors.hpp"
#include "apl/model_family.hpp"
#include "apl/template_io.hpp"
#include "apl/trace_io.hpp"
#include "oracles.hpp"

using namespace apl;

#ifndef APL_DATA_DIR
#define APL_DATA_DIR "data"
#endif

TEST_CASE("expression parsing") {
    const std::vector<Parameter> params{{"p", Prior::beta(1, 1)}, {"q_2", Prior::beta(1, 1)}};
    CHECK(parse_expr("0.25", params) == ParamExpr::value(0.25));
    CHECK(parse_expr("-3", params) == ParamExpr::value(-3.0));
    CHECK(parse_expr("p", params) == ParamExpr::param(0));
    CHECK(parse_expr("1 - p", params) == ParamExpr::complement(0));
    CHECK(parse_expr("1-p", params) == ParamExpr::complement(0));
    CHECK(parse_expr("0.5 + 2*p - 0.5*q_2", params) == ParamExpr{0.5, {{2.0, 0}, {-0.5, 1}}});
    CHECK(parse_expr("1e-1 * q_2", params) == ParamExpr{0.0, {{0.1, 1}}});
    CHECK_THROWS_AS(parse_expr("r", params), ParseError);
    CHECK_THROWS_AS(parse_expr("p +", params), ParseError);
    CHECK_THROWS_AS(parse_expr("p * p", params), ParseError);
    CHECK_THROWS_AS(parse_expr("", params), ParseError);
    CHECK_THROWS_AS(parse_expr("1 - -p", params), ParseError);
}

TEST_CASE("expression formatting round-trips") {
    const std::vector<Parameter> params{{"p", Prior::beta(1, 1)}, {"r", Prior::normal(0, 1)}};
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        ParamExpr e;
        e.constant = (rng() % 3 == 0) ? 0.0 : 10.0 * uniform01(rng) - 5.0;
        const int terms = static_cast<int>(rng() % 3);
        for (int t = 0; t < terms; ++t) {
            double c = 4.0 * uniform01(rng) - 2.0;
            if (rng() % 2) c = (rng() % 2) ? 1.0 : -1.0;
            e.terms.push_back({c, static_cast<Index>(rng() % 2)});
        }
        CHECK(parse_expr(format_expr(e, params), params) == e);
    }
    CHECK(format_expr(ParamExpr::complement(0), params) == "1 - p");
    CHECK(format_expr(ParamExpr::value(10.0), params) == "10");
}

TEST_CASE("template documents") {
    SUBCASE("the shipped tiger file is the builtin template") {
        CHECK(load_template(std::filesystem::path(APL_DATA_DIR) / "tiger.json") == tiger_template());
    }
    SUBCASE("round trip") {
        const auto tpl = tiger_template();
        CHECK(template_from_json(template_to_json(tpl)) == tpl);
    }
    SUBCASE("builtin resolution") {
        CHECK(resolve_template("builtin:tiger") == tiger_template());
        CHECK(resolve_template("") == tiger_template());
    }
    SUBCASE("numbers are accepted in tables") {
        auto text = template_to_json(tiger_template());
        const auto pos = text.find("\"10\"");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 4, "10");
        CHECK(template_from_json(text) == tiger_template());
    }
    SUBCASE("malformed documents") {
        CHECK_THROWS_AS(template_from_json("{"), ParseError);
        CHECK_THROWS_AS(template_from_json("{\"states\": []}"), ParseError);
        auto text = template_to_json(tiger_template());
        text.replace(text.find("\"p_l\", \"1 - p_l\""), 16, "\"p_l\", \"1 - p_x\"");
        CHECK_THROWS_AS(template_from_json(text), ParseError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_template("/nonexistent/tiger.json"), ConfigError); }
}

TEST_CASE("trace files") {
    const auto tpl = tiger_template();
    const auto& A = tpl.action_names();
    const auto& Z = tpl.observation_names();
    SUBCASE("format") {
        DemoTrace t{{{0, 0}, {2, 1}}};
        CHECK(write_trace(t, A, Z) == "#apl-trace v1\n1\tlisten\thear-left\n2\topen-right\thear-right\n");
    }
    SUBCASE("write then read is the identity") {
        Rng rng(1);
        for (int i = 0; i < 1000; ++i) {
            DemoTrace t;
            const std::size_t L = rng() % 20;
            for (std::size_t k = 0; k < L; ++k) t.steps.push_back({rng() % 3, rng() % 2});
            CHECK(read_trace(write_trace(t, A, Z), A, Z) == t);
        }
    }
    SUBCASE("header only is the empty trace") { CHECK(read_trace("#apl-trace v1\n", A, Z).empty()); }
    SUBCASE("windows line endings") {
        CHECK(read_trace("#apl-trace v1\r\n1\tlisten\thear-left\r\n", A, Z).size() == 1);
    }
    SUBCASE("errors name the line") {
        try {
            read_trace("#apl-trace v1\n1\tlisten\thear-left\n2\tdance\thear-left\n", A, Z);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        CHECK_THROWS_AS(read_trace("1\tlisten\thear-left\n", A, Z), ParseError);
        CHECK_THROWS_AS(read_trace("#apl-trace v1\n1\tlisten\n", A, Z), ParseError);
        CHECK_THROWS_AS(read_trace("#apl-trace v1\n2\tlisten\thear-left\n", A, Z), ParseError);
        CHECK_THROWS_AS(read_trace("#apl-trace v1\n1\tlisten\thear-up\n", A, Z), ParseError);
    }
    SUBCASE("files") {
        const auto path = std::filesystem::temp_directory_path() / "apl_trace_test.tsv";
        DemoTrace t{{{0, 1}, {1, 0}, {0, 0}}};
        save_trace(t, tpl, path);
        CHECK(load_trace(tpl, path) == t);
        std::filesystem::remove(path);
    }
}
