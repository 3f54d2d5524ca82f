#include "apl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "apl/errors.hpp"
#include "apl/random.hpp"
#include "apl/template_io.hpp"

namespace apl {

using nlohmann::json;

namespace {

constexpr std::uint64_t kExpertLabel = 0xe0;
constexpr std::uint64_t kEvalLabel = 0xe1;
constexpr std::uint64_t kDemoLabel = 0xd0;

constexpr Method kAllMethods[] = {Method::Em, Method::Gibbs, Method::Map, Method::Mcmc};

std::uint64_t method_label(Method m) { return static_cast<std::uint64_t>(m) + 1; }

ParamVector sample_sd_or_empty(const SampleSet& s) {
    return s.size() >= 2 ? s.sd() : ParamVector(s.samples.empty() ? 0 : s.samples.front().size(), 0.0);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::Map: return "map";
        case Method::Mcmc: return "mcmc";
        case Method::Em: return "em";
        case Method::Gibbs: return "gibbs";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods)
        if (method_name(m) == name) return m;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected map, mcmc, em or gibbs)");
}

bool is_sampler(Method m) noexcept { return m == Method::Mcmc || m == Method::Gibbs; }

bool uses_action_likelihood(Method m) noexcept { return m == Method::Mcmc || m == Method::Map; }

ExperimentConfig ExperimentConfig::desk_scale() { return {}; }

ExperimentConfig ExperimentConfig::full_scale() {
    ExperimentConfig c;
    c.demos = 100;
    c.mcmc = McmcConfig{1000, 100, 10, 0, false};
    c.eval_steps = 100000;
    return c;
}

void ExperimentConfig::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be a finite value >= 0");
    if (demo_length == 0) throw ConfigError("demo length must be positive");
    if (demos == 0) throw ConfigError("number of demos must be positive");
    if (methods.empty()) throw ConfigError("no estimation methods selected");
    if (eval_steps == 0 || expert_eval_steps == 0) throw ConfigError("evaluation steps must be positive");
    if (!(histogram_bin_width > 0.0)) throw ConfigError("histogram bin width must be positive");
    mcmc.validate();
}

std::size_t Histogram::total() const noexcept {
    std::size_t n = less;
    for (auto c : counts) n += c;
    return n;
}

Histogram make_histogram(std::span<const double> values, double min, double bin_width) {
    Histogram h;
    h.min = min;
    h.bin_width = bin_width;
    for (double v : values) {
        if (!(v >= min)) {
            ++h.less;
            continue;
        }
        auto bin = static_cast<std::size_t>(std::floor((v - min) / bin_width));
        if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
        ++h.counts[bin];
    }
    return h;
}

const MethodSummary* ResultsBundle::summary(Method m) const noexcept {
    for (const auto& s : summaries)
        if (s.method == m) return &s;
    return nullptr;
}

std::vector<const RunRecord*> ResultsBundle::runs_of(Method m) const {
    std::vector<const RunRecord*> out;
    for (const auto& r : runs)
        if (r.method == m) out.push_back(&r);
    return out;
}

std::size_t count_episodes(const DemoTrace& trace, Index listen_action) {
    return static_cast<std::size_t>(std::count_if(trace.steps.begin(), trace.steps.end(),
                                                  [&](const Step& s) { return s.action != listen_action; }));
}

RunRecord run_estimator(const ParametricTemplate& tpl, const DemoTrace& trace, Method method,
                        const ExperimentConfig& config, std::uint64_t seed, const Pomdp* environment) {
    RunRecord rec;
    rec.method = method;
    rec.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const PolicyConfig pcfg{config.beta};
    try {
        std::vector<ParamVector> plan_over;
        switch (method) {
            case Method::Map: {
                auto r = map_estimate(tpl, trace, pcfg, config.map, config.solver);
                rec.estimate = r.estimate;
                rec.iterations = r.evaluations;
                plan_over = {r.estimate};
                break;
            }
            case Method::Em: {
                auto r = iohmm_em(tpl, trace, config.em);
                rec.estimate = r.estimate;
                rec.iterations = r.iterations;
                plan_over = {r.estimate};
                break;
            }
            case Method::Mcmc:
            case Method::Gibbs: {
                McmcConfig mc = config.mcmc;
                mc.seed = seed;
                mc.keep_value_functions = false;
                SampleSet s = method == Method::Mcmc ? mcmc_posterior(tpl, trace, pcfg, mc, config.solver)
                                                     : iohmm_gibbs(tpl, trace, mc);
                rec.estimate = s.mean();
                rec.sample_sd = sample_sd_or_empty(s);
                rec.acceptance_rate = s.acceptance_rate();
                rec.samples = s.samples;
                plan_over = std::move(s.samples);
                break;
            }
        }
        if (environment != nullptr) {
            PosteriorPolicy policy = plan_posterior(plan_over, tpl, config.solver);
            auto sim = simulate(*environment, policy, config.eval_steps, derive_seed(seed, {kEvalLabel}), false);
            rec.average_reward = sim.average_reward;
            rec.reward_se = sim.standard_error;
            rec.belief_resets = sim.belief_resets;
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    rec.wall_seconds = seconds_since(t0);
    return rec;
}

void summarize(ResultsBundle& bundle) {
    bundle.summaries.clear();
    const std::size_t K = bundle.param_names.size();
    const auto& truth = bundle.config.true_theta;
    for (Method m : bundle.config.methods) {
        MethodSummary s;
        s.method = m;
        s.mean_error.assign(K, 0.0);
        s.rmse.assign(K, 0.0);
        if (is_sampler(m)) s.sd_samples.assign(K, 0.0);
        s.estimable.assign(K, true);
        if (!uses_action_likelihood(m))
            for (std::size_t k = 0; k < K && k < bundle.reward_only.size(); ++k) s.estimable[k] = !bundle.reward_only[k];
        std::size_t ok = 0;
        for (const RunRecord* r : bundle.runs_of(m)) {
            ++s.runs;
            if (!r->ok || r->estimate.size() != K) {
                ++s.failures;
                continue;
            }
            ++ok;
            for (std::size_t k = 0; k < K; ++k) {
                const double e = r->estimate[k] - truth[k];
                s.mean_error[k] += e;
                s.rmse[k] += e * e;
                if (is_sampler(m) && r->sample_sd.size() == K) s.sd_samples[k] += r->sample_sd[k];
            }
            s.rewards.push_back(r->average_reward);
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (ok > 0) {
                s.mean_error[k] /= static_cast<double>(ok);
                s.rmse[k] = std::sqrt(s.rmse[k] / static_cast<double>(ok));
                if (is_sampler(m)) s.sd_samples[k] /= static_cast<double>(ok);
            } else {
                s.mean_error[k] = s.rmse[k] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        s.histogram = make_histogram(s.rewards, bundle.config.histogram_min, bundle.config.histogram_bin_width);
        bundle.summaries.push_back(std::move(s));
    }
}

ResultsBundle run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
    config.validate();
    const ParametricTemplate tpl = resolve_template(config.model);
    if (auto problems = validate_template(tpl); !problems.empty())
        throw InvalidModel("template: " + problems.front());
    if (config.true_theta.size() != tpl.params().size())
        throw ConfigError("true theta has " + std::to_string(config.true_theta.size()) + " entries, template has " +
                          std::to_string(tpl.params().size()) + " parameters");

    ResultsBundle bundle;
    bundle.config = config;
    for (const auto& p : tpl.params()) bundle.param_names.push_back(p.name);
    for (Index k = 0; k < tpl.params().size(); ++k) bundle.reward_only.push_back(is_reward_only(tpl, k));
    bundle.prior_mean = prior_mean(tpl);
    for (std::size_t k = 0; k < bundle.prior_mean.size(); ++k)
        bundle.prior_mean_error.push_back(bundle.prior_mean[k] - config.true_theta[k]);

    const Pomdp truth = instantiate(tpl, config.true_theta);
    const ValueFunction vf_true = solve(truth, config.solver);
    const PolicyConfig pcfg{config.beta};
    {
        auto expert = make_softmax_policy(truth, vf_true, pcfg);
        auto sim = simulate(truth, *expert, config.expert_eval_steps, derive_seed(config.seed, {kExpertLabel}), false);
        bundle.expert_reward = sim.average_reward;
        bundle.expert_se = sim.standard_error;
    }

    std::vector<DemoTrace> demos;
    for (std::size_t d = 0; d < config.demos; ++d) {
        demos.push_back(generate_demo(truth, vf_true, pcfg, config.demo_length, derive_seed(config.seed, {kDemoLabel, d})));
        bundle.demo_episodes.push_back(count_episodes(demos.back()));
    }

    struct Cell {
        std::size_t demo;
        Method method;
    };
    std::vector<Cell> cells;
    for (std::size_t d = 0; d < config.demos; ++d)
        for (Method m : config.methods) cells.push_back({d, m});
    bundle.runs.resize(cells.size());

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell& c = cells[i];
            const std::uint64_t seed = derive_seed(config.seed, {c.demo, method_label(c.method)});
            RunRecord rec = run_estimator(tpl, demos[c.demo], c.method, config, seed, &truth);
            rec.demo = c.demo;
            bundle.runs[i] = std::move(rec);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(bundle.runs[i]);
            }
        }
    };
    std::size_t threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    threads = std::min(threads, cells.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    summarize(bundle);
    return bundle;
}

// ---------------------------------------------------------------------------
// Text report

namespace {

std::string column_label(Method m) {
    switch (m) {
        case Method::Em: return "EM";
        case Method::Gibbs: return "IO-HMM sampler";
        case Method::Map: return "MAP";
        case Method::Mcmc: return "Proposed sampler";
    }
    return "?";
}

std::string fixed(double x, int digits) {
    if (std::isnan(x)) return "nan";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

}  // namespace

std::string report_table(const ResultsBundle& bundle) {
    const int w0 = 12, w1 = 14, w = 18;
    std::ostringstream os;
    os << std::left << std::setw(w0) << "parameter" << std::setw(w1) << "statistic" << std::right << std::setw(w)
       << "prior mean";
    for (const auto& s : bundle.summaries) os << std::setw(w) << column_label(s.method);
    os << '\n';

    const std::size_t K = bundle.param_names.size();
    for (std::size_t k = 0; k < K; ++k) {
        const int digits = std::abs(bundle.config.true_theta[k]) > 1.0 ? 2 : 3;
        auto row = [&](const char* label, auto value_of, bool prior_col) {
            os << std::left << std::setw(w0) << (label == std::string("mean error") ? bundle.param_names[k] : "")
               << std::setw(w1) << label << std::right << std::setw(w)
               << (prior_col ? fixed(bundle.prior_mean_error[k], digits) : "");
            for (const auto& s : bundle.summaries) os << std::setw(w) << value_of(s);
            os << '\n';
        };
        auto na = [&](const MethodSummary& s) {
            return k < s.estimable.size() && !s.estimable[k];
        };
        row("mean error", [&](const MethodSummary& s) { return na(s) ? std::string("n/a") : fixed(s.mean_error[k], digits); },
            true);
        row("RMSE", [&](const MethodSummary& s) { return na(s) ? std::string("n/a") : fixed(s.rmse[k], digits); },
            false);
        bool any_sampler = std::any_of(bundle.summaries.begin(), bundle.summaries.end(),
                                       [](const MethodSummary& s) { return is_sampler(s.method); });
        if (any_sampler)
            row("s.d. samples", [&](const MethodSummary& s) {
                if (!is_sampler(s.method)) return std::string();
                return na(s) ? std::string("n/a") : fixed(s.sd_samples[k], digits);
            }, false);
    }

    os << '\n' << "expert average reward " << fixed(bundle.expert_reward, 3) << " +- "
       << fixed(bundle.expert_se, 3) << '\n';
    os << std::left << std::setw(w) << "method" << std::right << std::setw(10) << "runs" << std::setw(10)
       << "failures" << std::setw(14) << "mean reward" << std::setw(14) << "min reward" << '\n';
    for (const auto& s : bundle.summaries) {
        double mean = 0.0, lo = std::numeric_limits<double>::quiet_NaN();
        for (double r : s.rewards) {
            mean += r;
            if (!(r >= lo)) lo = r;
        }
        if (!s.rewards.empty()) mean /= static_cast<double>(s.rewards.size());
        else mean = std::numeric_limits<double>::quiet_NaN();
        os << std::left << std::setw(w) << column_label(s.method) << std::right << std::setw(10) << s.runs
           << std::setw(10) << s.failures << std::setw(14) << fixed(mean, 3) << std::setw(14) << fixed(lo, 3) << '\n';
    }
    for (const auto& r : bundle.runs)
        if (!r.ok) os << "failed: demo " << r.demo << ' ' << method_name(r.method) << ": " << r.error << '\n';
    return os.str();
}

std::string report_histogram_csv(const ResultsBundle& bundle) {
    std::ostringstream os;
    os << "method,bin_lower,bin_upper,count\n";
    for (const auto& s : bundle.summaries) {
        const auto& h = s.histogram;
        os << method_name(s.method) << ",-inf," << format_number(h.min) << ',' << h.less << '\n';
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double lo = h.min + static_cast<double>(i) * h.bin_width;
            os << method_name(s.method) << ',' << format_number(lo) << ',' << format_number(lo + h.bin_width) << ','
               << h.counts[i] << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json solver_to_json(const SolverConfig& c) {
    return {{"precision", c.precision},
            {"max_iterations", c.max_iterations},
            {"time_budget", c.time_budget},
            {"belief_set_limit", c.belief_set_limit},
            {"seed", c.seed},
            {"min_belief_distance", c.min_belief_distance},
            {"max_enumerated_branches", c.max_enumerated_branches}};
}

SolverConfig solver_from_json(const json& j) {
    SolverConfig c;
    c.precision = j.value("precision", c.precision);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.time_budget = j.value("time_budget", c.time_budget);
    c.belief_set_limit = j.value("belief_set_limit", c.belief_set_limit);
    c.seed = j.value("seed", c.seed);
    c.min_belief_distance = j.value("min_belief_distance", c.min_belief_distance);
    c.max_enumerated_branches = j.value("max_enumerated_branches", c.max_enumerated_branches);
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
    json map{{"max_evaluations", c.map.max_evaluations},
             {"step_tolerance", c.map.step_tolerance},
             {"probability_margin", c.map.probability_margin},
             {"normal_sigmas", c.map.normal_sigmas}};
    if (c.map.start) map["start"] = *c.map.start;
    return {{"model", c.model},
            {"true_theta", c.true_theta},
            {"beta", c.beta},
            {"demo_length", c.demo_length},
            {"demos", c.demos},
            {"methods", methods},
            {"mcmc", {{"sweeps", c.mcmc.total_sweeps}, {"burn_in", c.mcmc.burn_in}, {"thin", c.mcmc.thin}}},
            {"map", map},
            {"em", {{"max_iterations", c.em.max_iterations}, {"tolerance", c.em.tolerance}}},
            {"solver", solver_to_json(c.solver)},
            {"eval_steps", c.eval_steps},
            {"expert_eval_steps", c.expert_eval_steps},
            {"seed", c.seed},
            {"threads", c.threads},
            {"histogram_min", c.histogram_min},
            {"histogram_bin_width", c.histogram_bin_width}};
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.model = j.value("model", c.model);
    c.true_theta = j.value("true_theta", c.true_theta);
    c.beta = j.value("beta", c.beta);
    c.demo_length = j.value("demo_length", c.demo_length);
    c.demos = j.value("demos", c.demos);
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("mcmc")) {
        const auto& m = j.at("mcmc");
        c.mcmc.total_sweeps = m.value("sweeps", c.mcmc.total_sweeps);
        c.mcmc.burn_in = m.value("burn_in", c.mcmc.burn_in);
        c.mcmc.thin = m.value("thin", c.mcmc.thin);
    }
    if (j.contains("map")) {
        const auto& m = j.at("map");
        c.map.max_evaluations = m.value("max_evaluations", c.map.max_evaluations);
        c.map.step_tolerance = m.value("step_tolerance", c.map.step_tolerance);
        c.map.probability_margin = m.value("probability_margin", c.map.probability_margin);
        c.map.normal_sigmas = m.value("normal_sigmas", c.map.normal_sigmas);
        if (m.contains("start")) c.map.start = m.at("start").get<ParamVector>();
    }
    if (j.contains("em")) {
        const auto& m = j.at("em");
        c.em.max_iterations = m.value("max_iterations", c.em.max_iterations);
        c.em.tolerance = m.value("tolerance", c.em.tolerance);
    }
    if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
    c.eval_steps = j.value("eval_steps", c.eval_steps);
    c.expert_eval_steps = j.value("expert_eval_steps", c.expert_eval_steps);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.histogram_min = j.value("histogram_min", c.histogram_min);
    c.histogram_bin_width = j.value("histogram_bin_width", c.histogram_bin_width);
    return c;
}

json record_json(const RunRecord& r, const std::vector<std::string>* names) {
    json j{{"demo", r.demo},
           {"method", std::string(method_name(r.method))},
           {"seed", r.seed},
           {"ok", r.ok},
           {"estimate", r.estimate},
           {"estimate_error", r.estimate_error},
           {"average_reward", r.average_reward},
           {"reward_se", r.reward_se},
           {"belief_resets", r.belief_resets},
           {"wall_seconds", r.wall_seconds},
           {"iterations", r.iterations}};
    if (!r.ok) j["error"] = r.error;
    if (names != nullptr) j["parameters"] = *names;
    if (is_sampler(r.method)) {
        j["samples"] = r.samples;
        j["sample_sd"] = r.sample_sd;
        j["acceptance_rate"] = r.acceptance_rate;
    }
    return j;
}

RunRecord record_from(const json& j) {
    RunRecord r;
    r.demo = j.value("demo", std::size_t{0});
    r.method = parse_method(j.at("method").get<std::string>());
    r.seed = j.value("seed", std::uint64_t{0});
    r.ok = j.value("ok", false);
    r.error = j.value("error", std::string());
    r.estimate = j.value("estimate", ParamVector{});
    r.estimate_error = j.value("estimate_error", ParamVector{});
    r.samples = j.value("samples", std::vector<ParamVector>{});
    r.sample_sd = j.value("sample_sd", ParamVector{});
    r.average_reward = j.value("average_reward", 0.0);
    r.reward_se = j.value("reward_se", 0.0);
    r.belief_resets = j.value("belief_resets", std::size_t{0});
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.acceptance_rate = j.value("acceptance_rate", 0.0);
    r.iterations = j.value("iterations", std::size_t{0});
    return r;
}

json parse_or_throw(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

std::string bundle_to_json(const ResultsBundle& b) {
    json runs = json::array();
    for (const auto& r : b.runs) {
        RunRecord copy = r;
        if (copy.ok && copy.estimate_error.empty()) {
            for (std::size_t k = 0; k < copy.estimate.size() && k < b.config.true_theta.size(); ++k)
                copy.estimate_error.push_back(copy.estimate[k] - b.config.true_theta[k]);
        }
        runs.push_back(record_json(copy, nullptr));
    }
    json summaries = json::array();
    for (const auto& s : b.summaries) {
        json h{{"min", s.histogram.min},
               {"bin_width", s.histogram.bin_width},
               {"less", s.histogram.less},
               {"counts", s.histogram.counts}};
        json js{{"method", std::string(method_name(s.method))},
                {"runs", s.runs},
                {"failures", s.failures},
                {"mean_error", s.mean_error},
                {"rmse", s.rmse},
                {"estimable", s.estimable},
                {"rewards", s.rewards},
                {"histogram", h}};
        if (is_sampler(s.method)) js["sd_samples"] = s.sd_samples;
        summaries.push_back(js);
    }
    json j{{"format", "apl-results v1"},
           {"config", config_to_json(b.config)},
           {"parameters", b.param_names},
           {"reward_only", b.reward_only},
           {"prior_mean", b.prior_mean},
           {"prior_mean_error", b.prior_mean_error},
           {"expert_reward", b.expert_reward},
           {"expert_se", b.expert_se},
           {"demo_episodes", b.demo_episodes},
           {"runs", runs},
           {"summaries", summaries}};
    return j.dump(2);
}

ResultsBundle bundle_from_json(std::string_view text) {
    const json j = parse_or_throw(text);
    try {
        ResultsBundle b;
        b.config = config_from_json(j.at("config"));
        b.param_names = j.at("parameters").get<std::vector<std::string>>();
        b.reward_only = j.value("reward_only", std::vector<bool>{});
        b.prior_mean = j.value("prior_mean", ParamVector{});
        b.prior_mean_error = j.value("prior_mean_error", ParamVector{});
        b.expert_reward = j.value("expert_reward", 0.0);
        b.expert_se = j.value("expert_se", 0.0);
        b.demo_episodes = j.value("demo_episodes", std::vector<std::size_t>{});
        for (const auto& r : j.at("runs")) b.runs.push_back(record_from(r));
        summarize(b);
        return b;
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("malformed results bundle: ") + e.what());
    }
}

std::string record_to_json(const RunRecord& record, const std::vector<std::string>& param_names) {
    return record_json(record, &param_names).dump(2);
}

RunRecord record_from_json(std::string_view text) {
    const json j = parse_or_throw(text);
    try {
        return record_from(j);
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("malformed estimate: ") + e.what());
    }
}

std::string policy_to_json(const PosteriorPolicy& policy, std::span<const ParamVector> samples,
                           const std::vector<std::string>& param_names) {
    json alphas = json::array();
    for (const auto& a : policy.value_function().alpha_vectors())
        alphas.push_back(json{{"action", a.action}, {"values", a.values}});
    json j{{"format", "apl-policy v1"},
           {"parameters", param_names},
           {"samples", std::vector<ParamVector>(samples.begin(), samples.end())},
           {"states", policy.extended().model.num_states()},
           {"actions", policy.extended().model.num_actions()},
           {"initial_value", policy.initial_value()},
           {"alpha_vectors", alphas}};
    return j.dump(2);
}

PosteriorPolicy policy_from_json(std::string_view text, const ParametricTemplate& tpl) {
    const json j = parse_or_throw(text);
    try {
        const auto samples = j.at("samples").get<std::vector<ParamVector>>();
        for (const auto& s : samples)
            if (s.size() != tpl.params().size()) throw ConfigError("policy sample has the wrong number of parameters");
        ExtendedPomdp ext = extend(samples, tpl);
        ValueFunction vf(ext.model.num_actions(), ext.model.num_states());
        for (const auto& a : j.at("alpha_vectors")) {
            auto action = a.at("action").get<Index>();
            auto values = a.at("values").get<std::vector<double>>();
            if (action >= ext.model.num_actions() || values.size() != ext.model.num_states())
                throw ConfigError("policy alpha-vector does not match the model");
            vf.add(action, std::move(values));
        }
        if (vf.size() == 0) throw ConfigError("policy has no alpha-vectors");
        return PosteriorPolicy(std::move(ext), std::move(vf));
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("malformed policy: ") + e.what());
    }
}

}  // namespace apl
