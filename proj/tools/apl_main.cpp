// apl: command line front end for demonstration generation, estimation, planning and experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apl/errors.hpp"
#include "apl/estimators.hpp"
#include "apl/harness.hpp"
#include "apl/model_family.hpp"
#include "apl/planning.hpp"
#include "apl/pomdp.hpp"
#include "apl/solver.hpp"
#include "apl/template_io.hpp"
#include "apl/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string model = "builtin:tiger";
    std::vector<double> theta;
    double beta = 0.3;
    std::size_t steps = 0;
    std::size_t demos = 0;
    std::uint64_t seed = 1;
    std::size_t sweeps = 0, burn_in = 0, thin = 0;
    std::string out;

    std::string method = "mcmc";
    std::string trace;
    std::string estimate;
    std::string policy;
    std::string config;
    std::string input;
    std::string histogram;
    std::string trace_out;
    std::vector<std::string> methods;
    std::size_t eval_steps = 0;
    std::size_t threads = 1;
    bool full_scale = false;
    bool expert = false;
    bool quiet = false;
    /// Flags given on the command line; these override values from --config.
    std::set<std::string> given;

    std::size_t count_of(std::string_view flag) const {
        if (flag == "--steps") return steps;
        if (flag == "--demos") return demos;
        if (flag == "--eval-steps") return eval_steps;
        if (flag == "--mcmc-sweeps") return sweeps;
        return thin;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw apl::ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw apl::ConfigError("cannot write '" + path + "'");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

apl::ParametricTemplate load_model(const Options& o) {
    apl::ParametricTemplate tpl = apl::resolve_template(o.model);
    if (auto problems = apl::validate_template(tpl); !problems.empty())
        throw apl::InvalidModel("template '" + o.model + "': " + problems.front());
    return tpl;
}

apl::ParamVector theta_or_default(const Options& o, const apl::ParametricTemplate& tpl) {
    if (o.theta.empty()) {
        if (o.model.empty() || o.model == "builtin:tiger") return apl::tiger::kTrueTheta;
        throw apl::ConfigError("--theta is required for template '" + o.model + "'");
    }
    if (o.theta.size() != tpl.params().size())
        throw apl::ConfigError("--theta has " + std::to_string(o.theta.size()) + " values, the template has " +
                               std::to_string(tpl.params().size()) + " parameters");
    return apl::clamp_to_support(tpl, o.theta);
}

apl::SolverConfig solver_config(std::uint64_t seed) {
    apl::SolverConfig cfg;
    cfg.seed = seed;
    return apl::with_environment_overrides(cfg);
}

apl::McmcConfig mcmc_config(const Options& o) {
    apl::McmcConfig c;
    if (o.sweeps) c.total_sweeps = o.sweeps;
    if (o.burn_in) c.burn_in = o.burn_in;
    if (o.thin) c.thin = o.thin;
    c.seed = o.seed;
    c.validate();
    return c;
}

void check_beta(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw apl::ConfigError("--beta must be a finite value >= 0");
}

int cmd_gen_demo(const Options& o) {
    check_beta(o.beta);
    const auto tpl = load_model(o);
    const auto theta = theta_or_default(o, tpl);
    const std::size_t L = o.steps ? o.steps : 100;
    const apl::Pomdp model = apl::instantiate(tpl, theta);
    const auto vf = apl::solve(model, solver_config(o.seed));
    const auto trace = apl::generate_demo(model, vf, apl::PolicyConfig{o.beta}, L, o.seed);
    if (o.out.empty() || o.out == "-")
        std::cout << apl::write_trace(trace, model.action_names(), model.observation_names());
    else
        apl::save_trace(trace, tpl, o.out);
    if (!o.quiet) std::cerr << "generated " << L << " steps\n";
    return kExitOk;
}

int cmd_estimate(const Options& o) {
    check_beta(o.beta);
    const auto tpl = load_model(o);
    if (o.trace.empty()) throw apl::ConfigError("--trace is required");
    const apl::DemoTrace trace = apl::load_trace(tpl, o.trace);
    const apl::Method method = apl::parse_method(o.method);

    apl::ExperimentConfig cfg;
    cfg.model = o.model;
    cfg.beta = o.beta;
    cfg.mcmc = mcmc_config(o);
    cfg.solver = solver_config(o.seed);

    apl::RunRecord rec = apl::run_estimator(tpl, trace, method, cfg, o.seed, nullptr);
    if (!rec.ok) {
        std::cerr << "error: " << rec.error << '\n';
        return kExitRuntime;
    }
    std::vector<std::string> names;
    for (const auto& p : tpl.params()) names.push_back(p.name);
    write_output(o.out, apl::record_to_json(rec, names));
    if (!o.quiet) {
        std::cerr << apl::method_name(method) << " estimate:";
        for (std::size_t k = 0; k < names.size(); ++k) std::cerr << ' ' << names[k] << '=' << rec.estimate[k];
        std::cerr << "  (" << rec.wall_seconds << " s)\n";
    }
    return kExitOk;
}

int cmd_plan(const Options& o) {
    const auto tpl = load_model(o);
    std::vector<apl::ParamVector> samples;
    if (!o.estimate.empty()) {
        const apl::RunRecord rec = apl::record_from_json(read_file(o.estimate));
        samples = rec.samples.empty() ? std::vector<apl::ParamVector>{rec.estimate} : rec.samples;
        for (const auto& s : samples)
            if (s.size() != tpl.params().size()) throw apl::ConfigError("estimate does not match the template");
    } else {
        samples = {theta_or_default(o, tpl)};
    }
    const apl::PosteriorPolicy policy = apl::plan_posterior(samples, tpl, solver_config(o.seed));
    std::vector<std::string> names;
    for (const auto& p : tpl.params()) names.push_back(p.name);
    write_output(o.out, apl::policy_to_json(policy, samples, names));
    if (!o.quiet)
        std::cerr << "planned over " << samples.size() << " model(s), " << policy.value_function().size()
                  << " alpha-vectors, V(b0) = " << policy.initial_value() << '\n';
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    check_beta(o.beta);
    const auto tpl = load_model(o);
    const auto theta = theta_or_default(o, tpl);
    const apl::Pomdp env = apl::instantiate(tpl, theta);
    const std::size_t steps = o.steps ? o.steps : 10000;

    std::unique_ptr<apl::Policy> agent;
    if (!o.policy.empty()) {
        agent = std::make_unique<apl::PosteriorPolicy>(apl::policy_from_json(read_file(o.policy), tpl));
    } else {
        const auto vf = apl::solve(env, solver_config(o.seed));
        agent = o.expert ? apl::make_softmax_policy(env, vf, apl::PolicyConfig{o.beta})
                         : apl::make_greedy_policy(env, vf);
    }
    const auto sim = apl::simulate(env, *agent, steps, o.seed, !o.trace_out.empty());
    if (!o.trace_out.empty()) apl::save_trace(sim.trace, tpl, o.trace_out);

    std::ostringstream os;
    os << "{\n  \"steps\": " << steps << ",\n  \"total_reward\": " << apl::format_number(sim.total_reward)
       << ",\n  \"average_reward\": " << apl::format_number(sim.average_reward)
       << ",\n  \"standard_error\": " << apl::format_number(sim.standard_error)
       << ",\n  \"belief_resets\": " << sim.belief_resets << "\n}\n";
    write_output(o.out, os.str());
    return kExitOk;
}

int cmd_experiment(const Options& o) {
    apl::ExperimentConfig cfg = o.full_scale ? apl::ExperimentConfig::full_scale() : apl::ExperimentConfig::desk_scale();
    if (!o.config.empty()) {
        // A config file is a results-bundle "config" object, possibly standing alone.
        const std::string text = read_file(o.config);
        const std::string wrapped = "{\"config\":" + text + ",\"parameters\":[],\"runs\":[]}";
        cfg = apl::bundle_from_json(wrapped).config;
    }
    auto use = [&](const char* flag) { return o.config.empty() || o.given.contains(flag); };
    if (use("--model")) cfg.model = o.model;
    if (!o.theta.empty()) cfg.true_theta = o.theta;
    else if (cfg.model != "builtin:tiger" && o.config.empty())
        throw apl::ConfigError("--theta is required for template '" + cfg.model + "'");
    if (use("--beta")) cfg.beta = o.beta;
    if (o.steps) cfg.demo_length = o.steps;
    if (o.demos) cfg.demos = o.demos;
    if (use("--seed")) cfg.seed = o.seed;
    if (o.sweeps) cfg.mcmc.total_sweeps = o.sweeps;
    if (o.burn_in) cfg.mcmc.burn_in = o.burn_in;
    if (o.thin) cfg.mcmc.thin = o.thin;
    if (o.eval_steps) cfg.eval_steps = o.eval_steps;
    if (use("--threads")) cfg.threads = o.threads;
    if (!o.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : o.methods) cfg.methods.push_back(apl::parse_method(m));
    }
    cfg.solver = apl::with_environment_overrides(cfg.solver);
    cfg.validate();

    std::size_t done = 0;
    const std::size_t total = cfg.demos * cfg.methods.size();
    auto progress = [&](const apl::RunRecord& r) {
        ++done;
        if (o.quiet) return;
        std::cerr << '[' << done << '/' << total << "] demo " << r.demo << ' ' << apl::method_name(r.method);
        if (r.ok) std::cerr << " reward " << r.average_reward << " (" << r.wall_seconds << " s)\n";
        else std::cerr << " FAILED: " << r.error << '\n';
    };
    const apl::ResultsBundle bundle = apl::run_experiment(cfg, progress);
    write_output(o.out.empty() ? "results.json" : o.out, apl::bundle_to_json(bundle));
    if (!o.quiet) std::cerr << apl::report_table(bundle);
    for (const auto& r : bundle.runs)
        if (!r.ok) return kExitRuntime;
    return kExitOk;
}

int cmd_report(const Options& o) {
    if (o.input.empty()) throw apl::ConfigError("a results bundle is required");
    const apl::ResultsBundle bundle = apl::bundle_from_json(read_file(o.input));
    write_output(o.out, apl::report_table(bundle));
    if (!o.histogram.empty()) write_output(o.histogram, apl::report_histogram_csv(bundle));
    return kExitOk;
}

void add_model_options(CLI::App* cmd, Options& o, bool with_theta) {
    cmd->add_option("--model", o.model, "Template JSON file or builtin:tiger")->capture_default_str();
    if (with_theta)
        cmd->add_option("--theta", o.theta, "Parameter vector, comma separated")->delimiter(',')->allow_extra_args(false);
    cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    cmd->add_option("--out", o.out, "Output file (default: stdout)");
    cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

void add_chain_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--mcmc-sweeps", o.sweeps, "Total sweeps per chain");
    cmd->add_option("--burn-in", o.burn_in, "Sweeps discarded before sampling");
    cmd->add_option("--thin", o.thin, "Keep every n-th sweep after burn-in");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimate POMDP model parameters from expert demonstrations"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-demo", "Sample an expert demonstration trace");
    add_model_options(gen, o, true);
    gen->add_option("--beta", o.beta, "Soft-max inverse temperature")->capture_default_str();
    gen->add_option("--steps", o.steps, "Trace length (default 100)");

    auto* est = app.add_subcommand("estimate", "Estimate parameters from a trace");
    add_model_options(est, o, false);
    est->add_option("--method", o.method, "map, mcmc, em or gibbs")
        ->check(CLI::IsMember({"map", "mcmc", "em", "gibbs"}))
        ->capture_default_str();
    est->add_option("--trace,trace", o.trace, "Trace file");
    est->add_option("--beta", o.beta, "Soft-max inverse temperature")->capture_default_str();
    add_chain_options(est, o);

    auto* plan = app.add_subcommand("plan", "Solve the planning problem for an estimate");
    add_model_options(plan, o, true);
    plan->add_option("--estimate,estimate", o.estimate, "Estimate JSON from 'estimate' (default: --theta)");

    auto* sim = app.add_subcommand("simulate", "Run a policy against the environment");
    add_model_options(sim, o, true);
    sim->add_option("--policy", o.policy, "Policy JSON from 'plan' (default: optimal policy for --theta)");
    sim->add_flag("--expert", o.expert, "Use the soft-max expert for --theta instead");
    sim->add_option("--beta", o.beta, "Soft-max inverse temperature for --expert")->capture_default_str();
    sim->add_option("--steps", o.steps, "Number of steps (default 10000)");
    sim->add_option("--trace-out", o.trace_out, "Also write the simulated trace");

    auto* exp = app.add_subcommand("experiment", "Demonstrate, estimate, plan and evaluate over many demos");
    add_model_options(exp, o, true);
    exp->add_option("--beta", o.beta, "Soft-max inverse temperature")->capture_default_str();
    exp->add_option("--steps", o.steps, "Demonstration length");
    exp->add_option("--demos", o.demos, "Number of demonstrations");
    exp->add_option("--eval-steps", o.eval_steps, "Evaluation steps per policy");
    exp->add_option("--methods", o.methods, "Subset of map,mcmc,em,gibbs")->delimiter(',');
    exp->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
    exp->add_option("--config", o.config, "Experiment config JSON");
    exp->add_flag("--full-scale", o.full_scale, "100 demos, 1000-sweep chains, 100k evaluation steps");
    add_chain_options(exp, o);

    auto* rep = app.add_subcommand("report", "Summarize a results bundle");
    rep->add_option("input,--in", o.input, "Results bundle JSON")->required();
    rep->add_option("--out", o.out, "Table output (default: stdout)");
    rep->add_option("--histogram", o.histogram, "Write the reward histogram as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    for (const auto* sub : app.get_subcommands())
        for (const auto* opt : sub->get_options())
            if (opt->count() > 0) o.given.insert(opt->get_name());
    for (const char* flag : {"--steps", "--demos", "--eval-steps", "--mcmc-sweeps", "--thin"})
        if (o.given.contains(flag) && o.count_of(flag) == 0) {
            std::cerr << "config error: " << flag << " must be positive\n";
            return kExitConfig;
        }

    try {
        if (gen->parsed()) return cmd_gen_demo(o);
        if (est->parsed()) return cmd_estimate(o);
        if (plan->parsed()) return cmd_plan(o);
        if (sim->parsed()) return cmd_simulate(o);
        if (exp->parsed()) return cmd_experiment(o);
        if (rep->parsed()) return cmd_report(o);
    } catch (const apl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const apl::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const apl::InvalidModel& e) {
        std::cerr << "invalid model: " << e.what() << '\n';
        return kExitConfig;
    } catch (const apl::OutOfSupport& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const apl::UnsupportedParameterRole& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const apl::EpisodicTemplate& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
