// dynbatch: solve, evaluate, simulate and sweep batching policies for a
// batch-service queue.  See README.md for the subcommand tour.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynbatch/config_io.hpp"
#include "dynbatch/errors.hpp"
#include "dynbatch/experiments.hpp"
#include "dynbatch/manifest.hpp"

namespace fs = std::filesystem;
using namespace dynbatch;

namespace {

std::vector<std::string> g_argv;  // for the run manifest

// "0:0.5:2,5,10" -> {0, 0.5, 1, 1.5, 2, 5, 10}
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        const auto c1 = token.find(':');
        if (c1 == std::string::npos) {
            out.push_back(std::stod(token));
            continue;
        }
        const auto c2 = token.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw validation_error("grid range needs start:step:stop, got \"" + token + "\"");
        const double start = std::stod(token.substr(0, c1));
        const double step = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
        const double stop = std::stod(token.substr(c2 + 1));
        if (!(step > 0.0)) throw validation_error("grid step must be positive");
        for (double v = start; v <= stop + 1e-9 * step; v += step) out.push_back(v);
    }
    if (out.empty()) throw validation_error("empty grid \"" + spec + "\"");
    return out;
}

std::vector<int> parse_int_grid(const std::string& spec) {
    std::vector<int> out;
    for (double v : parse_grid(spec)) out.push_back(static_cast<int>(v + 0.5));
    return out;
}

// "static:8" | "greedy" | "greedy-strict" | "cl:5" | path to a policy csv
Policy parse_policy(const std::string& spec, const SystemConfig& cfg) {
    if (spec == "greedy") return Policy::greedy(cfg.b_min > 1);
    if (spec == "greedy-strict") return Policy::greedy(true);
    if (spec.rfind("static:", 0) == 0) return Policy::static_batch(std::stoi(spec.substr(7)));
    if (spec.rfind("cl:", 0) == 0) return Policy::control_limit(std::stoi(spec.substr(3)));
    return load_policy_csv(spec);
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    return out;
}

void emit_manifest(const fs::path& dir, const std::string& command,
                   const SystemConfig& cfg, const nlohmann::json& params,
                   const std::vector<std::string>& outputs) {
    write_json_file((dir / "manifest.json").string(),
                    make_manifest(command, g_argv, config_hash(cfg), params, outputs));
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    double w1 = 1.0;
    double w2 = 0.0;
    double c_o = 100.0;
    double delta = 1e-3;
    double epsilon = 0.01;
    int iter_max = 10000;
    int precision = 9;
};

void add_model_flags(CLI::App* cmd, CommonOpts& o, bool with_weights = true) {
    cmd->add_option("--config", o.config_path, "system config JSON")->required();
    cmd->add_option("--out", o.out_dir, "output directory (default .)");
    if (with_weights) {
        cmd->add_option("--w1", o.w1, "latency weight (default 1)");
        cmd->add_option("--w2", o.w2, "energy weight (default 0)");
    }
    cmd->add_option("--c-o", o.c_o, "overflow penalty rate (default 100)");
    cmd->add_option("--delta", o.delta, "acceptance threshold on the overflow share");
    cmd->add_option("--precision", o.precision, "significant digits in CSV output");
}

void add_solver_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--epsilon", o.epsilon, "span stopping threshold (default 0.01)");
    cmd->add_option("--iter-max", o.iter_max, "sweep budget (default 10000)");
}

RviOptions rvi_options(const CommonOpts& o) {
    RviOptions r;
    r.epsilon = o.epsilon;
    r.max_iterations = o.iter_max;
    return r;
}

nlohmann::json common_params(const CommonOpts& o) {
    return {{"w1", o.w1},     {"w2", o.w2},           {"c_o", o.c_o},
            {"delta", o.delta}, {"epsilon", o.epsilon}, {"iter_max", o.iter_max}};
}

// ---------------------------------------------------------------------------

int run_fit(const std::string& points_path, const std::string& out_dir, int precision) {
    std::ifstream in(points_path);
    if (!in) throw io_error("cannot open " + points_path);

    std::vector<std::pair<double, double>> lat_pts, energy_pts;
    std::string line;
    if (!std::getline(in, line)) throw validation_error("fit: empty points file");
    bool has_energy = line.find("energy") != std::string::npos;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() < 2) throw validation_error("fit: malformed row \"" + line + "\"");
        lat_pts.emplace_back(cells[0], cells[1]);
        if (has_energy && cells.size() >= 3) energy_pts.emplace_back(cells[0], cells[2]);
    }

    const AffineFit lat = fit_affine(lat_pts);
    nlohmann::json j = {{"latency",
                         {{"form", "affine"}, {"a", lat.slope}, {"c", lat.intercept},
                          {"rms", lat.rms}}}};
    std::cout << std::setprecision(precision) << "latency:  l(b) = " << lat.slope << " * b + "
              << lat.intercept << "   (rms " << lat.rms << ")\n";
    if (!energy_pts.empty()) {
        const AffineFit en = fit_affine(energy_pts);
        j["energy"] = {{"form", "affine"}, {"a", en.slope}, {"c", en.intercept},
                       {"rms", en.rms}};
        std::cout << "energy:   zeta(b) = " << en.slope << " * b + " << en.intercept
                  << "   (rms " << en.rms << ")\n";
    }

    fs::create_directories(out_dir);
    write_json_file((fs::path(out_dir) / "fit.json").string(), j);
    return 0;
}

int run_solve(const CommonOpts& o, const std::string& s_max_spec) {
    const SystemConfig cfg = load_config(o.config_path);
    const Weights w{o.w1, o.w2};

    SolveResult res = (s_max_spec == "auto")
                          ? auto_truncate(cfg, w, o.c_o, o.delta, rvi_options(o))
                          : solve_at(cfg, w, std::stoi(s_max_spec), o.c_o, o.delta,
                                     rvi_options(o));

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    save_policy_csv((dir / "policy.csv").string(), res.policy, cfg, res.s_max);
    {
        auto out = open_output(dir / "eval.csv");
        out << eval_report_csv_header() << '\n'
            << eval_report_csv_row(res.report, o.precision) << '\n';
    }
    nlohmann::json params = common_params(o);
    params["s_max"] = res.s_max;
    params["s_max_mode"] = s_max_spec;
    emit_manifest(dir, "solve", cfg, params, {"policy.csv", "eval.csv"});

    std::cout << std::setprecision(o.precision) << "s_max=" << res.s_max
              << " gain=" << res.report.gain << " delta=" << res.report.delta
              << " w_bar_ms=" << res.report.w_bar << " p_bar_W=" << res.report.p_bar
              << " iterations=" << res.rvi.iterations << " converged=" << res.rvi.converged
              << " accepted=" << res.report.accepted << '\n';
    std::cout << "schedule:";
    for (const auto& [s, d] : res.schedule) std::cout << ' ' << s << ":" << d;
    std::cout << '\n';
    return res.report.accepted ? 0 : 3;
}

int run_evaluate(const CommonOpts& o, const std::string& policy_spec,
                 const std::string& s_max_spec) {
    const SystemConfig cfg = load_config(o.config_path);
    const Weights w{o.w1, o.w2};
    const Policy policy = parse_policy(policy_spec, cfg);

    EvalReport rep;
    if (s_max_spec == "auto") {
        rep = evaluate_policy_auto(cfg, w, policy, o.c_o, o.delta);
    } else {
        const TruncatedSmdp model(cfg, w, std::stoi(s_max_spec), o.c_o);
        rep = evaluate(model, policy, o.delta);
    }

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    {
        auto out = open_output(dir / "eval.csv");
        out << eval_report_csv_header() << '\n'
            << eval_report_csv_row(rep, o.precision) << '\n';
    }
    nlohmann::json params = common_params(o);
    params["policy"] = policy_spec;
    params["s_max"] = rep.s_max;
    emit_manifest(dir, "evaluate", cfg, params, {"eval.csv"});

    std::cout << eval_report_csv_header() << '\n'
              << eval_report_csv_row(rep, o.precision) << '\n';
    return rep.accepted ? 0 : 3;
}

int run_simulate(const CommonOpts& o, const std::string& policy_spec, std::int64_t requests,
                 std::uint64_t seed, double warmup, const std::string& quantiles_spec,
                 double slo_ms, const std::string& trace_path, const std::string& hist_path,
                 int bins) {
    const SystemConfig cfg = load_config(o.config_path);
    const Policy policy = parse_policy(policy_spec, cfg);

    SimOptions so;
    so.seed = seed;
    so.n_requests = requests;
    so.warmup_fraction = warmup;
    so.quantiles = parse_grid(quantiles_spec);
    so.slo_ms = slo_ms;
    so.keep_samples = !hist_path.empty();

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    std::ofstream trace;
    if (!trace_path.empty()) {
        trace = open_output(dir / trace_path);
        trace << "arrival_ms,departure_ms,batch_size\n" << std::setprecision(o.precision);
        so.trace = &trace;
    }

    const SimStats stats = simulate(cfg, policy, so);

    std::vector<std::string> outputs = {"sim.csv"};
    {
        auto out = open_output(dir / "sim.csv");
        out << sim_stats_csv_header(so.quantiles) << '\n'
            << sim_stats_csv_row(policy.id(), stats, o.precision) << '\n';
    }
    if (!hist_path.empty()) {
        auto out = open_output(dir / hist_path);
        write_histogram_csv(out, stats.sorted_samples, bins);
        outputs.push_back(hist_path);
    }
    if (!trace_path.empty()) outputs.push_back(trace_path);

    nlohmann::json params = {{"policy", policy_spec}, {"requests", requests},
                             {"seed", seed},          {"warmup", warmup},
                             {"slo_ms", slo_ms},      {"quantiles", quantiles_spec}};
    emit_manifest(dir, "simulate", cfg, params, outputs);

    std::cout << sim_stats_csv_header(so.quantiles) << '\n'
              << sim_stats_csv_row(policy.id(), stats, o.precision) << '\n';
    return 0;
}

int run_sweep(const CommonOpts& o, const std::string& grid_spec, int jobs,
              bool save_policies) {
    const SystemConfig cfg = load_config(o.config_path);
    const std::vector<double> grid = parse_grid(grid_spec);

    const TradeoffResult sweep =
        tradeoff_sweep(cfg, grid, o.w1, o.c_o, o.delta, rvi_options(o), jobs);

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    std::vector<std::string> outputs = {"tradeoff.csv"};
    {
        auto out = open_output(dir / "tradeoff.csv");
        out << tradeoff_csv_header() << '\n';
        for (const TradeoffPoint& p : sweep.points)
            out << tradeoff_csv_row(p, o.precision) << '\n';
    }
    if (save_policies) {
        for (const TradeoffPoint& p : sweep.points) {
            const SolveResult res = auto_truncate(cfg, Weights{o.w1, p.w2}, o.c_o, o.delta,
                                                  rvi_options(o));
            const std::string name = "policy-" + p.policy_id + ".csv";
            save_policy_csv((dir / name).string(), res.policy, cfg, res.s_max);
            outputs.push_back(name);
        }
    }
    nlohmann::json params = common_params(o);
    params["w2_grid"] = grid;
    params["jobs"] = jobs;
    emit_manifest(dir, "sweep", cfg, params, outputs);

    for (const std::string& wmsg : sweep.warnings) std::cerr << "warning: " << wmsg << '\n';
    std::cout << "points=" << sweep.points.size() << " warnings=" << sweep.warnings.size()
              << " -> " << (dir / "tradeoff.csv").string() << '\n';
    return sweep.points.empty() ? 3 : 0;
}

int run_bench(const CommonOpts& o, const std::string& w2_list_spec) {
    const SystemConfig cfg = load_config(o.config_path);
    const BenchmarkResult bench = benchmark_suite(cfg, o.w1, parse_grid(w2_list_spec), o.c_o,
                                                  o.delta, rvi_options(o));

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    {
        auto out = open_output(dir / "benchmarks.csv");
        out << benchmark_csv_header() << '\n';
        for (const BenchmarkRow& r : bench.rows) out << benchmark_csv_row(r, o.precision) << '\n';
    }
    nlohmann::json params = common_params(o);
    params["w2_list"] = w2_list_spec;
    emit_manifest(dir, "bench", cfg, params, {"benchmarks.csv"});

    for (const std::string& note : bench.notes) std::cerr << "note: " << note << '\n';
    std::cout << bench.rows.size() << " rows -> " << (dir / "benchmarks.csv").string() << '\n';
    return 0;
}

int run_qsearch(const CommonOpts& o, int s_max) {
    const SystemConfig cfg = load_config(o.config_path);
    std::vector<double> gains;
    const int q = linear_search_Q(cfg, Weights{o.w1, o.w2}, s_max, o.c_o, &gains);

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    {
        auto out = open_output(dir / "qsearch.csv");
        out << "Q,gain\n" << std::setprecision(o.precision);
        for (std::size_t i = 0; i < gains.size(); ++i) out << i + 1 << ',' << gains[i] << '\n';
    }
    nlohmann::json params = common_params(o);
    params["s_max"] = s_max;
    emit_manifest(dir, "qsearch", cfg, params, {"qsearch.csv"});

    std::cout << "best Q=" << q << " gain=" << std::setprecision(o.precision)
              << gains[static_cast<std::size_t>(q - 1)] << '\n';
    return 0;
}

int run_closedform(const CommonOpts& o) {
    const SystemConfig cfg = load_config(o.config_path);
    const ControlLimitAnalysis a = closed_form_control_limit(cfg, Weights{o.w1, o.w2});

    fs::create_directories(o.out_dir);
    nlohmann::json j = {{"psi", a.psi}, {"xi", a.xi},       {"chi", a.chi},
                        {"q_star", a.q_star}, {"margin", a.margin}};
    write_json_file((fs::path(o.out_dir) / "closedform.json").string(), j);
    nlohmann::json params = common_params(o);
    emit_manifest(fs::path(o.out_dir), "closedform", cfg, params, {"closedform.json"});

    std::cout << std::setprecision(o.precision) << "Q*=" << a.q_star << " xi=" << a.xi
              << " psi=" << a.psi << " chi=" << a.chi << '\n';
    return 0;
}

int run_truncation(const CommonOpts& o, const std::string& c_o_grid_spec,
                   const std::string& s_max_grid_spec, bool exact_min) {
    const SystemConfig cfg = load_config(o.config_path);
    const Weights w{o.w1, o.w2};
    const std::vector<double> c_os = parse_grid(c_o_grid_spec);
    const std::vector<int> s_maxes = parse_int_grid(s_max_grid_spec);

    const auto rows = truncation_study(cfg, w, c_os, s_maxes, o.delta, rvi_options(o));

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    std::vector<std::string> outputs = {"truncation.csv"};
    {
        auto out = open_output(dir / "truncation.csv");
        out << truncation_csv_header() << '\n';
        for (const TruncationRow& r : rows) out << truncation_csv_row(r, o.precision) << '\n';
    }
    if (exact_min) {
        auto out = open_output(dir / "min_smax.csv");
        out << "c_o,min_accepted_s_max\n" << std::setprecision(o.precision);
        for (double c_o : c_os) {
            const int m = min_accepted_smax(cfg, w, c_o, o.delta, rvi_options(o));
            out << c_o << ',' << m << '\n';
            std::cout << "c_o=" << c_o << " min accepted s_max=" << m << '\n';
        }
        outputs.push_back("min_smax.csv");
    }
    nlohmann::json params = common_params(o);
    params["c_o_grid"] = c_os;
    params["s_max_grid"] = s_maxes;
    emit_manifest(dir, "truncation", cfg, params, outputs);

    std::cout << rows.size() << " rows -> " << (dir / "truncation.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);

    CLI::App app{"batching policy solver and simulator for batch-service queues"};
    app.require_subcommand(1);
    int exit_code = 0;

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit affine latency/energy curves to profiler points");
    std::string fit_points, fit_out = ".";
    int fit_precision = 9;
    fit_cmd->add_option("--points", fit_points, "CSV: batch_size,latency_ms[,energy_mJ]")
        ->required();
    fit_cmd->add_option("--out", fit_out, "output directory");
    fit_cmd->add_option("--precision", fit_precision, "significant digits");
    fit_cmd->callback([&] { exit_code = run_fit(fit_points, fit_out, fit_precision); });

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "solve for the optimal batching policy");
    CommonOpts solve_opts;
    std::string solve_smax = "auto";
    add_model_flags(solve_cmd, solve_opts);
    add_solver_flags(solve_cmd, solve_opts);
    solve_cmd->add_option("--s-max", solve_smax, "truncation level or \"auto\"");
    solve_cmd->callback([&] { exit_code = run_solve(solve_opts, solve_smax); });

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "stationary metrics of a fixed policy");
    CommonOpts eval_opts;
    std::string eval_policy, eval_smax = "auto";
    add_model_flags(eval_cmd, eval_opts);
    eval_cmd->add_option("--policy", eval_policy, "static:B | greedy | cl:Q | policy.csv")
        ->required();
    eval_cmd->add_option("--s-max", eval_smax, "truncation level or \"auto\"");
    eval_cmd->callback([&] { exit_code = run_evaluate(eval_opts, eval_policy, eval_smax); });

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "discrete-event simulation of a policy");
    CommonOpts sim_opts;
    std::string sim_policy, sim_quantiles = "0.5,0.9,0.95,0.99";
    std::string sim_trace, sim_hist;
    std::int64_t sim_requests = 1'000'000;
    std::uint64_t sim_seed = 1;
    double sim_warmup = 0.05, sim_slo = 0.0;
    int sim_bins = 50;
    sim_cmd->add_option("--config", sim_opts.config_path, "system config JSON")->required();
    sim_cmd->add_option("--out", sim_opts.out_dir, "output directory");
    sim_cmd->add_option("--policy", sim_policy, "static:B | greedy | cl:Q | policy.csv")
        ->required();
    sim_cmd->add_option("--requests", sim_requests, "departures to simulate (default 1e6)");
    sim_cmd->add_option("--seed", sim_seed, "RNG seed (default 1)");
    sim_cmd->add_option("--warmup", sim_warmup, "leading departure fraction dropped");
    sim_cmd->add_option("--quantiles", sim_quantiles, "comma list, e.g. 0.5,0.95");
    sim_cmd->add_option("--slo", sim_slo, "report P(response <= this many ms)");
    sim_cmd->add_option("--latency-trace", sim_trace, "per-request CSV filename");
    sim_cmd->add_option("--histogram", sim_hist, "response histogram CSV filename");
    sim_cmd->add_option("--bins", sim_bins, "histogram bins (default 50)");
    sim_cmd->add_option("--precision", sim_opts.precision, "significant digits");
    sim_cmd->callback([&] {
        exit_code = run_simulate(sim_opts, sim_policy, sim_requests, sim_seed, sim_warmup,
                                 sim_quantiles, sim_slo, sim_trace, sim_hist, sim_bins);
    });

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "latency/energy trade-off across w2");
    CommonOpts sweep_opts;
    std::string sweep_grid;
    int sweep_jobs = 1;
    bool sweep_save_policies = false;
    add_model_flags(sweep_cmd, sweep_opts, /*with_weights=*/false);
    sweep_cmd->add_option("--w1", sweep_opts.w1, "latency weight (default 1)");
    sweep_cmd->add_option("--w2-grid", sweep_grid, "e.g. 0:0.1:2,3,5,10,15,100")->required();
    add_solver_flags(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--jobs", sweep_jobs, "parallel solvers (default 1)");
    sweep_cmd->add_flag("--save-policies", sweep_save_policies, "write per-point policy CSVs");
    sweep_cmd->callback(
        [&] { exit_code = run_sweep(sweep_opts, sweep_grid, sweep_jobs, sweep_save_policies); });

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "compare against greedy/static baselines");
    CommonOpts bench_opts;
    std::string bench_w2s = "0";
    add_model_flags(bench_cmd, bench_opts, /*with_weights=*/false);
    bench_cmd->add_option("--w1", bench_opts.w1, "latency weight (default 1)");
    bench_cmd->add_option("--w2-list", bench_w2s, "w2 values, e.g. 0,1,100");
    add_solver_flags(bench_cmd, bench_opts);
    bench_cmd->callback([&] { exit_code = run_bench(bench_opts, bench_w2s); });

    // qsearch
    auto* q_cmd = app.add_subcommand("qsearch", "best control-limit threshold by evaluation");
    CommonOpts q_opts;
    q_opts.c_o = 0.0;
    int q_smax = 400;
    add_model_flags(q_cmd, q_opts);
    q_cmd->add_option("--s-max", q_smax, "truncation level (default 400)");
    q_cmd->callback([&] { exit_code = run_qsearch(q_opts, q_smax); });

    // closedform
    auto* cf_cmd = app.add_subcommand("closedform",
                                      "control-limit threshold via the analytic margin test");
    CommonOpts cf_opts;
    add_model_flags(cf_cmd, cf_opts);
    cf_cmd->callback([&] { exit_code = run_closedform(cf_opts); });

    // truncation
    auto* tr_cmd = app.add_subcommand("truncation", "gain/overflow share vs truncation level");
    CommonOpts tr_opts;
    std::string tr_cos = "0,10,100,1000,10000", tr_smaxes = "64,96,128,192,256";
    bool tr_exact = false;
    add_model_flags(tr_cmd, tr_opts);
    add_solver_flags(tr_cmd, tr_opts);
    tr_cmd->add_option("--c-o-grid", tr_cos, "overflow penalty grid");
    tr_cmd->add_option("--s-max-grid", tr_smaxes, "truncation level grid");
    tr_cmd->add_flag("--exact-min", tr_exact, "also bisect the minimal accepted s_max");
    tr_cmd->callback(
        [&] { exit_code = run_truncation(tr_opts, tr_cos, tr_smaxes, tr_exact); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return exit_code;
}
