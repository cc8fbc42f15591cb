#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "clutter/bench.hpp"

namespace fs = std::filesystem;
using namespace clutter;

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitInstance = 4;
constexpr int kExitBudget = 5;

int cmd_gen(const std::string& mode_s, int n, int k, int seeds, const std::string& out_dir,
            double exit_width, double side, double robot_radius, double v_max,
            double min_clearance, uint64_t seed_base) {
    scene::GenParams gp;
    gp.mode = scene::gen_mode_from_string(mode_s);
    gp.n = n;
    gp.min_clearance = min_clearance;
    scene::FleetParams fleet;
    fleet.side = side;
    fleet.exit_width = exit_width > 0 ? exit_width : fleet.exit_width;
    fleet.robot_radius = robot_radius;
    fleet.robot_count = k;
    fleet.v_max = v_max;
    fleet.t_pick = fleet.t_unload = (side / 2.0) / v_max;

    const fs::path dir = fs::path(out_dir) / mode_s / std::to_string(n);
    fs::create_directories(dir);
    for (uint64_t s = seed_base; s < seed_base + static_cast<uint64_t>(seeds); ++s) {
        try {
            scene::Instance inst = scene::generate(gp, fleet, s);
            const fs::path file = dir / (std::to_string(s) + ".inst");
            scene::save(inst, file.string());
            std::cout << file.string() << " n=" << n << " seed=" << s << "\n";
        } catch (const GenerationBudgetExceeded& e) {
            std::cerr << "generation failed: " << e.what() << "\n";
            return kExitGeneration;
        }
    }
    return 0;
}

int cmd_plan(const std::string& instance_path, const std::string& algo,
             const std::string& lookahead_s, double budget, const std::string& out_path,
             const std::string& trace_path, int mcts_iters, double mcts_c, int dp_cap,
             const std::string& heuristic) {
    scene::Instance inst;
    try {
        inst = scene::load(instance_path);
    } catch (const std::exception& e) {
        std::cerr << "cannot load instance: " << e.what() << "\n";
        return kExitInstance;
    }
    scene::ValidationReport rep = scene::validate(inst);
    if (!rep.ok()) {
        std::cerr << "instance invalid:\n" << rep.summary();
        return kExitInstance;
    }

    planners::PlannerParams params;
    params.lookahead = lookahead_s == "on";
    params.time_budget = budget;
    params.mcts_iterations = mcts_iters;
    params.mcts_exploration = mcts_c;
    params.dp_cap = dp_cap;
    params.paper_heuristic = heuristic == "paper";
    planners::PlannerContext ctx(inst, params);

    planners::PlanResult plan;
    try {
        plan = planners::plan_by_name(ctx, algo);
    } catch (const BudgetExhausted& e) {
        std::cerr << "budget exhausted without incumbent: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::exception& e) {
        std::cerr << "planning failed: " << e.what() << "\n";
        return kExitInstance;
    }

    std::string trace_file = trace_path;
    if (trace_file.empty() && !out_path.empty()) {
        trace_file = out_path + ".trace";
    }
    if (!trace_file.empty()) plan.trace.save(trace_file);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        out << planners::serialize_plan(plan, trace_file);
    }
    std::cout << plan.algorithm << " makespan=" << std::fixed << std::setprecision(3)
              << plan.makespan << " compute_time=" << plan.compute_time
              << " nodes_expanded=" << plan.nodes_expanded << "\n";
    return 0;
}

int cmd_bench(const std::string& config_path, int jobs) {
    bench::BenchConfig config;
    try {
        config = bench::BenchConfig::load(config_path);
    } catch (const std::exception& e) {
        std::cerr << "bad bench config: " << e.what() << "\n";
        return kExitFlags;
    }
    if (jobs > 0) config.jobs = jobs;
    const std::vector<bench::BenchRecord> records = bench::run_suite(config);
    bench::write_aggregates(bench::aggregate(records), config.out_dir);
    std::cout << "wrote " << records.size() << " records to "
              << (fs::path(config.out_dir) / config.csv_name).string() << "\n";
    return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& format) {
    if (format != "csv") {
        std::cerr << "unknown format: " << format << "\n";
        return kExitFlags;
    }
    motion::Trace trace;
    try {
        trace = motion::Trace::load(trace_path);
    } catch (const std::exception& e) {
        std::cerr << "cannot load trace: " << e.what() << "\n";
        return kExitInstance;
    }
    std::cout << "time,robot_id,x,y,carrying,event\n";
    std::cout.precision(17);
    for (const motion::TraceSample& s : trace.samples) {
        std::cout << s.time << "," << s.robot << "," << s.x << "," << s.y << "," << s.carrying
                  << ",\n";
    }
    for (const motion::TraceEvent& e : trace.events) {
        std::cout << e.time << "," << e.robot << ",,,," << motion::to_string(e.kind) << ":"
                  << e.object << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& instance_path) {
    scene::Instance inst;
    try {
        inst = scene::load(instance_path);
    } catch (const std::exception& e) {
        std::cerr << "cannot load instance: " << e.what() << "\n";
        return kExitInstance;
    }
    scene::ValidationReport rep = scene::validate(inst);
    if (!rep.ok()) {
        std::cerr << rep.summary();
        return kExitInstance;
    }
    std::cout << "valid\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot clutter removal planning toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate problem instances");
    std::string g_mode = "scattered", g_out = "corpus";
    int g_n = 10, g_k = 2, g_seeds = 1;
    double g_exit = -1.0, g_side = 10.0, g_radius = 0.3, g_vmax = 1.0, g_clear = 0.05;
    uint64_t g_seed_base = 0;
    gen->add_option("--mode", g_mode, "cluttered|scattered")
        ->check(CLI::IsMember({"cluttered", "scattered"}));
    gen->add_option("--n", g_n, "object count")->check(CLI::PositiveNumber);
    gen->add_option("--k", g_k, "robot count")->check(CLI::PositiveNumber);
    gen->add_option("--seeds", g_seeds, "number of seeds")->check(CLI::PositiveNumber);
    gen->add_option("--seed-base", g_seed_base, "first seed value");
    gen->add_option("--out", g_out, "output corpus directory");
    gen->add_option("--exit-width", g_exit, "exit width in meters (default by rule)");
    gen->add_option("--side", g_side, "workspace side length");
    gen->add_option("--robot-radius", g_radius, "robot radius");
    gen->add_option("--v-max", g_vmax, "robot speed");
    gen->add_option("--min-clearance", g_clear, "object clearance");

    // plan
    auto* plan = app.add_subcommand("plan", "Plan one instance");
    std::string p_instance, p_algo = "greedy", p_lookahead = "on", p_out, p_trace;
    std::string p_heuristic = "strengthened";
    double p_budget = 400.0;
    int p_mcts_iters = 2000, p_dp_cap = 20;
    double p_mcts_c = 1.0;
    plan->add_option("--instance", p_instance, "instance file")->required();
    plan->add_option("--algo", p_algo, "greedy|mcts|dp|astar|single")
        ->check(CLI::IsMember({"greedy", "mcts", "dp", "astar", "single"}));
    plan->add_option("--lookahead", p_lookahead, "on|off")
        ->check(CLI::IsMember({"on", "off"}));
    plan->add_option("--budget", p_budget, "A* wall-clock budget in seconds");
    plan->add_option("--out", p_out, "plan output file");
    plan->add_option("--trace", p_trace, "trace output file");
    plan->add_option("--mcts-iters", p_mcts_iters, "MCTS iterations per commit");
    plan->add_option("--mcts-c", p_mcts_c, "MCTS exploration constant");
    plan->add_option("--dp-cap", p_dp_cap, "DP object-count cap");
    plan->add_option("--heuristic", p_heuristic, "strengthened|paper")
        ->check(CLI::IsMember({"strengthened", "paper"}));

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
    std::string b_config;
    int b_jobs = 0;
    bench_cmd->add_option("--config", b_config, "bench config JSON")->required();
    bench_cmd->add_option("--jobs", b_jobs, "worker count (default: cores)");

    // replay
    auto* replay = app.add_subcommand("replay", "Flatten a trace for plotting");
    std::string r_trace, r_format = "csv";
    replay->add_option("--trace", r_trace, "trace file")->required();
    replay->add_option("--format", r_format, "output format (csv)");

    // validate
    auto* validate = app.add_subcommand("validate", "Validate an instance file");
    std::string v_instance;
    validate->add_option("--instance", v_instance, "instance file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitFlags;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(g_mode, g_n, g_k, g_seeds, g_out, g_exit, g_side, g_radius, g_vmax,
                           g_clear, g_seed_base);
        }
        if (plan->parsed()) {
            return cmd_plan(p_instance, p_algo, p_lookahead, p_budget, p_out, p_trace,
                            p_mcts_iters, p_mcts_c, p_dp_cap, p_heuristic);
        }
        if (bench_cmd->parsed()) return cmd_bench(b_config, b_jobs);
        if (replay->parsed()) return cmd_replay(r_trace, r_format);
        if (validate->parsed()) return cmd_validate(v_instance);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
