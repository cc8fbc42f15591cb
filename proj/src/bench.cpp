#include "clutter/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "clutter/access.hpp"
#include "json.hpp"

namespace clutter::bench {

namespace fs = std::filesystem;
using nlohmann::json;

BenchConfig BenchConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bench config parse failed: ") + e.what());
    }
    BenchConfig c;
    try {
        if (j.contains("modes")) {
            c.modes.clear();
            for (const auto& m : j["modes"]) {
                c.modes.push_back(scene::gen_mode_from_string(m.get<std::string>()));
            }
        }
        if (j.contains("object_counts")) {
            c.object_counts = j["object_counts"].get<std::vector<int>>();
        }
        if (j.contains("seeds_per_cell")) c.seeds_per_cell = j["seeds_per_cell"].get<int>();
        if (j.contains("seed_base")) c.seed_base = j["seed_base"].get<uint64_t>();
        if (j.contains("k_values")) c.k_values = j["k_values"].get<std::vector<int>>();
        if (j.contains("algorithms")) {
            c.algorithms = j["algorithms"].get<std::vector<std::string>>();
        }
        if (j.contains("lookahead_variants")) {
            c.lookahead_variants.clear();
            for (const auto& v : j["lookahead_variants"]) {
                const std::string s = v.get<std::string>();
                if (s != "on" && s != "off") throw ParseError("lookahead variant must be on/off");
                c.lookahead_variants.push_back(s == "on");
            }
        }
        if (j.contains("time_budget_s")) c.time_budget = j["time_budget_s"].get<double>();
        if (j.contains("exit_width")) c.fleet.exit_width = j["exit_width"].get<double>();
        if (j.contains("side")) c.fleet.side = j["side"].get<double>();
        if (j.contains("robot_radius")) c.fleet.robot_radius = j["robot_radius"].get<double>();
        if (j.contains("v_max")) c.fleet.v_max = j["v_max"].get<double>();
        if (j.contains("t_pick")) c.fleet.t_pick = j["t_pick"].get<double>();
        if (j.contains("t_unload")) c.fleet.t_unload = j["t_unload"].get<double>();
        if (j.contains("min_clearance")) c.gen.min_clearance = j["min_clearance"].get<double>();
        if (j.contains("object_size_min")) {
            c.gen.object_size_min = j["object_size_min"].get<double>();
        }
        if (j.contains("object_size_max")) {
            c.gen.object_size_max = j["object_size_max"].get<double>();
        }
        if (j.contains("clutter_radius_fraction")) {
            c.gen.clutter_radius_fraction = j["clutter_radius_fraction"].get<double>();
        }
        if (j.contains("compute_single_opt")) {
            c.compute_single_opt = j["compute_single_opt"].get<bool>();
        }
        if (j.contains("single_opt_cap")) c.single_opt_cap = j["single_opt_cap"].get<int>();
        if (j.contains("mcts_iterations")) c.mcts_iterations = j["mcts_iterations"].get<int>();
        if (j.contains("mcts_exploration")) {
            c.mcts_exploration = j["mcts_exploration"].get<double>();
        }
        if (j.contains("dp_cap")) c.dp_cap = j["dp_cap"].get<int>();
        if (j.contains("require_dependency")) {
            c.require_dependency = j["require_dependency"].get<bool>();
        }
        if (j.contains("corpus_dir")) c.corpus_dir = j["corpus_dir"].get<std::string>();
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("csv_name")) c.csv_name = j["csv_name"].get<std::string>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
        if (j.contains("wall_clock_timing")) {
            c.wall_clock_timing = j["wall_clock_timing"].get<bool>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bench config field error: ") + e.what());
    }
    return c;
}

BenchConfig BenchConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open bench config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

scene::Instance corpus_instance(const BenchConfig& config, scene::GenMode mode, int n, int k,
                                int seed_index) {
    scene::GenParams gen = config.gen;
    gen.mode = mode;
    gen.n = n;
    scene::FleetParams fleet = config.fleet;
    fleet.robot_count = k;

    // Dependency-filtered corpora scan seeds upward deterministically.
    int matched = -1;
    for (uint64_t seed = config.seed_base;; ++seed) {
        scene::Instance inst = scene::generate(gen, fleet, seed);
        if (!config.require_dependency || access::has_dependency(inst)) {
            if (++matched == seed_index) {
                if (!config.corpus_dir.empty()) {
                    const fs::path dir =
                        fs::path(config.corpus_dir) / scene::to_string(mode) / std::to_string(n);
                    fs::create_directories(dir);
                    const fs::path file = dir / (std::to_string(seed) + ".inst");
                    if (!fs::exists(file)) scene::save(inst, file.string());
                }
                return inst;
            }
        }
        if (seed > config.seed_base + 10000) {
            throw GenerationBudgetExceeded("corpus_instance: dependency filter too strict");
        }
    }
}

namespace {

struct Cell {
    scene::GenMode mode;
    int n = 0;
    int k = 0;
    int seed_index = 0;
    std::string algorithm;
    bool lookahead = true;
};

std::string cell_instance_id(const Cell& c) {
    std::ostringstream os;
    os << scene::to_string(c.mode) << "/" << c.n << "/k" << c.k << "/s" << c.seed_index;
    return os.str();
}

std::string csv_double(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::vector<BenchRecord> run_suite(const BenchConfig& config, const CellObserver& observer) {
    // Instances are shared by every algorithm/lookahead cell of the same
    // (mode, n, k, seed); planners for one instance also share a context.
    struct InstanceJob {
        scene::GenMode mode;
        int n, k, seed_index;
        std::vector<std::pair<std::string, bool>> runs;  // algorithm, lookahead
    };
    std::vector<InstanceJob> jobs;
    for (scene::GenMode mode : config.modes) {
        for (int n : config.object_counts) {
            for (int k : config.k_values) {
                for (int s = 0; s < config.seeds_per_cell; ++s) {
                    InstanceJob job{mode, n, k, s, {}};
                    for (const std::string& algo : config.algorithms) {
                        for (bool lh : config.lookahead_variants) {
                            job.runs.emplace_back(algo, lh);
                            if (algo == "single") break;  // lookahead is irrelevant
                        }
                    }
                    jobs.push_back(std::move(job));
                }
            }
        }
    }

    std::vector<BenchRecord> records;
    std::mutex records_mutex;
    std::atomic<size_t> next_job{0};

    auto worker = [&]() {
        while (true) {
            const size_t ji = next_job.fetch_add(1);
            if (ji >= jobs.size()) return;
            const InstanceJob& job = jobs[ji];
            scene::Instance inst;
            try {
                inst = corpus_instance(config, job.mode, job.n, job.k, job.seed_index);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(records_mutex);
                for (const auto& [algo, lh] : job.runs) {
                    BenchRecord rec;
                    rec.instance_id = cell_instance_id({job.mode, job.n, job.k, job.seed_index,
                                                        algo, lh});
                    rec.mode = scene::to_string(job.mode);
                    rec.n = job.n;
                    rec.k = job.k;
                    rec.algorithm = algo;
                    rec.lookahead = lh;
                    rec.makespan = std::numeric_limits<double>::quiet_NaN();
                    records.push_back(rec);
                }
                continue;
            }

            planners::PlannerParams params;
            params.time_budget = config.time_budget;
            params.mcts_iterations = config.mcts_iterations;
            params.mcts_exploration = config.mcts_exploration;
            params.dp_cap = config.dp_cap;
            planners::PlannerContext ctx(inst, params);

            double single_T = std::numeric_limits<double>::quiet_NaN();
            if (config.compute_single_opt && job.n <= config.single_opt_cap) {
                try {
                    single_T = planners::plan_single_optimal(ctx).first;
                } catch (const std::exception&) {
                    // ratio stays undefined for these cells
                }
            }

            for (const auto& [algo, lh] : job.runs) {
                BenchRecord rec;
                rec.instance_id =
                    cell_instance_id({job.mode, job.n, job.k, job.seed_index, algo, lh});
                rec.mode = scene::to_string(job.mode);
                rec.n = job.n;
                rec.k = job.k;
                rec.algorithm = algo;
                rec.lookahead = lh;
                rec.single_opt_T = single_T;
                try {
                    ctx.params.lookahead = lh;
                    planners::PlanResult plan = planners::plan_by_name(ctx, algo);
                    rec.makespan = plan.makespan;
                    rec.compute_time = config.wall_clock_timing ? plan.compute_time : 0.0;
                    rec.nodes_expanded = plan.nodes_expanded;
                    if (!std::isnan(single_T) && single_T > 0.0) {
                        rec.ratio = plan.makespan / single_T;
                    }
                    if (observer) observer(rec, plan);
                } catch (const std::exception&) {
                    rec.makespan = std::numeric_limits<double>::quiet_NaN();
                }
                std::lock_guard<std::mutex> lock(records_mutex);
                records.push_back(rec);
            }
        }
    };

    int jobs_n = config.jobs > 0 ? config.jobs
                                 : static_cast<int>(std::thread::hardware_concurrency());
    jobs_n = std::max(1, std::min<int>(jobs_n, static_cast<int>(jobs.size())));
    if (jobs_n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs_n; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Canonical record order, independent of completion order.
    std::sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
        return std::tie(a.mode, a.n, a.k, a.instance_id, a.algorithm, a.lookahead) <
               std::tie(b.mode, b.n, b.k, b.instance_id, b.algorithm, b.lookahead);
    });

    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        write_csv(records, (fs::path(config.out_dir) / config.csv_name).string());
    }
    return records;
}

std::string to_csv(const std::vector<BenchRecord>& records) {
    std::ostringstream os;
    os << "instance_id,mode,n,k,algorithm,lookahead,makespan,single_opt_T,ratio,"
          "compute_time,nodes_expanded\n";
    for (const BenchRecord& r : records) {
        os << r.instance_id << "," << r.mode << "," << r.n << "," << r.k << "," << r.algorithm
           << "," << (r.lookahead ? "on" : "off") << "," << csv_double(r.makespan) << ","
           << csv_double(r.single_opt_T) << "," << csv_double(r.ratio) << ","
           << csv_double(r.compute_time) << "," << r.nodes_expanded << "\n";
    }
    return os.str();
}

std::vector<BenchRecord> from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("bench csv: empty file");
    std::vector<BenchRecord> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        f.push_back(cur);
        if (f.size() != 11) {
            throw ParseError("bench csv line " + std::to_string(lineno) + ": bad field count");
        }
        BenchRecord r;
        r.instance_id = f[0];
        r.mode = f[1];
        r.n = std::stoi(f[2]);
        r.k = std::stoi(f[3]);
        r.algorithm = f[4];
        r.lookahead = f[5] == "on";
        r.makespan = f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[6]);
        r.single_opt_T =
            f[7].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[7]);
        r.ratio = f[8].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[8]);
        r.compute_time =
            f[9].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[9]);
        r.nodes_expanded = std::stol(f[10]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_csv(const std::vector<BenchRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << to_csv(records);
}

std::vector<BenchRecord> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open bench csv: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_csv(buf.str());
}

std::vector<AggregateRow> aggregate(const std::vector<BenchRecord>& records) {
    if (records.empty()) throw Error("aggregate: no records");
    struct Acc {
        int count = 0;
        int ratio_count = 0;
        double ratio_sum = 0.0, ratio_sq = 0.0;
        double mk_sum = 0.0, mk_sq = 0.0;
        double ct_sum = 0.0;
    };
    std::map<std::tuple<std::string, int, int, std::string, bool>, Acc> groups;
    for (const BenchRecord& r : records) {
        if (std::isnan(r.makespan)) continue;  // failed cell
        Acc& a = groups[{r.mode, r.n, r.k, r.algorithm, r.lookahead}];
        ++a.count;
        a.mk_sum += r.makespan;
        a.mk_sq += r.makespan * r.makespan;
        a.ct_sum += r.compute_time;
        if (!std::isnan(r.ratio)) {
            ++a.ratio_count;
            a.ratio_sum += r.ratio;
            a.ratio_sq += r.ratio * r.ratio;
        }
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, a] : groups) {
        AggregateRow row;
        std::tie(row.mode, row.n, row.k, row.algorithm, row.lookahead) = key;
        row.count = a.count;
        row.mean_makespan = a.mk_sum / a.count;
        row.stddev_makespan =
            std::sqrt(std::max(0.0, a.mk_sq / a.count - row.mean_makespan * row.mean_makespan));
        row.mean_compute = a.ct_sum / a.count;
        if (a.ratio_count > 0) {
            row.mean_ratio = a.ratio_sum / a.ratio_count;
            row.stddev_ratio = std::sqrt(
                std::max(0.0, a.ratio_sq / a.ratio_count - row.mean_ratio * row.mean_ratio));
        }
        rows.push_back(row);
    }
    return rows;
}

void write_aggregates(const std::vector<AggregateRow>& rows, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "aggregate.txt", std::ios::binary);
        out << "# mode n k algorithm lookahead count mean_ratio stddev_ratio mean_makespan "
               "stddev_makespan mean_compute\n";
        for (const AggregateRow& r : rows) {
            out << r.mode << " " << r.n << " " << r.k << " " << r.algorithm << " "
                << (r.lookahead ? "on" : "off") << " " << r.count << " "
                << csv_double(r.mean_ratio) << " " << csv_double(r.stddev_ratio) << " "
                << r.mean_makespan << " " << r.stddev_makespan << " " << r.mean_compute << "\n";
        }
    }
    // Two series per (mode, k, algorithm, lookahead): ratio-vs-n, compute-vs-n.
    std::map<std::tuple<std::string, int, std::string, bool>, std::vector<const AggregateRow*>>
        series;
    for (const AggregateRow& r : rows) {
        series[{r.mode, r.k, r.algorithm, r.lookahead}].push_back(&r);
    }
    for (auto& [key, group] : series) {
        const auto& [mode, k, algo, lh] = key;
        std::sort(group.begin(), group.end(),
                  [](const AggregateRow* a, const AggregateRow* b) { return a->n < b->n; });
        std::ostringstream base;
        base << mode << "_k" << k << "_" << algo << (lh ? "_lh" : "_nolh");
        {
            std::ofstream out(fs::path(out_dir) / ("ratio_" + base.str() + ".dat"),
                              std::ios::binary);
            out << "# ratio vs n | " << mode << " k=" << k << " " << algo
                << (lh ? " lookahead" : " no-lookahead") << " | ylog 0\n";
            for (const AggregateRow* r : group) {
                if (!std::isnan(r->mean_ratio)) out << r->n << " " << r->mean_ratio << "\n";
            }
        }
        {
            std::ofstream out(fs::path(out_dir) / ("time_" + base.str() + ".dat"),
                              std::ios::binary);
            out << "# compute time vs n | " << mode << " k=" << k << " " << algo
                << (lh ? " lookahead" : " no-lookahead") << " | ylog 1\n";
            for (const AggregateRow* r : group) out << r->n << " " << r->mean_compute << "\n";
        }
    }
}

}  // namespace clutter::bench
