#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clutter/bench.hpp"

namespace py = pybind11;
using namespace clutter;

namespace {

py::dict plan_to_dict(const planners::PlanResult& plan) {
    py::dict d;
    d["algorithm"] = plan.algorithm;
    d["lookahead"] = plan.lookahead;
    d["sequences"] = plan.sequences;
    d["makespan"] = plan.makespan;
    d["compute_time"] = plan.compute_time;
    d["nodes_expanded"] = plan.nodes_expanded;
    d["budget_exhausted"] = plan.budget_exhausted;
    d["subset_evaluations"] = plan.subset_evaluations;
    d["recursion_evaluations"] = plan.recursion_evaluations;
    py::list events;
    for (const motion::TraceEvent& e : plan.trace.events) {
        events.append(py::make_tuple(e.time, e.robot, motion::to_string(e.kind), e.object));
    }
    d["events"] = events;
    d["event_count"] = plan.trace.events.size();
    return d;
}

planners::PlannerParams params_from_kwargs(bool lookahead, double budget, int mcts_iterations,
                                           double mcts_exploration, int dp_cap) {
    planners::PlannerParams p;
    p.lookahead = lookahead;
    p.time_budget = budget;
    p.mcts_iterations = mcts_iterations;
    p.mcts_exploration = mcts_exploration;
    p.dp_cap = dp_cap;
    return p;
}

}  // namespace

PYBIND11_MODULE(clutterplan, m) {
    m.doc() = "Multi-robot clutter removal planning toolkit";

    py::class_<geom::Point2>(m, "Point2")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return geom::Point2{x, y}; }))
        .def_readwrite("x", &geom::Point2::x)
        .def_readwrite("y", &geom::Point2::y)
        .def("__repr__", [](const geom::Point2& p) {
            return "Point2(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
        });

    py::class_<scene::Instance>(m, "Instance")
        .def(py::init<>())
        .def_readwrite("side", &scene::Instance::side)
        .def_readwrite("exit_width", &scene::Instance::exit_width)
        .def_readwrite("robot_radius", &scene::Instance::robot_radius)
        .def_readwrite("robot_count", &scene::Instance::robot_count)
        .def_readwrite("v_max", &scene::Instance::v_max)
        .def_readwrite("t_pick", &scene::Instance::t_pick)
        .def_readwrite("t_unload", &scene::Instance::t_unload)
        .def_readonly("seed", &scene::Instance::seed)
        .def_property_readonly("n", &scene::Instance::object_count)
        .def("objects",
             [](const scene::Instance& inst) {
                 py::list out;
                 for (const scene::SceneObject& o : inst.objects) {
                     py::dict d;
                     d["id"] = o.id;
                     d["cx"] = o.rect.center.x;
                     d["cy"] = o.rect.center.y;
                     d["hx"] = o.rect.half_x;
                     d["hy"] = o.rect.half_y;
                     d["heading"] = o.rect.heading;
                     out.append(d);
                 }
                 return out;
             })
        .def("dropoff_slots", [](const scene::Instance& inst) {
            py::list out;
            for (const geom::Point2& p : inst.dropoff_slots()) {
                out.append(py::make_tuple(p.x, p.y));
            }
            return out;
        });

    m.def(
        "generate",
        [](const std::string& mode, int n, int k, uint64_t seed, double exit_width,
           double side) {
            scene::GenParams gp;
            gp.mode = scene::gen_mode_from_string(mode);
            gp.n = n;
            scene::FleetParams fleet;
            fleet.robot_count = k;
            fleet.side = side;
            if (exit_width > 0) fleet.exit_width = exit_width;
            fleet.t_pick = fleet.t_unload = (side / 2.0) / fleet.v_max;
            return scene::generate(gp, fleet, seed);
        },
        py::arg("mode"), py::arg("n"), py::arg("k") = 2, py::arg("seed") = 0,
        py::arg("exit_width") = -1.0, py::arg("side") = 10.0,
        "Generate a random peel-feasible instance");

    m.def("validate", [](const scene::Instance& inst) {
        scene::ValidationReport rep = scene::validate(inst);
        py::list out;
        for (const auto& v : rep.violations) {
            out.append(py::make_tuple(v.kind, v.detail, v.object_ids));
        }
        return out;
    });
    m.def("save_instance", [](const scene::Instance& i, const std::string& p) {
        scene::save(i, p);
    });
    m.def("load_instance", [](const std::string& p) { return scene::load(p); });
    m.def("serialize_instance", [](const scene::Instance& i) { return scene::serialize(i); });

    m.def("peel_feasible", [](const scene::Instance& inst) {
        auto [ok, order] = access::peel_feasible(inst);
        return py::make_tuple(ok, order);
    });
    m.def(
        "sample_grasps",
        [](const scene::Instance& inst, int object_id, const std::vector<int>& removed) {
            py::list out;
            for (const access::GraspPose& g : access::sample_grasps(inst, object_id, removed)) {
                out.append(py::make_tuple(g.robot_center.x, g.robot_center.y,
                                          g.approach_heading));
            }
            return out;
        },
        py::arg("instance"), py::arg("object_id"), py::arg("removed") = std::vector<int>{});
    m.def(
        "accessible",
        [](const scene::Instance& inst, int object_id, const std::vector<int>& removed,
           double x, double y) {
            return access::accessible(inst, object_id, removed, {x, y});
        },
        py::arg("instance"), py::arg("object_id"), py::arg("removed") = std::vector<int>{},
        py::arg("x") = 5.0, py::arg("y") = 0.0);

    m.def("estimate_cost", [](const scene::Instance& inst, int object_id) {
        return motion::estimate_cost(inst, object_id);
    });

    m.def(
        "plan",
        [](const scene::Instance& inst, const std::string& algorithm, bool lookahead,
           double budget, int mcts_iterations, double mcts_exploration, int dp_cap,
           const std::string& trace_path) {
            planners::PlannerContext ctx(
                inst, params_from_kwargs(lookahead, budget, mcts_iterations, mcts_exploration,
                                         dp_cap));
            planners::PlanResult plan = planners::plan_by_name(ctx, algorithm);
            if (!trace_path.empty()) plan.trace.save(trace_path);
            return plan_to_dict(plan);
        },
        py::arg("instance"), py::arg("algorithm"), py::arg("lookahead") = true,
        py::arg("budget") = 400.0, py::arg("mcts_iterations") = 2000,
        py::arg("mcts_exploration") = 1.0, py::arg("dp_cap") = 20,
        py::arg("trace_path") = std::string{},
        "Run one planner and return a plan summary dict");

    m.def(
        "plan_single_optimal",
        [](const scene::Instance& inst, int dp_cap) {
            planners::PlannerParams p;
            p.dp_cap = dp_cap;
            planners::PlannerContext ctx(inst, p);
            auto [T, plan] = planners::plan_single_optimal(ctx);
            return py::make_tuple(T, plan_to_dict(plan));
        },
        py::arg("instance"), py::arg("dp_cap") = 20);

    m.def(
        "run_bench",
        [](const std::string& config_json) {
            const bench::BenchConfig config = bench::BenchConfig::from_json_text(config_json);
            py::list out;
            for (const bench::BenchRecord& r : bench::run_suite(config)) {
                py::dict d;
                d["instance_id"] = r.instance_id;
                d["mode"] = r.mode;
                d["n"] = r.n;
                d["k"] = r.k;
                d["algorithm"] = r.algorithm;
                d["lookahead"] = r.lookahead;
                d["makespan"] = r.makespan;
                d["single_opt_T"] = r.single_opt_T;
                d["ratio"] = r.ratio;
                d["compute_time"] = r.compute_time;
                d["nodes_expanded"] = r.nodes_expanded;
                out.append(d);
            }
            return out;
        },
        py::arg("config_json"), "Run a benchmark suite from a JSON config string");

    m.attr("__version__") = "0.1.0";
}
