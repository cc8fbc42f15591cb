#include "clutter/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "clutter/access.hpp"
#include "clutter/rng.hpp"
#include "json.hpp"

namespace clutter::scene {

using geom::Point2;
using nlohmann::json;

const SceneObject& Instance::object_by_id(int id) const {
    for (const SceneObject& o : objects) {
        if (o.id == id) return o;
    }
    throw Error("unknown object id " + std::to_string(id));
}

int Instance::slot_count(double exit_width, double robot_radius) {
    const int m = static_cast<int>(std::floor(exit_width / (2.5 * 2.0 * robot_radius)));
    return std::max(1, m);
}

std::vector<Point2> Instance::dropoff_slots() const {
    const int m = slot_count(exit_width, robot_radius);
    const double lo = exit_center.x - exit_width / 2.0;
    std::vector<Point2> slots;
    slots.reserve(m);
    for (int i = 0; i < m; ++i) {
        slots.push_back({lo + (i + 0.5) * exit_width / m, 0.0});
    }
    return slots;
}

std::string to_string(GenMode mode) {
    return mode == GenMode::cluttered ? "cluttered" : "scattered";
}

GenMode gen_mode_from_string(const std::string& s) {
    if (s == "cluttered") return GenMode::cluttered;
    if (s == "scattered") return GenMode::scattered;
    throw ParseError("unknown generation mode: " + s);
}

namespace {

constexpr uint64_t kPlacementBudget = 100000;
constexpr int kInstanceRetries = 200;

geom::OrientedRect draw_rect(const GenParams& p, const FleetParams& fleet, uint64_t seed,
                             uint64_t attempt, uint64_t obj, uint64_t try_no) {
    const uint64_t s1 = (obj << 32) | try_no;
    geom::OrientedRect r;
    r.half_x = rng::draw_range(p.object_size_min, p.object_size_max, seed, attempt, s1, 0) / 2.0;
    r.half_y = rng::draw_range(p.object_size_min, p.object_size_max, seed, attempt, s1, 1) / 2.0;
    r.heading = rng::draw_range(-M_PI, M_PI, seed, attempt, s1, 2);
    const double L = fleet.side;
    if (p.mode == GenMode::cluttered) {
        const double R = p.clutter_radius_fraction * L;
        const double ang = rng::draw_range(0.0, 2.0 * M_PI, seed, attempt, s1, 3);
        const double rad = R * std::sqrt(rng::draw_unit(seed, attempt, s1, 4));
        r.center = {L / 2.0 + rad * std::cos(ang), L / 2.0 + rad * std::sin(ang)};
    } else {
        const double margin = std::hypot(r.half_x, r.half_y);
        r.center = {rng::draw_range(margin, L - margin, seed, attempt, s1, 3),
                    rng::draw_range(margin, L - margin, seed, attempt, s1, 4)};
    }
    return r;
}

bool rect_inside_workspace(const geom::OrientedRect& r, double side) {
    for (const Point2& c : r.corners()) {
        if (c.x < 0.0 || c.x > side || c.y < 0.0 || c.y > side) return false;
    }
    return true;
}

}  // namespace

Instance generate(const GenParams& params, const FleetParams& fleet, uint64_t seed) {
    if (params.n < 1) throw Error("generate: n must be >= 1");
    uint64_t rejections = 0;
    for (int attempt = 0; attempt < kInstanceRetries; ++attempt) {
        std::vector<geom::OrientedRect> rects;
        bool attempt_failed = false;
        for (int i = 0; i < params.n && !attempt_failed; ++i) {
            for (uint64_t try_no = 0;; ++try_no) {
                const geom::OrientedRect cand =
                    draw_rect(params, fleet, seed, attempt, i, try_no);
                bool ok = rect_inside_workspace(cand, fleet.side);
                for (size_t j = 0; ok && j < rects.size(); ++j) {
                    ok = geom::rect_rect_distance(cand, rects[j]) >= params.min_clearance;
                }
                if (ok) {
                    rects.push_back(cand);
                    break;
                }
                if (++rejections >= kPlacementBudget) {
                    throw GenerationBudgetExceeded(
                        "generate: exceeded placement budget; parameters too dense");
                }
            }
        }
        Instance inst;
        inst.side = fleet.side;
        inst.exit_center = {fleet.side / 2.0, 0.0};
        inst.exit_width = fleet.exit_width;
        inst.robot_radius = fleet.robot_radius;
        inst.robot_count = fleet.robot_count;
        inst.v_max = fleet.v_max;
        inst.t_pick = fleet.t_pick;
        inst.t_unload = fleet.t_unload;
        inst.seed = seed;
        for (int i = 0; i < params.n; ++i) inst.objects.push_back({i, rects[i]});
        if (access::peel_feasible(inst).first) return inst;
        // Whole-instance retry: a sealed arrangement came out of the sampler.
        rejections += params.n;
        if (rejections >= kPlacementBudget) {
            throw GenerationBudgetExceeded("generate: exceeded budget while seeking feasibility");
        }
    }
    throw GenerationBudgetExceeded("generate: no peel-feasible instance found");
}

std::string ValidationReport::summary() const {
    if (violations.empty()) return "valid";
    std::ostringstream os;
    for (const Violation& v : violations) {
        os << v.kind;
        if (!v.object_ids.empty()) {
            os << " [";
            for (size_t i = 0; i < v.object_ids.size(); ++i) {
                os << (i ? "," : "") << v.object_ids[i];
            }
            os << "]";
        }
        os << ": " << v.detail << "\n";
    }
    return os.str();
}

ValidationReport validate(const Instance& inst, bool run_peel_check) {
    ValidationReport rep;
    auto add = [&](const std::string& kind, const std::string& detail,
                   std::vector<int> ids = {}) {
        rep.violations.push_back({kind, detail, std::move(ids)});
    };

    if (!(inst.side > 0.0)) add("bad_field", "side must be positive");
    if (!(inst.robot_radius > 0.0)) add("bad_field", "robot_radius must be positive");
    if (inst.robot_count < 1) add("bad_field", "robot_count must be >= 1");
    if (!(inst.v_max > 0.0)) add("bad_field", "v_max must be positive");
    if (inst.t_pick < 0.0 || inst.t_unload < 0.0) add("bad_field", "negative pick/unload time");
    if (inst.exit_width < 2.0 * inst.robot_radius) {
        add("bad_field", "exit_width must be at least one robot diameter");
    }
    if (std::abs(inst.exit_center.y) > 1e-9 ||
        inst.exit_center.x - inst.exit_width / 2.0 < -1e-9 ||
        inst.exit_center.x + inst.exit_width / 2.0 > inst.side + 1e-9) {
        add("bad_field", "exit segment must lie on the south boundary");
    }

    std::vector<int> seen;
    for (const SceneObject& o : inst.objects) {
        if (std::find(seen.begin(), seen.end(), o.id) != seen.end()) {
            add("duplicate_id", "object id appears more than once", {o.id});
        }
        seen.push_back(o.id);
        if (!(o.rect.half_x > 0.0 && o.rect.half_y > 0.0)) {
            add("bad_object", "half extents must be strictly positive", {o.id});
        }
        if (o.rect.heading < -M_PI || o.rect.heading >= M_PI) {
            add("bad_object", "heading outside [-pi, pi)", {o.id});
        }
    }
    if (!rep.ok()) return rep;

    for (const SceneObject& o : inst.objects) {
        if (!rect_inside_workspace(o.rect, inst.side)) {
            add("out_of_bounds", "object extends outside the workspace", {o.id});
        }
    }
    for (size_t i = 0; i < inst.objects.size(); ++i) {
        for (size_t j = i + 1; j < inst.objects.size(); ++j) {
            const auto ca = inst.objects[i].rect.corners();
            const auto cb = inst.objects[j].rect.corners();
            if (geom::convex_polygons_overlap(
                    std::vector<Point2>(ca.begin(), ca.end()),
                    std::vector<Point2>(cb.begin(), cb.end()))) {
                add("overlap", "objects overlap",
                    {inst.objects[i].id, inst.objects[j].id});
            }
        }
    }
    if (rep.ok() && run_peel_check && !inst.objects.empty()) {
        auto [feasible, order] = access::peel_feasible(inst);
        if (!feasible) {
            std::vector<int> stuck;
            for (const SceneObject& o : inst.objects) {
                if (std::find(order.begin(), order.end(), o.id) == order.end()) {
                    stuck.push_back(o.id);
                }
            }
            add("peel_infeasible", "instance cannot be cleared by repeated peeling", stuck);
        }
    }
    return rep;
}

namespace {

json to_json(const Instance& inst) {
    json j;
    j["schema_version"] = 1;
    j["side_L"] = inst.side;
    j["exit_center"] = {{"x", inst.exit_center.x}, {"y", inst.exit_center.y}};
    j["exit_width"] = inst.exit_width;
    j["robot_radius"] = inst.robot_radius;
    j["robot_count"] = inst.robot_count;
    j["v_max"] = inst.v_max;
    j["t_pick"] = inst.t_pick;
    j["t_unload"] = inst.t_unload;
    j["seed"] = inst.seed;
    json objs = json::array();
    for (const SceneObject& o : inst.objects) {
        objs.push_back({{"id", o.id},
                        {"cx", o.rect.center.x},
                        {"cy", o.rect.center.y},
                        {"hx", o.rect.half_x},
                        {"hy", o.rect.half_y},
                        {"heading", o.rect.heading}});
    }
    j["objects"] = objs;
    return j;
}

}  // namespace

std::string serialize(const Instance& inst) { return to_json(inst).dump(2) + "\n"; }

Instance deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("instance parse failed: ") + e.what());
    }
    try {
        if (!j.contains("schema_version")) throw SchemaMismatch("missing schema_version");
        if (j.at("schema_version").get<int>() != 1) {
            throw SchemaMismatch("unsupported schema_version " +
                                 j.at("schema_version").dump());
        }
        Instance inst;
        inst.side = j.at("side_L").get<double>();
        inst.exit_center = {j.at("exit_center").at("x").get<double>(),
                            j.at("exit_center").at("y").get<double>()};
        inst.exit_width = j.at("exit_width").get<double>();
        inst.robot_radius = j.at("robot_radius").get<double>();
        inst.robot_count = j.at("robot_count").get<int>();
        inst.v_max = j.at("v_max").get<double>();
        inst.t_pick = j.at("t_pick").get<double>();
        inst.t_unload = j.at("t_unload").get<double>();
        inst.seed = j.at("seed").get<uint64_t>();
        for (const json& jo : j.at("objects")) {
            SceneObject o;
            o.id = jo.at("id").get<int>();
            o.rect.center = {jo.at("cx").get<double>(), jo.at("cy").get<double>()};
            o.rect.half_x = jo.at("hx").get<double>();
            o.rect.half_y = jo.at("hy").get<double>();
            o.rect.heading = jo.at("heading").get<double>();
            inst.objects.push_back(o);
        }
        ValidationReport rep = validate(inst, /*run_peel_check=*/false);
        if (!rep.ok()) throw ParseError("instance failed validation: " + rep.summary());
        return inst;
    } catch (const json::exception& e) {
        throw ParseError(std::string("instance field error: ") + e.what());
    }
}

void save(const Instance& inst, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << serialize(inst);
    if (!out) throw Error("write failed: " + path);
}

Instance load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open instance file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

}  // namespace clutter::scene
