#include "clutter/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "clutter/rng.hpp"

namespace clutter::motion {

using cspace::bit;
using geom::Point2;

size_t TripKeyHash::operator()(const TripKey& k) const {
    uint64_t h = rng::splitmix64(static_cast<uint64_t>(static_cast<uint32_t>(k.qx)) << 32 |
                                 static_cast<uint32_t>(k.qy));
    h = rng::hash_combine(h, static_cast<uint64_t>(k.object_index));
    h = rng::hash_combine(h, k.plan_mask);
    h = rng::hash_combine(h, k.wait_mask);
    h = rng::hash_combine(h, static_cast<uint64_t>(k.return_slot));
    return static_cast<size_t>(h);
}

std::optional<TripRef> TripCache::get(const TripKey& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void TripCache::put(const TripKey& key, TripRef trip) {
    std::lock_guard<std::mutex> lock(mutex_);
    map_[key] = std::move(trip);
}

size_t TripCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return map_.size();
}

TripKey make_trip_key(Point2 start, int object_index, Mask plan_mask, Mask wait_mask,
                      int return_slot) {
    TripKey k;
    k.qx = static_cast<int32_t>(std::llround(start.x * 100.0));
    k.qy = static_cast<int32_t>(std::llround(start.y * 100.0));
    k.object_index = object_index;
    k.plan_mask = plan_mask;
    k.wait_mask = wait_mask;
    k.return_slot = return_slot;
    return k;
}

namespace {

double path_length(const std::vector<Point2>& path) {
    double len = 0.0;
    for (size_t i = 1; i < path.size(); ++i) len += geom::dist(path[i - 1], path[i]);
    return len;
}

std::vector<Mask> segment_waits(const CSpace& cs, const std::vector<Point2>& path,
                                Mask wait_candidates) {
    std::vector<Mask> waits(path.size() > 1 ? path.size() - 1 : 0, 0);
    if (wait_candidates == 0) return waits;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        waits[i] = cs.segment_blockers(path[i], path[i + 1]) & wait_candidates;
    }
    return waits;
}

}  // namespace

TripRef plan_trip(CSpace& cs, TripCache& cache, Point2 start, int start_point, int object_index,
                  Mask present, Mask virtual_removed, int depart_slot, int return_slot) {
    const Mask plan_mask = present & ~virtual_removed;
    const Mask wait_mask = virtual_removed & present;
    const TripKey key = make_trip_key(start, object_index, plan_mask, wait_mask, return_slot);
    if (auto hit = cache.get(key)) return *hit;

    const scene::Instance& inst = cs.instance();
    const Mask back_mask = plan_mask & ~bit(object_index);
    const int slot_pt = cs.slot_point(return_slot);

    TripRef best;
    double best_total = std::numeric_limits<double>::infinity();
    const auto& poses = cs.poses(object_index);
    for (size_t pi = 0; pi < poses.size(); ++pi) {
        const cspace::PoseCandidate& pc = poses[pi];
        if (!cs.pose_free(pc, plan_mask)) continue;
        cspace::CSpace::PathQuery out = (start_point >= 0)
                                            ? cs.find_path(start_point, pc.point, plan_mask)
                                            : cs.find_path_from(start, pc.point, plan_mask);
        if (!out.found) continue;
        cspace::CSpace::PathQuery back = cs.find_path(pc.point, slot_pt, back_mask);
        if (!back.found) continue;
        const double total = out.length + back.length;
        if (total < best_total) {
            best_total = total;
            auto trip = std::make_shared<TripGeometry>();
            trip->object_index = object_index;
            trip->object_id = cs.id_of_index(object_index);
            trip->pose_index = static_cast<int>(pi);
            trip->pose_center = pc.center;
            trip->approach_heading = pc.approach_heading;
            trip->depart_slot = depart_slot;
            trip->return_slot = return_slot;
            trip->out_path.clear();
            trip->out_path.push_back(start);
            for (size_t i = 0; i < out.point_path.size(); ++i) {
                const int idx = out.point_path[i];
                if (idx < 0) continue;  // free-source marker
                if (i == 0 && start_point >= 0) continue;
                trip->out_path.push_back(cs.point(idx));
            }
            trip->back_path = cs.to_points(back.point_path);
            trip->out_length = path_length(trip->out_path);
            trip->back_length = path_length(trip->back_path);
            trip->nominal_duration =
                (trip->out_length + trip->back_length) / inst.v_max + inst.t_pick +
                inst.t_unload;
            trip->out_wait = segment_waits(cs, trip->out_path, wait_mask);
            trip->back_wait = segment_waits(cs, trip->back_path, wait_mask & ~bit(object_index));
            // A pose inside a virtually removed footprint delays final approach.
            const Mask pose_wait = pc.blocked_by & wait_mask;
            if (pose_wait && !trip->out_wait.empty()) trip->out_wait.back() |= pose_wait;
            best = std::move(trip);
        }
    }
    if (best) cache.put(key, best);
    return best;
}

double travel_lower_bound(const CSpace& cs, int object_index) {
    const scene::Instance& inst = cs.instance();
    const geom::OrientedRect& rect = inst.objects[object_index].rect;
    const double reach = cs.grasp_standoff() + std::hypot(rect.half_x, rect.half_y);
    const double d = geom::dist(rect.center, inst.exit_center) - reach - cs.slot_spread();
    return 2.0 * std::max(0.0, d);
}

double estimate_cost(const CSpace& cs, int object_index) {
    const scene::Instance& inst = cs.instance();
    return travel_lower_bound(cs, object_index) / inst.v_max + inst.t_pick + inst.t_unload;
}

double estimate_cost(const scene::Instance& inst, int object_id) {
    CSpace cs(inst);
    return estimate_cost(cs, cs.index_of_id(object_id));
}

double trip_sim_duration(const TripGeometry& trip, const scene::Instance& inst, double dt) {
    const double step_len = inst.v_max * dt;
    auto leg_steps = [&](double len) { return std::ceil(len / step_len - 1e-9); };
    auto phase_steps = [&](double t) { return std::ceil(t / dt - 1e-9); };
    return (leg_steps(trip.out_length) + leg_steps(trip.back_length) + phase_steps(inst.t_pick) +
            phase_steps(inst.t_unload)) *
           dt;
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::depart: return "depart";
        case EventKind::pick_start: return "pick_start";
        case EventKind::pick_end: return "pick_end";
        case EventKind::unload_start: return "unload_start";
        case EventKind::unload_end: return "unload_end";
        case EventKind::wait_start: return "wait_start";
        case EventKind::wait_end: return "wait_end";
    }
    return "?";
}

namespace {

EventKind event_from_string(const std::string& s) {
    for (EventKind k : {EventKind::depart, EventKind::pick_start, EventKind::pick_end,
                        EventKind::unload_start, EventKind::unload_end, EventKind::wait_start,
                        EventKind::wait_end}) {
        if (s == to_string(k)) return k;
    }
    throw ParseError("unknown trace event kind: " + s);
}

}  // namespace

std::string Trace::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "# clutterplan trace v1\n";
    os << "# dt " << dt << "\n";
    os << "# robots " << robot_count << "\n";
    os << "# makespan " << makespan << "\n";
    for (const TraceEvent& e : events) {
        os << e.time << " " << e.robot << " - - - " << to_string(e.kind) << ":" << e.object
           << "\n";
    }
    for (const TraceSample& s : samples) {
        os << s.time << " " << s.robot << " " << s.x << " " << s.y << " " << s.carrying
           << " -\n";
    }
    return os.str();
}

Trace Trace::parse(const std::string& text) {
    Trace t;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "clutterplan") {
                header_seen = true;
            } else if (key == "dt") {
                ls >> t.dt;
            } else if (key == "robots") {
                ls >> t.robot_count;
            } else if (key == "makespan") {
                ls >> t.makespan;
            }
            continue;
        }
        std::istringstream ls(line);
        double time;
        int robot;
        std::string xs, ys, cs, ev;
        if (!(ls >> time >> robot >> xs >> ys >> cs >> ev)) {
            throw ParseError("trace line " + std::to_string(lineno) + ": malformed record");
        }
        if (ev == "-") {
            TraceSample s;
            s.time = time;
            s.robot = robot;
            try {
                s.x = std::stod(xs);
                s.y = std::stod(ys);
                s.carrying = std::stoi(cs);
            } catch (const std::exception&) {
                throw ParseError("trace line " + std::to_string(lineno) + ": bad sample");
            }
            t.samples.push_back(s);
        } else {
            const size_t colon = ev.find(':');
            if (colon == std::string::npos) {
                throw ParseError("trace line " + std::to_string(lineno) + ": bad event");
            }
            TraceEvent e;
            e.time = time;
            e.robot = robot;
            e.kind = event_from_string(ev.substr(0, colon));
            e.object = std::stoi(ev.substr(colon + 1));
            t.events.push_back(e);
        }
    }
    if (!header_seen) throw ParseError("trace: missing header line");
    return t;
}

void Trace::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << serialize();
}

Trace Trace::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

Trace simulate_joint(const scene::Instance& inst, CSpace& cs,
                     const std::vector<std::vector<TimedTrip>>& schedule,
                     const SimParams& params, bool record_samples) {
    Simulator sim(inst, cs, params);
    SimState st = sim.initial_state();
    std::vector<size_t> next(schedule.size(), 0);

    Trace trace;
    trace.dt = params.dt;
    trace.robot_count = inst.robot_count;
    Trace* samples = record_samples ? &trace : nullptr;

    while (true) {
        // Hand every assignable robot its next queued trip whose epoch has come.
        for (int r = 0; r < static_cast<int>(schedule.size()); ++r) {
            if (!sim.assignable(st, r)) continue;
            if (next[r] < schedule[r].size() &&
                schedule[r][next[r]].start_epoch <= st.time + 1e-9) {
                sim.assign_trip(st, r, schedule[r][next[r]].trip, true);
                ++next[r];
            } else if (st.robots[r].mode == RobotMode::idle) {
                sim.step_outside(st, r);
            }
        }
        bool active = false;
        for (const RobotSim& r : st.robots) {
            active |= r.mode != RobotMode::outside && r.mode != RobotMode::idle;
        }
        bool pending = false;
        double next_epoch = std::numeric_limits<double>::infinity();
        for (size_t r = 0; r < schedule.size(); ++r) {
            if (next[r] < schedule[r].size()) {
                pending = true;
                next_epoch = std::min(next_epoch, schedule[r][next[r]].start_epoch);
            }
        }
        if (!active && !pending) break;
        if (!active && pending) {
            // Nothing moves until the next scheduled epoch.
            st.time = std::max(st.time, next_epoch);
            st.last_progress = st.time;
            continue;
        }
        const AdvanceStatus status = sim.advance(st, true, samples);
        if (status == AdvanceStatus::stalled) {
            throw SimulationStall("simulate_joint: no progress for stall_timeout");
        }
        if (status == AdvanceStatus::completed && !pending) break;
    }
    trace.events = st.events;
    trace.makespan = st.makespan;
    return trace;
}

}  // namespace clutter::motion
