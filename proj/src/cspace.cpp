#include "clutter/cspace.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace clutter::cspace {

using geom::Point2;

namespace {

// Triangular index for an unordered pair a < b over p points.
inline size_t pair_index(int a, int b, int p) {
    return static_cast<size_t>(a) * (2 * p - a - 1) / 2 + (b - a - 1);
}

}  // namespace

CSpace::CSpace(const scene::Instance& inst, int corner_segments, int samples_per_edge,
               double grasp_offset)
    : inst_(inst), grasp_offset_(grasp_offset) {
    n_ = inst.object_count();
    if (n_ > 60) throw CapExceeded("cspace supports at most 60 objects");
    standoff_ = inst.robot_radius + grasp_offset;

    for (const scene::SceneObject& o : inst.objects) {
        geom::InflatedObstacle obs = geom::inflate(o.rect, inst.robot_radius, corner_segments);
        obs.source_id = o.id;
        objects_.push_back(std::move(obs));
    }
    walls_ = geom::wall_obstacles(inst.side, inst.exit_center, inst.exit_width,
                                  inst.robot_radius);
    slots_ = inst.dropoff_slots();
    for (const Point2& s : slots_) {
        slot_spread_ = std::max(slot_spread_, geom::dist(s, inst.exit_center));
    }

    // Point table: wall corners inside the workspace, then object polygon
    // vertices, then slots, then grasp pose candidates. Only the first group
    // plus object vertices serve as interior path bends.
    const geom::Bounds box{{0.0, 0.0}, {inst.side, inst.side}};
    for (const geom::InflatedObstacle& w : walls_) {
        for (const Point2& v : w.polygon) {
            if (box.contains(v)) points_.push_back(v);
        }
    }
    for (const geom::InflatedObstacle& obs : objects_) {
        for (const Point2& v : obs.polygon) points_.push_back(v);
    }
    corner_count_ = static_cast<int>(points_.size());

    for (const Point2& s : slots_) {
        slot_points_.push_back(static_cast<int>(points_.size()));
        points_.push_back(s);
    }

    poses_.resize(n_);
    const double params_step = 1.0 / (samples_per_edge + 1);
    for (int i = 0; i < n_; ++i) {
        const geom::OrientedRect& rect = inst.objects[i].rect;
        const auto corners = rect.corners();
        for (int e = 0; e < 4; ++e) {
            const Point2 a = corners[e];
            const Point2 b = corners[(e + 1) % 4];
            const Point2 dir = geom::normalized(b - a);
            const Point2 outward{dir.y, -dir.x};
            for (int sidx = 1; sidx <= samples_per_edge; ++sidx) {
                const Point2 edge_pt = a + (sidx * params_step) * (b - a);
                PoseCandidate pc;
                pc.center = edge_pt + standoff_ * outward;
                pc.approach_heading = std::atan2(-outward.y, -outward.x);
                for (int j = 0; j < n_; ++j) {
                    if (j == i) continue;
                    if (geom::point_rect_distance(pc.center, inst.objects[j].rect) <
                        inst.robot_radius) {
                        pc.blocked_by |= bit(j);
                    }
                }
                for (const geom::InflatedObstacle& w : walls_) {
                    if (w.contains(pc.center)) {
                        pc.wall_blocked = true;
                        break;
                    }
                }
                pc.point = static_cast<int>(points_.size());
                points_.push_back(pc.center);
                poses_[i].push_back(pc);
            }
        }
    }

    const size_t p = points_.size();
    pair_cache_.assign(p * (p - 1) / 2, ~0ull);
}

int CSpace::index_of_id(int id) const {
    for (int i = 0; i < n_; ++i) {
        if (inst_.objects[i].id == id) return i;
    }
    throw Error("unknown object id " + std::to_string(id));
}

Mask CSpace::compute_pair(int a, int b) const {
    return segment_blockers(points_[a], points_[b]);
}

Mask CSpace::segment_blockers(Point2 a, Point2 b) const {
    Mask m = 0;
    for (const geom::InflatedObstacle& w : walls_) {
        if (geom::segment_crosses_interior(a, b, w)) {
            m |= kWallBit;
            break;
        }
    }
    for (int i = 0; i < n_; ++i) {
        if (geom::segment_crosses_interior(a, b, objects_[i])) m |= bit(i);
    }
    return m;
}

Mask CSpace::pair_blockers(int a, int b) {
    if (a == b) return 0;
    if (a > b) std::swap(a, b);
    const size_t idx = pair_index(a, b, static_cast<int>(points_.size()));
    Mask cached = pair_cache_[idx];
    if (cached != ~0ull) return cached;
    const Mask m = compute_pair(a, b);
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        pair_cache_[idx] = m;
    }
    return m;
}

bool CSpace::point_blocked(Point2 p, Mask present) const {
    for (const geom::InflatedObstacle& w : walls_) {
        if (w.contains(p)) return true;
    }
    for (int i = 0; i < n_; ++i) {
        if ((present & bit(i)) && objects_[i].contains(p)) return true;
    }
    return false;
}

CSpace::PathQuery CSpace::run_search(int source_pt, const Point2* free_source, int to_pt,
                                     Mask present) {
    // A* over corner points with Euclidean cost-to-go; ties broken by node index.
    const Point2 goal = points_[to_pt];
    const Point2 src = free_source ? *free_source : points_[source_pt];
    const Mask live = present | kWallBit;

    PathQuery out;
    if (!free_source && source_pt == to_pt) {
        out.point_path = {to_pt};
        out.found = true;
        return out;
    }

    const int pc = static_cast<int>(points_.size());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> g(pc + 1, kInf);
    std::vector<int> prev(pc + 1, -2);
    const int src_node = free_source ? pc : source_pt;

    struct Item {
        double f;
        int node;
        bool operator>(const Item& o) const {
            return f > o.f || (f == o.f && node > o.node);
        }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
    g[src_node] = 0.0;
    prev[src_node] = -1;
    open.push({geom::dist(src, goal), src_node});

    auto blockers = [&](int node, int other) -> Mask {
        if (node == pc) return segment_blockers(src, points_[other]);
        return pair_blockers(node, other);
    };

    std::vector<char> done(pc + 1, 0);
    while (!open.empty()) {
        const Item it = open.top();
        open.pop();
        const int u = it.node;
        if (done[u]) continue;
        done[u] = 1;
        if (u == to_pt) break;
        const Point2 pu = (u == pc) ? src : points_[u];
        const double gu = g[u];

        auto relax = [&](int v) {
            if (done[v]) return;
            if ((blockers(u, v) & live) != 0) return;
            const double nd = gu + geom::dist(pu, points_[v]);
            if (nd < g[v]) {
                g[v] = nd;
                prev[v] = u;
                open.push({nd + geom::dist(points_[v], goal), v});
            }
        };
        relax(to_pt);
        for (int v = 0; v < corner_count_; ++v) relax(v);
    }

    if (!done[to_pt]) return out;
    out.found = true;
    out.length = g[to_pt];
    std::vector<int> rev;
    for (int u = to_pt; u != -1; u = prev[u]) {
        rev.push_back(u);
        if (u == src_node) break;
    }
    std::reverse(rev.begin(), rev.end());
    // A free source is reported as index -1; callers hold its coordinates.
    for (int& v : rev) {
        if (v == pc) v = -1;
    }
    out.point_path = rev;
    return out;
}

CSpace::PathQuery CSpace::find_path(int from_pt, int to_pt, Mask present) {
    return run_search(from_pt, nullptr, to_pt, present);
}

CSpace::PathQuery CSpace::find_path_from(Point2 from, int to_pt, Mask present) {
    return run_search(-1, &from, to_pt, present);
}

bool CSpace::connected(int from_pt, int to_pt, Mask present) {
    return find_path(from_pt, to_pt, present).found;
}

std::vector<Point2> CSpace::to_points(const std::vector<int>& point_path) const {
    std::vector<Point2> pts;
    pts.reserve(point_path.size());
    for (int idx : point_path) pts.push_back(points_[idx]);
    return pts;
}

}  // namespace clutter::cspace
