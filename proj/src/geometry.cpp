#include "clutter/geometry.hpp"

#include <algorithm>
#include <queue>

namespace clutter::geom {

std::array<Point2, 4> OrientedRect::corners() const {
    const double c = std::cos(heading), s = std::sin(heading);
    auto to_world = [&](double lx, double ly) {
        return Point2{center.x + c * lx - s * ly, center.y + s * lx + c * ly};
    };
    return {to_world(half_x, half_y), to_world(-half_x, half_y), to_world(-half_x, -half_y),
            to_world(half_x, -half_y)};
}

double point_rect_distance(Point2 p, const OrientedRect& rect) {
    const double c = std::cos(rect.heading), s = std::sin(rect.heading);
    const Point2 d = p - rect.center;
    const double lx = c * d.x + s * d.y;
    const double ly = -s * d.x + c * d.y;
    const double dx = std::max(std::abs(lx) - rect.half_x, 0.0);
    const double dy = std::max(std::abs(ly) - rect.half_y, 0.0);
    return std::hypot(dx, dy);
}

void InflatedObstacle::finalize() {
    if (polygon.empty()) return;
    Point2 c{0.0, 0.0};
    for (const Point2& v : polygon) c = c + v;
    bound_center = (1.0 / static_cast<double>(polygon.size())) * c;
    bound_radius = 0.0;
    for (const Point2& v : polygon) bound_radius = std::max(bound_radius, dist(bound_center, v));
}

bool InflatedObstacle::contains(Point2 p, double eps) const {
    if (dist(p, bound_center) > bound_radius + eps) return false;
    const size_t n = polygon.size();
    for (size_t i = 0; i < n; ++i) {
        const Point2 a = polygon[i];
        const Point2 b = polygon[(i + 1) % n];
        const Point2 e = b - a;
        const double len = norm(e);
        if (len == 0.0) continue;
        // Counterclockwise loop: interior has positive cross distance.
        if (cross(e, p - a) / len <= eps) return false;
    }
    return true;
}

InflatedObstacle inflate(const OrientedRect& rect, double radius, int corner_segments) {
    InflatedObstacle out;
    out.source_id = -1;
    const auto cs = rect.corners();
    // Outward edge normals of the CCW loop (edge i runs corner i -> i+1).
    std::array<Point2, 4> normals;
    for (int i = 0; i < 4; ++i) {
        const Point2 dir = normalized(cs[(i + 1) % 4] - cs[i]);
        normals[i] = Point2{dir.y, -dir.x};
    }
    if (radius <= 0.0) {
        out.polygon.assign(cs.begin(), cs.end());
        out.finalize();
        return out;
    }
    for (int k = 0; k < 4; ++k) {
        const Point2 n_in = normals[(k + 3) % 4];  // normal of the edge arriving at corner k
        const Point2 n_out = normals[k];
        if (corner_segments <= 0) {
            // Sharp offset corner = Minkowski sum with the bounding square of the disc.
            out.polygon.push_back(cs[k] + radius * (n_in + n_out));
            continue;
        }
        const double a0 = std::atan2(n_in.y, n_in.x);
        const double phi = (M_PI / 2.0) / corner_segments;
        const double rc = radius / std::cos(phi / 2.0);  // circumscribed chain radius
        out.polygon.push_back(cs[k] + radius * n_in);
        for (int j = 0; j < corner_segments; ++j) {
            const double a = a0 + (j + 0.5) * phi;
            out.polygon.push_back(cs[k] + Point2{rc * std::cos(a), rc * std::sin(a)});
        }
        out.polygon.push_back(cs[k] + radius * n_out);
    }
    out.finalize();
    return out;
}

bool segment_crosses_interior(Point2 p, Point2 q, const InflatedObstacle& obstacle, double eps) {
    // Cheap rejection against the bounding circle.
    const Point2 d = q - p;
    const double len2 = dot(d, d);
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(dot(obstacle.bound_center - p, d) / len2, 0.0, 1.0);
    if (dist(p + t * d, obstacle.bound_center) > obstacle.bound_radius + eps) return false;

    if (len2 == 0.0) return false;  // open segment of a single point is empty

    // Clip the segment parameter range against every half-plane of the convex loop.
    double tmin = 0.0, tmax = 1.0;
    const size_t n = obstacle.polygon.size();
    for (size_t i = 0; i < n; ++i) {
        const Point2 a = obstacle.polygon[i];
        const Point2 b = obstacle.polygon[(i + 1) % n];
        const Point2 e = b - a;
        const double d0 = cross(e, p - a);
        const double d1 = cross(e, q - a);
        if (d0 < 0.0 && d1 < 0.0) return false;  // entirely outside this half-plane
        if (d0 == d1) continue;                  // parallel; inside iff d0 >= 0, handled above
        const double tc = d0 / (d0 - d1);
        if (d0 > d1) {
            tmax = std::min(tmax, tc);  // leaving the half-plane
        } else {
            tmin = std::max(tmin, tc);  // entering the half-plane
        }
        if (tmin > tmax) return false;
    }
    // Closure overlap exists; crossing counts only if the midpoint is strictly interior,
    // so grazing an edge or vertex stays visible.
    const Point2 mid = p + (0.5 * (tmin + tmax)) * d;
    return obstacle.contains(mid, eps);
}

bool visible(Point2 p, Point2 q, const std::vector<InflatedObstacle>& obstacles) {
    for (const InflatedObstacle& obs : obstacles) {
        if (segment_crosses_interior(p, q, obs)) return false;
    }
    return true;
}

VisGraph build_visgraph(const std::vector<InflatedObstacle>& obstacles,
                        const std::vector<Point2>& terminals, const Bounds& bounds) {
    VisGraph g;
    for (const InflatedObstacle& obs : obstacles) {
        for (const Point2& v : obs.polygon) {
            if (bounds.contains(v)) g.nodes.push_back(v);
        }
    }
    for (const Point2& t : terminals) {
        for (const InflatedObstacle& obs : obstacles) {
            if (obs.contains(t)) {
                throw TerminalInsideObstacle("terminal lies strictly inside an inflated obstacle");
            }
        }
        g.nodes.push_back(t);
    }
    const int n = static_cast<int>(g.nodes.size());
    g.adjacency.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (!visible(g.nodes[i], g.nodes[j], obstacles)) continue;
            const double w = dist(g.nodes[i], g.nodes[j]);
            g.edges.push_back({i, j, w});
            g.adjacency[i].emplace_back(j, w);
            g.adjacency[j].emplace_back(i, w);
        }
    }
    return g;
}

std::pair<std::vector<Point2>, double> shortest_path(const VisGraph& g, Point2 s, Point2 t) {
    int si = -1, ti = -1;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
        if (si < 0 && g.nodes[i] == s) si = i;
        if (ti < 0 && g.nodes[i] == t) ti = i;
    }
    if (si < 0 || ti < 0) throw NoPath("query endpoint is not a graph terminal");

    const int n = static_cast<int>(g.nodes.size());
    std::vector<double> dist_to(n, std::numeric_limits<double>::infinity());
    std::vector<int> prev(n, -1);
    using Item = std::pair<double, int>;  // ties pop the smaller node index
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist_to[si] = 0.0;
    open.emplace(0.0, si);
    while (!open.empty()) {
        const auto [d, u] = open.top();
        open.pop();
        if (d > dist_to[u]) continue;
        if (u == ti) break;
        for (const auto& [v, w] : g.adjacency[u]) {
            const double nd = d + w;
            if (nd < dist_to[v]) {
                dist_to[v] = nd;
                prev[v] = u;
                open.emplace(nd, v);
            }
        }
    }
    if (!std::isfinite(dist_to[ti])) throw NoPath("terminals are disconnected");
    std::vector<Point2> path;
    for (int u = ti; u != -1; u = prev[u]) path.push_back(g.nodes[u]);
    std::reverse(path.begin(), path.end());
    return {path, dist_to[ti]};
}

std::vector<InflatedObstacle> wall_obstacles(double side, Point2 exit_center, double exit_width,
                                             double robot_radius, double thickness) {
    const double t = thickness;
    const double lo = exit_center.x - exit_width / 2.0;
    const double hi = exit_center.x + exit_width / 2.0;
    auto slab = [&](double x0, double x1, double y0, double y1, int id) {
        OrientedRect r;
        r.center = {(x0 + x1) / 2.0, (y0 + y1) / 2.0};
        r.half_x = (x1 - x0) / 2.0;
        r.half_y = (y1 - y0) / 2.0;
        r.heading = 0.0;
        InflatedObstacle obs = inflate(r, robot_radius, 0);  // sharp corners suffice for slabs
        obs.source_id = id;
        return obs;
    };
    std::vector<InflatedObstacle> walls;
    walls.push_back(slab(-t, side + t, side, side + t, -2));  // north
    walls.push_back(slab(-t, 0.0, -t, side + t, -3));         // west
    walls.push_back(slab(side, side + t, -t, side + t, -4));  // east
    if (lo > 0.0) walls.push_back(slab(-t, lo, -t, 0.0, -5));
    if (hi < side) walls.push_back(slab(hi, side + t, -t, 0.0, -6));
    return walls;
}

namespace {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 d = b - a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return dist(p, a);
    const double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
    return dist(p, a + t * d);
}

}  // namespace

bool convex_polygons_overlap(const std::vector<Point2>& a, const std::vector<Point2>& b,
                             double eps) {
    auto separated_by_edge_of = [&](const std::vector<Point2>& poly,
                                    const std::vector<Point2>& other) {
        const size_t n = poly.size();
        for (size_t i = 0; i < n; ++i) {
            const Point2 e = poly[(i + 1) % n] - poly[i];
            double max_other = -std::numeric_limits<double>::infinity();
            for (const Point2& v : other) max_other = std::max(max_other, cross(e, v - poly[i]));
            if (max_other <= eps) return true;  // all of `other` outside this edge
        }
        return false;
    };
    return !separated_by_edge_of(a, b) && !separated_by_edge_of(b, a);
}

double convex_polygon_distance(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    if (convex_polygons_overlap(a, b)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const size_t na = a.size(), nb = b.size();
    for (size_t i = 0; i < na; ++i) {
        for (size_t j = 0; j < nb; ++j) {
            best = std::min(best, point_segment_distance(a[i], b[j], b[(j + 1) % nb]));
            best = std::min(best, point_segment_distance(b[j], a[i], a[(i + 1) % na]));
        }
    }
    return best;
}

double rect_rect_distance(const OrientedRect& a, const OrientedRect& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    return convex_polygon_distance(std::vector<Point2>(ca.begin(), ca.end()),
                                   std::vector<Point2>(cb.begin(), cb.end()));
}

}  // namespace clutter::geom
