#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace oracles {

namespace {

struct Grid {
    int nx = 0, ny = 0;
    double cell = 0.01;
    Point2 lo;
    std::vector<char> blocked;

    int index(int x, int y) const { return y * nx + x; }
    Point2 center(int x, int y) const {
        return {lo.x + (x + 0.5) * cell, lo.y + (y + 0.5) * cell};
    }
};

Grid make_grid(const std::vector<InflatedObstacle>& obstacles, Point2 lo, Point2 hi,
               double cell) {
    Grid g;
    g.cell = cell;
    g.lo = lo;
    g.nx = static_cast<int>(std::ceil((hi.x - lo.x) / cell));
    g.ny = static_cast<int>(std::ceil((hi.y - lo.y) / cell));
    g.blocked.assign(static_cast<size_t>(g.nx) * g.ny, 0);
    for (const InflatedObstacle& obs : obstacles) {
        // Only rasterize the obstacle's bounding box.
        const int x0 = std::max(0, static_cast<int>((obs.bound_center.x - obs.bound_radius -
                                                     lo.x) / cell) - 1);
        const int x1 = std::min(g.nx - 1, static_cast<int>((obs.bound_center.x +
                                                            obs.bound_radius - lo.x) / cell) + 1);
        const int y0 = std::max(0, static_cast<int>((obs.bound_center.y - obs.bound_radius -
                                                     lo.y) / cell) - 1);
        const int y1 = std::min(g.ny - 1, static_cast<int>((obs.bound_center.y +
                                                            obs.bound_radius - lo.y) / cell) + 1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (!g.blocked[g.index(x, y)] && obs.contains(g.center(x, y))) {
                    g.blocked[g.index(x, y)] = 1;
                }
            }
        }
    }
    return g;
}

std::optional<std::pair<int, int>> snap(const Grid& g, Point2 p) {
    int x = static_cast<int>((p.x - g.lo.x) / g.cell);
    int y = static_cast<int>((p.y - g.lo.y) / g.cell);
    x = std::clamp(x, 0, g.nx - 1);
    y = std::clamp(y, 0, g.ny - 1);
    if (!g.blocked[g.index(x, y)]) return std::make_pair(x, y);
    // Look for the nearest free cell in a small ring around the snap target.
    for (int r = 1; r <= 3; ++r) {
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
                const int cx = x + dx, cy = y + dy;
                if (cx < 0 || cy < 0 || cx >= g.nx || cy >= g.ny) continue;
                if (!g.blocked[g.index(cx, cy)]) return std::make_pair(cx, cy);
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> grid_shortest_path(const std::vector<InflatedObstacle>& obstacles,
                                         Point2 s, Point2 t, Point2 lo, Point2 hi, double cell) {
    const Grid g = make_grid(obstacles, lo, hi, cell);
    const auto ss = snap(g, s);
    const auto tt = snap(g, t);
    if (!ss || !tt) return std::nullopt;

    // 16 moves: axis, diagonal, and knight steps.
    static const int moves[16][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1},
                                     {-1, 1}, {-1, -1}, {2, 1},  {2, -1}, {-2, 1}, {-2, -1},
                                     {1, 2},  {1, -2}, {-1, 2}, {-1, -2}};
    std::vector<double> dist(g.blocked.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    const int start = g.index(ss->first, ss->second);
    const int goal = g.index(tt->first, tt->second);
    dist[start] = 0.0;
    open.emplace(0.0, start);
    while (!open.empty()) {
        const auto [d, u] = open.top();
        open.pop();
        if (d > dist[u]) continue;
        if (u == goal) break;
        const int ux = u % g.nx, uy = u / g.nx;
        for (const auto& mv : moves) {
            const int vx = ux + mv[0], vy = uy + mv[1];
            if (vx < 0 || vy < 0 || vx >= g.nx || vy >= g.ny) continue;
            const int v = g.index(vx, vy);
            if (g.blocked[v]) continue;
            // Knight moves must not tunnel through blocked intermediate cells.
            if (std::abs(mv[0]) + std::abs(mv[1]) == 3) {
                const int mx = ux + mv[0] / 2, my = uy + (std::abs(mv[1]) == 2 ? mv[1] / 2 : 0);
                const int m2x = ux + (std::abs(mv[0]) == 2 ? mv[0] / 2 : 0), m2y = uy + mv[1] / 2;
                if (g.blocked[g.index(mx, my)] || g.blocked[g.index(m2x, m2y)]) continue;
            } else if (std::abs(mv[0]) == 1 && std::abs(mv[1]) == 1) {
                if (g.blocked[g.index(ux + mv[0], uy)] && g.blocked[g.index(ux, uy + mv[1])]) {
                    continue;
                }
            }
            const double w = std::hypot(mv[0], mv[1]) * g.cell;
            if (d + w < dist[v]) {
                dist[v] = d + w;
                open.emplace(d + w, v);
            }
        }
    }
    if (!std::isfinite(dist[goal])) return std::nullopt;
    // End-point correction: the snapped centers differ from s/t by < one cell.
    return dist[goal] + clutter::geom::dist(s, g.center(ss->first, ss->second)) +
           clutter::geom::dist(t, g.center(tt->first, tt->second));
}

bool grid_connected(const std::vector<InflatedObstacle>& obstacles, Point2 s, Point2 t,
                    Point2 lo, Point2 hi, double cell) {
    const Grid g = make_grid(obstacles, lo, hi, cell);
    const auto ss = snap(g, s);
    const auto tt = snap(g, t);
    if (!ss || !tt) return false;
    std::vector<char> seen(g.blocked.size(), 0);
    std::queue<int> q;
    q.push(g.index(ss->first, ss->second));
    seen[q.front()] = 1;
    const int goal = g.index(tt->first, tt->second);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        if (u == goal) return true;
        const int ux = u % g.nx, uy = u / g.nx;
        const int moves[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& mv : moves) {
            const int vx = ux + mv[0], vy = uy + mv[1];
            if (vx < 0 || vy < 0 || vx >= g.nx || vy >= g.ny) continue;
            const int v = g.index(vx, vy);
            if (g.blocked[v] || seen[v]) continue;
            seen[v] = 1;
            q.push(v);
        }
    }
    return false;
}

double sampled_min_clearance(const std::vector<InflatedObstacle>& obstacles, Point2 s, Point2 t,
                             int samples) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= samples; ++i) {
        const Point2 p = s + (static_cast<double>(i) / samples) * (t - s);
        for (const InflatedObstacle& obs : obstacles) {
            double d = std::numeric_limits<double>::infinity();
            const size_t n = obs.polygon.size();
            for (size_t e = 0; e < n; ++e) {
                const Point2 a = obs.polygon[e];
                const Point2 b = obs.polygon[(e + 1) % n];
                const Point2 dir = b - a;
                const double len2 = clutter::geom::dot(dir, dir);
                double u = len2 > 0 ? clutter::geom::dot(p - a, dir) / len2 : 0.0;
                u = std::clamp(u, 0.0, 1.0);
                d = std::min(d, clutter::geom::dist(p, a + u * dir));
            }
            if (obs.contains(p)) d = -d;
            best = std::min(best, d);
        }
    }
    return best;
}

namespace {

void dfs_min(clutter::planners::PlannerContext& ctx, const clutter::motion::SimState& st,
             bool lookahead, double& best) {
    if (st.completed) {
        best = std::min(best, st.makespan);
        return;
    }
    if (st.time >= best - 1e-12) return;  // cannot improve: time only grows
    for (const clutter::planners::Successor& s :
         clutter::planners::successors(ctx, st, lookahead)) {
        dfs_min(ctx, s.state, lookahead, best);
    }
}

}  // namespace

double exhaustive_min_makespan(clutter::planners::PlannerContext& ctx, bool lookahead) {
    double best = std::numeric_limits<double>::infinity();
    dfs_min(ctx, ctx.sim.initial_state(), lookahead, best);
    return best;
}

double factorial_single_optimum(clutter::planners::PlannerContext& ctx) {
    const int n = ctx.cs.object_count();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
        std::vector<clutter::planners::Assignment> seq;
        for (int o : order) seq.push_back({{0, o}});
        try {
            const clutter::planners::PlanResult plan =
                clutter::planners::realize(ctx, seq, /*record_samples=*/false);
            best = std::min(best, plan.makespan);
        } catch (const clutter::Error&) {
            // infeasible order (blocked pick), skip
        }
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

}  // namespace oracles
