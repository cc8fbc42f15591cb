#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "clutter/errors.hpp"

namespace clutter::geom {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 normalized(Point2 a) {
    double n = norm(a);
    return n > 0.0 ? Point2{a.x / n, a.y / n} : Point2{0.0, 0.0};
}

// Rigid rectangle footprint; heading in [-pi, pi), half extents strictly positive.
struct OrientedRect {
    Point2 center;
    double half_x = 0.0;
    double half_y = 0.0;
    double heading = 0.0;

    // Corners in counterclockwise order starting at the (+x, +y) local corner.
    std::array<Point2, 4> corners() const;
};

// Exact distance from a point to the rectangle boundary (0 inside).
double point_rect_distance(Point2 p, const OrientedRect& rect);

// Convex configuration-space obstacle: the source rectangle grown by the robot radius.
struct InflatedObstacle {
    int source_id = -1;
    std::vector<Point2> polygon;  // convex, counterclockwise

    // Bounding circle, filled by finalize(); used as a cheap rejection test.
    Point2 bound_center;
    double bound_radius = 0.0;

    void finalize();
    bool contains(Point2 p, double eps = 1e-9) const;  // strict interior test
};

// Conservative inflation: never under-covers the Minkowski sum of rect and a
// disc of the given radius. corner_segments = 0 gives the sharp offset
// rectangle; otherwise each corner arc is replaced by a circumscribed chain.
InflatedObstacle inflate(const OrientedRect& rect, double radius, int corner_segments);

// True iff the open segment pq meets no obstacle interior (grazing counts as visible).
bool visible(Point2 p, Point2 q, const std::vector<InflatedObstacle>& obstacles);

// Single-obstacle interior test used by visible() and by the motion layer.
bool segment_crosses_interior(Point2 p, Point2 q, const InflatedObstacle& obstacle,
                              double eps = 1e-9);

struct VisGraph {
    std::vector<Point2> nodes;
    struct Edge {
        int a = 0;
        int b = 0;
        double weight = 0.0;
    };
    std::vector<Edge> edges;
    std::vector<std::vector<std::pair<int, double>>> adjacency;  // node -> (node, weight)
};

struct Bounds {
    Point2 lo{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Point2 hi{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    bool contains(Point2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

// Nodes are obstacle vertices inside `bounds` plus the terminals; edges join
// every mutually visible node pair. Throws TerminalInsideObstacle.
VisGraph build_visgraph(const std::vector<InflatedObstacle>& obstacles,
                        const std::vector<Point2>& terminals, const Bounds& bounds = Bounds{});

// Dijkstra over the graph; ties broken by smaller node index. Throws NoPath.
std::pair<std::vector<Point2>, double> shortest_path(const VisGraph& g, Point2 s, Point2 t);

// Workspace boundary as inflated obstacles: four wall slabs around the square
// [0,L]x[0,L], the south wall interrupted by the exit segment.
std::vector<InflatedObstacle> wall_obstacles(double side, Point2 exit_center, double exit_width,
                                             double robot_radius, double thickness = 0.5);

// Separating-axis overlap test for two convex CCW polygons (touching is not overlap).
bool convex_polygons_overlap(const std::vector<Point2>& a, const std::vector<Point2>& b,
                             double eps = 1e-12);

// Minimum distance between two convex polygons; 0 when they overlap.
double convex_polygon_distance(const std::vector<Point2>& a, const std::vector<Point2>& b);

double rect_rect_distance(const OrientedRect& a, const OrientedRect& b);

}  // namespace clutter::geom
