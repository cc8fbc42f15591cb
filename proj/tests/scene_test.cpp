#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <fstream>

#include "clutter/access.hpp"
#include "clutter/scene.hpp"
#include "doctest.h"

using namespace clutter;
using scene::FleetParams;
using scene::GenMode;
using scene::GenParams;
using scene::Instance;

namespace {

Instance quick_instance(GenMode mode, int n, uint64_t seed, double exit_width = 1.32) {
    GenParams gp;
    gp.mode = mode;
    gp.n = n;
    FleetParams fleet;
    fleet.exit_width = exit_width;
    return scene::generate(gp, fleet, seed);
}

double mean_pairwise_center_distance(const Instance& inst) {
    double sum = 0.0;
    int cnt = 0;
    for (size_t i = 0; i < inst.objects.size(); ++i) {
        for (size_t j = i + 1; j < inst.objects.size(); ++j) {
            sum += geom::dist(inst.objects[i].rect.center, inst.objects[j].rect.center);
            ++cnt;
        }
    }
    return sum / cnt;
}

// Six slabs sealing a center object: a hand-built peel-infeasible scene.
Instance sealed_instance() {
    Instance inst;
    inst.exit_width = 1.32;
    auto add = [&](int id, double cx, double cy, double hx, double hy, double heading) {
        scene::SceneObject o;
        o.id = id;
        o.rect.center = {cx, cy};
        o.rect.half_x = hx;
        o.rect.half_y = hy;
        o.rect.heading = heading;
        inst.objects.push_back(o);
    };
    add(0, 5.0, 5.0, 0.3, 0.3, 0.0);  // the sealed object
    add(1, 5.0, 6.0, 1.2, 0.3, 0.0);  // north slab
    add(2, 5.0, 4.0, 1.2, 0.3, 0.0);  // south slab
    add(3, 3.9, 5.0, 0.3, 0.55, 0.0);
    add(4, 6.1, 5.0, 0.3, 0.55, 0.0);
    add(5, 3.9, 6.0, 0.3, 0.35, 0.0);
    add(6, 6.1, 6.0, 0.3, 0.35, 0.0);
    return inst;
}

}  // namespace

TEST_CASE("slot rule: at least one slot, more with wider exits") {
    CHECK(Instance::slot_count(1.32, 0.3) == 1);
    CHECK(Instance::slot_count(1.8, 0.3) == 1);
    CHECK(Instance::slot_count(3.0, 0.3) == 2);
    CHECK(Instance::slot_count(4.5, 0.3) == 3);
    Instance inst;
    inst.exit_width = 3.0;
    const auto slots = inst.dropoff_slots();
    REQUIRE(slots.size() == 2);
    CHECK(slots[0].x == doctest::Approx(5.0 - 0.75));
    CHECK(slots[1].x == doctest::Approx(5.0 + 0.75));
    CHECK(slots[0].y == 0.0);
}

TEST_CASE("generate: single object instance is in bounds and feasible") {
    for (GenMode mode : {GenMode::cluttered, GenMode::scattered}) {
        const Instance inst = quick_instance(mode, 1, 3);
        REQUIRE(inst.object_count() == 1);
        CHECK(scene::validate(inst).ok());
        CHECK(access::peel_feasible(inst).first);
    }
}

TEST_CASE("generate: deterministic per seed, byte-identical serialization") {
    const Instance a = quick_instance(GenMode::scattered, 15, 42);
    const Instance b = quick_instance(GenMode::scattered, 15, 42);
    CHECK(scene::serialize(a) == scene::serialize(b));
    const Instance c = quick_instance(GenMode::scattered, 15, 43);
    CHECK(scene::serialize(a) != scene::serialize(c));
}

TEST_CASE("generate: scattered instances spread wider than cluttered ones") {
    double cluttered_sum = 0.0, scattered_sum = 0.0;
    const int trials = 100;
    for (uint64_t s = 0; s < trials; ++s) {
        cluttered_sum += mean_pairwise_center_distance(quick_instance(GenMode::cluttered, 10, s));
        scattered_sum += mean_pairwise_center_distance(quick_instance(GenMode::scattered, 10, s));
    }
    CHECK(scattered_sum / trials > cluttered_sum / trials);
}

TEST_CASE("generate: every generated instance validates cleanly") {
    for (uint64_t s = 0; s < 25; ++s) {
        const Instance inst = quick_instance(s % 2 ? GenMode::cluttered : GenMode::scattered,
                                             5 + static_cast<int>(s % 7), 1000 + s);
        CHECK(scene::validate(inst).ok());
    }
}

TEST_CASE("generate: impossible density reports budget exhaustion") {
    GenParams gp;
    gp.mode = GenMode::cluttered;
    gp.n = 60;
    gp.clutter_radius_fraction = 0.05;  // 60 objects cannot fit in a 0.5 m disc
    CHECK_THROWS_AS(scene::generate(gp, FleetParams{}, 1), GenerationBudgetExceeded);
}

TEST_CASE("validate: overlapping duplicates are reported with both ids") {
    Instance inst = quick_instance(GenMode::scattered, 3, 7);
    scene::SceneObject dup = inst.objects[0];
    dup.id = 99;
    inst.objects.push_back(dup);
    const auto rep = scene::validate(inst);
    REQUIRE_FALSE(rep.ok());
    bool found = false;
    for (const auto& v : rep.violations) {
        if (v.kind == "overlap") {
            found = true;
            CHECK(v.object_ids == std::vector<int>{inst.objects[0].id, 99});
        }
    }
    CHECK(found);
}

TEST_CASE("validate: sealed arrangement is flagged peel-infeasible") {
    const Instance inst = sealed_instance();
    auto [feasible, order] = access::peel_feasible(inst);
    CHECK_FALSE(feasible);
    const auto rep = scene::validate(inst);
    REQUIRE_FALSE(rep.ok());
    bool flagged = false;
    for (const auto& v : rep.violations) {
        if (v.kind == "peel_infeasible") {
            flagged = true;
            // The sealed object is among the stuck ones.
            CHECK(std::find(v.object_ids.begin(), v.object_ids.end(), 0) != v.object_ids.end());
        }
    }
    CHECK(flagged);
}

TEST_CASE("validate: out-of-bounds and bad fields") {
    Instance inst = quick_instance(GenMode::scattered, 2, 9);
    inst.objects[0].rect.center = {9.9, 9.9};
    auto rep = scene::validate(inst, false);
    bool oob = false;
    for (const auto& v : rep.violations) oob |= v.kind == "out_of_bounds";
    CHECK(oob);

    Instance bad = quick_instance(GenMode::scattered, 2, 9);
    bad.exit_width = 0.1;
    CHECK_FALSE(scene::validate(bad, false).ok());
}

TEST_CASE("save/load: exact round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "clutterplan_scene_test";
    fs::create_directories(dir);
    for (uint64_t s = 0; s < 1000; ++s) {
        const Instance inst =
            quick_instance(s % 2 ? GenMode::cluttered : GenMode::scattered,
                           1 + static_cast<int>(s % 5), 5000 + s);
        const std::string text = scene::serialize(inst);
        const Instance back = scene::deserialize(text);
        CHECK(scene::serialize(back) == text);
    }
    // Through the filesystem as well.
    const Instance inst = quick_instance(GenMode::scattered, 8, 77);
    const std::string path = (dir / "roundtrip.inst").string();
    scene::save(inst, path);
    const Instance loaded = scene::load(path);
    CHECK(scene::serialize(loaded) == scene::serialize(inst));
    CHECK(loaded.seed == inst.seed);
    fs::remove_all(dir);
}

TEST_CASE("load: truncated file raises ParseError") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "clutterplan_scene_test2";
    fs::create_directories(dir);
    const Instance inst = quick_instance(GenMode::scattered, 4, 5);
    const std::string text = scene::serialize(inst);
    const std::string path = (dir / "truncated.inst").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(scene::load(path), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("load: schema mismatch and field validation") {
    const Instance inst = quick_instance(GenMode::scattered, 4, 6);
    std::string text = scene::serialize(inst);
    const std::string v1 = "\"schema_version\": 1";
    const auto pos = text.find(v1);
    REQUIRE(pos != std::string::npos);
    std::string bumped = text;
    bumped.replace(pos, v1.size(), "\"schema_version\": 2");
    CHECK_THROWS_AS(scene::deserialize(bumped), SchemaMismatch);

    const std::string rr = "\"robot_radius\": 0.3";
    const auto rpos = text.find(rr);
    REQUIRE(rpos != std::string::npos);
    std::string negative = text;
    negative.replace(rpos, rr.size(), "\"robot_radius\": -1");
    CHECK_THROWS_AS(scene::deserialize(negative), ParseError);
}
