#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "morphgrasp/cloud.hpp"
#include "morphgrasp/errors.hpp"
#include "morphgrasp/mesh.hpp"
#include "morphgrasp/obb.hpp"
#include "morphgrasp/rng.hpp"
#include "morphgrasp/urdf.hpp"

using namespace mg;

namespace {

const std::string kCubeObj =
    "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nv 0 0 1\nv 1 0 1\nv 0 1 1\nv 1 1 1\n"
    "f 1 3 4\nf 1 4 2\nf 5 6 8\nf 5 8 7\nf 1 2 6\nf 1 6 5\n"
    "f 3 7 8\nf 3 8 4\nf 1 5 7\nf 1 7 3\nf 2 4 8\nf 2 8 6\n";

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<Vec3> sorted_vertices(std::vector<Vec3> v) {
    std::sort(v.begin(), v.end(), [](const Vec3& a, const Vec3& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.z < b.z;
    });
    return v;
}

// Exhaustive rotation search; the refinement algorithm must land within 5% of
// this on every fixture.
double grid_obb_volume(const std::vector<Vec3>& pts, double step_deg = 2.0) {
    double best = std::numeric_limits<double>::infinity();
    double step = step_deg * M_PI / 180.0;
    for (double r = 0.0; r < M_PI / 2; r += step)
        for (double p = 0.0; p < M_PI / 2; p += step)
            for (double y = 0.0; y < M_PI / 2; y += step) {
                Mat3 rot = rotation_rpy(r, p, y);
                Mat3 rt = rot.transposed();
                Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
                for (const Vec3& q : pts) {
                    Vec3 l = rt * q;
                    lo.x = std::min(lo.x, l.x);
                    lo.y = std::min(lo.y, l.y);
                    lo.z = std::min(lo.z, l.z);
                    hi.x = std::max(hi.x, l.x);
                    hi.y = std::max(hi.y, l.y);
                    hi.z = std::max(hi.z, l.z);
                }
                best = std::min(best, (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z));
            }
    return best;
}

}  // namespace

TEST_CASE("mesh: OBJ cube loads with deduplicated vertices") {
    TriMesh m = parse_obj(kCubeObj);
    CHECK(m.vertices.size() == 8);
    CHECK(m.faces.size() == 12);
    CHECK(surface_area(m) == doctest::Approx(6.0));
}

TEST_CASE("mesh: OBJ accepts slash formats, negative indices, quads") {
    std::string obj =
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "f 1/1 2/2/1 3//2 -1\n";  // quad -> 2 triangles, mixed index syntax
    TriMesh m = parse_obj(obj);
    CHECK(m.vertices.size() == 4);
    CHECK(m.faces.size() == 2);
    CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), CorruptFile);
    CHECK_THROWS_AS(parse_obj("v 0 0 zero\n"), CorruptFile);
}

TEST_CASE("mesh: degenerate faces are dropped and counted") {
    std::string obj =
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0.5 0 0\n"
        "f 1 2 3\n"
        "f 1 1 2\n"    // repeated vertex
        "f 1 2 4\n";   // collinear, zero area
    int dropped = 0;
    TriMesh m = parse_obj(obj, &dropped);
    CHECK(m.faces.size() == 1);
    CHECK(dropped == 2);
}

TEST_CASE("mesh: binary STL round trip matches the OBJ cube") {
    TriMesh cube = parse_obj(kCubeObj);
    std::string path = temp_path("mg_cube.stl");
    save_stl_binary(cube, path);
    TriMesh back = load_mesh(path);
    CHECK(back.vertices.size() == 8);
    CHECK(back.faces.size() == 12);
    auto a = sorted_vertices(cube.vertices);
    auto b = sorted_vertices(back.vertices);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() < 1e-6);
    std::filesystem::remove(path);
}

TEST_CASE("mesh: truncated binary STL is rejected") {
    TriMesh cube = parse_obj(kCubeObj);
    std::string path = temp_path("mg_cube_trunc.stl");
    save_stl_binary(cube, path);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    CHECK_THROWS_AS(parse_stl(bytes.substr(0, bytes.size() - 30)), CorruptFile);
    CHECK_THROWS_AS(parse_stl(bytes.substr(0, 50)), CorruptFile);
    std::filesystem::remove(path);
}

TEST_CASE("mesh: ASCII STL parses") {
    std::string stl =
        "solid tri\n"
        " facet normal 0 0 1\n  outer loop\n"
        "   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n"
        "  endloop\n endfacet\nendsolid tri\n";
    TriMesh m = parse_stl(stl);
    CHECK(m.vertices.size() == 3);
    CHECK(m.faces.size() == 1);
}

TEST_CASE("mesh: unsupported extension rejected") {
    CHECK_THROWS_AS(load_mesh("model.ply"), UnsupportedFormat);
    CHECK_THROWS_AS(load_mesh("/nonexistent/dir/thing.obj"), CorruptFile);
}

TEST_CASE("mesh: surface sampling is deterministic and on-face") {
    TriMesh cube = parse_obj(kCubeObj);
    std::vector<int> faces;
    auto p1 = sample_surface(cube, 512, 7, &faces);
    auto p2 = sample_surface(cube, 512, 7);
    REQUIRE(p1.size() == 512);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK((p1[i] - p2[i]).norm() == 0.0);
    auto p3 = sample_surface(cube, 512, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < p1.size(); ++i)
        if ((p1[i] - p3[i]).norm() > 0) any_diff = true;
    CHECK(any_diff);

    for (std::size_t i = 0; i < p1.size(); ++i) {
        const auto& fc = cube.faces[faces[i]];
        Vec3 a = cube.vertices[fc[0]], b = cube.vertices[fc[1]], c = cube.vertices[fc[2]];
        Vec3 n = (b - a).cross(c - a).normalized();
        CHECK(std::abs((p1[i] - a).dot(n)) < 1e-9);
    }
    CHECK_THROWS_AS(sample_surface(TriMesh{}, 10, 0), EmptyMesh);
}

TEST_CASE("mesh: sampling is area weighted") {
    // two triangles with areas 1 and 3
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {2, 0, 0}, {4, 0, 0}, {2, 3, 0}};
    m.faces = {{0, 1, 2}, {3, 4, 5}};
    std::vector<int> faces;
    sample_surface(m, 40000, 123, &faces);
    double frac = std::count(faces.begin(), faces.end(), 1) / 40000.0;
    CHECK(frac == doctest::Approx(0.75).epsilon(0.0134));  // 0.01 absolute
}

TEST_CASE("obb: boxes of boxes") {
    TriMesh cube = parse_obj(kCubeObj);
    OrientedBox box = min_volume_obb(cube);
    CHECK(box.volume() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(box.extents.x == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(box.extents.z == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((box.center - Vec3{0.5, 0.5, 0.5}).norm() < 1e-9);

    // rotated cube: same box up to small refinement slack
    Transform rot{rotation_z(M_PI / 4), {0, 0, 0}};
    OrientedBox rbox = min_volume_obb(transformed(cube, rot));
    CHECK(rbox.volume() <= 1.05);
    CHECK(rbox.extents.x == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rbox.extents.y == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rbox.extents.z == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("obb: orthonormal rotation, containment, sorted extents") {
    Rng rng(42);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i)
        pts.push_back({rng.normal() * 0.5, rng.normal() * 0.2, rng.normal() * 0.1});
    OrientedBox box = obb_of_points(pts);

    Mat3 sh = box.rotation.transposed() * box.rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(sh(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
    CHECK(box.rotation.det() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(box.extents.x >= box.extents.y);
    CHECK(box.extents.y >= box.extents.z);

    Mat3 rt = box.rotation.transposed();
    Vec3 local_center = rt * box.center;
    for (const Vec3& p : pts) {
        Vec3 l = rt * p - local_center;
        CHECK(std::abs(l.x) <= box.extents.x / 2 + 1e-9);
        CHECK(std::abs(l.y) <= box.extents.y / 2 + 1e-9);
        CHECK(std::abs(l.z) <= box.extents.z / 2 + 1e-9);
    }
}

TEST_CASE("obb: volume is rigid-invariant and near the grid oracle") {
    Rng rng(77);
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i)
        pts.push_back({rng.uniform(-1, 1) * 0.4, rng.uniform(-1, 1) * 0.25,
                       rng.uniform(-1, 1) * 0.1});
    double v0 = obb_of_points(pts).volume();

    Transform rigid{rotation_rpy(0.4, -0.7, 1.1), {0.3, -0.2, 0.5}};
    std::vector<Vec3> moved;
    for (const Vec3& p : pts) moved.push_back(rigid.apply(p));
    double v1 = obb_of_points(moved).volume();
    CHECK(std::abs(v1 - v0) / v0 < 0.01);

    double grid = grid_obb_volume(pts);
    CHECK(std::abs(v0 - grid) / grid < 0.05);
}

TEST_CASE("obb: fingertip fixture matches the grid oracle") {
    TriMesh tip = load_mesh(std::string(MG_FIXTURE_DIR) + "/meshes/finger_dist.obj");
    double mine = min_volume_obb(tip).volume();
    double grid = grid_obb_volume(tip.vertices);
    CHECK(std::abs(mine - grid) / grid < 0.05);

    auto [com, size] = link_summary(tip, Transform{Mat3::identity(), {0, 0, 2}});
    auto [com0, size0] = link_summary(tip, Transform{});
    CHECK((com - (com0 + Vec3{0, 0, 2})).norm() < 1e-9);
    CHECK((size - size0).norm() < 1e-9);
}

TEST_CASE("knn: tie-breaks and forced neighborhoods") {
    SUBCASE("collinear tie goes to the lower index") {
        std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
        PointCloudGraph g = knn_graph(pts, 1);
        CHECK(g.neighbors[1] == std::vector<int>{0});
        CHECK(g.neighbors[0] == std::vector<int>{1});
        CHECK(g.neighbors[2] == std::vector<int>{1});
    }
    SUBCASE("unit square corners") {
        std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
        PointCloudGraph g = knn_graph(pts, 2);
        CHECK(g.neighbors[0] == std::vector<int>{1, 3});
        CHECK(g.neighbors[2] == std::vector<int>{1, 3});
    }
    SUBCASE("too few points") {
        std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}};
        CHECK_THROWS_AS(knn_graph(pts, 2), TooFewPoints);
    }
}

TEST_CASE("knn: matches brute force on 500 random points") {
    Rng rng(99);
    std::vector<Vec3> pts;
    for (int i = 0; i < 500; ++i)
        pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    PointCloudGraph g = knn_graph(pts, 8);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::pair<double, int>> all;
        for (int j = 0; j < 500; ++j) {
            if (j == i) continue;
            all.emplace_back((pts[j] - pts[i]).squared_norm(), j);
        }
        std::sort(all.begin(), all.end());
        for (int n = 0; n < 8; ++n) CHECK(g.neighbors[i][n] == all[n].second);
    }
    auto edges = g.edges();
    for (std::size_t e = 1; e < edges.size(); ++e) CHECK(edges[e - 1] < edges[e]);
}

TEST_CASE("cloud cache: binary round trip") {
    Rng rng(5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 64; ++i)
        pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    PointCloudGraph g = knn_graph(pts, 4);
    std::string path = temp_path("mg_cloud.pc");
    save_cloud(path, g);
    PointCloudGraph back = load_cloud(path);
    CHECK(back.k == 4);
    REQUIRE(back.points.size() == 64);
    for (int i = 0; i < 64; ++i) {
        CHECK(back.points[i].x == pts[i].x);
        CHECK(back.points[i].y == pts[i].y);
        CHECK(back.points[i].z == pts[i].z);
        CHECK(back.neighbors[i] == g.neighbors[i]);
    }
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_cloud(temp_path("mg_missing.pc")), CacheMiss);
    std::string bad = temp_path("mg_bad.pc");
    std::ofstream(bad, std::ios::binary) << "XXXXXXXXgarbage";
    CHECK_THROWS_AS(load_cloud(bad), CorruptFile);
    std::filesystem::remove(bad);
}

TEST_CASE("gripper cloud: assembled at rest pose with link attribution") {
    SUBCASE("single link equals its own sample") {
        KinematicTree tree = parse_urdf(
            "<robot name='t'><link name='only'/></robot>");
        TriMesh cube = parse_obj(kCubeObj);
        GripperCloud cloud = assemble_gripper_cloud(tree, {{"only", cube}}, 100, 3);
        auto direct = sample_surface(cube, 100, 3);
        REQUIRE(cloud.points.size() == 100);
        for (int i = 0; i < 100; ++i) CHECK((cloud.points[i] - direct[i]).norm() == 0.0);
        CHECK(cloud.link_names == std::vector<std::string>{"only"});
    }
    SUBCASE("fixed offset pushes the child's points up") {
        KinematicTree tree = parse_urdf(
            "<robot name='t'>"
            "<link name='a'/><link name='b'/>"
            "<joint name='j' type='fixed'><parent link='a'/><child link='b'/>"
            "<origin xyz='0 0 0.1'/></joint>"
            "</robot>");
        TriMesh cube = parse_obj(kCubeObj);
        GripperCloud cloud = assemble_gripper_cloud(tree, {{"b", cube}}, 200, 11);
        for (const Vec3& p : cloud.points) CHECK(p.z >= 0.1 - 1e-12);
    }
    SUBCASE("no meshes anywhere") {
        KinematicTree tree = parse_urdf("<robot name='t'><link name='only'/></robot>");
        CHECK_THROWS_AS(assemble_gripper_cloud(tree, {}, 10, 0), NoMeshes);
    }
    SUBCASE("hand fixture: reproducible 1000 points") {
        KinematicTree tree = load_urdf(std::string(MG_FIXTURE_DIR) + "/barrett_hand.urdf");
        std::map<std::string, TriMesh> meshes;
        for (const LinkSpec& l : tree.links)
            if (l.mesh_ref)
                meshes[l.name] = load_mesh(std::string(MG_FIXTURE_DIR) + "/" + *l.mesh_ref);
        GripperCloud c1 = assemble_gripper_cloud(tree, meshes, 1000, 21);
        GripperCloud c2 = assemble_gripper_cloud(tree, meshes, 1000, 21);
        REQUIRE(c1.points.size() == 1000);
        CHECK(c1.link_of_point.size() == 1000);
        for (int i = 0; i < 1000; ++i) CHECK((c1.points[i] - c2.points[i]).norm() == 0.0);
        // palm-labeled points must lie inside the palm box footprint
        int palm_id = -1;
        for (std::size_t i = 0; i < c1.link_names.size(); ++i)
            if (c1.link_names[i] == "bh_base_link") palm_id = static_cast<int>(i);
        REQUIRE(palm_id >= 0);
        int palm_count = 0;
        for (int i = 0; i < 1000; ++i) {
            if (c1.link_of_point[i] != palm_id) continue;
            ++palm_count;
            CHECK(std::abs(c1.points[i].x) <= 0.040 + 1e-9);
            CHECK(std::abs(c1.points[i].y) <= 0.0475 + 1e-9);
            CHECK(c1.points[i].z <= 0.0415 + 1e-9);
            CHECK(c1.points[i].z >= -1e-9);
        }
        CHECK(palm_count > 100);  // the palm is the largest link
    }
}
