#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "morphgrasp/geom.hpp"

namespace mg {

// Indexed triangle soup in meters. Loaders deduplicate vertices (1e-9
// tolerance) and drop zero-area faces.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
};

// OBJ (ASCII) or STL (ASCII or binary), chosen by file extension.
// degenerate_dropped, when given, receives the number of discarded faces.
TriMesh load_mesh(const std::string& path, int* degenerate_dropped = nullptr);
TriMesh parse_obj(const std::string& text, int* degenerate_dropped = nullptr);
TriMesh parse_stl(const std::string& bytes, int* degenerate_dropped = nullptr);

void save_obj(const TriMesh& mesh, const std::string& path);
void save_stl_binary(const TriMesh& mesh, const std::string& path);

double face_area(const TriMesh& mesh, int face);
double surface_area(const TriMesh& mesh);

// Area-weighted uniform surface samples, deterministic per seed. When
// face_of_point is non-null it receives each sample's source face index.
std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, std::uint64_t seed,
                                 std::vector<int>* face_of_point = nullptr);

TriMesh transformed(const TriMesh& mesh, const Transform& t);
TriMesh merged(const std::vector<TriMesh>& parts);

}  // namespace mg
