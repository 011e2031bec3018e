#include "morphgrasp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "morphgrasp/errors.hpp"
#include "morphgrasp/rng.hpp"

namespace mg {

namespace {

// Accumulates vertices with 1e-9 dedup and faces with degenerate filtering.
class MeshBuilder {
  public:
    int add_vertex(const Vec3& v) {
        std::tuple<long long, long long, long long> key{llround(v.x), llround(v.y), llround(v.z)};
        auto it = seen_.find(key);
        if (it != seen_.end()) return it->second;
        int idx = static_cast<int>(mesh_.vertices.size());
        mesh_.vertices.push_back(v);
        seen_.emplace(key, idx);
        return idx;
    }

    void add_face(int a, int b, int c) {
        if (a == b || b == c || a == c) {
            ++dropped_;
            return;
        }
        const Vec3& va = mesh_.vertices[a];
        const Vec3& vb = mesh_.vertices[b];
        const Vec3& vc = mesh_.vertices[c];
        double area2 = (vb - va).cross(vc - va).norm();
        if (area2 <= 1e-14) {
            ++dropped_;
            return;
        }
        mesh_.faces.push_back({a, b, c});
    }

    TriMesh take(int* dropped) {
        if (dropped) *dropped = dropped_;
        return std::move(mesh_);
    }

  private:
    static long long llround(double v) { return std::llround(v * 1e9); }
    TriMesh mesh_;
    std::map<std::tuple<long long, long long, long long>, int> seen_;
    int dropped_ = 0;
};

int parse_obj_index(const std::string& token, int vertex_count, int line_no) {
    std::string head = token.substr(0, token.find('/'));
    int idx;
    try {
        idx = std::stoi(head);
    } catch (const std::exception&) {
        throw CorruptFile("OBJ line " + std::to_string(line_no) + ": bad face index '" + token +
                          "'");
    }
    int zero_based = idx > 0 ? idx - 1 : vertex_count + idx;
    if (zero_based < 0 || zero_based >= vertex_count)
        throw CorruptFile("OBJ line " + std::to_string(line_no) + ": face index " +
                          std::to_string(idx) + " outside " + std::to_string(vertex_count) +
                          " vertices");
    return zero_based;
}

std::string lowercase_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

float read_f32(const char* p) {
    float f;
    std::memcpy(&f, p, 4);
    return f;
}

}  // namespace

TriMesh parse_obj(const std::string& text, int* degenerate_dropped) {
    MeshBuilder builder;
    std::vector<Vec3> raw;        // positions in declaration order (for indexing)
    std::vector<int> remapped;    // raw index -> deduped index
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z))
                throw CorruptFile("OBJ line " + std::to_string(line_no) + ": bad vertex");
            raw.push_back(v);
            remapped.push_back(builder.add_vertex(v));
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok)
                poly.push_back(parse_obj_index(tok, static_cast<int>(raw.size()), line_no));
            if (poly.size() < 3)
                throw CorruptFile("OBJ line " + std::to_string(line_no) +
                                  ": face with fewer than 3 vertices");
            for (std::size_t i = 1; i + 1 < poly.size(); ++i)
                builder.add_face(remapped[poly[0]], remapped[poly[i]], remapped[poly[i + 1]]);
        }
        // all other tags (vn, vt, usemtl, o, g, s, mtllib...) are ignored
    }
    return builder.take(degenerate_dropped);
}

TriMesh parse_stl(const std::string& bytes, int* degenerate_dropped) {
    bool ascii = bytes.rfind("solid", 0) == 0 &&
                 bytes.substr(0, 512).find("facet") != std::string::npos;
    MeshBuilder builder;
    if (ascii) {
        std::istringstream ss(bytes);
        std::string tok;
        std::vector<int> tri;
        while (ss >> tok) {
            if (tok != "vertex") continue;
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z)) throw CorruptFile("ASCII STL: bad vertex triple");
            tri.push_back(builder.add_vertex(v));
            if (tri.size() == 3) {
                builder.add_face(tri[0], tri[1], tri[2]);
                tri.clear();
            }
        }
        if (!tri.empty()) throw CorruptFile("ASCII STL: dangling vertices at end of file");
    } else {
        if (bytes.size() < 84) throw CorruptFile("binary STL shorter than its 84-byte header");
        std::uint32_t count;
        std::memcpy(&count, bytes.data() + 80, 4);
        std::size_t expected = 84 + static_cast<std::size_t>(count) * 50;
        if (bytes.size() < expected)
            throw CorruptFile("binary STL truncated: " + std::to_string(bytes.size()) +
                              " bytes for " + std::to_string(count) + " triangles");
        for (std::uint32_t t = 0; t < count; ++t) {
            const char* rec = bytes.data() + 84 + static_cast<std::size_t>(t) * 50;
            int idx[3];
            for (int v = 0; v < 3; ++v) {
                const char* p = rec + 12 + v * 12;  // skip the normal
                idx[v] = builder.add_vertex(
                    {read_f32(p), read_f32(p + 4), read_f32(p + 8)});
            }
            builder.add_face(idx[0], idx[1], idx[2]);
        }
    }
    return builder.take(degenerate_dropped);
}

TriMesh load_mesh(const std::string& path, int* degenerate_dropped) {
    std::string ext = lowercase_ext(path);
    if (ext != "obj" && ext != "stl")
        throw UnsupportedFormat("cannot load '" + path + "': expected .obj or .stl");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot open mesh file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string bytes = ss.str();
    return ext == "obj" ? parse_obj(bytes, degenerate_dropped)
                        : parse_stl(bytes, degenerate_dropped);
}

void save_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw CorruptFile("cannot write mesh file: " + path);
    f.precision(17);
    for (const Vec3& v : mesh.vertices) f << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& face : mesh.faces)
        f << "f " << face[0] + 1 << " " << face[1] + 1 << " " << face[2] + 1 << "\n";
}

void save_stl_binary(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot write mesh file: " + path);
    char header[80] = {};
    std::snprintf(header, sizeof(header), "binary STL, %zu triangles", mesh.faces.size());
    f.write(header, 80);
    std::uint32_t count = static_cast<std::uint32_t>(mesh.faces.size());
    f.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& face : mesh.faces) {
        const Vec3& a = mesh.vertices[face[0]];
        const Vec3& b = mesh.vertices[face[1]];
        const Vec3& c = mesh.vertices[face[2]];
        Vec3 n = (b - a).cross(c - a);
        double len = n.norm();
        if (len > 0) n = n * (1.0 / len);
        float rec[12] = {static_cast<float>(n.x), static_cast<float>(n.y),
                         static_cast<float>(n.z), static_cast<float>(a.x),
                         static_cast<float>(a.y), static_cast<float>(a.z),
                         static_cast<float>(b.x), static_cast<float>(b.y),
                         static_cast<float>(b.z), static_cast<float>(c.x),
                         static_cast<float>(c.y), static_cast<float>(c.z)};
        f.write(reinterpret_cast<const char*>(rec), 48);
        std::uint16_t attr = 0;
        f.write(reinterpret_cast<const char*>(&attr), 2);
    }
}

double face_area(const TriMesh& mesh, int face) {
    const auto& fc = mesh.faces[face];
    const Vec3& a = mesh.vertices[fc[0]];
    const Vec3& b = mesh.vertices[fc[1]];
    const Vec3& c = mesh.vertices[fc[2]];
    return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const TriMesh& mesh) {
    double s = 0.0;
    for (std::size_t i = 0; i < mesh.faces.size(); ++i)
        s += face_area(mesh, static_cast<int>(i));
    return s;
}

std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, std::uint64_t seed,
                                 std::vector<int>* face_of_point) {
    if (mesh.faces.empty()) throw EmptyMesh("cannot sample an empty mesh");
    if (count < 1) throw ConfigMismatch("sample count must be >= 1");
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        total += face_area(mesh, static_cast<int>(i));
        cumulative[i] = total;
    }
    if (total <= 0.0) throw EmptyMesh("mesh has zero surface area");

    Rng rng(seed);
    std::vector<Vec3> points;
    points.reserve(count);
    if (face_of_point) face_of_point->clear();
    for (int i = 0; i < count; ++i) {
        double r = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        int face = static_cast<int>(std::min<std::size_t>(it - cumulative.begin(),
                                                          mesh.faces.size() - 1));
        const auto& fc = mesh.faces[face];
        const Vec3& a = mesh.vertices[fc[0]];
        const Vec3& b = mesh.vertices[fc[1]];
        const Vec3& c = mesh.vertices[fc[2]];
        // sqrt trick: uniform over the triangle
        double u = std::sqrt(rng.uniform());
        double v = rng.uniform();
        points.push_back(a * (1.0 - u) + b * (u * (1.0 - v)) + c * (u * v));
        if (face_of_point) face_of_point->push_back(face);
    }
    return points;
}

TriMesh transformed(const TriMesh& mesh, const Transform& t) {
    TriMesh out = mesh;
    for (Vec3& v : out.vertices) v = t.apply(v);
    return out;
}

TriMesh merged(const std::vector<TriMesh>& parts) {
    TriMesh out;
    for (const TriMesh& p : parts) {
        int base = static_cast<int>(out.vertices.size());
        out.vertices.insert(out.vertices.end(), p.vertices.begin(), p.vertices.end());
        for (const auto& f : p.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    }
    return out;
}

}  // namespace mg
