#include "warpfield/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace warpfield {

namespace {

[[noreturn]] void parse_error(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

// "3", "3/1", "3//2", "3/1/2" -> vertex index 3.
int parse_face_index(const std::string& token, const std::string& path, int line, int n_verts) {
    size_t slash = token.find('/');
    std::string head = slash == std::string::npos ? token : token.substr(0, slash);
    int idx = 0;
    try {
        idx = std::stoi(head);
    } catch (const std::exception&) {
        parse_error(path, line, "bad face index '" + token + "'");
    }
    if (idx < 0) parse_error(path, line, "negative (relative) indices are not supported");
    if (idx == 0 || idx > n_verts)
        parse_error(path, line, "face index " + std::to_string(idx) + " out of range");
    return idx - 1;
}

}  // namespace

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    TriMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) parse_error(path, lineno, "malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok)
                poly.push_back(parse_face_index(tok, path, lineno,
                                                static_cast<int>(mesh.vertices.size())));
            if (poly.size() < 3) parse_error(path, lineno, "face with fewer than 3 vertices");
            for (size_t k = 1; k + 1 < poly.size(); ++k) {
                Tri t{poly[0], poly[k], poly[k + 1]};
                if (t.a == t.b || t.b == t.c || t.a == t.c)
                    parse_error(path, lineno, "face repeats a vertex");
                mesh.faces.push_back(t);
            }
        }
        // vn/vt/usemtl/o/g/s records are ignored
    }
    return mesh;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const Tri& t : mesh.faces)
        out << "f " << t.a + 1 << " " << t.b + 1 << " " << t.c + 1 << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace warpfield
