#include "gridhop/obj.hpp"

#include <array>
#include <charconv>
#include <map>
#include <ostream>
#include <tuple>
#include <vector>

namespace gridhop {

namespace {

std::string shortest(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

}  // namespace

void write_obj(std::ostream& out, const Mesh& mesh, const ObjHeader& header) {
    using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
    std::map<Key, std::size_t> index;
    std::vector<Vec3> vertices;
    std::vector<std::array<std::size_t, 3>> faces;
    faces.reserve(mesh.size());

    // First occurrence of a quantized position supplies the written coordinates.
    auto vertex = [&](const Vec3& v) {
        const Key key{quantize(v.x), quantize(v.y), quantize(v.z)};
        const auto [it, inserted] = index.try_emplace(key, vertices.size() + 1);
        if (inserted) {
            vertices.push_back(v);
        }
        return it->second;
    };
    for (const Triangle& t : mesh.triangles) {
        faces.push_back({vertex(t.a), vertex(t.b), vertex(t.c)});
    }

    out << "# gridhop\n";
    out << "# scene " << header.scene << "\n";
    out << "# method " << header.method << "\n";
    out << "# n " << header.n << "\n";
    out << "# vertices " << vertices.size() << " faces " << faces.size() << "\n";
    for (const Vec3& v : vertices) {
        out << "v " << shortest(v.x) << ' ' << shortest(v.y) << ' ' << shortest(v.z) << '\n';
    }
    for (const auto& f : faces) {
        out << "f " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
}

}  // namespace gridhop
