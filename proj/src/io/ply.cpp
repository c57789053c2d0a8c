#include "hyrf/io/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hyrf/error.hpp"
#include "hyrf/io/binary.hpp"

namespace hyrf::io {

namespace {

enum class Scalar { I8, U8, I16, U16, I32, U32, F32, F64 };

Scalar parse_scalar(const std::string& t, const std::string& where) {
    if (t == "char" || t == "int8") return Scalar::I8;
    if (t == "uchar" || t == "uint8") return Scalar::U8;
    if (t == "short" || t == "int16") return Scalar::I16;
    if (t == "ushort" || t == "uint16") return Scalar::U16;
    if (t == "int" || t == "int32") return Scalar::I32;
    if (t == "uint" || t == "uint32") return Scalar::U32;
    if (t == "float" || t == "float32") return Scalar::F32;
    if (t == "double" || t == "float64") return Scalar::F64;
    throw DataError(where + ": unknown PLY type '" + t + "'");
}

std::size_t scalar_size(Scalar s) {
    switch (s) {
        case Scalar::I8:
        case Scalar::U8: return 1;
        case Scalar::I16:
        case Scalar::U16: return 2;
        case Scalar::I32:
        case Scalar::U32:
        case Scalar::F32: return 4;
        case Scalar::F64: return 8;
    }
    return 0;
}

double read_scalar(ByteReader& r, Scalar s) {
    switch (s) {
        case Scalar::I8: return r.get<std::int8_t>();
        case Scalar::U8: return r.get<std::uint8_t>();
        case Scalar::I16: return r.get<std::int16_t>();
        case Scalar::U16: return r.get<std::uint16_t>();
        case Scalar::I32: return r.get<std::int32_t>();
        case Scalar::U32: return r.get<std::uint32_t>();
        case Scalar::F32: return r.get<float>();
        case Scalar::F64: return r.get<double>();
    }
    return 0.0;
}

struct Property {
    std::string name;
    Scalar type = Scalar::F32;
    bool is_list = false;
    Scalar count_type = Scalar::U8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

}  // namespace

PointCloud read_ply(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    // Header: text lines up to and including "end_header\n".
    std::size_t pos = 0;
    int line_no = 0;
    auto next_line = [&]() -> std::string {
        if (pos >= bytes.size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": header ends prematurely");
        }
        std::size_t end = pos;
        while (end < bytes.size() && bytes[end] != '\n') ++end;
        std::string line(bytes.begin() + pos, bytes.begin() + end);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = std::min(bytes.size(), end + 1);
        ++line_no;
        return line;
    };
    auto where = [&] { return path + ":" + std::to_string(line_no); };

    if (next_line() != "ply") throw DataError(where() + ": missing 'ply' magic");
    bool binary = false;
    std::vector<Element> elements;
    for (;;) {
        const std::string line = next_line();
        std::istringstream is(line);
        std::string kw;
        is >> kw;
        if (kw == "end_header") break;
        if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
        if (kw == "format") {
            std::string fmt;
            is >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                throw DataError(where() + ": unsupported PLY format '" + fmt + "'");
            }
        } else if (kw == "element") {
            Element e;
            long long n = -1;
            is >> e.name >> n;
            if (!is || n < 0) throw DataError(where() + ": malformed element line");
            e.count = static_cast<std::size_t>(n);
            elements.push_back(e);
        } else if (kw == "property") {
            if (elements.empty()) throw DataError(where() + ": property before any element");
            Property p;
            std::string t;
            is >> t;
            if (t == "list") {
                std::string ct, vt;
                is >> ct >> vt >> p.name;
                p.is_list = true;
                p.count_type = parse_scalar(ct, where());
                p.type = parse_scalar(vt, where());
            } else {
                p.type = parse_scalar(t, where());
                is >> p.name;
            }
            if (p.name.empty()) throw DataError(where() + ": property without a name");
            elements.back().props.push_back(p);
        } else {
            throw DataError(where() + ": unexpected header keyword '" + kw + "'");
        }
    }

    const Element* vertex = nullptr;
    for (const auto& e : elements) {
        if (e.name == "vertex") vertex = &e;
    }
    if (!vertex) throw DataError(path + ": no vertex element");
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (std::size_t k = 0; k < vertex->props.size(); ++k) {
        const auto& n = vertex->props[k].name;
        const int idx = static_cast<int>(k);
        if (n == "x") ix = idx;
        if (n == "y") iy = idx;
        if (n == "z") iz = idx;
        if (n == "red") ir = idx;
        if (n == "green") ig = idx;
        if (n == "blue") ib = idx;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw DataError(path + ": vertex element lacks x/y/z");
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

    PointCloud out;
    std::vector<double> vals;
    auto store = [&](const Element& e) {
        if (&e != vertex) return;
        out.positions.emplace_back(vals[ix], vals[iy], vals[iz]);
        if (has_color) {
            Eigen::Vector3d c(vals[ir], vals[ig], vals[ib]);
            if (vertex->props[ir].type == Scalar::U8) c /= 255.0;
            out.colors.push_back(c.cwiseMax(0.0).cwiseMin(1.0));
        } else {
            out.colors.push_back(Eigen::Vector3d::Constant(0.5));
        }
    };

    if (binary) {
        ByteReader r(std::span<const std::uint8_t>(bytes).subspan(pos));
        try {
            for (const auto& e : elements) {
                for (std::size_t i = 0; i < e.count; ++i) {
                    vals.clear();
                    for (const auto& p : e.props) {
                        if (p.is_list) {
                            const auto n = static_cast<std::size_t>(read_scalar(r, p.count_type));
                            r.get_bytes(n * scalar_size(p.type));
                            vals.push_back(0.0);
                        } else {
                            vals.push_back(read_scalar(r, p.type));
                        }
                    }
                    store(e);
                }
            }
        } catch (const CorruptStream& cs) {
            throw DataError(path + ": truncated binary payload (" + cs.what() + ")");
        }
    } else {
        for (const auto& e : elements) {
            for (std::size_t i = 0; i < e.count; ++i) {
                const std::string line = next_line();
                std::istringstream is(line);
                vals.clear();
                for (const auto& p : e.props) {
                    double v;
                    if (p.is_list) {
                        if (!(is >> v)) throw DataError(where() + ": missing list count");
                        for (long k = 0; k < static_cast<long>(v); ++k) {
                            double skip;
                            if (!(is >> skip)) throw DataError(where() + ": short list");
                        }
                        vals.push_back(0.0);
                    } else {
                        if (!(is >> v)) {
                            throw DataError(where() + ": expected " +
                                            std::to_string(e.props.size()) + " values");
                        }
                        vals.push_back(v);
                    }
                }
                store(e);
            }
        }
    }
    for (const auto& p : out.positions) {
        if (!p.allFinite()) throw DataError(path + ": non-finite vertex position");
    }
    return out;
}

void write_ply(const std::string& path, const PointCloud& cloud) {
    if (cloud.colors.size() != cloud.positions.size()) {
        throw InvalidInput("write_ply: positions and colors differ in length");
    }
    std::ostringstream h;
    h << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.positions.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    const std::string header = h.str();
    ByteWriter w;
    w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(header.data()), header.size()));
    for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
        for (int k = 0; k < 3; ++k) w.put<float>(static_cast<float>(cloud.positions[i][k]));
        for (int k = 0; k < 3; ++k) {
            const double c = std::clamp(cloud.colors[i][k], 0.0, 1.0);
            w.put<std::uint8_t>(static_cast<std::uint8_t>(std::lround(c * 255.0)));
        }
    }
    write_file(path, w.bytes());
}

}  // namespace hyrf::io
