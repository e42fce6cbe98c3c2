#include "geocloud/ply_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "geocloud/error.hpp"

namespace geocloud {

namespace {

std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
        type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    return 0;
}

struct Property {
    std::string type;
    std::string name;
    bool is_list = false;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

struct Header {
    PlyFormat format = PlyFormat::Ascii;
    std::vector<Element> elements;
    std::size_t line_count = 0;  // lines consumed by the header
};

Header parse_header(std::istream& in) {
    Header h;
    std::string line;
    std::size_t lineno = 0;

    auto next_line = [&](std::string& out) {
        if (!std::getline(in, out)) throw ParseError("unexpected end of header", lineno);
        if (!out.empty() && out.back() == '\r') out.pop_back();
        ++lineno;
    };

    next_line(line);
    if (line != "ply") throw ParseError("missing 'ply' magic", lineno);

    bool have_format = false;
    while (true) {
        next_line(line);
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt, ver;
            ss >> fmt >> ver;
            if (fmt == "ascii")
                h.format = PlyFormat::Ascii;
            else if (fmt == "binary_little_endian")
                h.format = PlyFormat::BinaryLittleEndian;
            else
                throw ParseError("unsupported format '" + fmt + "'", lineno);
            if (ver != "1.0") throw ParseError("unsupported PLY version '" + ver + "'", lineno);
            have_format = true;
        } else if (tok == "element") {
            Element e;
            if (!(ss >> e.name >> e.count)) throw ParseError("malformed element line", lineno);
            h.elements.push_back(std::move(e));
        } else if (tok == "property") {
            if (h.elements.empty()) throw ParseError("property before any element", lineno);
            Property p;
            ss >> p.type;
            if (p.type == "list") {
                p.is_list = true;
                std::string count_t, item_t;
                ss >> count_t >> item_t >> p.name;
                p.type = count_t + " " + item_t;
            } else {
                ss >> p.name;
                if (scalar_size(p.type) == 0)
                    throw ParseError("unknown property type '" + p.type + "'", lineno);
            }
            if (p.name.empty()) throw ParseError("malformed property line", lineno);
            h.elements.back().props.push_back(std::move(p));
        } else if (tok == "end_header") {
            break;
        } else {
            throw ParseError("unrecognized header keyword '" + tok + "'", lineno);
        }
    }
    if (!have_format) throw ParseError("header has no format line", lineno);
    h.line_count = lineno;
    return h;
}

double read_binary_scalar(std::istream& in, const std::string& type) {
    // assumes a little-endian host, which is all this project targets
    auto read = [&](auto value) -> double {
        in.read(reinterpret_cast<char*>(&value), sizeof(value));
        return static_cast<double>(value);
    };
    if (type == "float" || type == "float32") return read(float{});
    if (type == "double" || type == "float64") return read(double{});
    if (type == "char" || type == "int8") return read(std::int8_t{});
    if (type == "uchar" || type == "uint8") return read(std::uint8_t{});
    if (type == "short" || type == "int16") return read(std::int16_t{});
    if (type == "ushort" || type == "uint16") return read(std::uint16_t{});
    if (type == "int" || type == "int32") return read(std::int32_t{});
    return read(std::uint32_t{});
}

}  // namespace

PointCloud load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    Header h = parse_header(in);

    auto vertex_it = std::find_if(h.elements.begin(), h.elements.end(),
                                  [](const Element& e) { return e.name == "vertex"; });
    if (vertex_it == h.elements.end())
        throw ParseError("no vertex element in header", h.line_count);
    const Element& vertex = *vertex_it;

    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < vertex.props.size(); ++i) {
        if (vertex.props[i].is_list)
            throw ParseError("list property on vertex element is unsupported", h.line_count);
        if (vertex.props[i].name == "x") ix = static_cast<int>(i);
        if (vertex.props[i].name == "y") iy = static_cast<int>(i);
        if (vertex.props[i].name == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0)
        throw ParseError("vertex element lacks x/y/z properties", h.line_count);
    if (vertex.props.size() > 3)
        std::cerr << "geocloud: '" << path << "': ignoring extra vertex properties\n";
    for (const auto& e : h.elements)
        if (e.name != "vertex" && e.count > 0)
            std::cerr << "geocloud: '" << path << "': skipping element '" << e.name << "' ("
                      << e.count << " records)\n";
    if (&vertex != &h.elements.front() && h.format == PlyFormat::BinaryLittleEndian) {
        // would need to stride over preceding elements; none of our producers do this
        for (auto it = h.elements.begin(); it != vertex_it; ++it)
            for (const auto& p : it->props)
                if (p.is_list)
                    throw ParseError("list element precedes vertex data in binary file",
                                     h.line_count);
    }

    PointCloud cloud(3);
    std::size_t lineno = h.line_count;

    if (h.format == PlyFormat::Ascii) {
        // skip any elements declared before vertex
        for (auto it = h.elements.begin(); it != vertex_it; ++it) {
            std::string skip;
            for (std::size_t i = 0; i < it->count; ++i, ++lineno)
                if (!std::getline(in, skip))
                    throw TruncationError("file ends inside element '" + it->name + "'");
        }
        std::string line;
        for (std::size_t i = 0; i < vertex.count; ++i) {
            if (!std::getline(in, line))
                throw TruncationError("header declares " + std::to_string(vertex.count) +
                                      " vertices, body has " + std::to_string(i));
            ++lineno;
            std::istringstream ss(line);
            std::vector<double> vals(vertex.props.size());
            for (std::size_t j = 0; j < vertex.props.size(); ++j)
                if (!(ss >> vals[j])) throw ParseError("malformed vertex record", lineno);
            double p[3] = {vals[ix], vals[iy], vals[iz]};
            cloud.push_back(p);
        }
    } else {
        for (auto it = h.elements.begin(); it != vertex_it; ++it) {
            std::size_t stride = 0;
            for (const auto& p : it->props) stride += scalar_size(p.type);
            in.seekg(static_cast<std::streamoff>(stride * it->count), std::ios::cur);
        }
        for (std::size_t i = 0; i < vertex.count; ++i) {
            std::vector<double> vals(vertex.props.size());
            for (std::size_t j = 0; j < vertex.props.size(); ++j)
                vals[j] = read_binary_scalar(in, vertex.props[j].type);
            if (!in)
                throw TruncationError("header declares " + std::to_string(vertex.count) +
                                      " vertices, body has " + std::to_string(i));
            double p[3] = {vals[ix], vals[iy], vals[iz]};
            cloud.push_back(p);
        }
    }
    return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path, PlyFormat format) {
    if (cloud.dim() != 3)
        throw DimensionError("PLY export requires 3D clouds, got dim " +
                             std::to_string(cloud.dim()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    const char* type = format == PlyFormat::Ascii ? "float" : "double";
    out << "ply\n"
        << "format "
        << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "comment generated by geocloud\n"
        << "element vertex " << cloud.size() << "\n"
        << "property " << type << " x\n"
        << "property " << type << " y\n"
        << "property " << type << " z\n"
        << "end_header\n";

    if (format == PlyFormat::Ascii) {
        char buf[96];
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            auto p = cloud.point(i);
            std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p[0], p[1], p[2]);
            out << buf;
        }
    } else {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            auto p = cloud.point(i);
            out.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(double));
        }
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace geocloud
