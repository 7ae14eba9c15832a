#include "gsplan/ply_io.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "gsplan/errors.hpp"

namespace gsplan {

namespace {

constexpr double kShC0 = 0.28209479177387814;

size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    throw FormatError("load_gaussian_ply: unsupported property type '" + t + "'");
}

struct PlyProperty {
    std::string type;
    std::string name;
    size_t offset = 0;  // byte offset within a binary vertex record
};

struct PlyHeader {
    bool binary = false;
    size_t vertex_count = 0;
    std::vector<PlyProperty> properties;
    size_t vertex_stride = 0;
};

PlyHeader parse_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r"))
        throw FormatError("load_gaussian_ply: not a PLY file: " + path);

    PlyHeader header;
    bool in_vertex_element = false;
    bool format_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment") continue;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian")
                header.binary = true;
            else if (fmt == "ascii")
                header.binary = false;
            else
                throw FormatError("load_gaussian_ply: unsupported format '" + fmt + "'");
            format_seen = true;
        } else if (word == "element") {
            std::string name;
            size_t count;
            ls >> name >> count;
            if (name == "vertex") {
                in_vertex_element = true;
                header.vertex_count = count;
            } else {
                in_vertex_element = false;
            }
        } else if (word == "property") {
            if (!in_vertex_element) continue;
            PlyProperty prop;
            ls >> prop.type;
            if (prop.type == "list")
                throw FormatError("load_gaussian_ply: list properties unsupported");
            ls >> prop.name;
            prop.offset = header.vertex_stride;
            header.vertex_stride += ply_type_size(prop.type);
            header.properties.push_back(prop);
        } else if (word == "end_header") {
            if (!format_seen) throw FormatError("load_gaussian_ply: missing format line");
            return header;
        }
    }
    throw FormatError("load_gaussian_ply: unterminated header in " + path);
}

double decode_scalar(const uint8_t* p, const std::string& type) {
    if (type == "float" || type == "float32") {
        float f;
        std::memcpy(&f, p, 4);
        return f;
    }
    if (type == "double" || type == "float64") {
        double d;
        std::memcpy(&d, p, 8);
        return d;
    }
    if (type == "uchar" || type == "uint8") return *p;
    if (type == "char" || type == "int8") return *reinterpret_cast<const int8_t*>(p);
    if (type == "short" || type == "int16") {
        int16_t v;
        std::memcpy(&v, p, 2);
        return v;
    }
    if (type == "ushort" || type == "uint16") {
        uint16_t v;
        std::memcpy(&v, p, 2);
        return v;
    }
    if (type == "int" || type == "int32") {
        int32_t v;
        std::memcpy(&v, p, 4);
        return v;
    }
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const std::array<const char*, 14> kRequired = {"x",       "y",       "z",      "f_dc_0",
                                               "f_dc_1",  "f_dc_2",  "opacity", "scale_0",
                                               "scale_1", "scale_2", "rot_0",  "rot_1",
                                               "rot_2",   "rot_3"};

}  // namespace

GaussianCloud load_gaussian_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_gaussian_ply: cannot open " + path);

    const PlyHeader header = parse_header(in, path);

    std::unordered_map<std::string, size_t> index;  // property name -> position
    for (size_t i = 0; i < header.properties.size(); ++i)
        index[header.properties[i].name] = i;
    std::array<size_t, 14> req{};
    for (size_t i = 0; i < kRequired.size(); ++i) {
        auto it = index.find(kRequired[i]);
        if (it == index.end())
            throw FormatError(std::string("load_gaussian_ply: missing required property '") +
                              kRequired[i] + "' in " + path);
        req[i] = it->second;
    }

    GaussianCloud cloud;
    cloud.gaussians.reserve(header.vertex_count);
    std::vector<double> values(header.properties.size());
    std::vector<uint8_t> record(header.vertex_stride);

    for (size_t v = 0; v < header.vertex_count; ++v) {
        if (header.binary) {
            in.read(reinterpret_cast<char*>(record.data()),
                    static_cast<std::streamsize>(header.vertex_stride));
            if (!in) throw FormatError("load_gaussian_ply: truncated vertex data in " + path);
            for (size_t i = 0; i < header.properties.size(); ++i)
                values[i] =
                    decode_scalar(record.data() + header.properties[i].offset,
                                  header.properties[i].type);
        } else {
            for (size_t i = 0; i < header.properties.size(); ++i) {
                if (!(in >> values[i]))
                    throw FormatError("load_gaussian_ply: truncated vertex data in " + path);
            }
        }

        std::array<double, 14> raw{};
        for (size_t i = 0; i < raw.size(); ++i) {
            raw[i] = values[req[i]];
            if (!std::isfinite(raw[i]))
                throw DataError("load_gaussian_ply: non-finite value at vertex " +
                                std::to_string(v) + " (" + kRequired[i] + ")");
        }

        Gaussian g;
        g.mean = Vec3(raw[0], raw[1], raw[2]);
        for (int c = 0; c < 3; ++c)
            g.color[c] = std::clamp(0.5 + kShC0 * raw[3 + c], 0.0, 1.0);
        g.opacity = sigmoid(raw[6]);
        g.scale = Vec3(std::exp(raw[7]), std::exp(raw[8]), std::exp(raw[9]));
        Eigen::Vector4d q(raw[10], raw[11], raw[12], raw[13]);
        const double norm = q.norm();
        if (norm < 1e-12)
            throw DataError("load_gaussian_ply: zero quaternion at vertex " + std::to_string(v));
        g.rotation = q / norm;
        cloud.gaussians.push_back(g);
    }
    return cloud;
}

}  // namespace gsplan
