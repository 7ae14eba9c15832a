#include "gsplan/cameras_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gsplan/errors.hpp"
#include "gsplan/image_io.hpp"

namespace gsplan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& pointer, const std::string& why) {
    throw FormatError("load_cameras: schema violation at " + pointer + ": " + why);
}

double require_number(const json& obj, const std::string& key, const std::string& pointer) {
    if (!obj.contains(key)) schema_error(pointer + "/" + key, "missing");
    if (!obj[key].is_number()) schema_error(pointer + "/" + key, "expected a number");
    return obj[key].get<double>();
}

}  // namespace

std::vector<View> load_cameras(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_cameras: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("load_cameras: invalid JSON in " + path + ": " + e.what());
    }
    if (!doc.is_array()) schema_error("", "top-level value must be an array");

    const fs::path base = fs::path(path).parent_path();
    std::vector<View> views;
    views.reserve(doc.size());

    for (size_t i = 0; i < doc.size(); ++i) {
        const std::string ptr = "/" + std::to_string(i);
        const json& e = doc[i];
        if (!e.is_object()) schema_error(ptr, "expected an object");

        View v;
        if (!e.contains("id") || !e["id"].is_string()) schema_error(ptr + "/id", "expected a string");
        v.id = e["id"].get<std::string>();
        v.width = static_cast<int>(require_number(e, "width", ptr));
        v.height = static_cast<int>(require_number(e, "height", ptr));
        v.fx = require_number(e, "fx", ptr);
        v.fy = require_number(e, "fy", ptr);
        v.cx = require_number(e, "cx", ptr);
        v.cy = require_number(e, "cy", ptr);

        if (!e.contains("rotation") || !e["rotation"].is_array() || e["rotation"].size() != 9)
            schema_error(ptr + "/rotation", "expected 9 numbers");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                v.rotation(r, c) = e["rotation"][static_cast<size_t>(3 * r + c)].get<double>();

        if (!e.contains("translation") || !e["translation"].is_array() ||
            e["translation"].size() != 3)
            schema_error(ptr + "/translation", "expected 3 numbers");
        for (int c = 0; c < 3; ++c) v.translation[c] = e["translation"][static_cast<size_t>(c)].get<double>();

        v.kind = ViewKind::training;
        try {
            v.validate();
        } catch (const DataError& err) {
            schema_error(ptr, err.what());
        }

        if (e.contains("image") && !e["image"].is_null()) {
            if (!e["image"].is_string()) schema_error(ptr + "/image", "expected a string");
            const fs::path img_path = base / e["image"].get<std::string>();
            v.image_path = img_path.string();
            try {
                v.image = read_image(img_path.string());
            } catch (const FormatError&) {
                throw;
            } catch (const std::exception& err) {
                throw IoError("load_cameras: cannot read image for view '" + v.id +
                              "': " + err.what());
            }
        }
        views.push_back(std::move(v));
    }
    return views;
}

}  // namespace gsplan
