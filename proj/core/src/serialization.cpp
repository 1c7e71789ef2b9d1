#include "rectidic/serialization.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rectidic/version.hpp"

namespace rectidic {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

double parse_double(std::string_view s, const std::filesystem::path& path) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError(path.string() + ": malformed number '" + std::string(s) + "'");
    return v;
}

} // namespace

void save_homography(const Homography& h, const std::filesystem::path& path) {
    json j;
    j["h"] = json::array();
    for (int r = 0; r < 3; ++r) {
        json row = json::array();
        for (int c = 0; c < 3; ++c) row.push_back(h(r, c));
        j["h"].push_back(row);
    }
    write_text(path, j.dump(2) + "\n");
}

Homography load_homography(const std::filesystem::path& path) {
    const json j = read_json(path);
    if (!j.contains("h") || !j["h"].is_array() || j["h"].size() != 3)
        throw IoError(path.string() + ": expected {\"h\": [[...],[...],[...]]}");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        const auto& row = j["h"][r];
        if (!row.is_array() || row.size() != 3)
            throw IoError(path.string() + ": homography rows must have 3 entries");
        for (int c = 0; c < 3; ++c) m.m[r][c] = row[c].get<double>();
    }
    try {
        return Homography::from_matrix(m);
    } catch (const InvalidParameterError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_keypoints(const std::vector<sift::KeyPoint>& kps, const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& kp : kps) {
        json j;
        j["x"] = kp.x;
        j["y"] = kp.y;
        j["sigma"] = kp.sigma;
        j["orientation"] = kp.orientation;
        j["descriptor"] = kp.descriptor;
        arr.push_back(std::move(j));
    }
    write_text(path, arr.dump() + "\n");
}

std::vector<sift::KeyPoint> load_keypoints(const std::filesystem::path& path) {
    const json arr = read_json(path);
    if (!arr.is_array()) throw IoError(path.string() + ": expected a JSON array");
    std::vector<sift::KeyPoint> out;
    out.reserve(arr.size());
    for (const auto& j : arr) {
        sift::KeyPoint kp;
        kp.x = j.at("x").get<double>();
        kp.y = j.at("y").get<double>();
        kp.sigma = j.at("sigma").get<double>();
        kp.orientation = j.at("orientation").get<double>();
        const auto& d = j.at("descriptor");
        if (!d.is_array() || d.size() != 128)
            throw IoError(path.string() + ": descriptor must have 128 entries");
        for (std::size_t i = 0; i < 128; ++i) kp.descriptor[i] = d[i].get<float>();
        out.push_back(std::move(kp));
    }
    return out;
}

void save_matches_csv(const std::vector<MatchPair>& matches, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "x,y,xp,yp,distance,ratio\n";
    for (const auto& m : matches) {
        os << format_double(m.src.x) << ',' << format_double(m.src.y) << ','
           << format_double(m.dst.x) << ',' << format_double(m.dst.y) << ','
           << format_double(m.distance) << ',' << format_double(m.ratio) << '\n';
    }
    write_text(path, os.str());
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    std::filesystem::path p = csv;
    p += ".meta.json";
    return p;
}

const char* criterion_name(dic::Criterion c) {
    switch (c) {
    case dic::Criterion::CC: return "cc";
    case dic::Criterion::ZNCC: return "zncc";
    case dic::Criterion::SSD: return "ssd";
    case dic::Criterion::ZNSSD: return "znssd";
    }
    return "znssd";
}

} // namespace

void save_field_csv(const dic::DisplacementField& field, const std::filesystem::path& path,
                    const FieldMetadata& meta) {
    std::ostringstream os;
    os << "x,y,u,v,zncc,valid\n";
    const auto& g = field.grid;
    for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t i = g.index(ix, iy);
            os << (g.origin_x + ix * g.spacing) << ',' << (g.origin_y + iy * g.spacing) << ','
               << format_double(field.u[i]) << ',' << format_double(field.v[i]) << ','
               << format_double(field.zncc[i]) << ',' << int(field.valid[i]) << '\n';
        }
    }
    write_text(path, os.str());

    json j;
    j["grid"] = {{"origin", {g.origin_x, g.origin_y}},
                 {"spacing", g.spacing},
                 {"nx", g.nx},
                 {"ny", g.ny}};
    j["params"] = {{"subset_half_width", meta.params.half_width},
                   {"spacing", meta.params.spacing},
                   {"criterion", criterion_name(meta.params.criterion)},
                   {"interpolation",
                    meta.params.interpolation == Interpolation::Bicubic ? "bicubic" : "bilinear"},
                   {"max_iterations", meta.params.max_iterations},
                   {"convergence_tol", meta.params.convergence_tol}};
    j["reference"] = meta.reference;
    j["deformed"] = meta.deformed;
    j["software"] = meta.software.empty() ? kSoftwareId : meta.software;
    write_text(sidecar_path(path), j.dump(2) + "\n");
}

dic::DisplacementField load_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,u,v,zncc,valid", 0) != 0)
        throw IoError(path.string() + ": missing field CSV header");

    struct Row {
        int x, y;
        double u, v, zncc;
        int valid;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r{};
        std::array<std::string_view, 6> cols;
        std::string_view sv = line;
        for (int c = 0; c < 6; ++c) {
            const auto comma = sv.find(',');
            if ((comma == std::string_view::npos) != (c == 5))
                throw IoError(path.string() + ": expected 6 CSV columns");
            cols[c] = sv.substr(0, comma);
            if (comma != std::string_view::npos) sv.remove_prefix(comma + 1);
        }
        r.x = static_cast<int>(parse_double(cols[0], path));
        r.y = static_cast<int>(parse_double(cols[1], path));
        r.u = parse_double(cols[2], path);
        r.v = parse_double(cols[3], path);
        r.zncc = parse_double(cols[4], path);
        r.valid = static_cast<int>(parse_double(cols[5], path));
        rows.push_back(r);
    }
    if (rows.empty()) throw IoError(path.string() + ": empty field");

    int min_x = rows[0].x, max_x = rows[0].x, min_y = rows[0].y, max_y = rows[0].y;
    for (const auto& r : rows) {
        min_x = std::min(min_x, r.x);
        max_x = std::max(max_x, r.x);
        min_y = std::min(min_y, r.y);
        max_y = std::max(max_y, r.y);
    }
    int spacing = 0;
    for (const auto& r : rows) {
        if (r.x > min_x) spacing = spacing == 0 ? r.x - min_x : std::min(spacing, r.x - min_x);
        if (r.y > min_y) spacing = spacing == 0 ? r.y - min_y : std::min(spacing, r.y - min_y);
    }
    if (spacing <= 0) spacing = 1;

    dic::GridGeometry g;
    g.origin_x = min_x;
    g.origin_y = min_y;
    g.spacing = spacing;
    g.nx = (max_x - min_x) / spacing + 1;
    g.ny = (max_y - min_y) / spacing + 1;
    if (g.count() != rows.size())
        throw IoError(path.string() + ": rows do not form a regular grid");

    dic::DisplacementField field(g);
    for (const auto& r : rows) {
        if ((r.x - min_x) % spacing != 0 || (r.y - min_y) % spacing != 0)
            throw IoError(path.string() + ": rows do not form a regular grid");
        const std::size_t i = g.index((r.x - min_x) / spacing, (r.y - min_y) / spacing);
        field.u[i] = r.u;
        field.v[i] = r.v;
        field.zncc[i] = r.zncc;
        field.valid[i] = r.valid ? 1 : 0;
    }
    return field;
}

} // namespace rectidic
