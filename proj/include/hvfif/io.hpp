#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hvfif/bivariate.hpp"
#include "hvfif/error.hpp"
#include "hvfif/eval.hpp"

namespace hvfif {

// Minimal ordered JSON document. Keys keep insertion order and numbers are
// printed with 17 significant digits, so identical runs serialize to
// identical bytes.
class Json {
public:
    enum class Kind { null, boolean, integer, number, string, array, object };

    Json() : kind_(Kind::null) {}

    static Json null() { return Json(); }
    static Json boolean(bool b) {
        Json j;
        j.kind_ = Kind::boolean;
        j.bool_ = b;
        return j;
    }
    static Json integer(long long v) {
        Json j;
        j.kind_ = Kind::integer;
        j.int_ = v;
        return j;
    }
    static Json number(double v) {
        Json j;
        j.kind_ = Kind::number;
        j.num_ = v;
        return j;
    }
    static Json string(std::string s) {
        Json j;
        j.kind_ = Kind::string;
        j.str_ = std::move(s);
        return j;
    }
    static Json array() {
        Json j;
        j.kind_ = Kind::array;
        return j;
    }
    static Json object() {
        Json j;
        j.kind_ = Kind::object;
        return j;
    }

    Json& set(const std::string& key, Json v) {
        if (kind_ != Kind::object) throw Error("Json::set on a non-object");
        members_.emplace_back(key, std::move(v));
        return *this;
    }
    Json& push(Json v) {
        if (kind_ != Kind::array) throw Error("Json::push on a non-array");
        items_.push_back(std::move(v));
        return *this;
    }

    std::string dump(int indent = 2) const {
        std::string out;
        write(out, indent, 0);
        out += '\n';
        return out;
    }

private:
    static void write_escaped(std::string& out, const std::string& s) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += '"';
    }

    void write(std::string& out, int indent, int depth) const {
        const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
        const std::string closing(static_cast<std::size_t>(indent) * depth, ' ');
        switch (kind_) {
            case Kind::null: out += "null"; return;
            case Kind::boolean: out += bool_ ? "true" : "false"; return;
            case Kind::integer: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%lld", int_);
                out += buf;
                return;
            }
            case Kind::number: {
                if (std::isnan(num_)) { out += "null"; return; }
                if (std::isinf(num_)) { out += num_ > 0 ? "\"inf\"" : "\"-inf\""; return; }
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", num_);
                out += buf;
                return;
            }
            case Kind::string: write_escaped(out, str_); return;
            case Kind::array: {
                if (items_.empty()) { out += "[]"; return; }
                out += "[\n";
                for (std::size_t i = 0; i < items_.size(); ++i) {
                    out += pad;
                    items_[i].write(out, indent, depth + 1);
                    if (i + 1 < items_.size()) out += ',';
                    out += '\n';
                }
                out += closing + "]";
                return;
            }
            case Kind::object: {
                if (members_.empty()) { out += "{}"; return; }
                out += "{\n";
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    out += pad;
                    write_escaped(out, members_[i].first);
                    out += ": ";
                    members_[i].second.write(out, indent, depth + 1);
                    if (i + 1 < members_.size()) out += ',';
                    out += '\n';
                }
                out += closing + "}";
                return;
            }
        }
    }

    Kind kind_;
    bool bool_ = false;
    long long int_ = 0;
    double num_ = 0.0;
    std::string str_;
    std::vector<Json> items_;
    std::vector<std::pair<std::string, Json>> members_;
};

namespace detail {

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path);
}

inline void append_g17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace detail

inline void write_samples_csv(const std::string& path, const SampleSet& ss) {
    std::string out = "x,f1,f2\n";
    for (const auto& p : ss.points) {
        detail::append_g17(out, p.x);
        out += ',';
        detail::append_g17(out, p.f1);
        out += ',';
        detail::append_g17(out, p.f2);
        out += '\n';
    }
    detail::write_file(path, out);
}

inline void write_surface_csv(const std::string& path, const SurfaceSamples& ss) {
    std::string out = "x,y,f1,f2\n";
    for (const auto& p : ss.points) {
        detail::append_g17(out, p.x);
        out += ',';
        detail::append_g17(out, p.y);
        out += ',';
        detail::append_g17(out, p.f1);
        out += ',';
        detail::append_g17(out, p.f2);
        out += '\n';
    }
    detail::write_file(path, out);
}

inline void write_boxcounts_csv(const std::string& path,
                                const std::vector<BoxCountRecord>& records) {
    std::string out = "epsilon,count\n";
    for (const auto& r : records) {
        detail::append_g17(out, r.epsilon);
        out += ',';
        out += std::to_string(r.count);
        out += '\n';
    }
    detail::write_file(path, out);
}

// Binary P5 heightmap of a full-lattice surface sample set: f1 rescaled
// affinely to [0, maxval], row-major with y increasing downward. The header
// comment records the rescale so values are recoverable.
inline void write_surface_pgm(const std::string& path, const SurfaceSamples& ss, int bits = 8) {
    if (bits != 8 && bits != 16) throw Error("pgm_bits must be 8 or 16");
    const std::size_t total = ss.points.size();
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(total))));
    if (side * side != total)
        throw Error("surface samples do not form a full square lattice");

    double lo = ss.points.front().f1, hi = lo;
    for (const auto& p : ss.points) {
        lo = std::min(lo, p.f1);
        hi = std::max(hi, p.f1);
    }
    const long long maxval = bits == 8 ? 255 : 65535;
    const double scale = hi > lo ? static_cast<double>(maxval) / (hi - lo) : 0.0;

    std::string out = "P5\n# f1 = f1_min + (f1_max - f1_min) * g / maxval; f1_min=";
    detail::append_g17(out, lo);
    out += " f1_max=";
    detail::append_g17(out, hi);
    out += "; rows follow y ascending (downward)\n";
    out += std::to_string(side) + " " + std::to_string(side) + "\n";
    out += std::to_string(maxval) + "\n";
    // points are ordered row-major by ascending y already
    for (const auto& p : ss.points) {
        const long long g = std::llround((p.f1 - lo) * scale);
        if (bits == 8) {
            out += static_cast<char>(static_cast<unsigned char>(g));
        } else {
            out += static_cast<char>(static_cast<unsigned char>(g >> 8));   // big-endian
            out += static_cast<char>(static_cast<unsigned char>(g & 0xff));
        }
    }
    detail::write_file(path, out);
}

// Simple raster render of a curve sample set, dark trace on white.
inline void write_curve_pgm(const std::string& path, const SampleSet& ss, int width = 1024,
                            int height = 512) {
    if (width < 2 || height < 2) throw Error("curve render needs at least 2x2 pixels");
    double lo = ss.points.front().f1, hi = lo;
    for (const auto& p : ss.points) {
        lo = std::min(lo, p.f1);
        hi = std::max(hi, p.f1);
    }
    const double x0 = ss.points.front().x;
    const double xw = ss.points.back().x - x0;
    const double scale = hi > lo ? static_cast<double>(height - 1) / (hi - lo) : 0.0;

    std::vector<unsigned char> img(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                                   255);
    int prev_row = -1, prev_col = -1;
    for (const auto& p : ss.points) {
        const int col = static_cast<int>(std::llround((p.x - x0) / xw * (width - 1)));
        const int row = (height - 1) - static_cast<int>(std::llround((p.f1 - lo) * scale));
        if (col == prev_col && prev_row >= 0) {
            // fill the vertical span so steep segments stay connected
            const int a = std::min(prev_row, row), b = std::max(prev_row, row);
            for (int r = a; r <= b; ++r)
                img[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)] = 0;
        } else {
            img[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(col)] = 0;
        }
        prev_row = row;
        prev_col = col;
    }

    std::string out = "P5\n# f1 = f1_min + (f1_max - f1_min) * (height-1-row) / (height-1); f1_min=";
    detail::append_g17(out, lo);
    out += " f1_max=";
    detail::append_g17(out, hi);
    out += "\n";
    out += std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data()), img.size());
    detail::write_file(path, out);
}

} // namespace hvfif
