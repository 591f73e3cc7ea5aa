// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/camera.hpp"
#include "pvsm/conditioning.hpp"
#include "pvsm/error.hpp"
#include "pvsm/image.hpp"
#include "pvsm/plucker.hpp"

#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace pvsm {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Byte helpers

namespace detail {

inline std::vector<char>
read_file(const fs::path &path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::MissingFile, path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void
write_file(const fs::path &path, const std::string &bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

inline void
append_u32_le(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
}

inline std::uint32_t
read_u32_le(const char *p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
}

inline void
append_f32(std::string &out, float f, bool littleEndian = true) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
        const int shift = littleEndian ? 8 * i : 8 * (3 - i);
        out.push_back(static_cast<char>((bits >> shift) & 0xffu));
    }
}

inline float
read_f32(const char *p, bool littleEndian = true) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        const int shift = littleEndian ? 8 * i : 8 * (3 - i);
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << shift;
    }
    return std::bit_cast<float>(v);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Raw tensors: 16-byte header "PVST", H, W, C (u32 LE), then H·W·C f32 LE.

inline constexpr char kRawTensorMagic[4] = {'P', 'V', 'S', 'T'};

inline void
save_raw_tensor(const fs::path &path, const Image<float> &buffer) {
    std::string bytes(kRawTensorMagic, 4);
    detail::append_u32_le(bytes, static_cast<std::uint32_t>(buffer.height()));
    detail::append_u32_le(bytes, static_cast<std::uint32_t>(buffer.width()));
    detail::append_u32_le(bytes, static_cast<std::uint32_t>(buffer.channels()));
    bytes.reserve(bytes.size() + buffer.data().size() * 4);
    for (float v : buffer.data()) {
        detail::append_f32(bytes, v);
    }
    detail::write_file(path, bytes);
}

inline Image<float>
load_raw_tensor(const fs::path &path) {
    const std::vector<char> bytes = detail::read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kRawTensorMagic, 4) != 0) {
        fail(ErrorCode::MalformedHeader, path.string() + ": missing raw-tensor header");
    }
    const std::uint32_t h = detail::read_u32_le(bytes.data() + 4);
    const std::uint32_t w = detail::read_u32_le(bytes.data() + 8);
    const std::uint32_t c = detail::read_u32_le(bytes.data() + 12);
    const std::uint64_t count = static_cast<std::uint64_t>(h) * w * c;
    if (c == 0 || h > (1u << 30) || w > (1u << 30) || bytes.size() != 16 + count * 4) {
        fail(ErrorCode::MalformedHeader, path.string() + ": header does not match payload size");
    }
    Image<float> out(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    auto data = out.data();
    for (std::uint64_t i = 0; i < count; ++i) {
        data[i] = detail::read_f32(bytes.data() + 16 + 4 * i);
    }
    return out;
}

/// 6-channel (m, d) tensor view of a Plücker map.
inline Image<float>
to_tensor(const PluckerMap &map) {
    Image<float> t(map.height(), map.width(), 6);
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) {
            const PluckerRay &ray = map.at(r, c);
            for (int k = 0; k < 3; ++k) {
                t(r, c, k) = static_cast<float>(ray.moment[k]);
                t(r, c, 3 + k) = static_cast<float>(ray.direction[k]);
            }
        }
    }
    return t;
}

inline PluckerMap
plucker_map_from_tensor(const Image<float> &t) {
    if (t.channels() != 6) {
        fail(ErrorCode::DimensionMismatch, "Plücker tensor must have 6 channels");
    }
    PluckerMap map(t.height(), t.width());
    for (int r = 0; r < t.height(); ++r) {
        for (int c = 0; c < t.width(); ++c) {
            PluckerRay &ray = map.at(r, c);
            for (int k = 0; k < 3; ++k) {
                ray.moment[k] = t(r, c, k);
                ray.direction[k] = t(r, c, 3 + k);
            }
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// PNG (8-bit). Quantization is round-half-up: v ↦ floor(v·255 + 0.5).

inline std::uint8_t
quantize(float v) {
    const double x = std::floor(static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(x);
}

namespace detail {

inline void
write_png(const fs::path &path, int height, int width, int channels,
          const std::vector<std::uint8_t> &pixels) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorCode::IoFailure, path.string() + ": " + msg);
    }
}

inline std::vector<std::uint8_t>
read_png(const fs::path &path, int channels, int &height, int &width) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::MissingFile, path.string());
    }
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorCode::IoFailure, path.string() + ": " + msg);
    }
    img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorCode::IoFailure, path.string() + ": " + msg);
    }
    height = static_cast<int>(img.height);
    width = static_cast<int>(img.width);
    return pixels;
}

} // namespace detail

inline void
save_image(const fs::path &path, const ColorImage &image) {
    if (image.channels() != 3) {
        fail(ErrorCode::DimensionMismatch, "save_image expects an RGB image");
    }
    std::vector<std::uint8_t> px(image.data().size());
    std::transform(image.data().begin(), image.data().end(), px.begin(), quantize);
    detail::write_png(path, image.height(), image.width(), 3, px);
}

inline float
dequantize(std::uint8_t b) {
    return static_cast<float>(b / 255.0);
}

inline ColorImage
load_image(const fs::path &path) {
    int h = 0, w = 0;
    const auto px = detail::read_png(path, 3, h, w);
    ColorImage out = make_color_image(h, w);
    std::transform(px.begin(), px.end(), out.data().begin(), dequantize);
    return out;
}

/// The image as it reads back after a PNG round trip.
inline ColorImage
quantized(ColorImage image) {
    for (float &v : image.data()) {
        v = dequantize(quantize(v));
    }
    return image;
}

/// Masks are stored as 8-bit grayscale, 0 / 255.
inline void
save_mask(const fs::path &path, const Mask &mask) {
    std::vector<std::uint8_t> px(mask.data().size());
    std::transform(mask.data().begin(), mask.data().end(), px.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0 ? 255 : 0); });
    detail::write_png(path, mask.height(), mask.width(), 1, px);
}

inline Mask
load_mask(const fs::path &path) {
    int h = 0, w = 0;
    const auto px = detail::read_png(path, 1, h, w);
    Mask out = make_mask(h, w);
    std::transform(px.begin(), px.end(), out.data().begin(),
                   [](std::uint8_t b) { return static_cast<std::uint8_t>(b >= 128 ? 1 : 0); });
    return out;
}

// ---------------------------------------------------------------------------
// PFM depth ("Pf", rows stored bottom to top, negative scale = little-endian).

inline void
save_pfm(const fs::path &path, const DepthMap &depth) {
    if (depth.channels() != 1) {
        fail(ErrorCode::DimensionMismatch, "PFM depth must have a single channel");
    }
    std::string bytes = "Pf\n" + std::to_string(depth.width()) + " " +
                        std::to_string(depth.height()) + "\n-1.0\n";
    bytes.reserve(bytes.size() + depth.data().size() * 4);
    for (int row = depth.height() - 1; row >= 0; --row) {
        for (int col = 0; col < depth.width(); ++col) {
            detail::append_f32(bytes, depth(row, col));
        }
    }
    detail::write_file(path, bytes);
}

inline DepthMap
load_pfm(const fs::path &path) {
    const std::vector<char> bytes = detail::read_file(path);
    // Header: three whitespace-separated tokens after the magic line.
    std::size_t pos = 0;
    const auto token = [&]() {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        return std::string(bytes.data() + start, pos - start);
    };
    const std::string magic = token();
    if (magic != "Pf") {
        fail(ErrorCode::MalformedHeader, path.string() + ": expected single-channel PFM ('Pf')");
    }
    int w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception &) {
        fail(ErrorCode::MalformedHeader, path.string() + ": unreadable PFM header");
    }
    ++pos; // single whitespace byte before the payload
    if (w <= 0 || h <= 0 || scale == 0.0 ||
        bytes.size() < pos || bytes.size() - pos != static_cast<std::size_t>(w) * h * 4) {
        fail(ErrorCode::MalformedHeader, path.string() + ": PFM payload size mismatch");
    }
    const bool little = scale < 0.0;
    DepthMap out = make_depth_map(h, w);
    const char *p = bytes.data() + pos;
    for (int row = h - 1; row >= 0; --row) {
        for (int col = 0; col < w; ++col, p += 4) {
            out(row, col) = detail::read_f32(p, little);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Camera / scene JSON

inline json
camera_to_json(const Camera &c) {
    const Mat3 &r = c.extrinsics.rotation;
    const Vec3 &t = c.extrinsics.translation;
    return json{{"fx", c.intrinsics.fx},
                {"fy", c.intrinsics.fy},
                {"cx", c.intrinsics.cx},
                {"cy", c.intrinsics.cy},
                {"width", c.intrinsics.width},
                {"height", c.intrinsics.height},
                {"R", {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}},
                {"t", {t.x(), t.y(), t.z()}}};
}

/// Parse a camera dict. Rotations further than `tolerance` from SO(3) are
/// rejected with ConventionMismatch.
inline Camera
camera_from_json(const json &j, double tolerance = 1e-6) {
    Camera c;
    try {
        c.intrinsics.fx = j.at("fx").get<double>();
        c.intrinsics.fy = j.at("fy").get<double>();
        c.intrinsics.cx = j.at("cx").get<double>();
        c.intrinsics.cy = j.at("cy").get<double>();
        c.intrinsics.width = j.at("width").get<int>();
        c.intrinsics.height = j.at("height").get<int>();
        const auto r = j.at("R").get<std::vector<double>>();
        const auto t = j.at("t").get<std::vector<double>>();
        if (r.size() != 9 || t.size() != 3) {
            fail(ErrorCode::MalformedJson, "camera R needs 9 entries and t needs 3");
        }
        for (int i = 0; i < 9; ++i) {
            c.extrinsics.rotation(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
        }
        c.extrinsics.translation = Vec3(t[0], t[1], t[2]);
    } catch (const json::exception &e) {
        fail(ErrorCode::MalformedJson, std::string("camera: ") + e.what());
    }
    try {
        validate(c.intrinsics);
    } catch (const Error &e) {
        fail(ErrorCode::MalformedJson, e.what());
    }
    validate(c.extrinsics, tolerance);
    return c;
}

struct SceneView {
    std::string id;
    Camera camera;
    std::string color_path; // relative to the scene directory
    std::string depth_path; // empty when the view has no depth
    ColorImage color;
    std::optional<DepthMap> depth;
};

struct SceneBundle {
    fs::path root;
    std::vector<SceneView> views;
    std::vector<std::string> context_ids;
    std::vector<std::string> target_ids;
    std::string world_unit = "unit";

    const SceneView *
    find(const std::string &id) const {
        for (const auto &v : views) {
            if (v.id == id) {
                return &v;
            }
        }
        return nullptr;
    }

    const SceneView &
    view(const std::string &id) const {
        if (const SceneView *v = find(id)) {
            return *v;
        }
        fail(ErrorCode::InvalidSpec, "unknown view id '" + id + "'");
    }

    /// Context views (which must carry depth) in the requested order.
    std::vector<ContextView>
    contexts(const std::vector<std::string> &ids) const {
        std::vector<ContextView> out;
        for (const auto &id : ids) {
            const SceneView &v = view(id);
            if (!v.depth) {
                fail(ErrorCode::InvalidSpec, "context view '" + id + "' has no depth map");
            }
            out.push_back({v.color, *v.depth, v.camera});
        }
        return out;
    }
};

inline SceneBundle
load_scene(const fs::path &dir) {
    const fs::path jsonPath = dir / "scene.json";
    std::error_code ec;
    if (!fs::is_directory(dir, ec) || !fs::is_regular_file(jsonPath, ec)) {
        fail(ErrorCode::MissingFile, jsonPath.string());
    }
    const std::vector<char> bytes = detail::read_file(jsonPath);
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception &e) {
        fail(ErrorCode::MalformedJson, jsonPath.string() + ": " + e.what());
    }

    SceneBundle scene;
    scene.root = dir;
    try {
        scene.world_unit = doc.value("world_unit", std::string("unit"));
        for (const auto &jv : doc.at("views")) {
            SceneView v;
            v.id = jv.at("id").get<std::string>();
            v.camera = camera_from_json(jv.at("camera"));
            v.color_path = jv.at("color").get<std::string>();
            if (jv.contains("depth") && !jv.at("depth").is_null()) {
                v.depth_path = jv.at("depth").get<std::string>();
            }
            scene.views.push_back(std::move(v));
        }
        scene.context_ids = doc.at("context_ids").get<std::vector<std::string>>();
        scene.target_ids = doc.at("target_ids").get<std::vector<std::string>>();
    } catch (const json::exception &e) {
        fail(ErrorCode::MalformedJson, jsonPath.string() + ": " + e.what());
    }

    std::set<std::string> ids;
    for (const auto &v : scene.views) {
        if (!ids.insert(v.id).second) {
            fail(ErrorCode::MalformedJson, "duplicate view id '" + v.id + "'");
        }
    }
    for (const auto *list : {&scene.context_ids, &scene.target_ids}) {
        for (const auto &id : *list) {
            if (!ids.count(id)) {
                fail(ErrorCode::MalformedJson, "scene references unknown view id '" + id + "'");
            }
        }
    }

    for (auto &v : scene.views) {
        v.color = load_image(dir / v.color_path);
        if (v.color.height() != v.camera.height() || v.color.width() != v.camera.width()) {
            fail(ErrorCode::DimensionMismatch, v.color_path + " does not match camera of '" + v.id + "'");
        }
        if (!v.depth_path.empty()) {
            DepthMap d = load_pfm(dir / v.depth_path);
            if (d.height() != v.camera.height() || d.width() != v.camera.width()) {
                fail(ErrorCode::DimensionMismatch, v.depth_path + " does not match camera of '" + v.id + "'");
            }
            validate_depth(d);
            v.depth = std::move(d);
        }
    }
    for (const auto &id : scene.context_ids) {
        if (!scene.view(id).depth) {
            fail(ErrorCode::MalformedJson, "context view '" + id + "' has no depth map");
        }
    }
    return scene;
}

inline json
scene_to_json(const SceneBundle &scene) {
    json views = json::array();
    for (const auto &v : scene.views) {
        json jv{{"id", v.id}, {"camera", camera_to_json(v.camera)}, {"color", v.color_path}};
        jv["depth"] = v.depth_path.empty() ? json(nullptr) : json(v.depth_path);
        views.push_back(std::move(jv));
    }
    return json{{"world_unit", scene.world_unit},
                {"views", views},
                {"context_ids", scene.context_ids},
                {"target_ids", scene.target_ids}};
}

/// Write scene.json plus every view's buffers into dir (which must exist).
inline void
save_scene(const fs::path &dir, const SceneBundle &scene) {
    for (const auto &v : scene.views) {
        save_image(dir / v.color_path, v.color);
        if (!v.depth_path.empty() && v.depth) {
            save_pfm(dir / v.depth_path, *v.depth);
        }
    }
    detail::write_file(dir / "scene.json", scene_to_json(scene).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Artifacts

inline Image<float>
zbuffer_tensor(const ProjectionImage &img) {
    Image<float> t(img.height(), img.width(), 1);
    for (std::size_t i = 0; i < img.zbuffer.data().size(); ++i) {
        t.data()[i] = static_cast<float>(img.zbuffer.data()[i]);
    }
    return t;
}

/// color.png, coverage.png, zbuffer.pvst (+inf where uncovered).
inline void
save_projection(const fs::path &dir, const ProjectionImage &img, const std::string &prefix = "") {
    save_image(dir / (prefix + "color.png"), img.color);
    save_mask(dir / (prefix + "coverage.png"), img.coverage);
    save_raw_tensor(dir / (prefix + "zbuffer.pvst"), zbuffer_tensor(img));
}

/// Output directory staged under a temporary sibling and renamed into place
/// on commit(). An existing target is replaced only with `force`.
class StagedDirectory {
  public:
    StagedDirectory(fs::path target, bool force) : mTarget(std::move(target)), mForce(force) {
        std::error_code ec;
        if (fs::exists(mTarget, ec) && !mForce) {
            fail(ErrorCode::IoFailure, mTarget.string() + " already exists (use --force)");
        }
        const fs::path parent = mTarget.has_parent_path() ? mTarget.parent_path() : fs::path(".");
        fs::create_directories(parent, ec);
        mStaging = parent / ("." + mTarget.filename().string() + ".tmp-" + std::to_string(::getpid()));
        fs::remove_all(mStaging, ec);
        if (!fs::create_directory(mStaging, ec)) {
            fail(ErrorCode::IoFailure, "cannot create " + mStaging.string() + ": " + ec.message());
        }
    }
    StagedDirectory(const StagedDirectory &) = delete;
    StagedDirectory &operator=(const StagedDirectory &) = delete;

    ~StagedDirectory() {
        if (!mCommitted) {
            std::error_code ec;
            fs::remove_all(mStaging, ec);
        }
    }

    const fs::path &
    path() const {
        return mStaging;
    }

    void
    commit() {
        std::error_code ec;
        if (fs::exists(mTarget, ec)) {
            fs::remove_all(mTarget, ec);
        }
        fs::rename(mStaging, mTarget, ec);
        if (ec) {
            fail(ErrorCode::IoFailure, "cannot move output into " + mTarget.string() + ": " + ec.message());
        }
        mCommitted = true;
    }

  private:
    fs::path mTarget;
    fs::path mStaging;
    bool mForce = false;
    bool mCommitted = false;
};

inline void
write_text(const fs::path &path, const std::string &text) {
    detail::write_file(path, text);
}

} // namespace pvsm
