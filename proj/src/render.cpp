#include <posekit/image_io.hpp>
#include <posekit/render.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace posekit {

RigidTransform lookAtOrigin(const Vec3& center) {
  const Vec3 forward = (-center).normalized();
  Vec3 up = Vec3::UnitZ();
  if (forward.cross(up).norm() < 1e-6) up = Vec3::UnitX();
  const Vec3 down = -(up - up.dot(forward) * forward).normalized();
  const Vec3 right = down.cross(forward);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return {r, -(r * center)};
}

std::vector<RigidTransform> sampleViewpoints(int count, double radius) {
  std::vector<RigidTransform> poses;
  if (count < 1 || !(radius > 0.0)) throw Error("viewpoint count and radius must be positive");
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  poses.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    const Vec3 dir(rho * std::cos(phi), rho * std::sin(phi), z);
    poses.push_back(lookAtOrigin(radius * dir));
  }
  return poses;
}

CameraIntrinsics templateCamera(int size, double diameter, double distance, double fill) {
  CameraIntrinsics k;
  k.width = size;
  k.height = size;
  k.fx = k.fy = fill * size * distance / diameter;
  k.cx = k.cy = 0.5 * (size - 1);
  return k;
}

namespace {

inline double edge(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Edge a->b of a positively oriented triangle (y down): top if horizontal with
// the interior below, left if the interior is to its right on screen.
inline bool topLeft(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x(), dy = b.y() - a.y();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

inline bool covers(double w, bool tl) { return w > 0.0 || (w == 0.0 && tl); }

}  // namespace

TemplateView render(const TriangleMesh& mesh, const RigidTransform& pose,
                    const CameraIntrinsics& intrinsics) {
  const int w = intrinsics.width, h = intrinsics.height;
  TemplateView view;
  view.rgb = RgbImage(w, h, 3, 0.0f);
  view.depth = DepthImage(w, h, 1, 0.0);
  view.mask = MaskImage(w, h, 1, 0);
  view.camera_pose = pose;
  view.intrinsics = intrinsics;

  std::vector<double> zbuf(static_cast<size_t>(w) * h, std::numeric_limits<double>::infinity());
  std::vector<Vec3> cam(mesh.vertices.size());
  for (size_t i = 0; i < cam.size(); ++i) cam[i] = pose.apply(mesh.vertices[i]);
  const Vec3 grey(0.7, 0.7, 0.7);

  for (const auto& tri : mesh.triangles) {
    int idx[3] = {tri[0], tri[1], tri[2]};
    if (cam[idx[0]].z() <= 1e-9 || cam[idx[1]].z() <= 1e-9 || cam[idx[2]].z() <= 1e-9) continue;
    Vec2 p[3];
    for (int k = 0; k < 3; ++k) p[k] = intrinsics.project(cam[idx[k]]);
    double area = edge(p[0], p[1], p[2].x(), p[2].y());
    if (area == 0.0 || !std::isfinite(area)) continue;
    if (area < 0.0) {
      std::swap(idx[1], idx[2]);
      std::swap(p[1], p[2]);
      area = -area;
    }
    const double z[3] = {cam[idx[0]].z(), cam[idx[1]].z(), cam[idx[2]].z()};
    Vec3 col[3];
    for (int k = 0; k < 3; ++k) col[k] = mesh.hasColors() ? mesh.vertex_colors[idx[k]] : grey;
    const bool tl0 = topLeft(p[1], p[2]), tl1 = topLeft(p[2], p[0]), tl2 = topLeft(p[0], p[1]);

    const double minx = std::min({p[0].x(), p[1].x(), p[2].x()});
    const double maxx = std::max({p[0].x(), p[1].x(), p[2].x()});
    const double miny = std::min({p[0].y(), p[1].y(), p[2].y()});
    const double maxy = std::max({p[0].y(), p[1].y(), p[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::ceil(minx)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(maxx)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(miny)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(maxy)));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double w0 = edge(p[1], p[2], x, y);
        const double w1 = edge(p[2], p[0], x, y);
        const double w2 = edge(p[0], p[1], x, y);
        if (!covers(w0, tl0) || !covers(w1, tl1) || !covers(w2, tl2)) continue;
        const double b0 = w0 / area, b1 = w1 / area, b2 = w2 / area;
        const double inv_z = b0 / z[0] + b1 / z[1] + b2 / z[2];
        const double depth = 1.0 / inv_z;
        const size_t slot = static_cast<size_t>(y) * w + x;
        if (!(depth < zbuf[slot])) continue;
        zbuf[slot] = depth;
        const Vec3 c = (b0 / z[0] * col[0] + b1 / z[1] * col[1] + b2 / z[2] * col[2]) * depth;
        float* px = view.rgb.pixel(x, y);
        px[0] = static_cast<float>(c.x());
        px[1] = static_cast<float>(c.y());
        px[2] = static_cast<float>(c.z());
        view.depth.at(x, y) = depth;
        view.mask.at(x, y) = 1;
      }
    }
  }
  return view;
}

void sampleBilinear(const Image<float>& image, double x, double y, float* out) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width - 1), y1 = std::min(y0 + 1, image.height - 1);
  const double fx = x - x0, fy = y - y0;
  const float* a = image.pixel(x0, y0);
  const float* b = image.pixel(x1, y0);
  const float* c = image.pixel(x0, y1);
  const float* d = image.pixel(x1, y1);
  for (int ch = 0; ch < image.channels; ++ch) {
    const double top = (1.0 - fx) * a[ch] + fx * b[ch];
    const double bottom = (1.0 - fx) * c[ch] + fx * d[ch];
    out[ch] = static_cast<float>((1.0 - fy) * top + fy * bottom);
  }
}

CroppedImage cropToBbox(const Image<float>& image, const PixelRect& bbox, int out_size) {
  if (out_size <= 0) throw Error("crop size must be positive");
  const int x0 = std::max(bbox.x, 0), y0 = std::max(bbox.y, 0);
  const int x1 = std::min(bbox.x + bbox.width, image.width);
  const int y1 = std::min(bbox.y + bbox.height, image.height);
  if (bbox.empty() || x1 <= x0 || y1 <= y0) throw Error("bounding box does not intersect image");

  const PixelRect clip{x0, y0, x1 - x0, y1 - y0};
  const int side = std::max(clip.width, clip.height);
  CroppedImage out;
  out.mapping.origin_x = x0 - 0.5 * (side - clip.width);
  out.mapping.origin_y = y0 - 0.5 * (side - clip.height);
  out.mapping.scale = static_cast<double>(side) / out_size;
  out.mapping.size = out_size;
  out.mapping.bbox = clip;
  out.image = Image<float>(out_size, out_size, image.channels, 0.0f);

  const double lo_x = x0 - 0.5, hi_x = x1 - 0.5, lo_y = y0 - 0.5, hi_y = y1 - 0.5;
  // Content window restricted to the box so padding never picks up neighbours.
  Image<float> window(clip.width, clip.height, image.channels);
  for (int y = 0; y < clip.height; ++y)
    std::copy_n(image.pixel(x0, y0 + y), static_cast<size_t>(clip.width) * image.channels,
                window.pixel(0, y));

  for (int v = 0; v < out_size; ++v)
    for (int u = 0; u < out_size; ++u) {
      const Vec2 s = out.mapping.toSource(u, v);
      if (s.x() < lo_x || s.x() > hi_x || s.y() < lo_y || s.y() > hi_y) continue;
      sampleBilinear(window, s.x() - x0, s.y() - y0, out.image.pixel(u, v));
    }
  return out;
}

Image<float> maskToFloat(const MaskImage& mask) {
  Image<float> out(mask.width, mask.height, 1);
  for (size_t i = 0; i < mask.data.size(); ++i) out.data[i] = mask.data[i] ? 1.0f : 0.0f;
  return out;
}

FeatureMap uncropFeatures(const FeatureMap& crop_features, const CropMapping& mapping,
                          const MaskImage& mask) {
  FeatureMap out(mask.width, mask.height, crop_features.channels, 0.0f);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const Vec2 c = mapping.toCrop(x, y);
      sampleBilinear(crop_features, c.x(), c.y(), out.pixel(x, y));
    }
  return out;
}

void exportTemplateView(const TemplateView& view, const std::filesystem::path& dir,
                        const std::string& stem, double depth_scale_mm) {
  std::filesystem::create_directories(dir);
  writePngRgb(dir / (stem + "_rgb.png"), view.rgb);
  Image<std::uint16_t> raw(view.depth.width, view.depth.height, 1, 0);
  for (size_t i = 0; i < raw.data.size(); ++i) {
    const double v = std::round(view.depth.data[i] * 1000.0 / depth_scale_mm);
    raw.data[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
  }
  std::ostringstream name;
  name << stem << "_depth_x" << depth_scale_mm << "mm.png";
  writePngGray16(dir / name.str(), raw);
}

}  // namespace posekit
