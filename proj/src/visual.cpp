#include <posekit/frzf.hpp>
#include <posekit/geometry.hpp>
#include <posekit/kdtree.hpp>
#include <posekit/visual.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace posekit {

void PatchFeatureGrid::validate() const {
  if (rows <= 0 || cols <= 0 || channels <= 0) throw Error("empty patch grid");
  if (patch_size <= 0 || crop_size != patch_size * std::max(rows, cols))
    throw Error("grid size does not match crop and patch size");
  if (values.size() != static_cast<size_t>(rows) * cols * channels)
    throw Error("patch grid value count mismatch");
  if (hasCoverage() && coverage.size() != static_cast<size_t>(rows) * cols)
    throw Error("patch grid coverage count mismatch");
  for (float v : values)
    if (!std::isfinite(v)) throw Error("patch grid contains non-finite values");
}

PatchFeatureGrid encodeRgbPatches(const RgbImage& crop, int grid_p, const Image<float>* coverage) {
  if (crop.width != crop.height) throw Error("crop must be square");
  if (grid_p <= 0 || crop.width % grid_p != 0) throw Error("grid does not divide the crop size");
  if (crop.channels < 3) throw Error("crop must have three colour channels");
  const int patch = crop.width / grid_p;

  PatchFeatureGrid grid;
  grid.rows = grid.cols = grid_p;
  grid.channels = 3;
  grid.crop_size = crop.width;
  grid.patch_size = patch;
  grid.values.assign(static_cast<size_t>(grid_p) * grid_p * 3, 0.0f);
  if (coverage) grid.coverage.assign(static_cast<size_t>(grid_p) * grid_p, 0.0f);

  const double inv = 1.0 / (static_cast<double>(patch) * patch);
  for (int r = 0; r < grid_p; ++r)
    for (int c = 0; c < grid_p; ++c) {
      double sum[3] = {0.0, 0.0, 0.0};
      double fg[3] = {0.0, 0.0, 0.0};
      double cov = 0.0;
      for (int y = r * patch; y < (r + 1) * patch; ++y)
        for (int x = c * patch; x < (c + 1) * patch; ++x) {
          const float* px = crop.pixel(x, y);
          const double w = coverage ? coverage->at(x, y) : 1.0;
          for (int k = 0; k < 3; ++k) {
            sum[k] += px[k];
            fg[k] += w * px[k];
          }
          cov += w;
        }
      // With coverage, the mean is taken over foreground only.
      float* cell = grid.cell(r, c);
      for (int k = 0; k < 3; ++k)
        cell[k] = static_cast<float>(coverage ? (cov > 0.0 ? fg[k] / cov : 0.0) : sum[k] * inv);
      if (coverage) grid.coverage[static_cast<size_t>(r) * grid_p + c] = static_cast<float>(cov * inv);
    }
  return grid;
}

PatchFeatureGrid RgbPatchEncoder::encode(const RgbImage& crop, const Image<float>* coverage) const {
  return encodeRgbPatches(crop, grid_p_, coverage);
}

PatchFeatureGrid loadPatchGrid(const std::filesystem::path& path, int crop_size) {
  const FeatureMatrix m = readFrzf(path);
  const int p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m.rows()))));
  if (p <= 0 || static_cast<Eigen::Index>(p) * p != m.rows())
    throw Error("patch grid file is not square: " + path.string());
  if (crop_size % p != 0) throw Error("grid does not divide the crop size");
  PatchFeatureGrid grid;
  grid.rows = grid.cols = p;
  grid.channels = static_cast<int>(m.cols());
  grid.crop_size = crop_size;
  grid.patch_size = crop_size / p;
  grid.values.assign(m.data(), m.data() + m.size());
  return grid;
}

FeatureMap patchesToPixels(const PatchFeatureGrid& grid, int out_h, int out_w) {
  FeatureMap out(out_w, out_h, grid.channels, 0.0f);
  for (int y = 0; y < out_h; ++y) {
    const double gy = std::clamp((y + 0.5) * grid.rows / out_h - 0.5, 0.0, grid.rows - 1.0);
    const int r0 = static_cast<int>(std::floor(gy));
    const int r1 = std::min(r0 + 1, grid.rows - 1);
    const double fy = gy - r0;
    for (int x = 0; x < out_w; ++x) {
      const double gx = std::clamp((x + 0.5) * grid.cols / out_w - 0.5, 0.0, grid.cols - 1.0);
      const int c0 = static_cast<int>(std::floor(gx));
      const int c1 = std::min(c0 + 1, grid.cols - 1);
      const double fx = gx - c0;
      const float* a = grid.cell(r0, c0);
      const float* b = grid.cell(r0, c1);
      const float* c = grid.cell(r1, c0);
      const float* d = grid.cell(r1, c1);
      float* px = out.pixel(x, y);
      for (int k = 0; k < grid.channels; ++k) {
        const double top = (1.0 - fx) * a[k] + fx * b[k];
        const double bottom = (1.0 - fx) * c[k] + fx * d[k];
        px[k] = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

namespace {

PcaModel fitPcaImpl(const Eigen::MatrixXd& samples, int v, bool clamp) {
  const Eigen::Index k = samples.rows(), c = samples.cols();
  if (v < 1 || k <= v || c < v) throw Error("PCA needs more samples than components and C >= v");
  PcaModel model;
  model.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(k - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd values = eig.eigenvalues();  // ascending
  const double top = std::max(values(c - 1), 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < c; ++i)
    if (values(i) > 1e-12 * top && values(i) > 0.0) ++rank;
  if (rank < v && clamp) v = rank;
  if (rank < v || v == 0) throw Error("insufficient rank: achieved " + std::to_string(rank));

  model.basis.resize(c, v);
  model.explained_variance.resize(v);
  for (int j = 0; j < v; ++j) {
    Eigen::VectorXd col = eig.eigenvectors().col(c - 1 - j);
    Eigen::Index arg;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;  // deterministic sign
    model.basis.col(j) = col;
    model.explained_variance(j) = values(c - 1 - j);
  }
  return model;
}

}  // namespace

PcaModel fitPca(const Eigen::MatrixXd& samples, int v) { return fitPcaImpl(samples, v, false); }

PcaModel fitPcaUpTo(const Eigen::MatrixXd& samples, int v) { return fitPcaImpl(samples, v, true); }

Eigen::VectorXd applyPca(const PcaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.inputDim()) throw Error("PCA input dimension mismatch");
  return model.basis.transpose() * (x - model.mean);
}

FeatureSet applyPca(const PcaModel& model, const FeatureSet& features) {
  if (features.dim() != model.inputDim()) throw Error("PCA input dimension mismatch");
  FeatureSet out(features.rows(), model.outputDim(), features.aligned_to);
  out.valid = features.valid;
  for (size_t i = 0; i < features.rows(); ++i) {
    if (!features.valid[i]) continue;
    const Eigen::VectorXd x = features.features.row(static_cast<Eigen::Index>(i)).cast<double>();
    out.features.row(static_cast<Eigen::Index>(i)) = applyPca(model, x).cast<float>().transpose();
  }
  return out;
}

FeatureSet backprojectQueryFeatures(const std::vector<TemplateView>& views,
                                    const std::vector<FeatureMap>& pixel_maps,
                                    const PointCloud& cloud_q, double accept_radius) {
  if (views.size() != pixel_maps.size()) throw Error("views and pixel maps are not aligned");
  if (cloud_q.empty()) throw Error("query cloud is empty");
  const int dim = pixel_maps.empty() ? 0 : pixel_maps.front().channels;
  const size_t n = cloud_q.size();
  const KdTree tree(cloud_q);

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), dim);
  std::vector<int> touched(n, 0);
  Eigen::MatrixXd view_sum(static_cast<Eigen::Index>(n), dim);
  std::vector<int> view_count(n);

  for (size_t r = 0; r < views.size(); ++r) {
    const TemplateView& view = views[r];
    const FeatureMap& map = pixel_maps[r];
    if (map.width != view.depth.width || map.height != view.depth.height || map.channels != dim)
      throw Error("pixel map does not match its view");
    view_sum.setZero();
    std::fill(view_count.begin(), view_count.end(), 0);

    const RigidTransform to_model = view.camera_pose.inverse();
    const BackprojectedCloud lifted = backprojectDepthIndexed(view.depth, view.mask, view.intrinsics);
    for (size_t i = 0; i < lifted.cloud.size(); ++i) {
      const Neighbor nb = tree.nearest(to_model.apply(lifted.cloud.points[i]));
      if (nb.distance > accept_radius) continue;
      const float* f = &map.data[static_cast<size_t>(lifted.pixels[i]) * dim];
      for (int k = 0; k < dim; ++k) view_sum(nb.index, k) += f[k];
      ++view_count[nb.index];
    }
    for (size_t i = 0; i < n; ++i) {
      if (view_count[i] == 0) continue;
      total.row(static_cast<Eigen::Index>(i)) += view_sum.row(static_cast<Eigen::Index>(i)) / view_count[i];
      ++touched[i];
    }
  }

  FeatureSet out(n, dim, cloudFingerprint(cloud_q));
  bool any = false;
  for (size_t i = 0; i < n; ++i) {
    if (touched[i] == 0) {
      out.valid[i] = 0;
      continue;
    }
    any = true;
    out.features.row(static_cast<Eigen::Index>(i)) =
        (total.row(static_cast<Eigen::Index>(i)) / touched[i]).cast<float>();
  }
  if (!any) throw Error("object invisible in all views");
  return out;
}

FeatureSet transferTargetFeatures(const FeatureMap& pixel_map, const MaskImage& mask,
                                  const DepthImage& depth, const PointCloud& cloud_t) {
  if (pixel_map.width != mask.width || pixel_map.height != mask.height ||
      depth.width != mask.width || depth.height != mask.height)
    throw Error("pixel map, mask and depth dimensions differ");
  std::vector<int> pixels;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) && depth.at(x, y) > 0.0) pixels.push_back(y * mask.width + x);
  if (pixels.size() != cloud_t.size()) throw Error("masked pixel count does not match cloud size");

  const int dim = pixel_map.channels;
  FeatureSet out(cloud_t.size(), dim, cloudFingerprint(cloud_t));
  for (size_t m = 0; m < pixels.size(); ++m) {
    const float* f = &pixel_map.data[static_cast<size_t>(pixels[m]) * dim];
    for (int k = 0; k < dim; ++k) out.features(static_cast<Eigen::Index>(m), k) = f[k];
  }
  return out;
}

EncodedCrop encodeCrop(const VisualEncoder& encoder, const RgbImage& rgb, const MaskImage& mask,
                       const PixelRect& bbox, int crop_size) {
  CroppedImage crop = cropToBbox(rgb, bbox, crop_size);
  const CroppedImage cov = cropToBbox(maskToFloat(mask), bbox, crop_size);
  return {encoder.encode(crop.image, &cov.image), crop.mapping};
}

PcaColorizer PcaColorizer::fit(const FeatureSet& reference) {
  std::vector<int> rows;
  for (size_t i = 0; i < reference.rows(); ++i)
    if (reference.valid[i]) rows.push_back(static_cast<int>(i));
  if (rows.empty()) throw Error("no valid feature rows to colorize");
  const Eigen::MatrixXd samples = reference.subset(rows).features.cast<double>();
  PcaColorizer out;
  out.pca = fitPcaUpTo(samples, std::min(3, reference.dim()));
  out.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  out.hi = -out.lo;
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const Eigen::VectorXd y = applyPca(out.pca, Eigen::VectorXd(samples.row(r).transpose()));
    for (int k = 0; k < 3; ++k) {
      const double v = k < y.size() ? y[k] : 0.0;
      out.lo[k] = std::min(out.lo[k], v);
      out.hi[k] = std::max(out.hi[k], v);
    }
  }
  return out;
}

std::vector<Vec3> PcaColorizer::colors(const FeatureSet& features) const {
  if (features.dim() != pca.inputDim()) throw Error("feature dimension does not match the colorizer");
  std::vector<Vec3> out(features.rows(), Vec3::Zero());
  for (size_t i = 0; i < features.rows(); ++i) {
    if (!features.valid[i]) continue;
    const Eigen::VectorXd x = features.features.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
    const Eigen::VectorXd y = applyPca(pca, x);
    for (int k = 0; k < 3; ++k) {
      const double v = k < y.size() ? y[k] : 0.0;
      const double span = hi[k] - lo[k];
      out[i][k] = span > 0.0 ? std::clamp((v - lo[k]) / span, 0.0, 1.0) : 0.5;
    }
  }
  return out;
}

}  // namespace posekit
