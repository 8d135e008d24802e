#include <posekit/geometry.hpp>
#include <posekit/kdtree.hpp>
#include <posekit/registration.hpp>
#include <posekit/rng.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <thread>

namespace posekit {

namespace {

using DenseF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

DenseF gatherRows(const FeatureSet& fs, const std::vector<int>& rows) {
  DenseF out(static_cast<Eigen::Index>(rows.size()), fs.dim());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = fs.features.row(rows[i]);
  return out;
}

double exactSquaredDistance(const float* a, const float* b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return s;
}

// For every row of `a`, the index of its nearest row in `b`. A float GEMM
// shortlists candidates; the shortlist is rescored exactly in double so the
// answer matches a linear scan, ties to the lower index.
std::vector<int> nearestRows(const DenseF& a, const DenseF& b, std::vector<double>& dist2) {
  const Eigen::Index na = a.rows(), nb = b.rows();
  const int dim = static_cast<int>(a.cols());
  std::vector<int> best(static_cast<size_t>(na), -1);
  dist2.assign(static_cast<size_t>(na), 0.0);
  const Eigen::VectorXf bn = b.rowwise().squaredNorm();
  const float bmax = nb > 0 ? bn.maxCoeff() : 0.0f;
  const DenseF bt = b.transpose();

  constexpr Eigen::Index kBlock = 256;
  Eigen::MatrixXf approx;
  for (Eigen::Index start = 0; start < na; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, na - start);
    approx.noalias() = -2.0f * (a.middleRows(start, rows) * bt);
    approx.rowwise() += bn.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = start + r;
      const float* ai = a.row(i).data();
      const float an = a.row(i).squaredNorm();
      const float lo = approx.row(r).minCoeff();
      const float tol = 8e-6f * static_cast<float>(dim + 4) * (an + bmax) + 1e-12f;
      double best_d = std::numeric_limits<double>::infinity();
      int best_j = -1;
      for (Eigen::Index j = 0; j < nb; ++j) {
        if (approx(r, j) > lo + tol) continue;
        const double d = exactSquaredDistance(ai, b.row(j).data(), dim);
        if (d < best_d) {
          best_d = d;
          best_j = static_cast<int>(j);
        }
      }
      best[static_cast<size_t>(i)] = best_j;
      dist2[static_cast<size_t>(i)] = best_d;
    }
  }
  return best;
}

std::vector<int> validRows(const FeatureSet& fs) {
  std::vector<int> rows;
  for (size_t i = 0; i < fs.rows(); ++i)
    if (fs.valid[i]) rows.push_back(static_cast<int>(i));
  return rows;
}

}  // namespace

std::vector<Correspondence> matchFeatures(const FeatureSet& fq, const FeatureSet& ft, bool mutual) {
  if (fq.dim() != ft.dim()) throw Error("feature dimensions differ");
  const std::vector<int> vq = validRows(fq), vt = validRows(ft);
  if (vq.empty() || vt.empty()) throw Error("no valid feature rows");
  const DenseF q = gatherRows(fq, vq), t = gatherRows(ft, vt);

  std::vector<double> d2;
  const std::vector<int> fwd = nearestRows(q, t, d2);
  std::vector<int> back;
  if (mutual) {
    std::vector<double> unused;
    back = nearestRows(t, q, unused);
  }

  std::vector<Correspondence> out;
  out.reserve(vq.size());
  for (size_t i = 0; i < vq.size(); ++i) {
    const int j = fwd[i];
    if (mutual && back[static_cast<size_t>(j)] != static_cast<int>(i)) continue;
    out.push_back({vq[i], vt[static_cast<size_t>(j)], std::sqrt(d2[i])});
  }
  return out;
}

void RansacParams::validate() const {
  if (iterations < 1) throw Error("RANSAC needs at least one iteration");
  if (!(inlier_threshold > 0.0) || !(edge_tolerance > 0.0) || !(min_triangle_height > 0.0))
    throw Error("RANSAC thresholds must be positive");
}

namespace {

struct Scored {
  RigidTransform transform;
  int inliers = -1;
  double rmse = std::numeric_limits<double>::infinity();
  int iteration = std::numeric_limits<int>::max();
};

bool ranksAbove(const Scored& a, const Scored& b) {
  if (a.inliers != b.inliers) return a.inliers > b.inliers;
  if (a.rmse != b.rmse) return a.rmse < b.rmse;
  return a.iteration < b.iteration;
}

double smallestHeight(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double area2 = (b - a).cross(c - a).norm();
  const double longest = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  return longest > 0.0 ? area2 / longest : 0.0;
}

// Inlier count and RMSE of `t`; gives up early (inliers = -1) once it can no
// longer reach `floor` inliers.
void scoreModel(const RigidTransform& t, const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                double thr2, int floor, int& inliers, double& rmse) {
  const int n = static_cast<int>(src.size());
  int count = 0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d2 = (t.rotation * src[i] + t.translation - dst[i]).squaredNorm();
    if (d2 <= thr2) {
      ++count;
      sum += d2;
    }
    if (count + (n - 1 - i) < floor) {
      inliers = -1;
      return;
    }
  }
  inliers = count;
  rmse = count > 0 ? std::sqrt(sum / count) : 0.0;
}

}  // namespace

PoseEstimate ransacRegister(const PointCloud& cloud_q, const PointCloud& cloud_t,
                            std::span<const Correspondence> matches, double diameter,
                            const RansacParams& params) {
  params.validate();
  if (matches.size() < 3) throw Error("registration failed");
  const double thr = params.inlier_threshold * diameter;
  const double thr2 = thr * thr;
  const double edge_tol = params.edge_tolerance * diameter;
  const double min_height = params.min_triangle_height * diameter;

  std::vector<Vec3> src(matches.size()), dst(matches.size());
  for (size_t i = 0; i < matches.size(); ++i) {
    src[i] = cloud_q.points.at(static_cast<size_t>(matches[i].query));
    dst[i] = cloud_t.points.at(static_cast<size_t>(matches[i].target));
  }
  const std::uint64_t m = matches.size();

  auto run = [&](int begin, int end) {
    Scored best;
    for (int it = begin; it < end; ++it) {
      SplitMix64 rng = streamFor(params.seed, static_cast<std::uint64_t>(it));
      const auto a = static_cast<size_t>(rng.below(m));
      auto b = static_cast<size_t>(rng.below(m - 1));
      if (b >= a) ++b;
      auto c = static_cast<size_t>(rng.below(m - 2));
      if (c >= std::min(a, b)) ++c;
      if (c >= std::max(a, b)) ++c;

      const size_t idx[3] = {a, b, c};
      bool consistent = true;
      for (int p = 0; p < 3 && consistent; ++p) {
        const size_t i = idx[p], j = idx[(p + 1) % 3];
        consistent = std::abs((src[i] - src[j]).norm() - (dst[i] - dst[j]).norm()) <= edge_tol;
      }
      if (!consistent) continue;
      if (smallestHeight(src[a], src[b], src[c]) < min_height ||
          smallestHeight(dst[a], dst[b], dst[c]) < min_height)
        continue;

      const Vec3 s3[3] = {src[a], src[b], src[c]};
      const Vec3 d3[3] = {dst[a], dst[b], dst[c]};
      RigidTransform model;
      try {
        model = estimateRigid(s3, d3);
      } catch (const Error&) {
        continue;
      }
      Scored cand;
      cand.transform = model;
      cand.iteration = it;
      scoreModel(model, src, dst, thr2, std::max(best.inliers, 0), cand.inliers, cand.rmse);
      if (cand.inliers >= 0 && ranksAbove(cand, best)) best = cand;
    }
    return best;
  };

  const int threads = std::max(1, std::min(params.threads, params.iterations));
  Scored best;
  if (threads == 1) {
    best = run(0, params.iterations);
  } else {
    std::vector<Scored> partial(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    const int chunk = (params.iterations + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) {
      const int begin = k * chunk, end = std::min(params.iterations, begin + chunk);
      pool.emplace_back([&, k, begin, end] { partial[static_cast<size_t>(k)] = run(begin, end); });
    }
    for (auto& th : pool) th.join();
    for (const auto& p : partial)
      if (ranksAbove(p, best)) best = p;
  }
  if (best.inliers < 0) throw Error("registration failed");

  // Re-fit on the winner's inliers, keeping it only when no inlier is lost.
  std::vector<Vec3> in_src, in_dst;
  for (size_t i = 0; i < src.size(); ++i)
    if ((best.transform.apply(src[i]) - dst[i]).squaredNorm() <= thr2) {
      in_src.push_back(src[i]);
      in_dst.push_back(dst[i]);
    }
  Scored final_model = best;
  if (in_src.size() >= 3) {
    try {
      Scored refit;
      refit.transform = estimateRigid(in_src, in_dst);
      scoreModel(refit.transform, src, dst, thr2, 0, refit.inliers, refit.rmse);
      if (refit.inliers >= best.inliers) final_model = refit;
    } catch (const Error&) {
    }
  }
  assert(final_model.inliers >= best.inliers);

  PoseEstimate out;
  out.transform = final_model.transform;
  out.inliers = final_model.inliers;
  out.rmse = final_model.rmse;
  out.fitness = static_cast<double>(final_model.inliers) / static_cast<double>(matches.size());
  return out;
}

PoseEstimate selectCandidate(std::span<const PoseEstimate> estimates) {
  if (estimates.empty()) throw Error("no pose estimates to select from");
  const PoseEstimate* best = &estimates[0];
  for (const auto& e : estimates.subspan(1)) {
    if (e.inliers != best->inliers) {
      if (e.inliers > best->inliers) best = &e;
    } else if (e.fitness != best->fitness) {
      if (e.fitness > best->fitness) best = &e;
    } else if (e.candidate < best->candidate) {
      best = &e;
    }
  }
  return *best;
}

namespace {

struct Pairing {
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  double rmse = 0.0;
};

Pairing pairUp(const PointCloud& q, const KdTree& tree, const RigidTransform& t, double corr_dist) {
  Pairing p;
  double sum = 0.0;
  for (const auto& x : q.points) {
    const Neighbor nb = tree.nearest(t.apply(x));
    if (nb.distance > corr_dist) continue;
    p.src.push_back(x);
    p.dst.push_back(tree.point(nb.index));
    sum += nb.distance * nb.distance;
  }
  p.rmse = p.src.empty() ? 0.0 : std::sqrt(sum / p.src.size());
  return p;
}

}  // namespace

IcpResult icpRefine(const PointCloud& cloud_q, const PointCloud& cloud_t, const RigidTransform& init,
                    int max_iter, double corr_dist, double eps) {
  if (cloud_q.empty() || cloud_t.empty()) throw Error("ICP on an empty cloud");
  IcpResult result;
  result.transform = init;
  const KdTree tree(cloud_t);

  Pairing current = pairUp(cloud_q, tree, init, corr_dist);
  if (current.src.size() < 3) {
    result.no_correspondences = true;
    return result;
  }
  result.rmse_history.push_back(current.rmse);

  for (int it = 0; it < max_iter; ++it) {
    RigidTransform next;
    try {
      next = estimateRigid(current.src, current.dst);
    } catch (const Error&) {
      break;
    }
    ++result.iterations;
    Pairing moved = pairUp(cloud_q, tree, next, corr_dist);
    if (moved.src.size() < 3 || moved.rmse > current.rmse) break;
    const double gain = current.rmse - moved.rmse;
    result.transform = next;
    current = std::move(moved);
    result.rmse_history.push_back(current.rmse);
    if (gain < eps) break;
  }
  return result;
}

}  // namespace posekit
