#include <posekit/kdtree.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace posekit {

namespace {

constexpr int kLeafSize = 12;

struct Candidate {
  double d2;
  int index;
};

// Max-heap ordering on (d2, index): top() is the current worst.
struct WorseFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.d2 < b.d2 || (a.d2 == b.d2 && a.index < b.index);
  }
};

bool better(const Candidate& a, const Candidate& b) { return WorseFirst{}(a, b); }

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  if (!points_.empty()) build(0, static_cast<int>(points_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident: keep as leaf

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];

  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, size_t k) const {
  std::vector<Neighbor> out;
  if (points_.empty() || k == 0) return out;
  k = std::min(k, points_.size());

  std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> heap;
  auto search = [&](auto&& self, int id) -> void {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        Candidate c{(points_[idx] - query).squaredNorm(), idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (better(c, heap.top())) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (heap.size() < k || diff * diff <= heap.top().d2) self(self, far);
  };
  search(search, 0);

  out.resize(heap.size());
  for (size_t i = out.size(); i-- > 0;) {
    out[i] = Neighbor{heap.top().index, std::sqrt(heap.top().d2)};
    heap.pop();
  }
  return out;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  if (points_.empty()) return {};
  Candidate best{std::numeric_limits<double>::infinity(), std::numeric_limits<int>::max()};
  auto search = [&](auto&& self, int id) -> void {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        Candidate c{(points_[idx] - query).squaredNorm(), idx};
        if (better(c, best)) best = c;
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (diff * diff <= best.d2) self(self, far);
  };
  search(search, 0);
  return Neighbor{best.index, std::sqrt(best.d2)};
}

std::vector<Neighbor> KdTree::radius(const Vec3& query, double r) const {
  std::vector<Candidate> found;
  if (points_.empty() || r < 0.0) return {};
  const double r2 = r * r;
  auto search = [&](auto&& self, int id) -> void {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 <= r2) found.push_back({d2, idx});
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (diff * diff <= r2) self(self, far);
  };
  search(search, 0);
  std::sort(found.begin(), found.end(), better);
  std::vector<Neighbor> out(found.size());
  for (size_t i = 0; i < found.size(); ++i) out[i] = {found[i].index, std::sqrt(found[i].d2)};
  return out;
}

}  // namespace posekit
