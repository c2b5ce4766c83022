#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "polymatch/complex_geometry.hpp"

namespace polymatch {

struct Box {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void extend(Complex p) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
};

struct KdQueryStats {
  std::size_t nodes_visited = 0;
  std::size_t points_tested = 0;
};

/// Static 2-d tree over complex points with caller-supplied region pruning.
/// Collections below kLinearThreshold are kept as one leaf and scanned.
class PlanarKdTree {
 public:
  struct Entry {
    Complex point;
    std::uint32_t id;
  };

  static constexpr std::size_t kLeafSize = 16;
  static constexpr std::size_t kLinearThreshold = 64;

  PlanarKdTree() = default;

  explicit PlanarKdTree(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (!entries_.empty()) build(0, entries_.size());
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Calls visit(entry) for every entry in a node whose box passes
  /// may_contain(box). may_contain must be conservative.
  template <class BoxTest, class Visit>
  void query(BoxTest&& may_contain, Visit&& visit, KdQueryStats* stats = nullptr) const {
    if (nodes_.empty()) return;
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      if (stats) ++stats->nodes_visited;
      if (!may_contain(node.box)) continue;
      if (node.left < 0) {
        for (std::uint32_t k = node.begin; k < node.end; ++k) {
          if (stats) ++stats->points_tested;
          visit(entries_[k]);
        }
        continue;
      }
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }

 private:
  struct Node {
    Box box;
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::size_t begin, std::size_t end) {
    Node node{{}, static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)};
    for (std::size_t k = begin; k < end; ++k) node.box.extend(entries_[k].point);
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::size_t count = end - begin;
    const bool single_leaf = entries_.size() < kLinearThreshold;
    if (single_leaf || count <= kLeafSize) return index;

    const bool split_x = (node.box.xmax - node.box.xmin) >= (node.box.ymax - node.box.ymin);
    const std::size_t mid = begin + count / 2;
    std::nth_element(entries_.begin() + static_cast<std::ptrdiff_t>(begin),
                     entries_.begin() + static_cast<std::ptrdiff_t>(mid),
                     entries_.begin() + static_cast<std::ptrdiff_t>(end), [split_x](const Entry& a, const Entry& b) {
                       const double ka = split_x ? a.point.real() : a.point.imag();
                       const double kb = split_x ? b.point.real() : b.point.imag();
                       if (ka != kb) return ka < kb;
                       return a.id < b.id;
                     });
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
};

}  // namespace polymatch
