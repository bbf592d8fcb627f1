#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "dsx/dom.hpp"

namespace dsx {

namespace {

std::vector<std::string> shape_set(const Page& page) {
  std::vector<std::string> shapes;
  shapes.reserve(page.size());
  for (const auto& n : page.nodes()) shapes.push_back(n.xpath.shape());
  std::sort(shapes.begin(), shapes.end());
  shapes.erase(std::unique(shapes.begin(), shapes.end()), shapes.end());
  return shapes;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

std::vector<double> shape_similarity_matrix(std::span<const Page> pages, Exec exec) {
  const std::size_t n = pages.size();
  std::vector<std::vector<std::string>> shapes(n);
  parallel_for(exec, n, [&](std::size_t i) { shapes[i] = shape_set(pages[i]); });
  std::vector<double> sim(n * n, 0.0);
  parallel_for(exec, n, [&](std::size_t i) {
    sim[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) sim[i * n + j] = jaccard(shapes[i], shapes[j]);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sim[j * n + i] = sim[i * n + j];
  return sim;
}

std::vector<std::vector<std::size_t>> cluster_templates(std::span<const Page> pages,
                                                        double sim_threshold, Exec exec) {
  if (!(sim_threshold > 0.0 && sim_threshold <= 1.0))
    throw std::invalid_argument("sim_threshold must be in (0, 1]");
  const std::size_t n = pages.size();
  if (n == 0) return {};

  // Visit pages in page_id order so the merge sequence does not depend on
  // input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pages[a].page_id() < pages[b].page_id();
  });
  const auto sim = shape_similarity_matrix(pages, exec);

  struct Edge {
    double sim;
    std::size_t a, b;  // ranks in `order`
  };
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double s = sim[order[a] * n + order[b]];
      if (s >= sim_threshold) edges.push_back({s, a, b});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) {
    const auto ra = root(e.a);
    const auto rb = root(e.b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::vector<std::vector<std::size_t>> clusters;
  std::vector<long> slot(n, -1);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const auto r = root(rank);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[r])].push_back(order[rank]);
  }
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end());
  return clusters;
}

}  // namespace dsx
