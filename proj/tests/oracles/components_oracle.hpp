#pragma once

// Union-find over thresholded edges: the expected retrieval is the union of
// the components that contain an entry point.

#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace aer::ref {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

struct RawEdge {
    std::size_t a;
    std::size_t b;
    double w;
};

inline std::set<std::size_t> component_union(std::size_t n, const std::vector<RawEdge>& edges, double threshold,
                                             const std::vector<std::size_t>& entries) {
    UnionFind uf(n);
    for (const auto& e : edges) {
        if (e.w >= threshold) uf.unite(e.a, e.b);
    }
    std::set<std::size_t> roots;
    for (std::size_t e : entries) roots.insert(uf.find(e));
    std::set<std::size_t> out;
    for (std::size_t v = 0; v < n; ++v) {
        if (roots.contains(uf.find(v))) out.insert(v);
    }
    return out;
}

}  // namespace aer::ref
