// ppma - strictly increasing multi-indices of size p in {1..n}, their
// lexicographic enumeration, and the permutation signs used when a 1-form
// index is wedged into a (p-1)-index or a p-index is completed to the top
// form. Every sign convention in the library lives here.
#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "ppma/errors.hpp"

namespace ppma {

// 1-based, strictly increasing.
using MultiIndex = std::vector<int>;

inline bool is_valid_multiindex(const MultiIndex& I, int n) {
    int prev = 0;
    for (int v : I) {
        if (v <= prev || v > n) return false;
        prev = v;
    }
    return true;
}

// All size-p multi-indices in lexicographic order with rank lookup.
// Immutable after construction.
class IndexTable {
public:
    // Internal constructor: permits p = 0 (the single empty index), which the
    // degree-(p-1) side of wedge products needs when p = 1.
    static IndexTable build(int n, int p) {
        if (n < 1 || p < 0 || p > n)
            throw ParameterError("IndexTable: need 1 <= n and 0 <= p <= n");
        IndexTable t;
        t.n_ = n;
        t.p_ = p;
        MultiIndex cur(p);
        for (int i = 0; i < p; ++i) cur[i] = i + 1;
        while (true) {
            t.list_.push_back(cur);
            // next lexicographic combination
            int i = p - 1;
            while (i >= 0 && cur[i] == n - (p - 1 - i)) --i;
            if (i < 0) break;
            ++cur[i];
            for (int j = i + 1; j < p; ++j) cur[j] = cur[j - 1] + 1;
        }
        return t;
    }

    int n() const { return n_; }
    int p() const { return p_; }
    int size() const { return static_cast<int>(list_.size()); }
    const MultiIndex& operator[](int k) const { return list_[k]; }
    const std::vector<MultiIndex>& list() const { return list_; }

    // 0-based rank by binary search; lexicographic order of the list makes
    // std::vector comparison usable directly.
    int rank(const MultiIndex& I) const {
        auto it = std::lower_bound(list_.begin(), list_.end(), I);
        if (it == list_.end() || *it != I)
            throw ParameterError("IndexTable::rank: index not in table");
        return static_cast<int>(it - list_.begin());
    }

    bool contains(const MultiIndex& I) const {
        return std::binary_search(list_.begin(), list_.end(), I);
    }

private:
    int n_ = 0, p_ = 0;
    std::vector<MultiIndex> list_;
};

// Public construction with the desk-scale cap. p = 0 and p = n are rejected;
// those tables are degenerate for the (p,p) operator.
inline IndexTable build_index_table(int n, int p) {
    if (n < 1 || n > 8 || p < 1 || p > n)
        throw ParameterError("build_index_table: need 1 <= p <= n <= 8");
    return IndexTable::build(n, p);
}

// dz_k ^ dz_{I'} = sign * dz_{I' with k inserted}. The sign is the parity of
// moving dz_k past the entries of I' smaller than k.
inline std::pair<MultiIndex, int> insert_with_sign(const MultiIndex& Iprime, int k) {
    int below = 0;
    for (int v : Iprime) {
        if (v == k) throw ParameterError("insert_with_sign: k already present");
        if (v < k) ++below;
    }
    MultiIndex out;
    out.reserve(Iprime.size() + 1);
    out.insert(out.end(), Iprime.begin(), Iprime.begin() + below);
    out.push_back(k);
    out.insert(out.end(), Iprime.begin() + below, Iprime.end());
    return {std::move(out), (below % 2 == 0) ? +1 : -1};
}

inline MultiIndex complement(const MultiIndex& K, int n) {
    MultiIndex out;
    out.reserve(n - K.size());
    auto it = K.begin();
    for (int v = 1; v <= n; ++v) {
        if (it != K.end() && *it == v)
            ++it;
        else
            out.push_back(v);
    }
    return out;
}

// dz_K ^ dz_{K^c} = sign * dz_1 ^ ... ^ dz_n: parity of the concatenated
// sequence (K, K^c) as a permutation of 1..n, counted by inversions.
inline int complement_sign(const MultiIndex& K, int n) {
    if (!is_valid_multiindex(K, n))
        throw ParameterError("complement_sign: invalid multi-index");
    MultiIndex seq = K;
    MultiIndex kc = complement(K, n);
    seq.insert(seq.end(), kc.begin(), kc.end());
    int inversions = 0;
    for (std::size_t a = 0; a < seq.size(); ++a)
        for (std::size_t b = a + 1; b < seq.size(); ++b)
            if (seq[a] > seq[b]) ++inversions;
    return (inversions % 2 == 0) ? +1 : -1;
}

} // namespace ppma
