#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace stpca {

/// Returned by binomial() when C(n,k) does not fit in 64 bits.
inline constexpr std::uint64_t kBinomialSaturated =
    std::numeric_limits<std::uint64_t>::max();

/// Exact binomial coefficient C(n,k), saturating at 2^64-1.
///
/// The running product C(n-k+i, i) is an integer at every step and is
/// nondecreasing in i, so saturation can be detected once and kept.
inline std::uint64_t binomial(std::uint32_t n, std::uint32_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 c = 1;
    for (std::uint32_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > static_cast<unsigned __int128>(kBinomialSaturated)) {
            return kBinomialSaturated;
        }
    }
    return static_cast<std::uint64_t>(c);
}

/// ln C(n,k) via lgamma; valid for k <= n.
inline double log_binomial(std::uint32_t n, std::uint32_t k) {
    if (k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// First k-subset of [0,p) in lexicographic order: {0,1,...,k-1}.
inline std::vector<std::uint32_t> first_combination(std::uint32_t k) {
    std::vector<std::uint32_t> c(k);
    for (std::uint32_t i = 0; i < k; ++i) c[i] = i;
    return c;
}

/// Advance a sorted k-subset of [0,p) to its lexicographic successor.
/// Returns false (leaving c at the last combination) when none exists.
inline bool next_combination(std::vector<std::uint32_t>& c, std::uint32_t p) {
    const auto k = static_cast<std::uint32_t>(c.size());
    for (std::uint32_t i = k; i-- > 0;) {
        if (c[i] != p - k + i) {
            ++c[i];
            for (std::uint32_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

/// Lexicographic rank of a sorted k-subset of [0,p) among all C(p,k) subsets.
inline std::uint64_t combination_rank(std::span<const std::uint32_t> c,
                                      std::uint32_t p) {
    const auto k = static_cast<std::uint32_t>(c.size());
    std::uint64_t rank = 0;
    std::uint32_t prev = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
        for (std::uint32_t v = prev; v < c[i]; ++v) {
            rank += binomial(p - 1 - v, k - 1 - i);
        }
        prev = c[i] + 1;
    }
    return rank;
}

/// Inverse of combination_rank: the sorted k-subset of [0,p) with the given
/// lexicographic rank.
inline std::vector<std::uint32_t> combination_unrank(std::uint64_t rank,
                                                     std::uint32_t p,
                                                     std::uint32_t k) {
    std::vector<std::uint32_t> c(k);
    std::uint32_t v = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
        for (;; ++v) {
            if (v > p - k + i) {
                throw std::out_of_range("combination_unrank: rank exceeds C(p,k)");
            }
            const std::uint64_t block = binomial(p - 1 - v, k - 1 - i);
            if (rank < block) break;
            rank -= block;
        }
        c[i] = v++;
    }
    return c;
}

/// Log-pmf of the support-overlap law: for two independent uniform k-subsets
/// of [0,p), P[|S ∩ S'| = j] = C(k,j)·C(p-k,k-j) / C(p,k) (hypergeometric).
/// Returns -inf outside the attainable range max(0, 2k-p) <= j <= k.
inline double hypergeometric_overlap_log_pmf(std::uint32_t p, std::uint32_t k,
                                             std::uint32_t j) {
    if (j > k || k - j > p - k) return -std::numeric_limits<double>::infinity();
    return log_binomial(k, j) + log_binomial(p - k, k - j) - log_binomial(p, k);
}

}  // namespace stpca
