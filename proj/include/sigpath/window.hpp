#pragma once

#include <cstddef>
#include <vector>

#include "sigpath/signature.hpp"

namespace sigpath {

struct WindowSpec {
    std::size_t dyadic_order = 0;  // q: the path is split into 2^q windows
    std::size_t order = 2;         // truncation order of each window signature
};

/// Signatures on [(j-1) 2^-q, j 2^-q] for j = 1..2^q, in increasing j.
std::vector<Signature> dyadic_signatures(const Polyline& path, const WindowSpec& spec);

/// Flattened window signatures concatenated in window order.
std::vector<double> dyadic_features(const Polyline& path, const WindowSpec& spec,
                                    bool include_constant = false);

/// 2^q * feature_count(dim, order, include_constant).
std::size_t dyadic_feature_count(std::size_t dim, const WindowSpec& spec,
                                 bool include_constant = false);

}  // namespace sigpath
