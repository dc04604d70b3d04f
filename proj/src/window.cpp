#include "sigpath/window.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sigpath {

namespace {

std::size_t window_count(std::size_t q) {
    if (q >= std::numeric_limits<std::size_t>::digits - 1)
        throw std::overflow_error("dyadic order " + std::to_string(q) + " is too large");
    return std::size_t{1} << q;
}

}  // namespace

std::vector<Signature> dyadic_signatures(const Polyline& path, const WindowSpec& spec) {
    const std::size_t windows = window_count(spec.dyadic_order);
    std::vector<Signature> out;
    out.reserve(windows);
    for (std::size_t j = 1; j <= windows; ++j) {
        // Powers of two: both endpoints are exact in binary floating point.
        const double s = std::ldexp(static_cast<double>(j - 1), -static_cast<int>(spec.dyadic_order));
        const double t = j == windows ? 1.0 : std::ldexp(static_cast<double>(j), -static_cast<int>(spec.dyadic_order));
        out.push_back(signature_on_interval(path, s, t, spec.order));
    }
    return out;
}

std::vector<double> dyadic_features(const Polyline& path, const WindowSpec& spec,
                                    bool include_constant) {
    std::vector<double> out;
    out.reserve(dyadic_feature_count(path.dim(), spec, include_constant));
    for (const auto& sig : dyadic_signatures(path, spec)) {
        const auto flat = flatten(sig, include_constant);
        out.insert(out.end(), flat.begin(), flat.end());
    }
    return out;
}

std::size_t dyadic_feature_count(std::size_t dim, const WindowSpec& spec, bool include_constant) {
    const std::size_t windows = window_count(spec.dyadic_order);
    const std::size_t per = feature_count(dim, spec.order, include_constant);
    if (per != 0 && windows > std::numeric_limits<std::size_t>::max() / per)
        throw std::overflow_error("dyadic feature count overflows size_t");
    return windows * per;
}

}  // namespace sigpath
