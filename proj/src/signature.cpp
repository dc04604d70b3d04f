#include "sigpath/signature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sigpath {

namespace {

std::size_t checked_pow(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && out > std::numeric_limits<std::size_t>::max() / base)
            throw std::overflow_error("signature level size overflows size_t");
        out *= base;
    }
    return out;
}

// Index of the segment [times[i], times[i+1]] containing t.
std::size_t locate(std::span<const double> times, double t) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return std::min(i, times.size() - 2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Signature

Signature::Signature(std::size_t dim, std::size_t order) : dim_(dim), order_(order) {
    if (dim == 0)
        throw std::invalid_argument("signature dimension must be positive");
    offsets_.resize(order + 2);
    offsets_[0] = 0;
    std::size_t width = 1;
    for (std::size_t k = 0; k <= order; ++k) {
        offsets_[k + 1] = offsets_[k] + width;
        if (k < order) {
            if (width > std::numeric_limits<std::size_t>::max() / dim)
                throw std::overflow_error("signature level size overflows size_t");
            width *= dim;
        }
    }
    data_.assign(offsets_.back(), 0.0);
    data_[0] = 1.0;
}

std::span<const double> Signature::level(std::size_t k) const {
    if (k > order_)
        throw std::out_of_range("signature level " + std::to_string(k) + " beyond order " +
                                std::to_string(order_));
    return std::span<const double>(data_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

std::span<double> Signature::level(std::size_t k) {
    if (k > order_)
        throw std::out_of_range("signature level " + std::to_string(k) + " beyond order " +
                                std::to_string(order_));
    return std::span<double>(data_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

double Signature::coefficient(const MultiIndex& index) const {
    std::size_t flat = 0;
    for (std::size_t letter : index) {
        if (letter < 1 || letter > dim_)
            throw std::out_of_range("multi-index entry " + std::to_string(letter) +
                                    " outside 1.." + std::to_string(dim_));
        flat = flat * dim_ + (letter - 1);
    }
    return level(index.size())[flat];
}

// ---------------------------------------------------------------------------
// Polyline

Polyline::Polyline(std::size_t dim, std::vector<double> vertices)
    : dim_(dim), vertices_(std::move(vertices)) {
    if (dim_ == 0)
        throw std::invalid_argument("polyline dimension must be positive");
    if (vertices_.empty() || vertices_.size() % dim_ != 0)
        throw std::invalid_argument("polyline needs at least one vertex of dimension " +
                                    std::to_string(dim_));
    const std::size_t n = vertices_.size() / dim_;
    times_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        times_[i] = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    if (n > 1)
        times_.back() = 1.0;
}

Polyline::Polyline(std::size_t dim, std::vector<double> vertices, std::vector<double> times)
    : dim_(dim), vertices_(std::move(vertices)), times_(std::move(times)) {
    if (dim_ == 0)
        throw std::invalid_argument("polyline dimension must be positive");
    if (times_.empty() || vertices_.size() != times_.size() * dim_)
        throw std::invalid_argument("polyline vertex rows must match the number of times");
    if (times_.front() != 0.0 || (times_.size() > 1 && times_.back() != 1.0))
        throw std::invalid_argument("polyline times must start at 0 and end at 1");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("polyline times must be strictly increasing");
}

std::span<const double> Polyline::vertex(std::size_t i) const {
    return std::span<const double>(vertices_).subspan(i * dim_, dim_);
}

std::vector<double> Polyline::at(double t) const {
    if (size() == 1)
        return {vertices_.begin(), vertices_.end()};
    const std::size_t i = locate(times_, t);
    if (t == times_[i])
        return {vertex(i).begin(), vertex(i).end()};
    if (t == times_[i + 1])
        return {vertex(i + 1).begin(), vertex(i + 1).end()};
    const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    auto a = vertex(i);
    auto b = vertex(i + 1);
    std::vector<double> out(dim_);
    for (std::size_t c = 0; c < dim_; ++c)
        out[c] = (1.0 - w) * a[c] + w * b[c];
    return out;
}

// ---------------------------------------------------------------------------
// SignatureBuilder

SignatureBuilder::SignatureBuilder(std::size_t dim, std::size_t order)
    : sig_(dim, order), delta_(dim) {
    const std::size_t scratch = order >= 2 ? checked_pow(dim, order - 1) : 1;
    bufA_.resize(scratch);
    bufB_.resize(scratch);
}

// Right-multiplies the running signature by exp(delta), level by level from
// the top so lower levels are still the old values when they are read:
//   new_k = sum_j old_j (x) delta^(k-j) / (k-j)!
// evaluated Horner style as (((delta/k + old_1) (x) delta/(k-1) + old_2) ...).
void SignatureBuilder::push(std::span<const double> delta) {
    const std::size_t d = sig_.dim();
    const std::size_t order = sig_.order();
    if (delta.size() != d)
        throw std::invalid_argument("segment increment has dimension " +
                                    std::to_string(delta.size()) + ", expected " +
                                    std::to_string(d));
    for (std::size_t k = order; k >= 1; --k) {
        auto target = sig_.level(k);
        if (k == 1) {
            for (std::size_t i = 0; i < d; ++i)
                target[i] += delta[i];
            break;
        }
        double* cur = bufA_.data();
        double* nxt = bufB_.data();
        const double first = 1.0 / static_cast<double>(k);
        for (std::size_t i = 0; i < d; ++i)
            cur[i] = delta[i] * first;
        std::size_t len = d;
        for (std::size_t j = 1; j + 1 < k; ++j) {
            const auto lower = sig_.level(j);
            const double c = 1.0 / static_cast<double>(k - j);
            for (std::size_t a = 0; a < len; ++a) {
                const double v = (cur[a] + lower[a]) * c;
                double* row = nxt + a * d;
                for (std::size_t i = 0; i < d; ++i)
                    row[i] = v * delta[i];
            }
            std::swap(cur, nxt);
            len *= d;
        }
        const auto lower = sig_.level(k - 1);
        for (std::size_t a = 0; a < len; ++a) {
            const double v = cur[a] + lower[a];
            double* row = target.data() + a * d;
            for (std::size_t i = 0; i < d; ++i)
                row[i] += v * delta[i];
        }
    }
}

void SignatureBuilder::push_segment(std::span<const double> from, std::span<const double> to) {
    for (std::size_t c = 0; c < delta_.size(); ++c)
        delta_[c] = to[c] - from[c];
    push(delta_);
}

// ---------------------------------------------------------------------------
// Free functions

Signature segment_signature(std::span<const double> delta, std::size_t order) {
    if (delta.empty())
        throw std::invalid_argument("segment increment must have positive dimension");
    const std::size_t d = delta.size();
    Signature sig(d, order);
    for (std::size_t k = 1; k <= order; ++k) {
        const auto prev = std::as_const(sig).level(k - 1);
        auto cur = sig.level(k);
        const double c = 1.0 / static_cast<double>(k);
        for (std::size_t a = 0; a < prev.size(); ++a)
            for (std::size_t i = 0; i < d; ++i)
                cur[a * d + i] = prev[a] * delta[i] * c;
    }
    return sig;
}

Signature chen_concat(const Signature& a, const Signature& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("chen_concat: dimension mismatch (" + std::to_string(a.dim()) +
                                    " vs " + std::to_string(b.dim()) + ")");
    if (a.order() != b.order())
        throw std::invalid_argument("chen_concat: order mismatch (" + std::to_string(a.order()) +
                                    " vs " + std::to_string(b.order()) + ")");
    Signature out(a.dim(), a.order());
    out.level(0)[0] = a.level(0)[0] * b.level(0)[0];
    for (std::size_t k = 1; k <= a.order(); ++k) {
        auto dst = out.level(k);
        for (std::size_t l = 0; l <= k; ++l) {
            const auto left = a.level(l);
            const auto right = b.level(k - l);
            const std::size_t stride = right.size();
            for (std::size_t i = 0; i < left.size(); ++i) {
                const double x = left[i];
                if (x == 0.0)
                    continue;
                double* row = dst.data() + i * stride;
                for (std::size_t j = 0; j < stride; ++j)
                    row[j] += x * right[j];
            }
        }
    }
    return out;
}

Signature polyline_signature(const Polyline& path, std::size_t order) {
    SignatureBuilder builder(path.dim(), order);
    for (std::size_t i = 1; i < path.size(); ++i)
        builder.push_segment(path.vertex(i - 1), path.vertex(i));
    return std::move(builder).signature();
}

Signature signature_on_interval(const Polyline& path, double s, double t, std::size_t order) {
    if (!(s >= 0.0 && t <= 1.0 && s <= t))
        throw std::invalid_argument("signature_on_interval: need 0 <= s <= t <= 1, got [" +
                                    std::to_string(s) + ", " + std::to_string(t) + "]");
    SignatureBuilder builder(path.dim(), order);
    if (s == t || path.size() == 1)
        return std::move(builder).signature();

    const auto times = path.times();
    std::vector<double> start = path.at(s);
    // First vertex strictly after s, last vertex strictly before t.
    auto first = std::upper_bound(times.begin(), times.end(), s) - times.begin();
    auto last = std::lower_bound(times.begin(), times.end(), t) - times.begin();
    std::span<const double> prev = start;
    for (auto i = first; i < last; ++i) {
        auto v = path.vertex(static_cast<std::size_t>(i));
        builder.push_segment(prev, v);
        prev = v;
    }
    std::vector<double> end = path.at(t);
    builder.push_segment(prev, end);
    return std::move(builder).signature();
}

double oracle_coefficient(const Polyline& path, const MultiIndex& index, std::size_t steps) {
    const std::size_t k = index.size();
    for (std::size_t letter : index)
        if (letter < 1 || letter > path.dim())
            throw std::out_of_range("oracle_coefficient: multi-index entry " +
                                    std::to_string(letter) + " outside 1.." +
                                    std::to_string(path.dim()));
    if (k == 0)
        return 1.0;
    if (steps < k)
        throw std::invalid_argument("oracle_coefficient: steps must be at least the index length");

    // partial[j] = sum over n_1 < ... < n_j of the first j increments seen so far.
    std::vector<double> partial(k + 1, 0.0);
    partial[0] = 1.0;
    std::vector<double> left = path.at(0.0);
    for (std::size_t n = 0; n < steps; ++n) {
        const double u = n + 1 == steps ? 1.0 : static_cast<double>(n + 1) / steps;
        std::vector<double> right = path.at(u);
        for (std::size_t j = k; j >= 1; --j) {
            const std::size_t c = index[j - 1] - 1;
            partial[j] += partial[j - 1] * (right[c] - left[c]);
        }
        left = std::move(right);
    }
    return partial[k];
}

std::size_t feature_count(std::size_t dim, std::size_t order, bool include_constant) {
    if (dim == 0)
        throw std::invalid_argument("feature_count: dimension must be positive");
    std::size_t total = include_constant ? 1 : 0;
    for (std::size_t k = 1; k <= order; ++k) {
        const std::size_t width = checked_pow(dim, k);
        if (total > std::numeric_limits<std::size_t>::max() - width)
            throw std::overflow_error("feature count overflows size_t");
        total += width;
    }
    return total;
}

std::vector<double> flatten(const Signature& sig, bool include_constant) {
    const auto all = sig.data();
    const std::size_t skip = include_constant ? 0 : 1;
    return {all.begin() + static_cast<std::ptrdiff_t>(skip), all.end()};
}

}  // namespace sigpath
