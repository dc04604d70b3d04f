#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace sigpath {

/// Word (i_1, ..., i_k) over the alphabet {1, ..., d}. Entries are 1-based.
using MultiIndex = std::vector<std::size_t>;

/// Truncated signature of a path in R^d, levels 0..order.
///
/// All levels live in one contiguous buffer. Level k holds d^k coefficients
/// ordered lexicographically by multi-index, so the coefficient of
/// (i_1, ..., i_k) sits at offset sum_j (i_j - 1) d^(k-j) within the level.
/// Level 0 is always the single value 1.
class Signature {
public:
    /// Trivial signature: 1 at level 0, zeros elsewhere.
    Signature(std::size_t dim, std::size_t order);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t order() const noexcept { return order_; }

    std::span<const double> level(std::size_t k) const;
    std::span<double> level(std::size_t k);

    /// Levels 0..order back to back.
    std::span<const double> data() const noexcept { return data_; }

    double coefficient(const MultiIndex& index) const;

    bool operator==(const Signature&) const = default;

private:
    std::size_t dim_;
    std::size_t order_;
    std::vector<std::size_t> offsets_;  // order + 2 entries
    std::vector<double> data_;
};

/// Continuous piecewise-linear path on [0, 1], stored as its vertices.
class Polyline {
public:
    /// Vertices row-major (size() rows of dim() values) on the uniform grid.
    Polyline(std::size_t dim, std::vector<double> vertices);
    /// Explicit vertex times; must be strictly increasing from 0 to 1.
    Polyline(std::size_t dim, std::vector<double> vertices, std::vector<double> times);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return times_.size(); }

    std::span<const double> vertex(std::size_t i) const;
    std::span<const double> vertices() const noexcept { return vertices_; }
    std::span<const double> times() const noexcept { return times_; }

    /// Position at time t in [0, 1]. Exact vertex values at vertex times.
    std::vector<double> at(double t) const;

private:
    std::size_t dim_;
    std::vector<double> vertices_;
    std::vector<double> times_;
};

/// Streaming signature of a piecewise-linear path: each call to push()
/// concatenates one linear segment onto everything pushed so far.
class SignatureBuilder {
public:
    SignatureBuilder(std::size_t dim, std::size_t order);

    /// Appends a linear segment with the given increment.
    void push(std::span<const double> delta);
    /// Appends the segment from `from` to `to`.
    void push_segment(std::span<const double> from, std::span<const double> to);

    const Signature& signature() const& noexcept { return sig_; }
    Signature signature() && noexcept { return std::move(sig_); }

private:
    Signature sig_;
    std::vector<double> delta_;
    std::vector<double> bufA_;
    std::vector<double> bufB_;
};

/// Signature of a single linear segment: delta[i_1] ... delta[i_k] / k!.
Signature segment_signature(std::span<const double> delta, std::size_t order);

/// Chen product: signature of the concatenation of the path of `a` followed
/// by the path of `b`. Throws std::invalid_argument on dim/order mismatch.
Signature chen_concat(const Signature& a, const Signature& b);

/// Signature of the whole polyline. A single vertex gives the trivial signature.
Signature polyline_signature(const Polyline& path, std::size_t order);

/// Signature of the restriction of `path` to [s, t], endpoints obtained by
/// linear interpolation. Requires 0 <= s <= t <= 1.
Signature signature_on_interval(const Polyline& path, double s, double t, std::size_t order);

/// Iterated integral over the simplex 0 <= u_1 < ... < u_k <= 1 approximated
/// by an ordered sum over a uniform grid with `steps` cells. Independent of
/// the Chen route; used as a test oracle.
double oracle_coefficient(const Polyline& path, const MultiIndex& index, std::size_t steps);

/// Number of coefficients in levels 1..order (plus one if include_constant).
/// Throws std::overflow_error if the count does not fit in size_t.
std::size_t feature_count(std::size_t dim, std::size_t order, bool include_constant = false);

/// Levels 1..order concatenated (level 0 prepended if include_constant).
std::vector<double> flatten(const Signature& sig, bool include_constant = false);

}  // namespace sigpath
