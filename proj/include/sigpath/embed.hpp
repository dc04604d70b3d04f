#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigpath/signature.hpp"

namespace sigpath {

/// Raw multichannel sample: d channels observed at the same l time points,
/// plus optional pen-stroke ids and an optional target.
class Stream {
public:
    /// Every channel must have the same length l >= 1. Strokes, when given,
    /// have length l, start at 1 and increase by 0 or 1 between samples.
    explicit Stream(std::vector<std::vector<double>> channels,
                    std::optional<std::vector<int>> strokes = std::nullopt,
                    std::optional<double> target = std::nullopt);

    std::size_t dim() const noexcept { return channels_.size(); }
    std::size_t length() const noexcept { return channels_.front().size(); }

    double value(std::size_t channel, std::size_t index) const { return channels_[channel][index]; }
    std::span<const double> channel(std::size_t c) const { return channels_[c]; }

    const std::optional<std::vector<int>>& strokes() const noexcept { return strokes_; }
    const std::optional<double>& target() const noexcept { return target_; }

    /// Number of distinct strokes (0 when no stroke data).
    std::size_t stroke_count() const noexcept;

private:
    std::vector<std::vector<double>> channels_;
    std::optional<std::vector<int>> strokes_;
    std::optional<double> target_;
};

enum class EmbeddingKind { Linear, Rectilinear, Time, LeadLag, StrokeV1, StrokeV2, StrokeV3 };

struct EmbeddingSpec {
    EmbeddingKind kind = EmbeddingKind::Linear;
    std::size_t lag = 1;  // LeadLag only

    bool operator==(const EmbeddingSpec&) const = default;
};

/// Parses linear | rectilinear | time | leadlag[:<m>] | stroke1 | stroke2 | stroke3.
EmbeddingSpec parse_embedding(std::string_view text);
std::string to_string(const EmbeddingSpec& spec);

/// Dimension of the embedded path for a d-channel stream.
std::size_t embedded_dim(const EmbeddingSpec& spec, std::size_t channels);

Polyline embed(const Stream& x, const EmbeddingSpec& spec);

Polyline embed_linear(const Stream& x);
/// Axis-parallel moves between samples, coordinate 1 first.
Polyline embed_rectilinear(const Stream& x);
/// Linear path with the uniform time grid appended as the last coordinate.
Polyline embed_time(const Stream& x);
/// Coordinates: base block, time, then lag blocks 1..m. Grid of l + m points;
/// block j at position i holds sample clamp(i - j, 0, l - 1).
Polyline embed_leadlag(const Stream& x, std::size_t lag);
/// Stroke id appended as a coordinate.
Polyline embed_stroke_v1(const Stream& x);
/// Stroke s at height 2s - 1, with two connector vertices at height 2s.
Polyline embed_stroke_v2(const Stream& x);
/// Extra coordinate rising from 2(s - 1) to 2s - 1 inside stroke s.
Polyline embed_stroke_v3(const Stream& x);

}  // namespace sigpath
