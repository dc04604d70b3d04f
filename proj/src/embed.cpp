#include "sigpath/embed.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace sigpath {

Stream::Stream(std::vector<std::vector<double>> channels, std::optional<std::vector<int>> strokes,
               std::optional<double> target)
    : channels_(std::move(channels)), strokes_(std::move(strokes)), target_(target) {
    if (channels_.empty())
        throw std::invalid_argument("stream needs at least one channel");
    const std::size_t len = channels_.front().size();
    if (len == 0)
        throw std::invalid_argument("stream channels must hold at least one sample");
    for (const auto& ch : channels_)
        if (ch.size() != len)
            throw std::invalid_argument("stream channels must all have the same length");
    if (strokes_) {
        const auto& s = *strokes_;
        if (s.size() != len)
            throw std::invalid_argument("stroke array length " + std::to_string(s.size()) +
                                        " does not match stream length " + std::to_string(len));
        if (s.front() != 1)
            throw std::invalid_argument("stroke ids must start at 1");
        for (std::size_t j = 1; j < s.size(); ++j)
            if (s[j] != s[j - 1] && s[j] != s[j - 1] + 1)
                throw std::invalid_argument("stroke ids must be non-decreasing with unit steps");
    }
}

std::size_t Stream::stroke_count() const noexcept {
    return strokes_ ? static_cast<std::size_t>(strokes_->back()) : 0;
}

EmbeddingSpec parse_embedding(std::string_view text) {
    if (text == "linear")
        return {EmbeddingKind::Linear};
    if (text == "rectilinear")
        return {EmbeddingKind::Rectilinear};
    if (text == "time")
        return {EmbeddingKind::Time};
    if (text == "stroke1")
        return {EmbeddingKind::StrokeV1};
    if (text == "stroke2")
        return {EmbeddingKind::StrokeV2};
    if (text == "stroke3")
        return {EmbeddingKind::StrokeV3};
    if (text == "leadlag")
        return {EmbeddingKind::LeadLag, 1};
    constexpr std::string_view prefix = "leadlag:";
    if (text.starts_with(prefix)) {
        auto digits = text.substr(prefix.size());
        std::size_t lag = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), lag);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || lag == 0)
            throw std::invalid_argument("invalid lead-lag lag in embedding '" + std::string(text) +
                                        "'");
        return {EmbeddingKind::LeadLag, lag};
    }
    throw std::invalid_argument("unknown embedding '" + std::string(text) +
                                "' (expected linear, rectilinear, time, leadlag:<m>, stroke1, "
                                "stroke2 or stroke3)");
}

std::string to_string(const EmbeddingSpec& spec) {
    switch (spec.kind) {
    case EmbeddingKind::Linear: return "linear";
    case EmbeddingKind::Rectilinear: return "rectilinear";
    case EmbeddingKind::Time: return "time";
    case EmbeddingKind::LeadLag: return "leadlag:" + std::to_string(spec.lag);
    case EmbeddingKind::StrokeV1: return "stroke1";
    case EmbeddingKind::StrokeV2: return "stroke2";
    case EmbeddingKind::StrokeV3: return "stroke3";
    }
    return "unknown";
}

std::size_t embedded_dim(const EmbeddingSpec& spec, std::size_t channels) {
    switch (spec.kind) {
    case EmbeddingKind::Linear:
    case EmbeddingKind::Rectilinear: return channels;
    case EmbeddingKind::LeadLag: return channels * (spec.lag + 1) + 1;
    case EmbeddingKind::Time:
    case EmbeddingKind::StrokeV1:
    case EmbeddingKind::StrokeV2:
    case EmbeddingKind::StrokeV3: return channels + 1;
    }
    return channels;
}

namespace {

double grid(std::size_t i, std::size_t n) {
    if (n <= 1)
        return 0.0;
    return i + 1 == n ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
}

const std::vector<int>& require_strokes(const Stream& x) {
    if (!x.strokes())
        throw std::invalid_argument("stroke embeddings need stroke annotations on the stream");
    return *x.strokes();
}

// Sample columns with one extra coordinate per vertex.
Polyline with_extra(const Stream& x, const std::vector<double>& extra) {
    const std::size_t d = x.dim();
    const std::size_t len = x.length();
    std::vector<double> v;
    v.reserve(len * (d + 1));
    for (std::size_t j = 0; j < len; ++j) {
        for (std::size_t c = 0; c < d; ++c)
            v.push_back(x.value(c, j));
        v.push_back(extra[j]);
    }
    return Polyline(d + 1, std::move(v));
}

}  // namespace

Polyline embed_linear(const Stream& x) {
    const std::size_t d = x.dim();
    const std::size_t len = x.length();
    std::vector<double> v;
    v.reserve(len * d);
    for (std::size_t j = 0; j < len; ++j)
        for (std::size_t c = 0; c < d; ++c)
            v.push_back(x.value(c, j));
    return Polyline(d, std::move(v));
}

Polyline embed_rectilinear(const Stream& x) {
    const std::size_t d = x.dim();
    const std::size_t len = x.length();
    std::vector<double> v;
    v.reserve((1 + d * (len - 1)) * d);
    std::vector<double> point(d);
    for (std::size_t c = 0; c < d; ++c)
        point[c] = x.value(c, 0);
    v.insert(v.end(), point.begin(), point.end());
    for (std::size_t j = 1; j < len; ++j) {
        for (std::size_t axis = 0; axis < d; ++axis) {
            point[axis] = x.value(axis, j);
            v.insert(v.end(), point.begin(), point.end());
        }
    }
    return Polyline(d, std::move(v));
}

Polyline embed_time(const Stream& x) {
    const std::size_t len = x.length();
    std::vector<double> t(len);
    for (std::size_t j = 0; j < len; ++j)
        t[j] = grid(j, len);
    return with_extra(x, t);
}

Polyline embed_leadlag(const Stream& x, std::size_t lag) {
    if (lag == 0)
        throw std::invalid_argument("lead-lag lag must be at least 1");
    const std::size_t d = x.dim();
    const std::size_t len = x.length();
    const std::size_t n = len + lag;
    const std::size_t out_dim = d * (lag + 1) + 1;
    std::vector<double> v;
    v.reserve(n * out_dim);
    auto sample = [&](std::size_t i, std::size_t delay) -> std::size_t {
        return i < delay ? 0 : std::min(i - delay, len - 1);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = sample(i, 0);
        for (std::size_t c = 0; c < d; ++c)
            v.push_back(x.value(c, base));
        v.push_back(grid(i, n));
        for (std::size_t block = 1; block <= lag; ++block) {
            const std::size_t j = sample(i, block);
            for (std::size_t c = 0; c < d; ++c)
                v.push_back(x.value(c, j));
        }
    }
    return Polyline(out_dim, std::move(v));
}

Polyline embed_stroke_v1(const Stream& x) {
    const auto& strokes = require_strokes(x);
    std::vector<double> extra(strokes.begin(), strokes.end());
    return with_extra(x, extra);
}

Polyline embed_stroke_v2(const Stream& x) {
    const auto& strokes = require_strokes(x);
    const std::size_t d = x.dim();
    const std::size_t len = x.length();
    std::vector<double> v;
    v.reserve((len + 2 * (x.stroke_count() - 1)) * (d + 1));
    auto emit = [&](std::size_t j, double height) {
        for (std::size_t c = 0; c < d; ++c)
            v.push_back(x.value(c, j));
        v.push_back(height);
    };
    for (std::size_t j = 0; j < len; ++j) {
        const int s = strokes[j];
        if (j > 0 && s != strokes[j - 1]) {
            const double between = 2.0 * strokes[j - 1];
            emit(j - 1, between);
            emit(j, between);
        }
        emit(j, 2.0 * s - 1.0);
    }
    return Polyline(d + 1, std::move(v));
}

Polyline embed_stroke_v3(const Stream& x) {
    const auto& strokes = require_strokes(x);
    const std::size_t len = x.length();
    std::vector<double> extra(len);
    std::size_t begin = 0;
    while (begin < len) {
        std::size_t end = begin;
        while (end < len && strokes[end] == strokes[begin])
            ++end;
        const std::size_t count = end - begin;
        const double low = 2.0 * (strokes[begin] - 1);
        for (std::size_t r = 0; r < count; ++r)
            extra[begin + r] =
                count == 1 ? low : low + static_cast<double>(r) / static_cast<double>(count - 1);
        begin = end;
    }
    return with_extra(x, extra);
}

Polyline embed(const Stream& x, const EmbeddingSpec& spec) {
    switch (spec.kind) {
    case EmbeddingKind::Linear: return embed_linear(x);
    case EmbeddingKind::Rectilinear: return embed_rectilinear(x);
    case EmbeddingKind::Time: return embed_time(x);
    case EmbeddingKind::LeadLag: return embed_leadlag(x, spec.lag);
    case EmbeddingKind::StrokeV1: return embed_stroke_v1(x);
    case EmbeddingKind::StrokeV2: return embed_stroke_v2(x);
    case EmbeddingKind::StrokeV3: return embed_stroke_v3(x);
    }
    throw std::invalid_argument("unknown embedding kind");
}

}  // namespace sigpath
