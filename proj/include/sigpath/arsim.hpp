#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigpath/embed.hpp"
#include "sigpath/learn.hpp"

namespace sigpath {

/// Z_t = phi_1 Z_{t-1} + ... + phi_p Z_{t-p} + eps_t with Z_t = 0 for t <= 0.
struct ARProcessSpec {
    std::vector<double> phi;
    double noise_sd = 1.0;
    std::size_t length = 100;  // observed points per series; one more is drawn as target
    std::uint64_t seed = 0;
    std::size_t burn_in = 0;   // discarded leading values
};

/// Throws std::invalid_argument when phi is empty, length is 0 or noise_sd < 0.
void validate(const ARProcessSpec& spec);

/// n one-channel series of spec.length points; target = the next value.
struct RegressionDataset {
    std::vector<Stream> series;
    std::vector<double> targets;
    std::uint64_t seed = 0;
};

RegressionDataset simulate_ar(const ARProcessSpec& spec, std::size_t n);

/// Seeds for the three independently simulated splits of one replicate.
struct SplitSeeds {
    std::uint64_t train;
    std::uint64_t validation;
    std::uint64_t test;
};

SplitSeeds split_seeds(std::uint64_t replicate_seed, std::uint64_t salt = 0);

struct ExperimentRow {
    std::string experiment;
    std::string embedding;
    std::size_t lag = 0;
    std::size_t order = 0;
    std::size_t n = 0;
    std::optional<std::size_t> replicate;  // empty for rows aggregated over replicates
    std::string metric;
    double value = 0.0;
    std::size_t n_features = 0;
    std::uint64_t seed = 0;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<std::string> notes;  // skipped configurations, defaults used
};

struct ExperimentOptions {
    std::size_t feature_cap = 100000;  // configurations above this are skipped
    double ridge_relative = 1e-6;      // ridge penalty relative to trace(Xc^T Xc) / p
    std::size_t jobs = 1;
};

/// Validation and test split sizes for n training series (n / 5, at least 1).
std::size_t holdout_size(std::size_t n);

/// Featurizes series as flattened signatures of order `order`.
FeatureMatrix signature_features(std::span<const Stream> series, const EmbeddingSpec& embedding,
                                 std::size_t order, std::size_t jobs = 1);

/// One row per (embedding, order): test L2 of a ridge fit on signature features.
ExperimentResult run_embedding_comparison(const ARProcessSpec& spec, std::size_t n,
                                          std::span<const EmbeddingSpec> embeddings,
                                          std::span<const std::size_t> orders, std::uint64_t seed,
                                          const ExperimentOptions& options = {});

/// Lead-lag embedding for each lag; the order minimizing validation L2 is
/// evaluated on the test split. One row per (lag, replicate).
ExperimentResult run_lag_sweep(const ARProcessSpec& spec, std::size_t n,
                               std::span<const std::size_t> lags,
                               std::span<const std::size_t> orders, std::size_t replicates,
                               std::uint64_t seed, const ExperimentOptions& options = {});

/// Lead-lag with lag 2 on the grid sample_sizes x orders x replicates. Emits
/// val_l2 and test_l2 per cell, selected_test_l2 per (size, replicate) and
/// one aggregated selected_order row per size (argmin of median val_l2).
ExperimentResult run_truncation_sweep(const ARProcessSpec& spec,
                                      std::span<const std::size_t> sample_sizes,
                                      std::span<const std::size_t> orders, std::size_t replicates,
                                      std::uint64_t seed, const ExperimentOptions& options = {});

/// CSV with header experiment,embedding,lag,order,n,replicate,metric,value,n_features,seed.
void write_csv(const ExperimentResult& result, std::ostream& out);

/// Median of the values of rows matching the predicate.
template <class Pred>
double median_of(const ExperimentResult& result, Pred&& pred);

double median(std::vector<double> values);

template <class Pred>
double median_of(const ExperimentResult& result, Pred&& pred) {
    std::vector<double> values;
    for (const auto& row : result.rows)
        if (pred(row))
            values.push_back(row.value);
    return median(std::move(values));
}

}  // namespace sigpath
