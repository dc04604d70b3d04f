#include "sigpath/arsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include "sigpath/parallel.hpp"
#include "sigpath/signature.hpp"

namespace sigpath {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::size_t> sorted_orders(std::span<const std::size_t> orders) {
    std::vector<std::size_t> out(orders.begin(), orders.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty())
        throw std::invalid_argument("experiment needs at least one truncation order");
    if (out.front() == 0)
        throw std::invalid_argument("experiment truncation orders must be at least 1");
    return out;
}

// Validation/test errors of ridge fits for every order that fits the cap.
struct OrderScores {
    std::vector<std::size_t> orders;
    std::vector<std::size_t> counts;
    std::vector<double> validation;  // empty when no validation split was given
    std::vector<double> test;
};

OrderScores score_orders(const RegressionDataset& train, const RegressionDataset* validation,
                         const RegressionDataset& test, const EmbeddingSpec& embedding,
                         const std::vector<std::size_t>& orders, const ExperimentOptions& options,
                         std::vector<std::string>& notes) {
    OrderScores scores;
    const std::size_t dim = embedded_dim(embedding, 1);
    for (std::size_t k : orders) {
        const std::size_t count = feature_count(dim, k);
        if (count > options.feature_cap) {
            notes.push_back("skipped " + to_string(embedding) + " order " + std::to_string(k) +
                            ": " + std::to_string(count) + " features exceed cap " +
                            std::to_string(options.feature_cap));
            continue;
        }
        scores.orders.push_back(k);
        scores.counts.push_back(count);
    }
    if (scores.orders.empty())
        return scores;

    const std::size_t top = scores.orders.back();
    FeatureMatrix xtrain = signature_features(train.series, embedding, top, options.jobs);
    FeatureMatrix xtest = signature_features(test.series, embedding, top, options.jobs);
    FeatureMatrix xval;
    if (validation)
        xval = signature_features(validation->series, embedding, top, options.jobs);

    const Normalizer norm = Normalizer::fit(xtrain);
    norm.apply_inplace(xtrain);
    norm.apply_inplace(xtest);
    std::vector<const FeatureMatrix*> evals{&xtest};
    if (validation) {
        norm.apply_inplace(xval);
        evals.push_back(&xval);
    }

    const auto preds = ridge_prefix_predict(xtrain, to_vector(train.targets), evals,
                                            scores.counts, options.ridge_relative);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Vector& pt = preds[i][0];
        scores.test.push_back(l2_error(test.targets, std::span<const double>(pt.data(), pt.size())));
        if (validation) {
            const Vector& pv = preds[i][1];
            scores.validation.push_back(
                l2_error(validation->targets, std::span<const double>(pv.data(), pv.size())));
        }
    }
    return scores;
}

std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

struct Splits {
    RegressionDataset train, validation, test;
};

Splits simulate_splits(ARProcessSpec spec, std::size_t n, const SplitSeeds& seeds) {
    Splits s;
    spec.seed = seeds.train;
    s.train = simulate_ar(spec, n);
    spec.seed = seeds.validation;
    s.validation = simulate_ar(spec, holdout_size(n));
    spec.seed = seeds.test;
    s.test = simulate_ar(spec, holdout_size(n));
    return s;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

void validate(const ARProcessSpec& spec) {
    if (spec.phi.empty())
        throw std::invalid_argument("AR process needs at least one coefficient");
    if (spec.length == 0)
        throw std::invalid_argument("AR series length must be at least 1");
    if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd))
        throw std::invalid_argument("AR noise standard deviation must be non-negative");
    for (double c : spec.phi)
        if (!std::isfinite(c))
            throw std::invalid_argument("AR coefficients must be finite");
}

RegressionDataset simulate_ar(const ARProcessSpec& spec, std::size_t n) {
    validate(spec);
    const std::size_t p = spec.phi.size();
    const std::size_t total = spec.burn_in + spec.length + 1;
    std::mt19937_64 gen(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sd > 0.0 ? spec.noise_sd : 1.0);

    RegressionDataset out;
    out.seed = spec.seed;
    out.series.reserve(n);
    out.targets.reserve(n);
    std::vector<double> z(total);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t t = 0; t < total; ++t) {
            double v = spec.noise_sd > 0.0 ? noise(gen) : 0.0;
            for (std::size_t i = 1; i <= p && i <= t; ++i)
                v += spec.phi[i - 1] * z[t - i];
            z[t] = v;
        }
        std::vector<double> observed(z.begin() + static_cast<std::ptrdiff_t>(spec.burn_in),
                                     z.end() - 1);
        out.targets.push_back(z.back());
        out.series.emplace_back(std::vector<std::vector<double>>{std::move(observed)}, std::nullopt,
                                z.back());
    }
    return out;
}

SplitSeeds split_seeds(std::uint64_t replicate_seed, std::uint64_t salt) {
    const std::uint64_t base = splitmix64(replicate_seed ^ splitmix64(salt + 0x51ed270b7a9d1c3fULL));
    return {splitmix64(base + 1), splitmix64(base + 2), splitmix64(base + 3)};
}

std::size_t holdout_size(std::size_t n) { return std::max<std::size_t>(1, n / 5); }

FeatureMatrix signature_features(std::span<const Stream> series, const EmbeddingSpec& embedding,
                                 std::size_t order, std::size_t jobs) {
    if (series.empty())
        return FeatureMatrix(0, 0);
    const std::size_t dim = embedded_dim(embedding, series.front().dim());
    const std::size_t width = feature_count(dim, order);
    FeatureMatrix out(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(width));
    // Column-major storage: build each row in a buffer, then scatter.
    parallel_for(series.size(), jobs, [&](std::size_t i) {
        const auto flat = flatten(polyline_signature(embed(series[i], embedding), order));
        out.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
    });
    return out;
}

ExperimentResult run_embedding_comparison(const ARProcessSpec& spec, std::size_t n,
                                          std::span<const EmbeddingSpec> embeddings,
                                          std::span<const std::size_t> orders, std::uint64_t seed,
                                          const ExperimentOptions& options) {
    validate(spec);
    if (n == 0)
        throw std::invalid_argument("experiment needs at least one training series");
    const auto grid = sorted_orders(orders);
    ExperimentResult result;
    const SplitSeeds seeds = split_seeds(seed);
    const Splits s = simulate_splits(spec, n, seeds);
    for (const auto& embedding : embeddings) {
        const auto scores = score_orders(s.train, nullptr, s.test, embedding, grid, options,
                                         result.notes);
        for (std::size_t i = 0; i < scores.orders.size(); ++i)
            result.rows.push_back({"ar-embeddings", to_string(embedding),
                                   embedding.kind == EmbeddingKind::LeadLag ? embedding.lag : 0,
                                   scores.orders[i], n, 0, "test_l2", scores.test[i],
                                   scores.counts[i], seed});
    }
    return result;
}

ExperimentResult run_lag_sweep(const ARProcessSpec& spec, std::size_t n,
                               std::span<const std::size_t> lags,
                               std::span<const std::size_t> orders, std::size_t replicates,
                               std::uint64_t seed, const ExperimentOptions& options) {
    validate(spec);
    if (n == 0)
        throw std::invalid_argument("experiment needs at least one training series");
    const auto grid = sorted_orders(orders);
    ExperimentResult result;
    for (std::size_t r = 0; r < replicates; ++r) {
        const std::uint64_t rep_seed = seed + r;
        const Splits s = simulate_splits(spec, n, split_seeds(rep_seed));
        for (std::size_t lag : lags) {
            const EmbeddingSpec embedding{EmbeddingKind::LeadLag, lag};
            std::vector<std::string> notes;
            const auto scores =
                score_orders(s.train, &s.validation, s.test, embedding, grid, options, notes);
            if (r == 0)
                result.notes.insert(result.notes.end(), notes.begin(), notes.end());
            if (scores.orders.empty())
                continue;
            const std::size_t best = argmin(scores.validation);
            result.rows.push_back({"ar-lag-sweep", to_string(embedding), lag, scores.orders[best], n,
                                   r, "test_l2", scores.test[best], scores.counts[best], rep_seed});
        }
    }
    return result;
}

ExperimentResult run_truncation_sweep(const ARProcessSpec& spec,
                                      std::span<const std::size_t> sample_sizes,
                                      std::span<const std::size_t> orders, std::size_t replicates,
                                      std::uint64_t seed, const ExperimentOptions& options) {
    validate(spec);
    const auto grid = sorted_orders(orders);
    const EmbeddingSpec embedding{EmbeddingKind::LeadLag, 2};
    const std::string name = to_string(embedding);
    ExperimentResult result;
    for (std::size_t size_index = 0; size_index < sample_sizes.size(); ++size_index) {
        const std::size_t n = sample_sizes[size_index];
        if (n == 0)
            throw std::invalid_argument("sample sizes must be positive");
        std::map<std::size_t, std::vector<double>> validation_by_order;
        std::map<std::size_t, std::size_t> count_by_order;
        for (std::size_t r = 0; r < replicates; ++r) {
            const std::uint64_t rep_seed = seed + r;
            const Splits s = simulate_splits(spec, n, split_seeds(rep_seed, n));
            std::vector<std::string> notes;
            const auto scores =
                score_orders(s.train, &s.validation, s.test, embedding, grid, options, notes);
            if (r == 0)
                result.notes.insert(result.notes.end(), notes.begin(), notes.end());
            if (scores.orders.empty())
                continue;
            for (std::size_t i = 0; i < scores.orders.size(); ++i) {
                const std::size_t k = scores.orders[i];
                result.rows.push_back({"ar-truncation", name, 2, k, n, r, "val_l2",
                                       scores.validation[i], scores.counts[i], rep_seed});
                result.rows.push_back({"ar-truncation", name, 2, k, n, r, "test_l2", scores.test[i],
                                       scores.counts[i], rep_seed});
                validation_by_order[k].push_back(scores.validation[i]);
                count_by_order[k] = scores.counts[i];
            }
            const std::size_t best = argmin(scores.validation);
            result.rows.push_back({"ar-truncation", name, 2, scores.orders[best], n, r,
                                   "selected_test_l2", scores.test[best], scores.counts[best],
                                   rep_seed});
        }
        if (validation_by_order.empty())
            continue;
        std::size_t best_order = 0;
        double best_median = 0.0;
        for (auto& [k, values] : validation_by_order) {
            const double m = median(values);
            if (best_order == 0 || m < best_median) {
                best_order = k;
                best_median = m;
            }
        }
        result.rows.push_back({"ar-truncation", name, 2, best_order, n, std::nullopt,
                               "selected_order", static_cast<double>(best_order),
                               count_by_order[best_order], seed});
    }
    return result;
}

void write_csv(const ExperimentResult& result, std::ostream& out) {
    out << "experiment,embedding,lag,order,n,replicate,metric,value,n_features,seed\n";
    for (const auto& row : result.rows) {
        out << row.experiment << ',' << row.embedding << ',' << row.lag << ',' << row.order << ','
            << row.n << ',';
        if (row.replicate)
            out << *row.replicate;
        out << ',' << row.metric << ',' << format_double(row.value) << ',' << row.n_features << ','
            << row.seed << '\n';
    }
}

double median(std::vector<double> values) {
    if (values.empty())
        throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace sigpath
