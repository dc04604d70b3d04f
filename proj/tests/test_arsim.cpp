#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sigpath/arsim.hpp"

using namespace sigpath;

namespace {

std::vector<double> pooled(const RegressionDataset& data) {
    std::vector<double> all;
    for (const auto& s : data.series)
        for (double v : s.channel(0))
            all.push_back(v);
    return all;
}

double variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

std::string csv(const ExperimentResult& r) {
    std::ostringstream out;
    write_csv(r, out);
    return out.str();
}

}  // namespace

TEST_CASE("white noise has unit variance") {
    ARProcessSpec spec;
    spec.phi = {0.0};
    spec.seed = 5;
    const auto data = simulate_ar(spec, 100);
    REQUIRE(data.series.size() == 100);
    REQUIRE(data.targets.size() == 100);
    CHECK(data.series[0].length() == 100);
    CHECK(data.series[0].dim() == 1);
    const double v = variance(pooled(data));
    CHECK(v >= 0.94);
    CHECK(v <= 1.06);
}

TEST_CASE("noiseless random walk stays at zero") {
    ARProcessSpec spec;
    spec.phi = {1.0};
    spec.noise_sd = 0.0;
    const auto data = simulate_ar(spec, 3);
    for (const auto& s : data.series)
        for (double v : s.channel(0))
            CHECK(v == 0.0);
    for (double t : data.targets)
        CHECK(t == 0.0);
}

TEST_CASE("stationary AR(1) variance") {
    // Monte-Carlo estimate against 1 / (1 - phi^2)
    ARProcessSpec spec;
    spec.phi = {0.5};
    spec.length = 100000;
    spec.burn_in = 1000;
    spec.seed = 17;
    const double v = variance(pooled(simulate_ar(spec, 1)));
    CHECK(std::abs(v - 4.0 / 3.0) <= 0.05 * 4.0 / 3.0);
}

TEST_CASE("target continues the recursion") {
    ARProcessSpec spec;
    // the residual of the true recursion is the unit innovation
    spec.phi = {0.3, -0.2, 0.1};
    spec.length = 10;
    const auto data = simulate_ar(spec, 2000);
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < data.series.size(); ++i) {
        const auto z = data.series[i].channel(0);
        const double pred = 0.3 * z[9] - 0.2 * z[8] + 0.1 * z[7];
        const double r = data.targets[i] - pred;
        mean += r;
        sq += r * r;
    }
    mean /= 2000.0;
    sq /= 2000.0;
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::abs(sq - 1.0) < 0.1);
}

TEST_CASE("simulation is reproducible and seed dependent") {
    ARProcessSpec spec;
    spec.phi = {0.0, 0.0, -0.9};
    spec.seed = 3;
    const auto a = simulate_ar(spec, 10), b = simulate_ar(spec, 10);
    CHECK(pooled(a) == pooled(b));
    CHECK(a.targets == b.targets);
    spec.seed = 4;
    CHECK(pooled(simulate_ar(spec, 10)) != pooled(a));
}

TEST_CASE("spec validation") {
    ARProcessSpec spec;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec.phi = {0.5};
    CHECK_NOTHROW(validate(spec));
    spec.length = 0;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec.length = 5;
    spec.noise_sd = -1;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("split seeds are disjoint across splits and replicates") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 200; ++r) {
        const auto s = split_seeds(r);
        seen.insert(s.train);
        seen.insert(s.validation);
        seen.insert(s.test);
    }
    CHECK(seen.size() == 600);
    CHECK(split_seeds(7).train == split_seeds(7).train);
    CHECK(split_seeds(7, 1).train != split_seeds(7, 2).train);
    CHECK(holdout_size(500) == 100);
    CHECK(holdout_size(3) == 1);
}

TEST_CASE("signature features have the documented width") {
    ARProcessSpec spec;
    spec.phi = {0.5};
    spec.length = 20;
    const auto data = simulate_ar(spec, 4);
    const auto x = signature_features(data.series, {EmbeddingKind::LeadLag, 2}, 3);
    CHECK(x.rows() == 4);
    CHECK(x.cols() == static_cast<Eigen::Index>(feature_count(4, 3)));
    CHECK(signature_features(data.series, {EmbeddingKind::LeadLag, 2}, 3, 3) == x);
}

TEST_CASE("embedding comparison table shape") {
    ARProcessSpec spec;
    spec.phi = {-0.9};
    const std::vector<EmbeddingSpec> embeddings = {
        {EmbeddingKind::Linear}, {EmbeddingKind::Time}, {EmbeddingKind::LeadLag, 1}};
    const std::vector<std::size_t> orders = {1, 2, 3, 4, 5, 6};
    const auto r = run_embedding_comparison(spec, 50, embeddings, orders, 0);
    REQUIRE(r.rows.size() == 18);
    for (const auto& row : r.rows) {
        CHECK(row.metric == "test_l2");
        CHECK(std::isfinite(row.value));
        CHECK(row.value >= 0.0);
        const auto e = parse_embedding(row.embedding);
        CHECK(row.n_features == feature_count(embedded_dim(e, 1), row.order));
    }
    CHECK(csv(r) == csv(run_embedding_comparison(spec, 50, embeddings, orders, 0)));
    CHECK(csv(r) != csv(run_embedding_comparison(spec, 50, embeddings, orders, 1)));

    ExperimentOptions threaded;
    threaded.jobs = 3;
    CHECK(csv(r) == csv(run_embedding_comparison(spec, 50, embeddings, orders, 0, threaded)));
}

TEST_CASE("nonstationary AR(1) gives finite errors") {
    ARProcessSpec spec;
    spec.phi = {-1.0};
    const std::vector<EmbeddingSpec> embeddings = {{EmbeddingKind::Linear}, {EmbeddingKind::LeadLag, 1}};
    const std::vector<std::size_t> orders = {1, 2, 3, 4};
    for (const auto& row : run_embedding_comparison(spec, 40, embeddings, orders, 2).rows)
        CHECK(std::isfinite(row.value));
}

TEST_CASE("feature cap skips configurations with a note") {
    ARProcessSpec spec;
    spec.phi = {-0.9};
    ExperimentOptions options;
    options.feature_cap = 100;
    const std::vector<EmbeddingSpec> embeddings = {{EmbeddingKind::LeadLag, 2}};
    const std::vector<std::size_t> orders = {1, 2, 3, 4};
    const auto r = run_embedding_comparison(spec, 30, embeddings, orders, 0, options);
    CHECK(r.rows.size() == 3);  // 4^4 + ... = 340 > 100
    CHECK(!r.notes.empty());
}

TEST_CASE("lag sweep shapes") {
    ARProcessSpec spec;
    spec.phi = {0.0, 0.0, -0.9};
    spec.length = 30;
    const std::vector<std::size_t> lags = {1, 2, 3, 4, 5, 6};
    const std::vector<std::size_t> orders = {1, 2};
    const auto one = run_lag_sweep(spec, 40, lags, orders, 1, 0);
    CHECK(one.rows.size() == lags.size());
    const auto three = run_lag_sweep(spec, 40, lags, orders, 3, 0);
    CHECK(three.rows.size() == 3 * lags.size());
    std::set<std::uint64_t> seeds;
    for (const auto& row : three.rows) {
        CHECK(row.replicate.has_value());
        CHECK(row.seed == *row.replicate);
        CHECK((row.order == 1 || row.order == 2));
        seeds.insert(row.seed);
    }
    CHECK(seeds.size() == 3);
    ExperimentOptions threaded;
    threaded.jobs = 2;
    CHECK(csv(three) == csv(run_lag_sweep(spec, 40, lags, orders, 3, 0, threaded)));
}

TEST_CASE("truncation sweep emits the full grid and a selection per size") {
    ARProcessSpec spec;
    spec.phi = {0.0, 0.0, -0.9};
    spec.length = 30;
    const std::vector<std::size_t> sizes = {10, 40};
    const std::vector<std::size_t> orders = {1, 2, 3};
    const auto r = run_truncation_sweep(spec, sizes, orders, 2, 0);
    std::size_t val = 0, test = 0, selected = 0, chosen = 0;
    for (const auto& row : r.rows) {
        CHECK(row.embedding == "leadlag:2");
        CHECK(row.lag == 2);
        if (row.metric == "val_l2")
            ++val;
        else if (row.metric == "test_l2")
            ++test;
        else if (row.metric == "selected_test_l2")
            ++selected;
        else if (row.metric == "selected_order") {
            ++chosen;
            CHECK(!row.replicate.has_value());
            CHECK(row.value == static_cast<double>(row.order));
        }
    }
    CHECK(val == 2 * 3 * 2);
    CHECK(test == 2 * 3 * 2);
    CHECK(selected == 2 * 2);
    CHECK(chosen == 2);
}

TEST_CASE("csv layout") {
    ExperimentResult r;
    r.rows.push_back({"x", "time", 0, 2, 10, std::nullopt, "test_l2", 0.5, 6, 3});
    r.rows.push_back({"x", "time", 0, 2, 10, 1, "test_l2", 0.25, 6, 4});
    CHECK(csv(r) ==
          "experiment,embedding,lag,order,n,replicate,metric,value,n_features,seed\n"
          "x,time,0,2,10,,test_l2,0.5,6,3\n"
          "x,time,0,2,10,1,test_l2,0.25,6,4\n");
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
