#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sigpath/learn.hpp"

using namespace sigpath;

namespace {

FeatureMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g;
    FeatureMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = g(rng);
    return m;
}

// Closed-form ridge on the augmented system, as an independent check.
Vector ridge_reference(const FeatureMatrix& x, const Vector& y, double lambda, const FeatureMatrix& eval) {
    const Eigen::Index n = x.rows(), p = x.cols();
    Eigen::MatrixXd a(n, p + 1);
    a.leftCols(p) = x;
    a.col(p).setOnes();
    Eigen::MatrixXd reg = Eigen::MatrixXd::Identity(p + 1, p + 1) * lambda;
    reg(p, p) = 0.0;
    const Eigen::VectorXd beta = (a.transpose() * a + reg).ldlt().solve(a.transpose() * y);
    return eval * beta.head(p) + Vector::Constant(eval.rows(), beta[p]);
}

// Exhaustive sort of all training rows plus an explicit vote count.
int knn_oracle(const FeatureMatrix& train, const std::vector<int>& labels, const Eigen::RowVectorXd& q,
               std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d;
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        d.push_back({(train.row(i) - q).squaredNorm(), static_cast<std::size_t>(i)});
    std::sort(d.begin(), d.end());
    std::map<int, std::size_t> votes;
    std::map<int, std::size_t> first_rank;
    for (std::size_t r = 0; r < k; ++r) {
        const int label = labels[d[r].second];
        ++votes[label];
        first_rank.try_emplace(label, r);
    }
    int best = 0;
    std::size_t best_votes = 0, best_rank = 0;
    for (const auto& [label, count] : votes)
        if (count > best_votes || (count == best_votes && first_rank[label] < best_rank)) {
            best = label;
            best_votes = count;
            best_rank = first_rank[label];
        }
    return best;
}

}  // namespace

TEST_CASE("normalizer examples") {
    FeatureMatrix train(3, 2);
    train << -2, 0, 1, 0, 4, 0;
    const auto norm = fit_normalizer(train);
    CHECK(norm.scale()[0] == 4.0);
    CHECK(norm.scale()[1] == 1.0);
    const auto out = apply_normalizer(norm, train);
    CHECK(out(0, 0) == -0.5);
    CHECK(out(1, 0) == 0.25);
    CHECK(out(2, 0) == 1.0);
    CHECK(out.col(1).isZero());
    FeatureMatrix test(1, 2);
    test << 8, 3;
    CHECK(norm.apply(test)(0, 0) == 2.0);
    CHECK(norm.apply(test)(0, 1) == 3.0);
    CHECK_THROWS_AS(fit_normalizer(FeatureMatrix(0, 2)), std::invalid_argument);
    CHECK_THROWS_AS(norm.apply(FeatureMatrix(1, 3)), std::invalid_argument);
}

TEST_CASE("normalized training data is bounded and refits to unit scale") {
    std::mt19937_64 rng(1);
    const FeatureMatrix x = random_matrix(rng, 20, 5) * 7.0;
    const auto scaled = fit_normalizer(x).apply(x);
    CHECK(scaled.cwiseAbs().maxCoeff() <= 1.0);
    const auto again = fit_normalizer(scaled);
    for (Eigen::Index j = 0; j < again.scale().size(); ++j)
        CHECK(again.scale()[j] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ridge examples") {
    FeatureMatrix x(3, 1);
    x << 1, 2, 3;
    Vector y(3);
    y << 2, 4, 6;
    const auto m = fit_ridge(x, y, 0.0);
    CHECK(m.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(m.intercept[0]) < 1e-12);

    const Vector c = Vector::Constant(3, 3.5);
    const auto mc = fit_ridge(x, c, 0.0);
    CHECK(std::abs(mc.weights(0, 0)) < 1e-12);
    CHECK(mc.intercept[0] == doctest::Approx(3.5).epsilon(1e-12));

    std::mt19937_64 rng(2);
    const auto xr = random_matrix(rng, 30, 4);
    const Vector yr = random_matrix(rng, 30, 1).col(0);
    const auto big = fit_ridge(xr, yr, 1e9);
    CHECK(big.weights.cwiseAbs().maxCoeff() < 1e-3);
    CHECK(std::abs(big.intercept[0] - yr.mean()) < 1e-3);
}

TEST_CASE("ridge rejects singular least squares") {
    FeatureMatrix x(4, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8;
    Vector y(4);
    y << 1, 2, 3, 4;
    CHECK_THROWS_AS(fit_ridge(x, y, 0.0), RankDeficientError);
    CHECK_NOTHROW(fit_ridge(x, y, 1e-3));
    FeatureMatrix wide(2, 5);
    wide.setRandom();
    CHECK_THROWS_AS(fit_ridge(wide, Vector::Ones(2), 0.0), RankDeficientError);
    CHECK_THROWS_AS(fit_ridge(x, y, -1.0), std::invalid_argument);
}

TEST_CASE("primal and dual ridge agree with the closed form") {
    std::mt19937_64 rng(3);
    for (Eigen::Index p : {3, 12, 40}) {
        const auto x = random_matrix(rng, 15, p);
        const Vector y = random_matrix(rng, 15, 1).col(0);
        const auto test = random_matrix(rng, 6, p);
        const double lambda = 0.3;
        const Vector got = predict(fit_ridge(x, y, lambda), test);
        const Vector expected = ridge_reference(x, y, lambda, test);
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("prefix ridge matches independent fits") {
    std::mt19937_64 rng(4);
    for (Eigen::Index n : {10, 50}) {
        const auto x = random_matrix(rng, n, 30);
        const Vector y = random_matrix(rng, n, 1).col(0);
        const auto a = random_matrix(rng, 7, 30), b = random_matrix(rng, 3, 30);
        const std::vector<const FeatureMatrix*> evals = {&a, &b};
        const std::vector<std::size_t> prefixes = {2, 6, 14, 30};
        const auto out = ridge_prefix_predict(x, y, evals, prefixes, 1e-4);
        REQUIRE(out.size() == prefixes.size());
        for (std::size_t i = 0; i < prefixes.size(); ++i) {
            const auto p = static_cast<Eigen::Index>(prefixes[i]);
            const FeatureMatrix xp = x.leftCols(p);
            const double lambda = default_ridge_lambda(xp, 1e-4);
            const auto model = fit_ridge(xp, y, lambda);
            CHECK((out[i][0] - predict(model, a.leftCols(p))).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((out[i][1] - predict(model, b.leftCols(p))).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("ridge is invariant under column permutation") {
    std::mt19937_64 rng(5);
    const auto x = random_matrix(rng, 25, 8);
    const Vector y = random_matrix(rng, 25, 1).col(0);
    const auto test = random_matrix(rng, 5, 8);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    FeatureMatrix xp(25, 8), tp(5, 8);
    for (int j = 0; j < 8; ++j) {
        xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
        tp.col(j) = test.col(perm[static_cast<std::size_t>(j)]);
    }
    const Vector a = predict(fit_ridge(x, y, 0.1), test);
    const Vector b = predict(fit_ridge(xp, y, 0.1), tp);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("softmax gradient matches central differences") {
    std::mt19937_64 rng(6);
    const auto x = random_matrix(rng, 5, 3);
    const std::vector<int> targets = {0, 1, 2, 1, 0};
    LinearModel model;
    model.classes = {0, 1, 2};
    model.weights = random_matrix(rng, 3, 3);
    model.intercept = random_matrix(rng, 1, 3).row(0);
    const auto obj = softmax_objective(model, x, targets);
    const double h = 1e-5;
    auto check = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = softmax_objective(model, x, targets).loss;
        param = saved - h;
        const double down = softmax_objective(model, x, targets).loss;
        param = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(std::abs(numeric - analytic) <= 1e-5 * std::max(std::abs(analytic), 1e-3));
    };
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index c = 0; c < 3; ++c)
            check(model.weights(i, c), obj.grad_weights(i, c));
    for (Eigen::Index c = 0; c < 3; ++c)
        check(model.intercept[c], obj.grad_intercept[c]);
}

TEST_CASE("softmax separates and never increases the loss") {
    FeatureMatrix x(6, 1);
    x << -3, -2, -1, 1, 2, 3;
    const std::vector<int> labels = {4, 4, 4, 9, 9, 9};
    const auto model = fit_softmax(x, labels);
    const auto c = classify(model, x);
    CHECK(c.labels == labels);
    CHECK(accuracy(labels, c.labels) == 1.0);
    for (Eigen::Index i = 0; i < c.scores.rows(); ++i)
        CHECK(c.scores.row(i).sum() == doctest::Approx(1.0));

    std::mt19937_64 rng(7);
    const auto xr = random_matrix(rng, 40, 4);
    std::vector<int> yr(40);
    for (std::size_t i = 0; i < 40; ++i)
        yr[i] = static_cast<int>(i % 3);
    std::vector<int> targets = yr;
    double previous = std::log(3.0) + 1e-12;
    for (std::size_t epochs : {1, 2, 5, 10, 40}) {
        const auto m = fit_softmax(xr, yr, {epochs, 1.0});
        const double loss = softmax_objective(m, xr, targets).loss;
        CHECK(loss <= previous);
        previous = loss;
    }
    CHECK_THROWS_AS(fit_softmax(xr, std::vector<int>(40, 1)), std::invalid_argument);
}

TEST_CASE("softmax label permutation permutes score columns") {
    std::mt19937_64 rng(8);
    const auto x = random_matrix(rng, 30, 3);
    std::vector<int> a(30), b(30);
    const int relabel[] = {2, 0, 1};  // class c becomes relabel[c]
    for (std::size_t i = 0; i < 30; ++i) {
        a[i] = static_cast<int>(i % 3);
        b[i] = relabel[a[i]];
    }
    const auto ca = classify(fit_softmax(x, a), x);
    const auto cb = classify(fit_softmax(x, b), x);
    for (std::size_t i = 0; i < 30; ++i)
        CHECK(cb.labels[i] == relabel[ca.labels[i]]);
    for (int c = 0; c < 3; ++c)
        CHECK((ca.scores.col(c) - cb.scores.col(relabel[c])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("softmax argmax ignores a constant score shift") {
    std::mt19937_64 rng(9);
    const auto x = random_matrix(rng, 20, 3);
    LinearModel m;
    m.classes = {0, 1, 2, 3};
    m.weights = random_matrix(rng, 3, 4);
    m.intercept = random_matrix(rng, 1, 4).row(0);
    const auto before = classify(m, x);
    m.intercept.array() += 5.0;
    const auto after = classify(m, x);
    CHECK(before.labels == after.labels);
}

TEST_CASE("knn examples") {
    FeatureMatrix train(4, 2);
    train << 0, 0, 1, 0, 0, 1, 5, 5;
    const std::vector<int> labels = {1, 2, 2, 3};
    CHECK(knn_classify(train, labels, train, 1) == labels);
    CHECK(knn_classify(train, std::vector<int>(4, 7), train, 4) == std::vector<int>(4, 7));
    FeatureMatrix q(1, 2);
    q << 0.1, 0.1;
    CHECK(knn_classify(train, labels, q, 3) == std::vector<int>{2});
    // two classes tie 1-1 under k=2; the nearest neighbour's class wins
    CHECK(knn_classify(train, labels, q, 2) == std::vector<int>{1});
    CHECK_THROWS_AS(knn_classify(FeatureMatrix(0, 2), {}, q, 1), std::invalid_argument);
    CHECK_THROWS_AS(knn_classify(train, labels, q, 5), std::invalid_argument);
}

TEST_CASE("knn matches a brute-force oracle") {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> cls(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        auto train = random_matrix(rng, 30, 2);
        // coarse grid creates exact distance ties
        train = (train * 2.0).array().round() / 2.0;
        std::vector<int> labels(30);
        for (auto& l : labels)
            l = cls(rng);
        FeatureMatrix query = (random_matrix(rng, 5, 2) * 2.0).array().round() / 2.0;
        const std::size_t k = 1 + static_cast<std::size_t>(trial % 7);
        const auto got = knn_classify(train, labels, query, k);
        for (Eigen::Index i = 0; i < query.rows(); ++i)
            CHECK(got[static_cast<std::size_t>(i)] == knn_oracle(train, labels, query.row(i), k));
    }
}

TEST_CASE("knn is invariant under feature permutation and translation") {
    std::mt19937_64 rng(11);
    const auto train = random_matrix(rng, 25, 3);
    const auto query = random_matrix(rng, 10, 3);
    std::vector<int> labels(25);
    for (std::size_t i = 0; i < 25; ++i)
        labels[i] = static_cast<int>(i % 4);
    const auto base = knn_classify(train, labels, query, 5);
    FeatureMatrix tp = train, qp = query;
    tp.col(0).swap(tp.col(2));
    qp.col(0).swap(qp.col(2));
    CHECK(knn_classify(tp, labels, qp, 5) == base);
    // integer shift keeps every coordinate difference exact
    FeatureMatrix ts = (train * 8.0).array().round() / 8.0, qs = (query * 8.0).array().round() / 8.0;
    const auto rounded = knn_classify(ts, labels, qs, 5);
    ts.array() += 3.0;
    qs.array() += 3.0;
    CHECK(knn_classify(ts, labels, qs, 5) == rounded);
}

TEST_CASE("metrics") {
    const std::vector<int> y = {0, 1, 1, 0};
    CHECK(accuracy(y, y) == 1.0);
    CHECK(accuracy(y, std::vector<int>{0, 1, 0, 0}) == 0.75);
    const std::vector<double> r = {1.0, 2.0, 3.0};
    CHECK(l2_error(r, r) == 0.0);
    CHECK(l2_error(r, std::vector<double>{1.0, 2.0, 5.0}) == doctest::Approx(4.0 / 3.0));

    const std::vector<int> one = {5};
    const std::vector<std::array<int, 3>> ranks = {{1, 5, 2}};
    CHECK(map3(one, ranks) == 0.5);
    const std::vector<std::array<int, 3>> hit = {{5, 5, 1}};
    CHECK(map3(one, hit) == 1.0);
    const std::vector<std::array<int, 3>> miss = {{1, 2, 3}};
    CHECK(map3(one, miss) == 0.0);

    // confusion [[2,1],[0,1]]: rows truth, columns prediction
    const std::vector<int> t = {0, 0, 0, 1};
    const std::vector<int> p = {0, 0, 1, 1};
    CHECK(macro_f1(t, p, 2) == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(macro_f1(t, t, 2) == 1.0);
    const std::vector<int> classes = {0, 1, 2};
    CHECK(macro_f1(t, p, classes) == doctest::Approx((0.8 + 2.0 / 3.0) / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(accuracy(y, one), std::invalid_argument);
    CHECK_THROWS_AS(l2_error(r, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("metric ranges on random predictions") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> cls(0, 4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> t(17), p(17);
        std::vector<std::array<int, 3>> ranked(17);
        for (std::size_t i = 0; i < 17; ++i) {
            t[i] = cls(rng);
            p[i] = cls(rng);
            ranked[i] = {cls(rng), cls(rng), cls(rng)};
        }
        for (double v : {accuracy(t, p), map3(t, ranked), macro_f1(t, p, 5)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("learners round-trip through the model format") {
    std::mt19937_64 rng(13);
    const auto x = random_matrix(rng, 40, 4);
    Vector yreg = x.col(0) * 2.0 - x.col(3);
    Vector ycls(40);
    for (Eigen::Index i = 0; i < 40; ++i)
        ycls[i] = x(i, 0) > 0 ? 1.0 : -1.0;
    for (const std::string name : {"ridge", "softmax", "knn"}) {
        Pipeline pipe(make_learner(name));
        pipe.fit(x, name == "ridge" ? yreg : ycls);
        std::stringstream buffer;
        pipe.save(buffer);
        const auto loaded = Pipeline::load(buffer);
        CHECK(loaded.learner().name() == name);
        CHECK(loaded.predict(x) == pipe.predict(x));
        CHECK_THROWS_WITH_AS(loaded.predict(FeatureMatrix(2, 3)),
                             "feature count mismatch: model expects 4 features, data has 3",
                             std::invalid_argument);
    }
    CHECK_THROWS_AS(make_learner("forest"), std::invalid_argument);
    Pipeline pipe(make_learner("knn"));
    CHECK_THROWS(pipe.fit(x, Vector::Constant(40, 0.5)));
    std::stringstream junk("not a model\n");
    CHECK_THROWS(Pipeline::load(junk));
}
