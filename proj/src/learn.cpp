#include "sigpath/learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace sigpath {

namespace {

void require_rows(const FeatureMatrix& x, const char* what) {
    if (x.rows() == 0)
        throw std::invalid_argument(std::string(what) + ": empty feature matrix");
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
}

std::vector<int> sorted_classes(std::span<const int> labels) {
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

// Column width processed at once when accumulating kernels over many features.
constexpr Eigen::Index kChunk = 2048;

}  // namespace

// ---------------------------------------------------------------------------
// Normalizer

Normalizer::Normalizer(Vector scale) : scale_(std::move(scale)) {
    for (Eigen::Index j = 0; j < scale_.size(); ++j)
        if (!(scale_[j] > 0.0) || !std::isfinite(scale_[j]))
            throw std::invalid_argument("normalizer scales must be positive and finite");
}

Normalizer Normalizer::fit(const FeatureMatrix& train) {
    require_rows(train, "fit_normalizer");
    Vector scale = train.cwiseAbs().colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (scale[j] == 0.0)
            scale[j] = 1.0;
    return Normalizer(std::move(scale));
}

FeatureMatrix Normalizer::apply(const FeatureMatrix& x) const {
    FeatureMatrix out = x;
    apply_inplace(out);
    return out;
}

void Normalizer::apply_inplace(FeatureMatrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != size())
        throw std::invalid_argument("normalizer expects " + std::to_string(size()) +
                                    " features, got " + std::to_string(x.cols()));
    x.array().rowwise() /= scale_.transpose().array();
}

// ---------------------------------------------------------------------------
// Ridge

double default_ridge_lambda(const FeatureMatrix& x, double relative) {
    require_rows(x, "default_ridge_lambda");
    if (x.cols() == 0)
        return relative;
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double trace = (x.rowwise() - mean).squaredNorm();
    const double lambda = relative * trace / static_cast<double>(x.cols());
    return lambda > 0.0 ? lambda : relative;
}

LinearModel fit_ridge(const FeatureMatrix& x, const Vector& y, double lambda) {
    require_rows(x, "fit_ridge");
    require_same_length(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.size()),
                        "fit_ridge");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("fit_ridge: lambda must be non-negative");

    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double ybar = y.mean();
    const FeatureMatrix xc = x.rowwise() - mean;
    const Vector yc = y.array() - ybar;

    Vector w(p);
    if (p == 0) {
        // nothing to fit beyond the intercept
    } else if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<FeatureMatrix> qr(xc);
        if (qr.rank() < p)
            throw RankDeficientError("fit_ridge: centered design has rank " +
                                     std::to_string(qr.rank()) + " < " + std::to_string(p) +
                                     " features; use a positive lambda");
        w = qr.solve(yc);
    } else if (p <= n) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
        gram.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(gram);
        if (llt.info() != Eigen::Success)
            throw RankDeficientError("fit_ridge: normal equations are not positive definite");
        w = llt.solve(xc.transpose() * yc);
    } else {
        Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n, n);
        kernel.selfadjointView<Eigen::Lower>().rankUpdate(xc);
        kernel.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(kernel);
        if (llt.info() != Eigen::Success)
            throw RankDeficientError("fit_ridge: kernel system is not positive definite");
        w = xc.transpose() * llt.solve(yc);
    }

    LinearModel model;
    model.weights = w;
    model.intercept = Eigen::RowVectorXd::Constant(1, ybar - mean.dot(w));
    return model;
}

Vector predict(const LinearModel& model, const FeatureMatrix& x) {
    if (x.cols() != model.weights.rows())
        throw std::invalid_argument("model expects " + std::to_string(model.weights.rows()) +
                                    " features, got " + std::to_string(x.cols()));
    return (x * model.weights.col(0)).array() + model.intercept[0];
}

std::vector<std::vector<Vector>> ridge_prefix_predict(const FeatureMatrix& x, const Vector& y,
                                                      std::span<const FeatureMatrix* const> evals,
                                                      std::span<const std::size_t> prefixes,
                                                      double relative) {
    require_rows(x, "ridge_prefix_predict");
    require_same_length(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(y.size()),
                        "ridge_prefix_predict");
    if (!(relative > 0.0))
        throw std::invalid_argument("ridge_prefix_predict: relative lambda must be positive");
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        if (prefixes[i] == 0 || prefixes[i] > static_cast<std::size_t>(x.cols()))
            throw std::invalid_argument("ridge_prefix_predict: prefix out of range");
        if (i > 0 && prefixes[i] <= prefixes[i - 1])
            throw std::invalid_argument("ridge_prefix_predict: prefixes must increase");
    }
    for (const FeatureMatrix* e : evals)
        if (e->cols() != x.cols())
            throw std::invalid_argument("ridge_prefix_predict: evaluation matrix width mismatch");

    const Eigen::Index n = x.rows();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double ybar = y.mean();
    const Vector yc = y.array() - ybar;

    // Cumulative trace of Xc^T Xc over leading columns.
    std::vector<double> cum_trace(static_cast<std::size_t>(x.cols()) + 1, 0.0);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        cum_trace[j + 1] = cum_trace[j] + (x.col(j).array() - mean[j]).square().sum();
    auto lambda_for = [&](std::size_t p) {
        const double lambda = relative * cum_trace[p] / static_cast<double>(p);
        return lambda > 0.0 ? lambda : relative;
    };

    std::vector<std::vector<Vector>> out(prefixes.size(), std::vector<Vector>(evals.size()));

    // Primal solves for prefixes no wider than the sample count.
    std::size_t primal_end = 0;
    while (primal_end < prefixes.size() && prefixes[primal_end] <= static_cast<std::size_t>(n))
        ++primal_end;
    if (primal_end > 0) {
        const Eigen::Index width = static_cast<Eigen::Index>(prefixes[primal_end - 1]);
        const FeatureMatrix xc = x.leftCols(width).rowwise() - mean.head(width);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(width, width);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
        const Vector rhs = xc.transpose() * yc;
        for (std::size_t i = 0; i < primal_end; ++i) {
            const auto p = static_cast<Eigen::Index>(prefixes[i]);
            Eigen::MatrixXd a = gram.topLeftCorner(p, p);
            a.diagonal().array() += lambda_for(prefixes[i]);
            Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(a);
            const Vector w = llt.solve(rhs.head(p));
            for (std::size_t e = 0; e < evals.size(); ++e) {
                const auto& ev = *evals[e];
                out[i][e] = ((ev.leftCols(p).rowwise() - mean.head(p)) * w).array() + ybar;
            }
        }
    }

    // Dual solves: kernels accumulated block by block across the wider prefixes.
    if (primal_end < prefixes.size()) {
        Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n, n);
        std::vector<Eigen::MatrixXd> cross(evals.size());
        for (std::size_t e = 0; e < evals.size(); ++e)
            cross[e] = Eigen::MatrixXd::Zero(evals[e]->rows(), n);
        Eigen::Index done = 0;
        for (std::size_t i = primal_end; i < prefixes.size(); ++i) {
            const auto p = static_cast<Eigen::Index>(prefixes[i]);
            while (done < p) {
                const Eigen::Index w = std::min(kChunk, p - done);
                const FeatureMatrix block = x.middleCols(done, w).rowwise() - mean.segment(done, w);
                kernel.selfadjointView<Eigen::Lower>().rankUpdate(block);
                for (std::size_t e = 0; e < evals.size(); ++e) {
                    const FeatureMatrix eb =
                        evals[e]->middleCols(done, w).rowwise() - mean.segment(done, w);
                    cross[e].noalias() += eb * block.transpose();
                }
                done += w;
            }
            Eigen::MatrixXd a = kernel;
            a.diagonal().array() += lambda_for(prefixes[i]);
            Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(a);
            const Vector alpha = llt.solve(yc);
            for (std::size_t e = 0; e < evals.size(); ++e)
                out[i][e] = (cross[e] * alpha).array() + ybar;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Softmax

namespace {

Eigen::MatrixXd softmax_rows(const LinearModel& model, const FeatureMatrix& x) {
    Eigen::MatrixXd logits = x * model.weights;
    logits.rowwise() += model.intercept;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        auto row = logits.row(i);
        const double top = row.maxCoeff();
        row = (row.array() - top).exp();
        row /= row.sum();
    }
    return logits;
}

}  // namespace

SoftmaxObjective softmax_objective(const LinearModel& model, const FeatureMatrix& x,
                                   std::span<const int> targets) {
    require_rows(x, "softmax_objective");
    require_same_length(static_cast<std::size_t>(x.rows()), targets.size(), "softmax_objective");
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd probs = softmax_rows(model, x);
    SoftmaxObjective obj;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int t = targets[static_cast<std::size_t>(i)];
        obj.loss -= std::log(std::max(probs(i, t), 1e-300));
        probs(i, t) -= 1.0;
    }
    obj.loss /= static_cast<double>(n);
    probs /= static_cast<double>(n);
    obj.grad_weights = x.transpose() * probs;
    obj.grad_intercept = probs.colwise().sum();
    return obj;
}

LinearModel fit_softmax(const FeatureMatrix& x, std::span<const int> labels,
                        const SoftmaxOptions& options) {
    require_rows(x, "fit_softmax");
    require_same_length(static_cast<std::size_t>(x.rows()), labels.size(), "fit_softmax");
    LinearModel model;
    model.classes = sorted_classes(labels);
    if (model.classes.size() < 2)
        throw std::invalid_argument("fit_softmax: training labels contain a single class");
    const auto c = static_cast<Eigen::Index>(model.classes.size());
    std::vector<int> targets(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        targets[i] = static_cast<int>(
            std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]) -
            model.classes.begin());

    model.weights = Eigen::MatrixXd::Zero(x.cols(), c);
    model.intercept = Eigen::RowVectorXd::Zero(c);
    double step = options.step;
    SoftmaxObjective current = softmax_objective(model, x, targets);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        LinearModel candidate = model;
        SoftmaxObjective next;
        int halvings = 0;
        while (true) {
            candidate.weights = model.weights - step * current.grad_weights;
            candidate.intercept = model.intercept - step * current.grad_intercept;
            next = softmax_objective(candidate, x, targets);
            if (next.loss <= current.loss || halvings == 60)
                break;
            step *= 0.5;
            ++halvings;
        }
        if (next.loss > current.loss)
            break;
        model = std::move(candidate);
        current = std::move(next);
    }
    return model;
}

Classification classify(const LinearModel& model, const FeatureMatrix& x) {
    if (model.classes.empty())
        throw std::invalid_argument("classify: model has no classes");
    if (x.cols() != model.weights.rows())
        throw std::invalid_argument("model expects " + std::to_string(model.weights.rows()) +
                                    " features, got " + std::to_string(x.cols()));
    Classification out;
    out.scores = softmax_rows(model, x);
    out.labels.resize(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Index best = 0;
        out.scores.row(i).maxCoeff(&best);
        out.labels[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// k nearest neighbours

std::vector<int> knn_classify(const FeatureMatrix& train, std::span<const int> labels,
                              const FeatureMatrix& query, std::size_t k) {
    require_rows(train, "knn_classify");
    require_same_length(static_cast<std::size_t>(train.rows()), labels.size(), "knn_classify");
    const auto n = static_cast<std::size_t>(train.rows());
    if (k == 0 || k > n)
        throw std::invalid_argument("knn_classify: k must lie in 1.." + std::to_string(n));
    if (query.cols() != train.cols())
        throw std::invalid_argument("knn_classify: query has " + std::to_string(query.cols()) +
                                    " features, training set has " + std::to_string(train.cols()));

    std::vector<int> out(static_cast<std::size_t>(query.rows()));
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (Eigen::Index q = 0; q < query.rows(); ++q) {
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {(train.row(static_cast<Eigen::Index>(i)) - query.row(q)).squaredNorm(), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

        // Votes per label, remembering the rank of each label's nearest member.
        std::map<int, std::pair<std::size_t, std::size_t>> votes;  // label -> (count, first rank)
        for (std::size_t r = 0; r < k; ++r) {
            auto [it, fresh] = votes.try_emplace(labels[dist[r].second], 0, r);
            ++it->second.first;
        }
        int best = votes.begin()->first;
        std::pair<std::size_t, std::size_t> best_vote = votes.begin()->second;
        for (const auto& [label, vote] : votes)
            if (vote.first > best_vote.first ||
                (vote.first == best_vote.first && vote.second < best_vote.second)) {
                best = label;
                best_vote = vote;
            }
        out[static_cast<std::size_t>(q)] = best;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
    require_same_length(truth.size(), predicted.size(), "accuracy");
    if (truth.empty())
        throw std::invalid_argument("accuracy: no samples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        hits += truth[i] == predicted[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double l2_error(std::span<const double> truth, std::span<const double> predicted) {
    require_same_length(truth.size(), predicted.size(), "l2_error");
    if (truth.empty())
        throw std::invalid_argument("l2_error: no samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double r = truth[i] - predicted[i];
        sum += r * r;
    }
    return sum / static_cast<double>(truth.size());
}

double map3(std::span<const int> truth, std::span<const std::array<int, 3>> ranked) {
    require_same_length(truth.size(), ranked.size(), "map3");
    if (truth.empty())
        throw std::invalid_argument("map3: no samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (ranked[i][j] == truth[i]) {
                sum += 1.0 / static_cast<double>(j + 1);
                break;
            }
    return sum / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> truth, std::span<const int> predicted,
                std::span<const int> classes) {
    require_same_length(truth.size(), predicted.size(), "macro_f1");
    if (classes.empty())
        throw std::invalid_argument("macro_f1: no classes");
    double total = 0.0;
    for (int c : classes) {
        std::size_t tp = 0, pred = 0, actual = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            pred += predicted[i] == c;
            actual += truth[i] == c;
            tp += predicted[i] == c && truth[i] == c;
        }
        const double precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
        const double recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        if (precision + recall > 0.0)
            total += 2.0 * precision * recall / (precision + recall);
    }
    return total / static_cast<double>(classes.size());
}

double macro_f1(std::span<const int> truth, std::span<const int> predicted,
                std::size_t num_classes) {
    std::vector<int> classes(num_classes);
    std::iota(classes.begin(), classes.end(), 0);
    return macro_f1(truth, predicted, classes);
}

}  // namespace sigpath
