#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigpath {

/// n samples by p features, one sample per row.
using FeatureMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-feature scaling by the largest absolute training value.
class Normalizer {
public:
    Normalizer() = default;
    explicit Normalizer(Vector scale);

    static Normalizer fit(const FeatureMatrix& train);

    FeatureMatrix apply(const FeatureMatrix& x) const;
    void apply_inplace(FeatureMatrix& x) const;

    const Vector& scale() const noexcept { return scale_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(scale_.size()); }

private:
    Vector scale_;
};

inline Normalizer fit_normalizer(const FeatureMatrix& train) { return Normalizer::fit(train); }
inline FeatureMatrix apply_normalizer(const Normalizer& norm, const FeatureMatrix& x) {
    return norm.apply(x);
}

/// Linear predictor x -> x^T weights + intercept. One column per output:
/// a single column for regression, one per class for softmax.
struct LinearModel {
    Eigen::MatrixXd weights;
    Eigen::RowVectorXd intercept;
    std::vector<int> classes;  // sorted class ids, empty for regression
};

/// Normal equations are singular (only raised for lambda == 0).
class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Least squares with penalty lambda * |weights|^2; the intercept is not
/// penalized. Solves in the primal when p <= n and in the dual otherwise.
LinearModel fit_ridge(const FeatureMatrix& x, const Vector& y, double lambda);

/// Scale-aware default penalty: 1e-6 * trace(Xc^T Xc) / p for centered X.
double default_ridge_lambda(const FeatureMatrix& x, double relative = 1e-6);

/// First output column of the model.
Vector predict(const LinearModel& model, const FeatureMatrix& x);

/// Ridge fits on the nested column prefixes x.leftCols(p) for each p in
/// `prefixes`, each with lambda = relative * trace(Xc^T Xc) / p. Returns
/// predictions[prefix][eval] for every matrix in `evals`. Shares one Gram
/// (or kernel) accumulation across all prefixes.
std::vector<std::vector<Vector>> ridge_prefix_predict(const FeatureMatrix& x, const Vector& y,
                                                      std::span<const FeatureMatrix* const> evals,
                                                      std::span<const std::size_t> prefixes,
                                                      double relative = 1e-6);

struct SoftmaxOptions {
    std::size_t epochs = 200;
    double step = 1.0;
};

struct SoftmaxObjective {
    double loss = 0.0;            // mean cross-entropy
    Eigen::MatrixXd grad_weights;  // p x C
    Eigen::RowVectorXd grad_intercept;
};

/// Mean cross-entropy and its gradient; `targets` are column indices into
/// model.classes.
SoftmaxObjective softmax_objective(const LinearModel& model, const FeatureMatrix& x,
                                   std::span<const int> targets);

/// Multinomial logistic regression by full-batch gradient descent from zero
/// weights. A step that would raise the loss is halved and retried, so the
/// loss never increases between epochs.
LinearModel fit_softmax(const FeatureMatrix& x, std::span<const int> labels,
                        const SoftmaxOptions& options = {});

struct Classification {
    std::vector<int> labels;
    Eigen::MatrixXd scores;  // n x C class probabilities, columns follow model.classes
};

Classification classify(const LinearModel& model, const FeatureMatrix& x);

/// Majority vote over the k nearest training rows (Euclidean). Equal
/// distances are ordered by training index; tied votes go to the class
/// owning the nearest neighbour among the tied classes.
std::vector<int> knn_classify(const FeatureMatrix& train, std::span<const int> labels,
                              const FeatureMatrix& query, std::size_t k);

double accuracy(std::span<const int> truth, std::span<const int> predicted);
double l2_error(std::span<const double> truth, std::span<const double> predicted);
/// Three ranked guesses per sample; a hit at rank j scores 1/j.
double map3(std::span<const int> truth, std::span<const std::array<int, 3>> ranked);
/// Mean over `classes` of per-class F1 (0 when precision + recall is 0).
double macro_f1(std::span<const int> truth, std::span<const int> predicted,
                std::span<const int> classes);
/// Classes 0..num_classes-1.
double macro_f1(std::span<const int> truth, std::span<const int> predicted,
                std::size_t num_classes);

// ---------------------------------------------------------------------------
// Learner seam used by the command-line fit/predict round trip.

struct LearnerOptions {
    double lambda = -1.0;  // ridge; negative selects default_ridge_lambda
    std::size_t k = 5;     // knn
    SoftmaxOptions softmax;
};

class Learner {
public:
    virtual ~Learner() = default;

    virtual std::string name() const = 0;
    virtual bool is_classifier() const = 0;
    virtual void fit(const FeatureMatrix& x, const Vector& y) = 0;
    virtual Vector predict(const FeatureMatrix& x) const = 0;
    virtual std::size_t n_features() const = 0;

    /// Writes key=value lines (without the header).
    virtual void save(std::ostream& out) const = 0;
};

/// ridge | softmax | knn. Throws std::invalid_argument otherwise.
std::unique_ptr<Learner> make_learner(const std::string& name, const LearnerOptions& options = {});

/// Normalizer plus learner, fitted together and stored in one model file.
class Pipeline {
public:
    Pipeline(std::unique_ptr<Learner> learner) : learner_(std::move(learner)) {}

    void fit(const FeatureMatrix& x, const Vector& y);
    Vector predict(const FeatureMatrix& x) const;

    const Learner& learner() const { return *learner_; }
    const Normalizer& normalizer() const { return normalizer_; }

    void save(std::ostream& out) const;
    static Pipeline load(std::istream& in);

private:
    Pipeline(Normalizer norm, std::unique_ptr<Learner> learner)
        : normalizer_(std::move(norm)), learner_(std::move(learner)) {}

    Normalizer normalizer_;
    std::unique_ptr<Learner> learner_;
};

}  // namespace sigpath
