// Learner implementations behind the fit/predict seam and their flat-text
// model files:
//
//   sigpath-model 1
//   learner=<name>
//   n_features=<p>
//   scale=<p> v_1 ... v_p
//   <learner-specific keys>
//
// Matrices are written as "<rows> <cols> values..." in row-major order.
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "sigpath/learn.hpp"

namespace sigpath {

namespace {

using KeyValues = std::map<std::string, std::string>;

constexpr const char* kHeader = "sigpath-model 1";

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_matrix(std::ostream& out, const std::string& key, const Eigen::MatrixXd& m) {
    out << key << '=' << m.rows() << ' ' << m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out << ' ' << format_double(m(i, j));
    out << '\n';
}

void write_ints(std::ostream& out, const std::string& key, std::span<const int> v) {
    out << key << '=' << v.size();
    for (int x : v)
        out << ' ' << x;
    out << '\n';
}

class TokenReader {
public:
    TokenReader(const std::string& key, const std::string& text) : key_(key), text_(text) {}

    double next_double() {
        skip();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
        if (ec != std::errc())
            fail();
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return v;
    }

    long long next_int() {
        skip();
        long long v = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
        if (ec != std::errc())
            fail();
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return v;
    }

    void finish() {
        skip();
        if (pos_ != text_.size())
            fail();
    }

private:
    void skip() {
        while (pos_ < text_.size() && text_[pos_] == ' ')
            ++pos_;
    }
    [[noreturn]] void fail() const {
        throw std::runtime_error("model file: malformed value for key '" + key_ + "'");
    }

    const std::string& key_;
    const std::string& text_;
    std::size_t pos_ = 0;
};

const std::string& require_key(const KeyValues& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end())
        throw std::runtime_error("model file: missing key '" + key + "'");
    return it->second;
}

Eigen::MatrixXd read_matrix(const KeyValues& kv, const std::string& key) {
    TokenReader r(key, require_key(kv, key));
    const auto rows = r.next_int();
    const auto cols = r.next_int();
    if (rows < 0 || cols < 0)
        throw std::runtime_error("model file: negative shape for key '" + key + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = r.next_double();
    r.finish();
    return m;
}

std::vector<int> read_ints(const KeyValues& kv, const std::string& key) {
    TokenReader r(key, require_key(kv, key));
    const auto n = r.next_int();
    if (n < 0)
        throw std::runtime_error("model file: negative length for key '" + key + "'");
    std::vector<int> v(static_cast<std::size_t>(n));
    for (auto& x : v)
        x = static_cast<int>(r.next_int());
    r.finish();
    return v;
}

std::vector<int> integral_labels(const Vector& y, const std::string& learner) {
    std::vector<int> labels(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || std::round(y[i]) != y[i])
            throw std::invalid_argument(learner + " needs integer class labels, got " +
                                        format_double(y[i]));
        labels[static_cast<std::size_t>(i)] = static_cast<int>(y[i]);
    }
    return labels;
}

void check_width(const FeatureMatrix& x, std::size_t expected) {
    if (static_cast<std::size_t>(x.cols()) != expected)
        throw std::invalid_argument("feature count mismatch: model expects " +
                                    std::to_string(expected) + " features, data has " +
                                    std::to_string(x.cols()));
}

// ---------------------------------------------------------------------------

class RidgeLearner final : public Learner {
public:
    explicit RidgeLearner(double lambda) : lambda_(lambda) {}
    RidgeLearner(double lambda, LinearModel model) : lambda_(lambda), model_(std::move(model)) {}

    std::string name() const override { return "ridge"; }
    bool is_classifier() const override { return false; }
    std::size_t n_features() const override {
        return static_cast<std::size_t>(model_.weights.rows());
    }

    void fit(const FeatureMatrix& x, const Vector& y) override {
        const double lambda = lambda_ < 0.0 ? default_ridge_lambda(x) : lambda_;
        model_ = fit_ridge(x, y, lambda);
        lambda_ = lambda;
    }

    Vector predict(const FeatureMatrix& x) const override {
        check_width(x, n_features());
        return sigpath::predict(model_, x);
    }

    void save(std::ostream& out) const override {
        out << "lambda=" << format_double(lambda_) << '\n';
        write_matrix(out, "weights", model_.weights);
        write_matrix(out, "intercept", model_.intercept);
    }

    static std::unique_ptr<Learner> load(const KeyValues& kv) {
        TokenReader r("lambda", require_key(kv, "lambda"));
        const double lambda = r.next_double();
        LinearModel model;
        model.weights = read_matrix(kv, "weights");
        model.intercept = read_matrix(kv, "intercept");
        if (model.weights.cols() != 1 || model.intercept.size() != 1)
            throw std::runtime_error("model file: ridge weights must have one column");
        return std::make_unique<RidgeLearner>(lambda, std::move(model));
    }

private:
    double lambda_;
    LinearModel model_;
};

class SoftmaxLearner final : public Learner {
public:
    explicit SoftmaxLearner(SoftmaxOptions options) : options_(options) {}
    explicit SoftmaxLearner(LinearModel model) : model_(std::move(model)) {}

    std::string name() const override { return "softmax"; }
    bool is_classifier() const override { return true; }
    std::size_t n_features() const override {
        return static_cast<std::size_t>(model_.weights.rows());
    }

    void fit(const FeatureMatrix& x, const Vector& y) override {
        const auto labels = integral_labels(y, name());
        model_ = fit_softmax(x, labels, options_);
    }

    Vector predict(const FeatureMatrix& x) const override {
        check_width(x, n_features());
        const auto result = classify(model_, x);
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            out[i] = result.labels[static_cast<std::size_t>(i)];
        return out;
    }

    void save(std::ostream& out) const override {
        write_ints(out, "classes", model_.classes);
        write_matrix(out, "weights", model_.weights);
        write_matrix(out, "intercept", model_.intercept);
    }

    static std::unique_ptr<Learner> load(const KeyValues& kv) {
        LinearModel model;
        model.classes = read_ints(kv, "classes");
        model.weights = read_matrix(kv, "weights");
        model.intercept = read_matrix(kv, "intercept");
        const auto c = static_cast<Eigen::Index>(model.classes.size());
        if (c < 2 || model.weights.cols() != c || model.intercept.size() != c)
            throw std::runtime_error("model file: softmax shapes do not match the class list");
        return std::make_unique<SoftmaxLearner>(std::move(model));
    }

private:
    SoftmaxOptions options_;
    LinearModel model_;
};

class KnnLearner final : public Learner {
public:
    explicit KnnLearner(std::size_t k) : k_(k) {}
    KnnLearner(std::size_t k, FeatureMatrix train, std::vector<int> labels)
        : k_(k), train_(std::move(train)), labels_(std::move(labels)) {}

    std::string name() const override { return "knn"; }
    bool is_classifier() const override { return true; }
    std::size_t n_features() const override { return static_cast<std::size_t>(train_.cols()); }

    void fit(const FeatureMatrix& x, const Vector& y) override {
        labels_ = integral_labels(y, name());
        if (k_ == 0 || k_ > labels_.size())
            throw std::invalid_argument("knn: k must lie in 1.." + std::to_string(labels_.size()));
        train_ = x;
    }

    Vector predict(const FeatureMatrix& x) const override {
        check_width(x, n_features());
        const auto labels = knn_classify(train_, labels_, x, k_);
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            out[i] = labels[static_cast<std::size_t>(i)];
        return out;
    }

    void save(std::ostream& out) const override {
        out << "k=" << k_ << '\n';
        write_ints(out, "labels", labels_);
        write_matrix(out, "train", train_);
    }

    static std::unique_ptr<Learner> load(const KeyValues& kv) {
        TokenReader r("k", require_key(kv, "k"));
        const auto k = r.next_int();
        auto labels = read_ints(kv, "labels");
        auto train = read_matrix(kv, "train");
        if (k < 1 || static_cast<std::size_t>(k) > labels.size() ||
            static_cast<std::size_t>(train.rows()) != labels.size())
            throw std::runtime_error("model file: inconsistent knn training set");
        return std::make_unique<KnnLearner>(static_cast<std::size_t>(k), std::move(train),
                                            std::move(labels));
    }

private:
    std::size_t k_;
    FeatureMatrix train_;
    std::vector<int> labels_;
};

}  // namespace

std::unique_ptr<Learner> make_learner(const std::string& name, const LearnerOptions& options) {
    if (name == "ridge")
        return std::make_unique<RidgeLearner>(options.lambda);
    if (name == "softmax")
        return std::make_unique<SoftmaxLearner>(options.softmax);
    if (name == "knn")
        return std::make_unique<KnnLearner>(options.k);
    throw std::invalid_argument("unknown learner '" + name + "' (expected ridge, softmax or knn)");
}

void Pipeline::fit(const FeatureMatrix& x, const Vector& y) {
    normalizer_ = Normalizer::fit(x);
    learner_->fit(normalizer_.apply(x), y);
}

Vector Pipeline::predict(const FeatureMatrix& x) const {
    check_width(x, normalizer_.size());
    return learner_->predict(normalizer_.apply(x));
}

void Pipeline::save(std::ostream& out) const {
    out << kHeader << '\n';
    out << "learner=" << learner_->name() << '\n';
    out << "n_features=" << normalizer_.size() << '\n';
    out << "scale=" << normalizer_.size();
    for (Eigen::Index j = 0; j < normalizer_.scale().size(); ++j)
        out << ' ' << format_double(normalizer_.scale()[j]);
    out << '\n';
    learner_->save(out);
}

Pipeline Pipeline::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw std::runtime_error("model file: missing '" + std::string(kHeader) + "' header");
    KeyValues kv;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("model file: expected key=value, got '" + line.substr(0, 40) +
                                     "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }

    const std::string& name = require_key(kv, "learner");
    TokenReader nr("n_features", require_key(kv, "n_features"));
    const auto p = nr.next_int();

    TokenReader sr("scale", require_key(kv, "scale"));
    const auto count = sr.next_int();
    if (count != p)
        throw std::runtime_error("model file: scale length does not match n_features");
    Vector scale(count);
    for (Eigen::Index j = 0; j < count; ++j)
        scale[j] = sr.next_double();
    sr.finish();

    std::unique_ptr<Learner> learner;
    if (name == "ridge")
        learner = RidgeLearner::load(kv);
    else if (name == "softmax")
        learner = SoftmaxLearner::load(kv);
    else if (name == "knn")
        learner = KnnLearner::load(kv);
    else
        throw std::runtime_error("model file: unknown learner '" + name + "'");
    if (static_cast<long long>(learner->n_features()) != p)
        throw std::runtime_error("model file: learner width does not match n_features");
    return Pipeline(Normalizer(std::move(scale)), std::move(learner));
}

}  // namespace sigpath
