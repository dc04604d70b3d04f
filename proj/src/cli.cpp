#include "sigpath/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sigpath/arsim.hpp"
#include "sigpath/dataset.hpp"
#include "sigpath/embed.hpp"
#include "sigpath/learn.hpp"
#include "sigpath/window.hpp"

namespace sigpath::cli {

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(sep, pos);
        parts.push_back(text.substr(pos, next == std::string_view::npos ? next : next - pos));
        if (next == std::string_view::npos)
            break;
        pos = next + 1;
    }
    return parts;
}

std::size_t parse_size(std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw UsageError("invalid non-negative integer '" + std::string(s) + "'");
    return v;
}

EmbeddingSpec embedding_arg(std::string_view text) {
    try {
        return parse_embedding(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Vector labels_of(const FeatureTable& table, const std::string& path) {
    Vector y(static_cast<Eigen::Index>(table.ids.size()));
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        if (!table.labels[i])
            throw std::runtime_error("'" + path + "': row '" + table.ids[i] + "' has no label");
        y[static_cast<Eigen::Index>(i)] = *table.labels[i];
    }
    return y;
}

bool all_labelled(const FeatureTable& table) {
    for (const auto& l : table.labels)
        if (!l)
            return false;
    return !table.labels.empty();
}

std::string score_line(const Learner& learner, const Vector& truth, const Vector& predicted) {
    if (learner.is_classifier()) {
        std::vector<int> t(static_cast<std::size_t>(truth.size())), p(t.size());
        for (Eigen::Index i = 0; i < truth.size(); ++i) {
            t[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(truth[i]));
            p[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(predicted[i]));
        }
        return "accuracy=" + format_double(accuracy(t, p));
    }
    return "l2=" + format_double(l2_error(std::span<const double>(truth.data(), truth.size()),
                                          std::span<const double>(predicted.data(), predicted.size())));
}

// ---------------------------------------------------------------------------

struct FeaturizeArgs {
    std::string input, output, embedding = "linear";
    std::size_t lag = 0, order = 2, dyadic = 0, cap = 1'000'000;
    bool include_constant = false;
    long long jobs = 0;
};

int cmd_featurize(const FeaturizeArgs& a, std::ostream& out) {
    FeaturizeOptions options;
    options.embedding = embedding_arg(a.embedding);
    if (a.lag != 0) {
        if (options.embedding.kind != EmbeddingKind::LeadLag)
            throw UsageError("--lag only applies to the leadlag embedding");
        options.embedding.lag = a.lag;
    }
    options.window = {a.dyadic, a.order};
    options.include_constant = a.include_constant;
    options.jobs = resolve_jobs(a.jobs);
    options.feature_cap = a.cap;

    auto in = open_in(a.input);
    const auto records = read_dataset(in);
    const auto table = featurize(records, options);
    auto file = open_out(a.output);
    write_feature_csv(table, file);
    out << "featurized " << table.ids.size() << " records into " << table.features.cols()
        << " features (" << to_string(options.embedding) << ", order " << a.order
        << ", dyadic order " << a.dyadic << ")\n";
    return 0;
}

struct ExperimentArgs {
    std::string name, output, phi, orders, lags, sizes, embeddings;
    long long p = -1;
    double noise_sd = 1.0, lambda = 1e-6;
    std::size_t length = 100, n = 0, replicates = 20, cap = 100000, burn_in = 0;
    std::uint64_t seed = 0;
    long long jobs = 0;
};

int cmd_experiment(ExperimentArgs a, std::ostream& out) {
    const bool embeddings = a.name == "ar-embeddings";
    const bool lag_sweep = a.name == "ar-lag-sweep";
    const bool truncation = a.name == "ar-truncation";
    if (!embeddings && !lag_sweep && !truncation)
        throw UsageError("unknown experiment '" + a.name +
                         "' (expected ar-embeddings, ar-lag-sweep or ar-truncation)");

    if (a.phi.empty())
        a.phi = embeddings ? "-0.9" : "0,0,-0.9";
    ARProcessSpec spec;
    spec.phi = parse_real_list(a.phi);
    if (a.p >= 0 && static_cast<std::size_t>(a.p) != spec.phi.size())
        throw UsageError("--p " + std::to_string(a.p) + " does not match " +
                         std::to_string(spec.phi.size()) + " coefficients in --phi");
    spec.noise_sd = a.noise_sd;
    spec.length = a.length;
    spec.burn_in = a.burn_in;
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    ExperimentOptions options;
    options.feature_cap = a.cap;
    options.ridge_relative = a.lambda;
    options.jobs = resolve_jobs(a.jobs);

    if (a.n == 0)
        a.n = embeddings ? 200 : 500;
    ExperimentResult result;
    std::string summary;
    std::map<std::string, std::string> meta{{"experiment", a.name},
                                            {"phi", a.phi},
                                            {"noise_sd", format_double(spec.noise_sd)},
                                            {"length", std::to_string(spec.length)},
                                            {"burn_in", std::to_string(spec.burn_in)},
                                            {"seed", std::to_string(a.seed)},
                                            {"feature_cap", std::to_string(a.cap)},
                                            {"ridge_relative_lambda", format_double(a.lambda)}};
    if (embeddings) {
        const auto orders = parse_index_list(a.orders.empty() ? "1..6" : a.orders);
        std::vector<EmbeddingSpec> specs;
        const std::string names = a.embeddings.empty() ? "linear,time,leadlag:1" : a.embeddings;
        for (auto part : split(names, ','))
            specs.push_back(embedding_arg(part));
        result = run_embedding_comparison(spec, a.n, specs, orders, a.seed, options);
        meta["n"] = std::to_string(a.n);
        const ExperimentRow* best = nullptr;
        for (const auto& row : result.rows)
            if (!best || row.value < best->value)
                best = &row;
        if (best)
            summary = "best embedding=" + best->embedding + " order=" + std::to_string(best->order) +
                      " test_l2=" + format_double(best->value);
    } else if (lag_sweep) {
        const auto orders = parse_index_list(a.orders.empty() ? "1..5" : a.orders);
        const auto lags = parse_index_list(a.lags.empty() ? "1..6" : a.lags);
        result = run_lag_sweep(spec, a.n, lags, orders, a.replicates, a.seed, options);
        meta["n"] = std::to_string(a.n);
        meta["replicates"] = std::to_string(a.replicates);
        std::size_t best_lag = 0;
        double best_median = 0.0;
        for (std::size_t lag : lags) {
            bool any = false;
            for (const auto& row : result.rows)
                any = any || row.lag == lag;
            if (!any)
                continue;
            const double m = median_of(result, [&](const ExperimentRow& r) { return r.lag == lag; });
            if (best_lag == 0 || m < best_median) {
                best_lag = lag;
                best_median = m;
            }
        }
        if (best_lag)
            summary = "best lag=" + std::to_string(best_lag) +
                      " median test_l2=" + format_double(best_median);
    } else {
        const auto orders = parse_index_list(a.orders.empty() ? "1..8" : a.orders);
        const auto sizes = parse_index_list(a.sizes.empty() ? "10,50,200,500,1000" : a.sizes);
        result = run_truncation_sweep(spec, sizes, orders, a.replicates, a.seed, options);
        meta["replicates"] = std::to_string(a.replicates);
        for (auto it = result.rows.rbegin(); it != result.rows.rend(); ++it)
            if (it->metric == "selected_order") {
                const std::size_t n = it->n;
                const double m = median_of(result, [&](const ExperimentRow& r) {
                    return r.n == n && r.metric == "selected_test_l2";
                });
                summary = "n=" + std::to_string(n) + " selected order=" + std::to_string(it->order) +
                          " median selected_test_l2=" + format_double(m);
                break;
            }
    }

    auto file = open_out(a.output);
    write_csv(result, file);
    auto meta_file = open_out(a.output + ".meta");
    for (const auto& [k, v] : meta)
        meta_file << k << '=' << v << '\n';
    for (const auto& note : result.notes)
        meta_file << "note=" << note << '\n';
    out << a.name << ": " << result.rows.size() << " rows"
        << (summary.empty() ? std::string() : ", " + summary) << '\n';
    return 0;
}

struct FitArgs {
    std::string features, learner, model;
    double lambda = -1.0, step = 1.0;
    std::size_t k = 5, epochs = 200;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
    LearnerOptions options;
    options.lambda = a.lambda;
    options.k = a.k;
    options.softmax.epochs = a.epochs;
    options.softmax.step = a.step;
    Pipeline pipeline(make_learner(a.learner, options));

    auto in = open_in(a.features);
    const auto table = read_feature_csv(in);
    if (table.ids.empty())
        throw std::runtime_error("'" + a.features + "' has no rows");
    const Vector y = labels_of(table, a.features);
    pipeline.fit(table.features, y);
    const Vector fitted = pipeline.predict(table.features);

    auto file = open_out(a.model);
    pipeline.save(file);
    out << "learner=" << a.learner << " n=" << table.ids.size() << " p=" << table.features.cols()
        << " train_" << score_line(pipeline.learner(), y, fitted) << '\n';
    return 0;
}

struct PredictArgs {
    std::string features, model, output;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    auto model_in = open_in(a.model);
    const Pipeline pipeline = Pipeline::load(model_in);
    auto in = open_in(a.features);
    const auto table = read_feature_csv(in);
    const Vector predicted = pipeline.predict(table.features);

    auto file = open_out(a.output);
    file << "id,prediction\n";
    for (std::size_t i = 0; i < table.ids.size(); ++i)
        file << table.ids[i] << ',' << format_double(predicted[static_cast<Eigen::Index>(i)]) << '\n';
    out << "predicted " << table.ids.size() << " rows";
    if (all_labelled(table))
        out << ' ' << score_line(pipeline.learner(), labels_of(table, a.features), predicted);
    out << '\n';
    return 0;
}

}  // namespace

std::vector<std::size_t> parse_index_list(std::string_view text) {
    std::vector<std::size_t> out;
    for (auto part : split(text, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string_view::npos) {
            out.push_back(parse_size(part));
            continue;
        }
        const std::size_t lo = parse_size(part.substr(0, dots));
        const std::size_t hi = parse_size(part.substr(dots + 2));
        if (hi < lo)
            throw UsageError("empty range '" + std::string(part) + "'");
        for (std::size_t v = lo; v <= hi; ++v)
            out.push_back(v);
    }
    return out;
}

std::vector<double> parse_real_list(std::string_view text) {
    std::vector<double> out;
    for (auto part : split(text, ',')) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc() || ptr != part.data() + part.size())
            throw UsageError("invalid number '" + std::string(part) + "' in list '" +
                             std::string(text) + "'");
        out.push_back(v);
    }
    return out;
}

std::size_t resolve_jobs(long long flag) {
    if (flag > 0)
        return static_cast<std::size_t>(flag);
    if (const char* env = std::getenv("SIGPATH_JOBS")) {
        std::size_t v = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && ptr == s.data() + s.size() && v > 0)
            return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Path-signature features for sequential data"};
    app.require_subcommand(1);

    FeaturizeArgs fa;
    auto* featurize_cmd = app.add_subcommand("featurize", "NDJSON records -> signature feature CSV");
    featurize_cmd->add_option("--input,-i", fa.input, "NDJSON dataset")->required();
    featurize_cmd->add_option("--output,-o", fa.output, "feature CSV")->required();
    featurize_cmd->add_option("--embedding", fa.embedding,
                              "linear | rectilinear | time | leadlag[:m] | stroke1 | stroke2 | stroke3");
    featurize_cmd->add_option("--lag", fa.lag, "lead-lag lag (overrides leadlag:<m>)");
    featurize_cmd->add_option("--order", fa.order, "truncation order");
    featurize_cmd->add_option("--dyadic-order", fa.dyadic, "split [0,1] into 2^q windows");
    featurize_cmd->add_flag("--include-constant", fa.include_constant, "keep the level-0 coefficient");
    featurize_cmd->add_option("--jobs", fa.jobs, "worker threads");
    featurize_cmd->add_option("--cap", fa.cap, "maximum features per row");

    ExperimentArgs ea;
    auto* experiment_cmd = app.add_subcommand("experiment", "AR(p) simulation experiments");
    experiment_cmd->add_option("name", ea.name, "ar-embeddings | ar-lag-sweep | ar-truncation")
        ->required();
    experiment_cmd->add_option("--output,-o", ea.output, "results CSV")->required();
    experiment_cmd->add_option("--phi", ea.phi, "comma-separated AR coefficients");
    experiment_cmd->add_option("--p", ea.p, "AR order (checked against --phi)");
    experiment_cmd->add_option("--noise-sd", ea.noise_sd, "innovation standard deviation");
    experiment_cmd->add_option("--length", ea.length, "observed points per series");
    experiment_cmd->add_option("--burn-in", ea.burn_in, "discarded leading values");
    experiment_cmd->add_option("--n", ea.n,
                               "training series, n/5 more for validation and test "
                               "(default 200 for ar-embeddings, else 500)");
    experiment_cmd->add_option("--orders", ea.orders, "truncation orders, e.g. 1..6");
    experiment_cmd->add_option("--lags", ea.lags, "lead-lag lags, e.g. 1..6");
    experiment_cmd->add_option("--sizes", ea.sizes, "training sizes, e.g. 10,50,200");
    experiment_cmd->add_option("--embeddings", ea.embeddings, "comma-separated embeddings");
    experiment_cmd->add_option("--replicates", ea.replicates, "repetitions with seeds seed+r");
    experiment_cmd->add_option("--seed", ea.seed, "base seed");
    experiment_cmd->add_option("--cap", ea.cap, "skip configurations with more features");
    experiment_cmd->add_option("--lambda", ea.lambda, "ridge penalty relative to trace/p");
    experiment_cmd->add_option("--jobs", ea.jobs, "worker threads");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "fit a learner on a feature CSV");
    fit_cmd->add_option("--features,-f", fit_args.features, "feature CSV")->required();
    fit_cmd->add_option("--learner", fit_args.learner, "ridge | softmax | knn")->required();
    fit_cmd->add_option("--model,-m", fit_args.model, "model file to write")->required();
    fit_cmd->add_option("--lambda", fit_args.lambda, "ridge penalty (default: scaled by trace)");
    fit_cmd->add_option("--k", fit_args.k, "neighbours for knn");
    fit_cmd->add_option("--epochs", fit_args.epochs, "softmax epochs");
    fit_cmd->add_option("--step", fit_args.step, "softmax initial step");

    PredictArgs pa;
    auto* predict_cmd = app.add_subcommand("predict", "apply a fitted model to a feature CSV");
    predict_cmd->add_option("--features,-f", pa.features, "feature CSV")->required();
    predict_cmd->add_option("--model,-m", pa.model, "model file")->required();
    predict_cmd->add_option("--output,-o", pa.output, "predictions CSV")->required();

    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (featurize_cmd->parsed())
            return cmd_featurize(fa, out);
        if (experiment_cmd->parsed())
            return cmd_experiment(ea, out);
        if (fit_cmd->parsed())
            return cmd_fit(fit_args, out);
        if (predict_cmd->parsed())
            return cmd_predict(pa, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace sigpath::cli
