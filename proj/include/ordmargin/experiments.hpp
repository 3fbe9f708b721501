/// @file  experiments.hpp
/// @brief Synthetic data, triplet files, train/test splits and the repeated
///        benchmark runner that aggregates generalization error per method
///        and training-set size.

#pragma once

#include <ordmargin/baselines.hpp>
#include <ordmargin/core.hpp>
#include <ordmargin/dmoe.hpp>
#include <ordmargin/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

namespace ordmargin {

// ---------------------------------------------------------------------------
// Seeds

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Order-sensitive combination of seed components; stable across platforms.
inline std::uint64_t deriveSeed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix64(master);
    for (auto p : parts)
        h = mix64(h ^ mix64(p));
    return h;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
    int n = 100;
    int ambientDim = 10;
    double covarianceScale = 1.0 / 20.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n < 3)
            throw ConfigError("synthetic.n must be at least 3");
        if (ambientDim < 1)
            throw ConfigError("synthetic.dim must be positive");
        if (!(covarianceScale > 0.0))
            throw ConfigError("synthetic.scale must be positive");
    }
};

struct SyntheticData {
    Eigen::MatrixXd points; ///< ambientDim x n
    ComparisonSet triplets;
};

/// Every triplet (i; j, k) with j < k, stored with the closer of j, k first
/// and label +1. Ties keep j first.
inline ComparisonSet allTriplets(const Eigen::MatrixXd& points) {
    const int n = static_cast<int>(points.cols());
    const Eigen::MatrixXd D = squaredDistances(points.transpose() * points);
    std::vector<Triplet> out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) * (n - 2) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (j == i)
                continue;
            for (int k = j + 1; k < n; ++k) {
                if (k == i)
                    continue;
                if (D(i, j) <= D(i, k))
                    out.push_back({i, j, k});
                else
                    out.push_back({i, k, j});
            }
        }
    return ComparisonSet::fromTriplets(n, out);
}

/// Points drawn from N(0, scale * I) and their complete triplet set.
inline SyntheticData generateSynthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(spec.covarianceScale));
    SyntheticData data;
    data.points.resize(spec.ambientDim, spec.n);
    for (Index c = 0; c < data.points.cols(); ++c)
        for (Index r = 0; r < data.points.rows(); ++r)
            data.points(r, c) = normal(rng);
    data.triplets = allTriplets(data.points);
    return data;
}

// ---------------------------------------------------------------------------
// Splits

struct TrainTest {
    ComparisonSet train;
    ComparisonSet test;
};

/// Uniform sample of trainSize constraints without replacement; the rest,
/// in original order, form the test set.
inline TrainTest splitTrainTest(const ComparisonSet& all, std::size_t trainSize, std::uint64_t seed) {
    if (trainSize < 1 || trainSize >= all.size())
        throw ConfigError("train size " + std::to_string(trainSize) +
                          " must lie in [1, " + std::to_string(all.size()) + ")");
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first trainSize slots are the sample.
    for (std::size_t a = 0; a < trainSize; ++a) {
        std::uniform_int_distribution<std::size_t> pick(a, idx.size() - 1);
        std::swap(idx[a], idx[pick(rng)]);
    }
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(trainSize));
    std::vector<char> inTrain(all.size(), 0);
    for (auto t : train)
        inTrain[t] = 1;
    std::vector<std::size_t> test;
    test.reserve(all.size() - trainSize);
    for (std::size_t q = 0; q < all.size(); ++q)
        if (!inTrain[q])
            test.push_back(q);
    return {all.subset(train), all.subset(test)};
}

// ---------------------------------------------------------------------------
// Files

/// Reads "i,j,k" triplets (comma or whitespace separated) meaning item i is
/// more similar to j than to k. Lines starting with '#' and an "i,j,k"
/// header are skipped. n <= 0 infers the item count from the largest index.
inline ComparisonSet loadTripletFile(const std::string& path, int n, int indexBase) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open triplet file '" + path + "'");
    if (indexBase != 0 && indexBase != 1)
        throw ConfigError("index base must be 0 or 1");
    std::vector<Triplet> triplets;
    std::string line;
    int lineNo = 0;
    int maxIndex = -1;
    auto fail = [&](const std::string& why) {
        throw DataError(path + ":" + std::to_string(lineNo) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::string body = line.substr(first);
        std::replace(body.begin(), body.end(), ',', ' ');
        std::istringstream fields(body);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;)
            tok.push_back(t);
        if (triplets.empty() && tok == std::vector<std::string>{"i", "j", "k"})
            continue;
        if (tok.size() != 3)
            fail("expected 3 fields, got " + std::to_string(tok.size()));
        int v[3];
        for (int a = 0; a < 3; ++a) {
            std::size_t used = 0;
            try {
                v[a] = std::stoi(tok[a], &used);
            } catch (const std::exception&) {
                fail("not an integer: '" + tok[a] + "'");
            }
            if (used != tok[a].size())
                fail("not an integer: '" + tok[a] + "'");
            v[a] -= indexBase;
            if (v[a] < 0)
                fail("index below base " + std::to_string(indexBase));
            if (n > 0 && v[a] >= n)
                fail("index " + std::to_string(v[a] + indexBase) + " out of range for n=" +
                     std::to_string(n));
            maxIndex = std::max(maxIndex, v[a]);
        }
        Triplet t{v[0], v[1], v[2]};
        if (t.i == t.j || t.i == t.k || t.j == t.k)
            fail("triplet indices must be pairwise distinct");
        triplets.push_back(t);
    }
    const int items = n > 0 ? n : maxIndex + 1;
    return ComparisonSet::fromTriplets(std::max(items, 3), triplets);
}

/// Writes a triplet set in canonical form (closer pair first) with an
/// "i,j,k" header.
inline void writeTripletFile(const std::string& path, const ComparisonSet& set, int indexBase = 0) {
    if (set.kind() != ConstraintKind::Triplet)
        throw DataError("only triplet sets can be written as triplet files");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    out << "i,j,k\n";
    for (std::size_t q = 0; q < set.size(); ++q) {
        auto t = set.triplet(q);
        if (set.label(q) < 0)
            std::swap(t.j, t.k);
        out << t.i + indexBase << ',' << t.j + indexBase << ',' << t.k + indexBase << '\n';
    }
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

inline std::string formatDouble(double v, int precision = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

inline void writeMatrixCsv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c)
                out << ',';
            out << formatDouble(m(r, c));
        }
        out << '\n';
    }
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

inline Eigen::MatrixXd readMatrixCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    for (std::string line; std::getline(in, line);) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("ragged matrix CSV '" + path + "'");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[r][c];
    return m;
}

// ---------------------------------------------------------------------------
// Methods

enum class MethodKind { Dmoe, Gnmds, Ste, Tste };

inline std::string_view methodKindName(MethodKind k) {
    switch (k) {
    case MethodKind::Dmoe:
        return "dmoe";
    case MethodKind::Gnmds:
        return "gnmds";
    case MethodKind::Ste:
        return "ste";
    case MethodKind::Tste:
        return "tste";
    }
    return "unknown";
}

inline MethodKind parseMethodKind(std::string_view name) {
    if (name == "dmoe")
        return MethodKind::Dmoe;
    if (name == "gnmds")
        return MethodKind::Gnmds;
    if (name == "ste")
        return MethodKind::Ste;
    if (name == "tste")
        return MethodKind::Tste;
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

using MethodConfig = std::variant<DmoeConfig, BaselineConfig>;

/// A method and the hyperparameter candidates tuned on a validation split.
struct MethodSpec {
    std::string name;
    MethodKind kind = MethodKind::Dmoe;
    std::vector<MethodConfig> grid;
};

inline std::string describe(const MethodConfig& cfg) {
    std::ostringstream os;
    if (const auto* d = std::get_if<DmoeConfig>(&cfg)) {
        os << "lambda=" << formatDouble(d->lambda, 6) << ";nu=" << formatDouble(d->nu, 6)
           << ";gamma0=" << formatDouble(d->gamma0, 6);
    } else {
        const auto& b = std::get<BaselineConfig>(cfg);
        if (b.method == BaselineMethod::Gnmds)
            os << "gamma0=" << formatDouble(b.gamma0, 6);
        else if (b.method == BaselineMethod::Tste)
            os << "alpha=" << formatDouble(b.effectiveAlpha(), 6);
        else
            os << "default";
    }
    return os.str();
}

struct TrainedModel {
    GramMatrix G;
    int iterations = 0;
    bool converged = false;
};

/// Trains one configuration; `seed` drives baseline initialisation.
inline TrainedModel trainModel(const MethodConfig& cfg, const ComparisonSet& train, std::uint64_t seed) {
    TrainedModel m;
    if (const auto* d = std::get_if<DmoeConfig>(&cfg)) {
        auto r = solveDmoe(train, *d);
        m.G = std::move(r.G);
        m.iterations = r.iterations;
        m.converged = r.converged;
    } else {
        BaselineConfig b = std::get<BaselineConfig>(cfg);
        b.seed = seed;
        auto r = solveBaseline(train, b);
        m.G = std::move(r.G);
        m.iterations = r.iterations;
        m.converged = r.converged;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Plans and reports

struct DatasetSource {
    bool synthetic = true;
    SyntheticSpec spec;
    std::string path;
    int n = 0; ///< 0 infers from the file
    int indexBase = 0;
};

inline ComparisonSet loadDataset(const DatasetSource& src) {
    if (src.synthetic)
        return generateSynthetic(src.spec).triplets;
    return loadTripletFile(src.path, src.n, src.indexBase);
}

struct ExperimentPlan {
    DatasetSource dataset;
    std::vector<int> trainSizes{200, 1000, 10000};
    std::vector<MethodSpec> methods;
    int repeats = 10;
    int embeddingDim = 10;
    std::uint64_t masterSeed = 2019;
    int workers = 1;
    double validationFraction = 0.2;

    void validate(std::size_t available) const {
        if (repeats < 1)
            throw ConfigError("plan.repeats must be at least 1");
        if (trainSizes.empty())
            throw ConfigError("plan.train_sizes is empty");
        for (int s : trainSizes)
            if (s < 1 || static_cast<std::size_t>(s) >= available)
                throw ConfigError("train size " + std::to_string(s) + " exceeds the " +
                                  std::to_string(available) + " available constraints");
        if (methods.empty())
            throw ConfigError("plan.methods is empty");
        for (const auto& m : methods)
            if (m.grid.empty())
                throw ConfigError("method '" + m.name + "' has no configuration");
        if (!(validationFraction > 0.0 && validationFraction < 1.0))
            throw ConfigError("plan.validation_fraction must lie in (0, 1)");
        if (workers < 1)
            throw ConfigError("plan.workers must be at least 1");
    }
};

/// Split seed shared by all methods for a given (size, repeat).
inline std::uint64_t splitSeed(std::uint64_t master, int trainSize, int repeat) {
    return deriveSeed(master, {fnv1a("split"), static_cast<std::uint64_t>(trainSize),
                               static_cast<std::uint64_t>(repeat)});
}

/// Per-run seed for initialisation and validation splits.
inline std::uint64_t runSeed(std::uint64_t master, std::string_view method, int trainSize, int repeat) {
    return deriveSeed(master, {fnv1a(method), static_cast<std::uint64_t>(trainSize),
                               static_cast<std::uint64_t>(repeat)});
}

struct RunRow {
    std::string method;
    int trainSize = 0;
    int repeat = 0;
    std::uint64_t seed = 0;
    double testError = 0.0;
    double trainError = 0.0;
    double marginMean = 0.0;
    double marginVariance = 0.0;
    int iterations = 0;
    bool converged = false;
    long long wallMillis = 0;
    std::string selected; ///< chosen hyperparameters
    std::string failure;  ///< non-empty if training threw
};

/// min / median / max / std of a sample. Even counts take the lower-middle
/// order statistic as the median; std is the population form.
struct Summary {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
    double std = 0.0;
    int count = 0;
};

inline Summary summarize(std::vector<double> v) {
    if (v.empty())
        throw DataError("cannot summarise an empty sample");
    std::sort(v.begin(), v.end());
    Summary s;
    s.count = static_cast<int>(v.size());
    s.min = v.front();
    s.max = v.back();
    s.median = v[(v.size() - 1) / 2];
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size()));
    return s;
}

struct CellKey {
    std::string method;
    int trainSize = 0;
    auto operator<=>(const CellKey&) const = default;
};

struct ExperimentReport {
    std::vector<std::string> methods; ///< plan order
    std::vector<int> trainSizes;      ///< plan order
    std::vector<RunRow> rows;         ///< method-major, then size, then repeat
    std::vector<std::vector<double>> trainMargins; ///< parallel to rows

    /// Test-error summary per (method, size), recomputed from rows.
    std::map<CellKey, Summary> cells() const {
        std::map<CellKey, std::vector<double>> acc;
        for (const auto& r : rows)
            if (r.failure.empty())
                acc[{r.method, r.trainSize}].push_back(r.testError);
        std::map<CellKey, Summary> out;
        for (auto& [k, v] : acc)
            out[k] = summarize(std::move(v));
        return out;
    }

    Summary cell(const std::string& method, int size) const {
        auto all = cells();
        auto it = all.find({method, size});
        if (it == all.end())
            throw DataError("no successful runs for " + method + " at size " + std::to_string(size));
        return it->second;
    }
};

/// Runs fn(0..count-1) on up to `workers` threads. The first exception is
/// rethrown after all workers stop.
inline void parallelFor(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t a = 0; a < count; ++a)
            fn(a);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    std::vector<std::jthread> pool;
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t a = next++; a < count; a = next++) {
                try {
                    fn(a);
                } catch (...) {
                    std::lock_guard lock(errorMutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

/// Picks the grid entry with the lowest validation error (first on ties),
/// trained on a (1 - validationFraction) share of the training split.
inline std::size_t selectConfig(const MethodSpec& method, const ComparisonSet& train,
                                double validationFraction, std::uint64_t seed) {
    if (method.grid.size() == 1)
        return 0;
    auto fitSize = static_cast<std::size_t>(
        std::llround((1.0 - validationFraction) * static_cast<double>(train.size())));
    fitSize = std::clamp<std::size_t>(fitSize, 1, train.size() - 1);
    const auto parts = splitTrainTest(train, fitSize, mix64(seed ^ fnv1a("validation")));
    std::size_t best = 0;
    double bestErr = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < method.grid.size(); ++g) {
        double err = 1.0;
        try {
            const auto model = trainModel(method.grid[g], parts.train, seed);
            err = generalizationError(parts.test, model.G);
        } catch (const SolverError&) {
        }
        if (err < bestErr) {
            bestErr = err;
            best = g;
        }
    }
    return best;
}

using ProgressFn = std::function<void(const RunRow&)>;

/// Runs every (method, size, repeat) cell. Results do not depend on the
/// worker count or execution order.
inline ExperimentReport runPlan(const ExperimentPlan& plan, const ComparisonSet& all,
                                const ProgressFn& progress = {}) {
    plan.validate(all.size());
    struct Task {
        std::size_t method;
        int size;
        int repeat;
    };
    std::vector<Task> tasks;
    for (std::size_t m = 0; m < plan.methods.size(); ++m)
        for (int s : plan.trainSizes)
            for (int r = 0; r < plan.repeats; ++r)
                tasks.push_back({m, s, r});

    ExperimentReport report;
    for (const auto& m : plan.methods)
        report.methods.push_back(m.name);
    report.trainSizes = plan.trainSizes;
    report.rows.resize(tasks.size());
    report.trainMargins.resize(tasks.size());
    std::mutex progressMutex;

    parallelFor(tasks.size(), plan.workers, [&](std::size_t a) {
        const auto& task = tasks[a];
        const auto& method = plan.methods[task.method];
        RunRow row;
        row.method = method.name;
        row.trainSize = task.size;
        row.repeat = task.repeat;
        row.seed = runSeed(plan.masterSeed, method.name, task.size, task.repeat);
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto split = splitTrainTest(all, static_cast<std::size_t>(task.size),
                                              splitSeed(plan.masterSeed, task.size, task.repeat));
            const auto chosen = selectConfig(method, split.train, plan.validationFraction, row.seed);
            row.selected = describe(method.grid[chosen]);
            const auto model = trainModel(method.grid[chosen], split.train, row.seed);
            row.testError = generalizationError(split.test, model.G);
            const Eigen::VectorXd m = margins(split.train, model.G);
            row.trainError = static_cast<double>((m.array() <= 0.0).count()) /
                             static_cast<double>(m.size());
            row.marginMean = m.mean();
            row.marginVariance = (m.array() - row.marginMean).square().mean();
            row.iterations = model.iterations;
            row.converged = model.converged;
            report.trainMargins[a].assign(m.data(), m.data() + m.size());
        } catch (const SolverError& e) {
            row.failure = e.what();
        }
        row.wallMillis = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        report.rows[a] = row;
        if (progress) {
            std::lock_guard lock(progressMutex);
            progress(report.rows[a]);
        }
    });
    return report;
}

// ---------------------------------------------------------------------------
// Report files

inline const char* kRunCsvHeader =
    "method,trainSize,repeat,seed,testError,trainError,marginMean,marginVariance,iterations,"
    "converged,wallMillis";

inline void writeRunsCsv(const std::string& path, const ExperimentReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    out << kRunCsvHeader << '\n';
    for (const auto& r : report.rows)
        out << r.method << ',' << r.trainSize << ',' << r.repeat << ',' << r.seed << ','
            << (r.failure.empty() ? formatDouble(r.testError) : "nan") << ','
            << formatDouble(r.trainError) << ',' << formatDouble(r.marginMean) << ','
            << formatDouble(r.marginVariance) << ',' << r.iterations << ','
            << (r.converged ? "true" : "false") << ',' << r.wallMillis << '\n';
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

/// Parses a runs CSV written by writeRunsCsv (margins are not included).
inline std::vector<RunRow> readRunsCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kRunCsvHeader)
        throw DataError("'" + path + "' is not a runs CSV");
    std::vector<RunRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            f.push_back(cell);
        if (f.size() != 11)
            throw DataError("malformed runs CSV row in '" + path + "'");
        RunRow r;
        r.method = f[0];
        r.trainSize = std::stoi(f[1]);
        r.repeat = std::stoi(f[2]);
        r.seed = std::stoull(f[3]);
        if (f[4] == "nan")
            r.failure = "failed";
        else
            r.testError = std::stod(f[4]);
        r.trainError = std::stod(f[5]);
        r.marginMean = std::stod(f[6]);
        r.marginVariance = std::stod(f[7]);
        r.iterations = std::stoi(f[8]);
        r.converged = f[9] == "true";
        r.wallMillis = std::stoll(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Training margins, one row per (run, constraint).
inline void writeMarginsCsv(const std::string& path, const ExperimentReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    out << "method,trainSize,repeat,margin\n";
    for (std::size_t a = 0; a < report.rows.size(); ++a) {
        const auto& r = report.rows[a];
        for (double m : report.trainMargins[a])
            out << r.method << ',' << r.trainSize << ',' << r.repeat << ',' << formatDouble(m) << '\n';
    }
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

/// Rows = methods; for each size the columns <size>_min, _median, _max, _std.
inline std::string aggregatedTableCsv(const ExperimentReport& report) {
    const auto cells = report.cells();
    std::ostringstream out;
    out << "method";
    for (int s : report.trainSizes)
        out << ',' << s << "_min," << s << "_median," << s << "_max," << s << "_std";
    out << '\n';
    char buf[32];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    for (const auto& m : report.methods) {
        out << m;
        for (int s : report.trainSizes) {
            auto it = cells.find({m, s});
            if (it == cells.end()) {
                out << ",nan,nan,nan,nan";
                continue;
            }
            const auto& c = it->second;
            out << ',' << fmt(c.min) << ',' << fmt(c.median) << ',' << fmt(c.max) << ','
                << fmt(c.std);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace ordmargin
