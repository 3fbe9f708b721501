#include "cli.hpp"

#include <ordmargin/baselines.hpp>
#include <ordmargin/core.hpp>
#include <ordmargin/dmoe.hpp>
#include <ordmargin/experiments.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <span>
#include <sstream>

namespace ordmargin::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct KeySpec {
    const char* key;
    const char* value;
    const char* doc;
};

// Defaults. Grid-valued keys take comma-separated lists; `solve` uses the
// first entry of each list.
const KeySpec kKeys[] = {
    {"synthetic.n", "100", "number of synthetic points"},
    {"synthetic.dim", "10", "ambient dimension of synthetic points"},
    {"synthetic.scale", "0.05", "variance of each synthetic coordinate"},
    {"synthetic.seed", "1", "seed for synthetic points"},
    {"data.path", "", "triplet file; empty selects synthetic data"},
    {"data.n", "0", "item count of the triplet file (0 infers)"},
    {"data.index_base", "0", "index base of the triplet file (0 or 1)"},
    {"plan.train_sizes", "200,1000,10000", "training-set sizes"},
    {"plan.repeats", "10", "repeats per (method, size)"},
    {"plan.dim", "10", "embedding dimension p"},
    {"plan.master_seed", "2019", "master seed for splits and initialisation"},
    {"plan.methods", "dmoe,gnmds,ste,tste", "methods to benchmark"},
    {"plan.validation_fraction", "0.2", "share of the training split held out for tuning"},
    {"plan.workers", "1", "concurrent runs (default from ORDMARGIN_WORKERS)"},
    {"dmoe.gamma0", "1", "target margin mean"},
    {"dmoe.nu", "0.5,1,2", "weight of margins above the target (grid)"},
    {"dmoe.lambda", "0.001,0.01,0.1,1,10", "nuclear-norm weight (grid)"},
    {"dmoe.mu0", "1", "initial penalty"},
    {"dmoe.rho", "1.05", "penalty growth factor"},
    {"dmoe.mu_max", "1e8", "penalty cap"},
    {"dmoe.tolerance", "0.001", "objective-change stopping threshold"},
    {"dmoe.residual_tolerance", "0.001", "primal residual stopping threshold"},
    {"dmoe.max_iterations", "500", "outer iteration cap"},
    {"dmoe.cg_tolerance", "1e-8", "conjugate-gradient relative tolerance"},
    {"dmoe.cg_max_iterations", "0", "conjugate-gradient cap (0 = 10 n^2)"},
    {"gnmds.gamma0", "0.1,1", "GNMDS hinge target (grid)"},
    {"tste.alpha", "0", "Student-t degrees of freedom (0 = p - 1)"},
    {"baseline.max_iterations", "1000", "gradient-descent iteration cap"},
    {"baseline.tolerance", "1e-5", "projected-gradient stopping threshold"},
    {"baseline.ls_shrink", "0.5", "line-search shrink factor"},
    {"baseline.ls_decrease", "1e-4", "line-search sufficient-decrease constant"},
    {"baseline.ls_initial_step", "1", "first line-search step"},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> splitList(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

template <typename T, typename Parse>
T parseValue(const std::string& key, const std::string& text, Parse parse) {
    try {
        std::size_t used = 0;
        T v = parse(text, &used);
        if (used != text.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid value '" + text + "' for " + key);
    }
}

double toDouble(const std::string& key, const std::string& text) {
    return parseValue<double>(key, text, [](const std::string& t, std::size_t* u) { return std::stod(t, u); });
}

int toInt(const std::string& key, const std::string& text) {
    return parseValue<int>(key, text, [](const std::string& t, std::size_t* u) { return std::stoi(t, u); });
}

} // namespace

ConfigStore::ConfigStore() {
    for (const auto& k : kKeys) {
        values_[k.key] = k.value;
        explicit_[k.key] = false;
    }
    if (const char* env = std::getenv("ORDMARGIN_WORKERS"); env && *env)
        values_["plan.workers"] = trim(env);
}

const std::map<std::string, std::string>& ConfigStore::documentation() {
    static const std::map<std::string, std::string> docs = [] {
        std::map<std::string, std::string> m;
        for (const auto& k : kKeys)
            m[k.key] = std::string(k.doc) + " [default: " + k.value + "]";
        return m;
    }();
    return docs;
}

void ConfigStore::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("unknown configuration key '" + key + "'");
    it->second = trim(value);
    explicit_[key] = true;
}

void ConfigStore::applyOverride(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void ConfigStore::loadFile(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file '" + path + "'");
    int lineNo = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineNo;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected key = value");
        try {
            set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
}

const std::string& ConfigStore::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
}

bool ConfigStore::isExplicit(const std::string& key) const {
    auto it = explicit_.find(key);
    return it != explicit_.end() && it->second;
}

double ConfigStore::getDouble(const std::string& key) const { return toDouble(key, get(key)); }

int ConfigStore::getInt(const std::string& key) const { return toInt(key, get(key)); }

std::uint64_t ConfigStore::getU64(const std::string& key) const {
    return parseValue<std::uint64_t>(key, get(key), [](const std::string& t, std::size_t* u) {
        if (!t.empty() && t[0] == '-')
            throw std::invalid_argument("negative");
        return static_cast<std::uint64_t>(std::stoull(t, u));
    });
}

std::vector<std::string> ConfigStore::getList(const std::string& key) const {
    return splitList(get(key));
}

std::vector<double> ConfigStore::getDoubleList(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : getList(key))
        out.push_back(toDouble(key, s));
    if (out.empty())
        throw ConfigError(key + " must not be empty");
    return out;
}

std::vector<int> ConfigStore::getIntList(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : getList(key))
        out.push_back(toInt(key, s));
    if (out.empty())
        throw ConfigError(key + " must not be empty");
    return out;
}

SyntheticSpec syntheticSpec(const ConfigStore& cfg) {
    SyntheticSpec s;
    s.n = cfg.getInt("synthetic.n");
    s.ambientDim = cfg.getInt("synthetic.dim");
    s.covarianceScale = cfg.getDouble("synthetic.scale");
    s.seed = cfg.getU64("synthetic.seed");
    s.validate();
    return s;
}

DatasetSource datasetSource(const ConfigStore& cfg) {
    DatasetSource src;
    src.path = cfg.get("data.path");
    src.synthetic = src.path.empty();
    src.n = cfg.getInt("data.n");
    src.indexBase = cfg.getInt("data.index_base");
    if (src.synthetic)
        src.spec = syntheticSpec(cfg);
    return src;
}

namespace {

DmoeConfig dmoeBase(const ConfigStore& cfg, int p) {
    DmoeConfig d;
    d.gamma0 = cfg.getDouble("dmoe.gamma0");
    d.mu0 = cfg.getDouble("dmoe.mu0");
    d.rho = cfg.getDouble("dmoe.rho");
    d.muMax = cfg.getDouble("dmoe.mu_max");
    d.objectiveTolerance = cfg.getDouble("dmoe.tolerance");
    d.residualTolerance = cfg.getDouble("dmoe.residual_tolerance");
    d.maxOuterIterations = cfg.getInt("dmoe.max_iterations");
    d.cg.relativeTolerance = cfg.getDouble("dmoe.cg_tolerance");
    d.cg.maxIterations = cfg.getInt("dmoe.cg_max_iterations");
    d.targetRank = p;
    return d;
}

BaselineConfig baselineBase(const ConfigStore& cfg, BaselineMethod method, int p) {
    BaselineConfig b;
    b.method = method;
    b.targetRank = p;
    b.alpha = cfg.getDouble("tste.alpha");
    b.maxIterations = cfg.getInt("baseline.max_iterations");
    b.gradientTolerance = cfg.getDouble("baseline.tolerance");
    b.lineSearch.shrinkFactor = cfg.getDouble("baseline.ls_shrink");
    b.lineSearch.sufficientDecrease = cfg.getDouble("baseline.ls_decrease");
    b.lineSearch.initialStep = cfg.getDouble("baseline.ls_initial_step");
    return b;
}

} // namespace

std::vector<DmoeConfig> dmoeGrid(const ConfigStore& cfg, int p) {
    std::vector<DmoeConfig> out;
    for (double lambda : cfg.getDoubleList("dmoe.lambda"))
        for (double nu : cfg.getDoubleList("dmoe.nu")) {
            DmoeConfig d = dmoeBase(cfg, p);
            d.lambda = lambda;
            d.nu = nu;
            d.validate();
            out.push_back(d);
        }
    return out;
}

std::vector<BaselineConfig> baselineGrid(const ConfigStore& cfg, BaselineMethod method, int p) {
    std::vector<BaselineConfig> out;
    if (method == BaselineMethod::Gnmds) {
        for (double g : cfg.getDoubleList("gnmds.gamma0")) {
            BaselineConfig b = baselineBase(cfg, method, p);
            b.gamma0 = g;
            b.validate();
            out.push_back(b);
        }
    } else {
        BaselineConfig b = baselineBase(cfg, method, p);
        b.validate();
        out.push_back(b);
    }
    return out;
}

ExperimentPlan buildPlan(const ConfigStore& cfg) {
    ExperimentPlan plan;
    plan.dataset = datasetSource(cfg);
    plan.trainSizes = cfg.getIntList("plan.train_sizes");
    plan.repeats = cfg.getInt("plan.repeats");
    plan.embeddingDim = cfg.getInt("plan.dim");
    plan.masterSeed = cfg.getU64("plan.master_seed");
    plan.workers = cfg.getInt("plan.workers");
    plan.validationFraction = cfg.getDouble("plan.validation_fraction");
    std::set<std::string> seen;
    for (const auto& name : cfg.getList("plan.methods")) {
        if (!seen.insert(name).second)
            throw ConfigError("method '" + name + "' listed twice");
        MethodSpec m;
        m.name = name;
        m.kind = parseMethodKind(name);
        if (m.kind == MethodKind::Dmoe) {
            for (auto& d : dmoeGrid(cfg, plan.embeddingDim))
                m.grid.emplace_back(d);
        } else {
            for (auto& b : baselineGrid(cfg, parseBaselineMethod(name), plan.embeddingDim))
                m.grid.emplace_back(b);
        }
        plan.methods.push_back(std::move(m));
    }
    return plan;
}

namespace {

void ensureDir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory '" + dir + "'");
}

void writeText(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

std::string readText(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json configJson(const ConfigStore& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.values())
        j[k] = v;
    return j;
}

// --- gen-synthetic --------------------------------------------------------

struct GenArgs {
    int n = 100;
    int dim = 10;
    double scale = 0.05;
    std::uint64_t seed = 1;
    int indexBase = 0;
    std::string out;
};

int cmdGenSynthetic(const GenArgs& a, std::ostream& out) {
    SyntheticSpec spec{a.n, a.dim, a.scale, a.seed};
    const auto data = generateSynthetic(spec);
    ensureDir(a.out);
    writeMatrixCsv((fs::path(a.out) / "points.csv").string(), data.points);
    writeTripletFile((fs::path(a.out) / "triplets.csv").string(), data.triplets, a.indexBase);
    out << "items " << spec.n << '\n' << "triplets " << data.triplets.size() << '\n';
    return kOk;
}

// --- solve ----------------------------------------------------------------

struct SolveArgs {
    std::string data;
    int n = 0;
    int indexBase = 0;
    std::string method = "dmoe";
    int dim = 0;
    std::string configFile;
    std::vector<std::string> overrides;
    std::string out;
};

int cmdSolve(const SolveArgs& a, std::ostream& out) {
    ConfigStore cfg;
    if (!a.configFile.empty())
        cfg.loadFile(a.configFile);
    for (const auto& o : a.overrides)
        cfg.applyOverride(o);
    const int p = a.dim > 0 ? a.dim : cfg.getInt("plan.dim");
    const auto set = loadTripletFile(a.data, a.n, a.indexBase);
    if (set.empty())
        throw DataError("triplet file '" + a.data + "' holds no constraints");
    ItemCount::make(set.items(), p);
    const auto kind = parseMethodKind(a.method);
    ensureDir(a.out);
    const fs::path dir(a.out);

    GramMatrix G;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    json chosen;
    if (kind == MethodKind::Dmoe) {
        const DmoeConfig dc = dmoeGrid(cfg, p).front();
        chosen = {{"lambda", dc.lambda}, {"nu", dc.nu}, {"gamma0", dc.gamma0}};
        DmoeSolver solver(set, dc);
        auto writeLog = [&] {
            std::ostringstream log;
            log << "iteration,objective,residual_e1,residual_e2,residual_g1,residual_g2,mu\n";
            for (const auto& r : solver.log())
                log << r.iteration << ',' << formatDouble(r.objective) << ','
                    << formatDouble(r.residuals.e1) << ',' << formatDouble(r.residuals.e2) << ','
                    << formatDouble(r.residuals.g1) << ',' << formatDouble(r.residuals.g2) << ','
                    << formatDouble(r.mu) << '\n';
            writeText(dir / "log.csv", log.str());
        };
        try {
            solver.run();
        } catch (const SolverError&) {
            writeLog();
            throw;
        }
        writeLog();
        const auto res = solver.result();
        G = res.G;
        iterations = res.iterations;
        converged = res.converged;
        objective = res.log.empty() ? 0.0 : res.log.back().objective;
    } else {
        BaselineConfig bc = baselineGrid(cfg, parseBaselineMethod(a.method), p).front();
        bc.seed = cfg.getU64("plan.master_seed");
        chosen = {{"gamma0", bc.gamma0}, {"alpha", bc.effectiveAlpha()}};
        const auto res = solveBaseline(set, bc);
        std::ostringstream log;
        log << "iteration,objective,step,projected_gradient_norm\n";
        for (const auto& r : res.log)
            log << r.iteration << ',' << formatDouble(r.loss) << ',' << formatDouble(r.step) << ','
                << formatDouble(r.projectedGradientNorm) << '\n';
        writeText(dir / "log.csv", log.str());
        G = res.G;
        iterations = res.iterations;
        converged = res.converged;
        objective = baselineLoss(bc, set, G).loss;
    }

    writeMatrixCsv((dir / "gram.csv").string(), G);
    writeMatrixCsv((dir / "embedding.csv").string(), gramToEmbedding(G, p));
    const Eigen::VectorXd m = margins(set, G);
    const MarginStats stats = marginStats(
        std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
        std::max((m.maxCoeff() - m.minCoeff()) / 30.0, 1e-12));
    const double cv = stats.coefficientOfVariation();
    json summary = {
        {"method", a.method},
        {"items", set.items()},
        {"constraints", set.size()},
        {"dim", p},
        {"trainingError", generalizationError(set, G)},
        {"marginMean", stats.mean},
        {"marginVariance", stats.variance},
        {"marginCoefficientOfVariation", std::isfinite(cv) ? json(cv) : json(nullptr)},
        {"iterations", iterations},
        {"converged", converged},
        {"finalObjective", objective},
        {"hyperparameters", chosen},
    };
    writeText(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return converged ? kOk : kSolverError;
}

// --- bench ----------------------------------------------------------------

struct BenchArgs {
    std::string configFile;
    std::string manifest;
    std::vector<std::string> overrides;
    std::string out;
    int workers = 0;
    bool quiet = false;
};

int cmdBench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    ConfigStore cfg;
    if (!a.manifest.empty()) {
        json m;
        try {
            m = json::parse(readText(a.manifest));
        } catch (const json::parse_error& e) {
            throw ConfigError("manifest '" + a.manifest + "' is not valid JSON: " + e.what());
        }
        if (!m.contains("config") || !m["config"].is_object())
            throw ConfigError("manifest '" + a.manifest + "' has no config section");
        for (const auto& [k, v] : m["config"].items())
            cfg.set(k, v.get<std::string>());
    }
    if (!a.configFile.empty())
        cfg.loadFile(a.configFile);
    for (const auto& o : a.overrides)
        cfg.applyOverride(o);
    if (a.workers > 0)
        cfg.set("plan.workers", std::to_string(a.workers));

    const ExperimentPlan plan = buildPlan(cfg);
    const ComparisonSet all = loadDataset(plan.dataset);
    ensureDir(a.out);
    const fs::path dir(a.out);

    const auto report = runPlan(plan, all, [&](const RunRow& r) {
        if (a.quiet)
            return;
        err << r.method << " size=" << r.trainSize << " repeat=" << r.repeat;
        if (!r.failure.empty())
            err << " FAILED: " << r.failure << '\n';
        else
            err << " test=" << formatDouble(r.testError, 4) << " iters=" << r.iterations
                << (r.converged ? "" : " (not converged)") << " [" << r.selected << "] "
                << r.wallMillis << "ms\n";
    });

    writeRunsCsv((dir / "runs.csv").string(), report);
    writeMarginsCsv((dir / "margins.csv").string(), report);
    const std::string table = aggregatedTableCsv(report);
    writeText(dir / "table.csv", table);

    json runs = json::array();
    for (const auto& r : report.rows)
        runs.push_back({{"method", r.method},
                        {"trainSize", r.trainSize},
                        {"repeat", r.repeat},
                        {"seed", r.seed},
                        {"splitSeed", splitSeed(plan.masterSeed, r.trainSize, r.repeat)},
                        {"selected", r.selected},
                        {"failure", r.failure}});
    json manifest = {
        {"tool", "ordmargin"},
        {"version", "0.1.0"},
        {"command", "bench"},
        {"config", configJson(cfg)},
        {"dataset", {{"items", all.items()}, {"constraints", all.size()}}},
        {"runs", runs},
    };
    writeText(dir / "manifest.json", manifest.dump(2) + "\n");
    out << table;
    return kOk;
}

// --- export-plot ----------------------------------------------------------

struct ExportArgs {
    std::string runs;
    std::string out;
    int bins = 30;
};

int cmdExportPlot(const ExportArgs& a, std::ostream& out) {
    if (a.bins < 1)
        throw ConfigError("--bins must be at least 1");
    const fs::path in(a.runs);
    const auto rows = readRunsCsv((in / "runs.csv").string());
    if (rows.empty())
        throw DataError("runs.csv in '" + a.runs + "' has no rows");

    std::vector<std::string> methods;
    std::set<int> sizes;
    std::map<CellKey, std::vector<double>> errors;
    for (const auto& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
        sizes.insert(r.trainSize);
        if (r.failure.empty())
            errors[{r.method, r.trainSize}].push_back(r.testError);
    }
    ensureDir(a.out);
    const fs::path dir(a.out);

    std::ostringstream ev;
    ev << "method,size,min,median,max\n";
    for (const auto& m : methods)
        for (int s : sizes) {
            auto it = errors.find({m, s});
            if (it == errors.end())
                continue;
            const auto sm = summarize(it->second);
            ev << m << ',' << s << ',' << formatDouble(sm.min) << ',' << formatDouble(sm.median)
               << ',' << formatDouble(sm.max) << '\n';
        }
    writeText(dir / "error_vs_size.csv", ev.str());

    // Margins of the lowest repeat per (method, size).
    std::ifstream mf(in / "margins.csv");
    if (!mf)
        throw IoError("cannot open '" + (in / "margins.csv").string() + "'");
    std::string line;
    if (!std::getline(mf, line) || line != "method,trainSize,repeat,margin")
        throw DataError("margins.csv in '" + a.runs + "' has an unexpected header");
    std::map<CellKey, std::pair<int, std::vector<double>>> margins;
    while (std::getline(mf, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string method, size, repeat, value;
        std::getline(ss, method, ',');
        std::getline(ss, size, ',');
        std::getline(ss, repeat, ',');
        std::getline(ss, value, ',');
        const CellKey key{method, std::stoi(size)};
        const int rep = std::stoi(repeat);
        auto [it, inserted] = margins.try_emplace(key, rep, std::vector<double>{});
        if (rep < it->second.first) {
            it->second = {rep, {}};
        }
        if (rep == it->second.first)
            it->second.second.push_back(std::stod(value));
    }
    int files = 1;
    for (const auto& [key, entry] : margins) {
        const auto& values = entry.second;
        if (values.empty())
            continue;
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double width = *hi > *lo ? (*hi - *lo) / a.bins : 1.0;
        std::vector<std::size_t> counts(static_cast<std::size_t>(a.bins), 0);
        for (double v : values) {
            const auto b = static_cast<std::size_t>(std::floor((v - *lo) / width));
            counts[std::min(b, counts.size() - 1)] += 1;
        }
        std::ostringstream h;
        h << "bin_lower,count\n";
        for (std::size_t b = 0; b < counts.size(); ++b)
            h << formatDouble(*lo + static_cast<double>(b) * width) << ',' << counts[b] << '\n';
        writeText(dir / ("margin_histogram_" + key.method + "_" + std::to_string(key.trainSize) + ".csv"),
                  h.str());
        ++files;
    }
    out << "wrote " << files << " files to " << a.out << '\n';
    return kOk;
}

std::string keyHelp() {
    std::ostringstream os;
    os << "\nConfiguration keys (section.key = value):\n";
    for (const auto& [k, d] : ConfigStore::documentation())
        os << "  " << k << "  " << d << '\n';
    os << "\nOutputs:\n"
          "  gen-synthetic: points.csv (dim x n), triplets.csv (i,j,k: i closer to j than to k)\n"
          "  solve: gram.csv, embedding.csv (p x n), summary.json,\n"
          "         log.csv (dmoe: iteration,objective,residual_e1,residual_e2,residual_g1,residual_g2,mu;\n"
          "                  baselines: iteration,objective,step,projected_gradient_norm)\n"
          "  bench: runs.csv (" << kRunCsvHeader << "),\n"
          "         margins.csv (method,trainSize,repeat,margin), table.csv, manifest.json\n"
          "  export-plot: error_vs_size.csv (method,size,min,median,max),\n"
          "               margin_histogram_<method>_<size>.csv (bin_lower,count)\n"
          "\nExit codes: 0 success, 2 configuration error, 3 solver failure or non-convergence,\n"
          "            4 I/O error.\n";
    return os.str();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ordinal embedding with distributional margins"};
    app.require_subcommand(1);
    app.footer(keyHelp());

    GenArgs gen;
    auto* genCmd = app.add_subcommand("gen-synthetic", "Write Gaussian points and their full triplet set");
    genCmd->add_option("--n", gen.n, "number of points")->capture_default_str();
    genCmd->add_option("--dim", gen.dim, "ambient dimension")->capture_default_str();
    genCmd->add_option("--scale", gen.scale, "coordinate variance")->capture_default_str();
    genCmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
    genCmd->add_option("--index-base", gen.indexBase, "index base of the triplet file")
        ->check(CLI::IsMember({0, 1}));
    genCmd->add_option("--out", gen.out, "output directory")->required();

    SolveArgs solve;
    auto* solveCmd = app.add_subcommand("solve", "Fit one method to a triplet file");
    solveCmd->add_option("--data", solve.data, "triplet file")->required();
    solveCmd->add_option("--n", solve.n, "item count (0 infers)");
    solveCmd->add_option("--index-base", solve.indexBase, "index base of the triplet file")
        ->check(CLI::IsMember({0, 1}));
    solveCmd->add_option("--method", solve.method, "dmoe, gnmds, ste or tste")->capture_default_str();
    solveCmd->add_option("--dim", solve.dim, "embedding dimension (default plan.dim)");
    solveCmd->add_option("--config", solve.configFile, "configuration file");
    solveCmd->add_option("--set", solve.overrides, "override key=value")->allow_extra_args(false);
    solveCmd->add_option("--out", solve.out, "output directory")->required();

    BenchArgs bench;
    auto* benchCmd = app.add_subcommand("bench", "Run a repeated train/test benchmark plan");
    benchCmd->add_option("--config", bench.configFile, "configuration file");
    benchCmd->add_option("--manifest", bench.manifest, "replay the configuration of a manifest.json");
    benchCmd->add_option("--set", bench.overrides, "override key=value")->allow_extra_args(false);
    benchCmd->add_option("--workers", bench.workers, "concurrent runs");
    benchCmd->add_flag("--quiet", bench.quiet, "no per-run progress");
    benchCmd->add_option("--out", bench.out, "output directory")->required();

    ExportArgs exp;
    auto* expCmd = app.add_subcommand("export-plot", "Export plot-ready CSV from a bench directory");
    expCmd->add_option("--runs", exp.runs, "bench output directory")->required();
    expCmd->add_option("--out", exp.out, "output directory")->required();
    expCmd->add_option("--bins", exp.bins, "histogram bins")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*genCmd)
            return cmdGenSynthetic(gen, out);
        if (*solveCmd)
            return cmdSolve(solve, out);
        if (*benchCmd)
            return cmdBench(bench, out, err);
        if (*expCmd)
            return cmdExportPlot(exp, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolverError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    }
    return kConfigError;
}

} // namespace ordmargin::cli
