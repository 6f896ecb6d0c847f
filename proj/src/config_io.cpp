#include "htrm/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "htrm/errors.hpp"

namespace htrm {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
T get_req(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

TailModel tail_from_json(const json& j) {
    const auto family = tail_family_from_string(get_or<std::string>(j, "tail", "exact-pareto", "model"));
    const double alpha = get_req<double>(j, "alpha", "model");
    const double rho = get_or<double>(j, "rho", 0.5, "model");
    const double scale = get_or<double>(j, "scale", 1.0, "model");
    switch (family) {
        case TailFamily::ExactPareto: return TailModel::exact_pareto(alpha, rho, scale);
        case TailFamily::ShiftedParetoCentered: return TailModel::centered_pareto(alpha, rho, scale);
        case TailFamily::CustomInverseCdf: break;
    }
    throw ConfigError("model: custom-inverse-cdf tails cannot be described in a config document");
}

}  // namespace

json model_to_json(const FieldModel& model) {
    const TailModel& t = model.noise();
    if (t.family() == TailFamily::CustomInverseCdf)
        throw ConfigError("custom-inverse-cdf tails cannot be serialized");
    json j;
    j["family"] = to_string(model.family());
    j["tail"] = to_string(t.family());
    j["alpha"] = t.alpha();
    j["rho"] = t.rho();
    j["scale"] = t.scale();
    if (model.family() == FieldFamily::LinearMA || model.family() == FieldFamily::MaxLinear) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < model.filter().rows(); ++i) {
            json row = json::array();
            for (Eigen::Index c = 0; c < model.filter().cols(); ++c) row.push_back(model.filter()(i, c));
            rows.push_back(row);
        }
        j["filter"] = rows;
    }
    if (model.family() == FieldFamily::RandomCoeffBernoulli) j["q"] = model.q();
    if (model.family() == FieldFamily::RademacherSum) j["m"] = model.m();
    return j;
}

FieldModel model_from_json(const json& j) {
    check_keys(j, {"family", "tail", "alpha", "rho", "scale", "filter", "q", "m"}, "model");
    const auto family = field_family_from_string(get_req<std::string>(j, "family", "model"));
    TailModel tail = tail_from_json(j);
    auto filter = [&]() {
        const auto rows = get_req<std::vector<std::vector<double>>>(j, "filter", "model");
        if (rows.empty() || rows.front().empty()) throw ConfigError("model.filter: must be non-empty");
        Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.front().size()) throw ConfigError("model.filter: ragged rows");
            for (std::size_t c = 0; c < rows[i].size(); ++c)
                h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
        return h;
    };
    switch (family) {
        case FieldFamily::Iid: return FieldModel::iid(std::move(tail));
        case FieldFamily::LinearMA: return FieldModel::linear_ma(filter(), std::move(tail));
        case FieldFamily::MaxLinear: return FieldModel::max_linear(filter(), std::move(tail));
        case FieldFamily::RandomCoeffBernoulli:
            return FieldModel::random_coeff_bernoulli(get_req<double>(j, "q", "model"), std::move(tail));
        case FieldFamily::RademacherSum:
            return FieldModel::rademacher_sum(get_req<int>(j, "m", "model"), std::move(tail));
    }
    throw ConfigError("model: unsupported family");
}

json truncation_to_json(const TruncationParams& t) {
    json j;
    j["mode"] = to_string(t.mode);
    j["eta"] = t.eta;
    if (t.mode == TruncationParams::Mode::Fixed) {
        j["eps"] = t.eps;
    } else {
        j["beta"] = t.beta;
        j["kappa"] = t.kappa;
    }
    return j;
}

TruncationParams truncation_from_json(const json& j, double alpha) {
    check_keys(j, {"mode", "eps", "beta", "eta", "kappa"}, "truncation");
    const auto mode = get_or<std::string>(j, "mode", "fixed", "truncation");
    const double eta = get_or<double>(j, "eta", 0.9, "truncation");
    if (mode == "fixed") return fixed_truncation(get_or<double>(j, "eps", 0.5, "truncation"), eta);
    if (mode == "adaptive") {
        const auto [lo, hi] = beta_window(alpha);
        const double beta = get_or<double>(j, "beta", 0.5 * (lo + hi), "truncation");
        return adaptive_truncation(alpha, beta, eta, get_or<double>(j, "kappa", 0.95, "truncation"));
    }
    throw ConfigError("truncation.mode: expected 'fixed' or 'adaptive'");
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = kSummarySchema;
    j["model"] = model_to_json(cfg.model);
    j["ensemble"] = {{"kind", to_string(cfg.ensemble)}, {"n", cfg.n}, {"p", cfg.p}};
    j["trials"] = {{"reps", cfg.reps}, {"k", cfg.k}, {"solver", to_string(cfg.solver)}};
    j["truncation"] = truncation_to_json(cfg.truncation);
    j["blocks"] = {{"r", cfg.block_side}};
    j["limit"] = {{"intensity_scale", cfg.intensity_scale ? json(*cfg.intensity_scale) : json(nullptr)},
                  {"reference_multiplier", cfg.reference_multiplier}};
    j["theta"] = {{"n", cfg.theta.n}, {"r", cfg.theta.r}, {"u", cfg.theta.u}, {"reps", cfg.theta.reps}};
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output"] = {{"dir", cfg.out_dir}, {"prefix", cfg.prefix}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, {"schema", "model", "ensemble", "trials", "truncation", "blocks", "limit", "theta", "seed",
                   "threads", "output"},
               "config");
    if (get_or<int>(j, "schema", kSummarySchema, "config") != kSummarySchema)
        throw ConfigError("config: unsupported schema version");
    if (!j.contains("model")) throw ConfigError("config: missing 'model' section");
    ExperimentConfig cfg(model_from_json(j.at("model")));
    const json empty = json::object();
    auto section = [&](const char* name) -> const json& { return j.contains(name) ? j.at(name) : empty; };

    const json& ens = section("ensemble");
    check_keys(ens, {"kind", "n", "p"}, "ensemble");
    cfg.ensemble = ensemble_kind_from_string(get_or<std::string>(ens, "kind", "wigner", "ensemble"));
    cfg.n = get_or<std::uint64_t>(ens, "n", cfg.n, "ensemble");
    cfg.p = get_or<std::uint64_t>(ens, "p", cfg.n, "ensemble");

    const json& tr = section("trials");
    check_keys(tr, {"reps", "k", "solver"}, "trials");
    cfg.reps = get_or<std::uint64_t>(tr, "reps", cfg.reps, "trials");
    cfg.k = get_or<std::size_t>(tr, "k", cfg.k, "trials");
    cfg.solver = solver_path_from_string(get_or<std::string>(tr, "solver", "dense", "trials"));

    cfg.truncation = truncation_from_json(section("truncation"), cfg.model.alpha());

    const json& bl = section("blocks");
    check_keys(bl, {"r"}, "blocks");
    cfg.block_side = get_or<Eigen::Index>(bl, "r", 0, "blocks");

    const json& lim = section("limit");
    check_keys(lim, {"intensity_scale", "reference_multiplier"}, "limit");
    if (lim.contains("intensity_scale") && !lim.at("intensity_scale").is_null())
        cfg.intensity_scale = get_req<double>(lim, "intensity_scale", "limit");
    cfg.reference_multiplier = get_or<std::uint64_t>(lim, "reference_multiplier", 10, "limit");

    const json& th = section("theta");
    check_keys(th, {"n", "r", "u", "reps"}, "theta");
    cfg.theta.n = get_or<std::uint64_t>(th, "n", 0, "theta");
    cfg.theta.r = get_or<Eigen::Index>(th, "r", 0, "theta");
    cfg.theta.u = get_or<double>(th, "u", 1.0, "theta");
    cfg.theta.reps = get_or<std::uint64_t>(th, "reps", 100, "theta");

    cfg.seed = get_or<std::uint64_t>(j, "seed", 1, "config");
    cfg.threads = get_or<unsigned>(j, "threads", 1, "config");

    const json& out = section("output");
    check_keys(out, {"dir", "prefix"}, "output");
    cfg.out_dir = get_or<std::string>(out, "dir", ".", "output");
    cfg.prefix = get_or<std::string>(out, "prefix", "run", "output");

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
    json j = config_to_json(cfg);
    j.erase("threads");
    j.erase("output");
    return fnv1a_hex(j.dump());
}

std::string output_stamp(const std::string& fingerprint) {
    return std::string(kToolName) + " " + kToolVersion + " fingerprint=" + fingerprint;
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: no column named '" + name + "'");
    const auto idx = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (idx >= row.size()) throw ConfigError("csv: short row");
        try {
            out.push_back(std::stod(row[idx]));
        } catch (const std::exception&) {
            throw ConfigError("csv: non-numeric value '" + row[idx] + "' in column '" + name + "'");
        }
    }
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
            continue;
        }
        if (t.header.empty()) t.header = split(line);
        else t.rows.push_back(split(line));
    }
    if (t.header.empty()) throw ConfigError("csv '" + path + "': no header row");
    return t;
}

}  // namespace htrm
