#include "dynbatch/config_io.hpp"

#include <cstdint>
#include <fstream>

#include "dynbatch/errors.hpp"

namespace dynbatch {

using nlohmann::json;

namespace {

BatchCurve curve_from_json(const json& j, bool allow_log) {
    if (!j.is_object() || !j.contains("form"))
        throw validation_error("batch curve must be an object with a \"form\" field");
    const std::string form = j.at("form").get<std::string>();
    if (form == "affine")
        return BatchCurve::affine(j.at("a").get<double>(), j.at("c").get<double>());
    if (form == "constant") return BatchCurve::constant(j.at("c").get<double>());
    if (form == "log" && allow_log)
        return BatchCurve::logarithmic(j.at("a").get<double>(), j.at("c").get<double>());
    if (form == "table")
        return BatchCurve::table(j.at("values").get<std::vector<double>>());
    throw validation_error("unknown batch curve form \"" + form + "\"");
}

json curve_to_json(const BatchCurve& f) {
    switch (f.form) {
        case BatchCurve::Form::affine: return {{"form", "affine"}, {"a", f.a}, {"c", f.c}};
        case BatchCurve::Form::constant: return {{"form", "constant"}, {"c", f.c}};
        case BatchCurve::Form::logarithmic: return {{"form", "log"}, {"a", f.a}, {"c", f.c}};
        case BatchCurve::Form::table: return {{"form", "table"}, {"values", f.values}};
    }
    return {};
}

ServiceDistribution dist_from_json(const json& j) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "deterministic") return ServiceDistribution::deterministic();
    if (family == "exponential") return ServiceDistribution::exponential();
    if (family == "erlang") return ServiceDistribution::erlang(j.at("shape").get<int>());
    if (family == "hyperexponential") {
        if (j.contains("scv"))
            return ServiceDistribution::hyperexponential_scv(j.at("scv").get<double>());
        return ServiceDistribution::hyperexponential(
            j.at("weights").get<std::vector<double>>(),
            j.at("mean_scales").get<std::vector<double>>());
    }
    throw validation_error("unknown service distribution family \"" + family + "\"");
}

json dist_to_json(const ServiceDistribution& d) {
    switch (d.family) {
        case ServiceDistribution::Family::deterministic: return {{"family", "deterministic"}};
        case ServiceDistribution::Family::exponential: return {{"family", "exponential"}};
        case ServiceDistribution::Family::erlang:
            return {{"family", "erlang"}, {"shape", d.shape}};
        case ServiceDistribution::Family::hyperexponential:
            return {{"family", "hyperexponential"},
                    {"weights", d.weights},
                    {"mean_scales", d.mean_scales}};
    }
    return {};
}

}  // namespace

SystemConfig config_from_json(const json& j) {
    SystemConfig cfg;
    try {
        cfg.b_min = j.value("b_min", 1);
        cfg.b_max = j.at("b_max").get<int>();
        cfg.latency = curve_from_json(j.at("latency"), /*allow_log=*/false);
        cfg.energy = curve_from_json(j.at("energy"), /*allow_log=*/true);
        if (j.contains("distribution")) cfg.dist = dist_from_json(j.at("distribution"));

        const bool has_lambda = j.contains("lambda");
        const bool has_rho = j.contains("rho");
        if (has_lambda == has_rho)
            throw validation_error("config must set exactly one of \"lambda\" and \"rho\"");
        if (has_lambda)
            cfg.lambda = j.at("lambda").get<double>();
        else
            cfg.set_rho(j.at("rho").get<double>());
    } catch (const json::exception& e) {
        throw validation_error(std::string("bad config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const SystemConfig& cfg) {
    return {{"lambda", cfg.lambda},
            {"b_min", cfg.b_min},
            {"b_max", cfg.b_max},
            {"latency", curve_to_json(cfg.latency)},
            {"energy", curve_to_json(cfg.energy)},
            {"distribution", dist_to_json(cfg.dist)}};
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw validation_error("config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const SystemConfig& cfg) {
    // nlohmann::json orders keys alphabetically, so dump() is canonical.
    const std::string s = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dynbatch
