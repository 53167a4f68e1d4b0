#include "dynbatch/manifest.hpp"

#include <ctime>
#include <fstream>

#include "dynbatch/errors.hpp"

namespace dynbatch {

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json make_manifest(const std::string& command,
                             const std::vector<std::string>& args,
                             const std::string& config_hash,
                             const nlohmann::json& params,
                             const std::vector<std::string>& outputs) {
    return {{"tool", "dynbatch"},
            {"version", "0.1.0"},
            {"command", command},
            {"args", args},
            {"config_hash", config_hash},
            {"params", params},
            {"outputs", outputs},
            {"created", iso8601_utc_now()}};
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace dynbatch
