#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dynbatch {

// Every CLI run drops a manifest.json next to its outputs: the exact
// command, the config hash, seeds and parameter grids.  Re-running the
// recorded command against the same config reproduces every CSV
// byte-for-byte (the manifest itself differs only in its timestamp).
nlohmann::json make_manifest(const std::string& command,
                             const std::vector<std::string>& args,
                             const std::string& config_hash,
                             const nlohmann::json& params,
                             const std::vector<std::string>& outputs);

void write_json_file(const std::string& path, const nlohmann::json& j);

std::string iso8601_utc_now();

}  // namespace dynbatch
