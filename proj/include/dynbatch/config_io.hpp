#pragma once

#include <string>

#include <json.hpp>

#include "dynbatch/queue_model.hpp"

namespace dynbatch {

// JSON schema (see configs/ for examples):
//   {
//     "lambda": 2.0712,            // or "rho": 0.7 -- exactly one of the two
//     "b_min": 1, "b_max": 32,
//     "latency":  {"form": "affine", "a": 0.3051, "c": 1.0524},
//                 {"form": "constant", "c": 6.0859},
//                 {"form": "table", "values": [...]},   // values[b-1], b = 1..b_max
//     "energy":   {"form": "affine" | "log" | "table", ...},
//     "distribution": {"family": "deterministic" | "exponential"}
//                     {"family": "erlang", "shape": 2}
//                     {"family": "hyperexponential", "weights": [...], "mean_scales": [...]}
//                     {"family": "hyperexponential", "scv": 2.0}
//   }

SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);

// Reads, parses and validates a config file.  Throws io_error if the file
// cannot be read, validation_error on schema or invariant violations.
SystemConfig load_config(const std::string& path);

// FNV-1a hash of the canonical serialization; stable across runs, recorded
// in run manifests so outputs can be traced back to their exact inputs.
std::string config_hash(const SystemConfig& cfg);

}  // namespace dynbatch
