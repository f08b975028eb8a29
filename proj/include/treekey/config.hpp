#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treekey/tree_source.hpp"

namespace treekey {

struct ProtocolConfig {
    double delta = 0.2;
    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    int nout_cap = 10000;
    double extractor_margin = 0.05;
    double extractor_floor = 0.05;
    int sigma_samples = 100000;
    int chain_retries = 20;
};

struct EvaluateConfig {
    int bins = 16;
    int permutations = 200;
};

// Parsed run configuration. Vertex names map to dense ids in sorted-name
// order; everything downstream works on ids.
struct Config {
    CorrelatedTree tree;
    std::vector<std::string> names;          // by id
    std::map<std::string, VertexId> id_of;

    bool has_rates = false;
    int p = 0;
    int n = 0;
    std::map<VertexId, int> code_dims;

    ProtocolConfig protocol;
    EvaluateConfig evaluate;
    std::optional<VertexId> root;        // forced communicating-set root
    std::optional<int> middle_dim;       // forced analog sublattice dimension
};

// Both throw ConfigError on malformed input, unknown keys included.
Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);

}  // namespace treekey
