#include "treekey/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "treekey/errors.hpp"
#include "treekey/protocol.hpp"

namespace treekey {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& item : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end()) {
            throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
        }
    }
}

const json& require(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError(std::string(where) + " is missing \"" + key + "\"");
    }
    return *it;
}

double as_number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + " must be a number");
    return j.get<double>();
}

long long as_integer(const json& j, const std::string& what) {
    if (!j.is_number_integer()) throw ConfigError(what + " must be an integer");
    return j.get<long long>();
}

int as_int_in(const json& j, const std::string& what, long long lo, long long hi) {
    const long long v = as_integer(j, what);
    if (v < lo || v > hi) {
        std::ostringstream os;
        os << what << " must be in [" << lo << ", " << hi << "]";
        throw ConfigError(os.str());
    }
    return static_cast<int>(v);
}

std::string as_string(const json& j, const std::string& what) {
    if (!j.is_string()) throw ConfigError(what + " must be a string");
    return j.get<std::string>();
}

void parse_tree(const json& j, Config& cfg) {
    check_keys(j, "\"tree\"", {"vertices", "edges"});
    const json& verts = require(j, "vertices", "\"tree\"");
    if (!verts.is_array() || verts.empty()) {
        throw ConfigError("\"tree.vertices\" must be a nonempty array");
    }
    std::set<std::string> seen;
    for (const json& v : verts) {
        const std::string name = as_string(v, "vertex name");
        if (!seen.insert(name).second) {
            throw ConfigError("duplicate vertex name \"" + name + "\"");
        }
    }
    cfg.names.assign(seen.begin(), seen.end());
    for (std::size_t i = 0; i < cfg.names.size(); ++i) {
        cfg.id_of[cfg.names[i]] = static_cast<VertexId>(i);
    }

    std::vector<TreeEdge> edges;
    std::map<VertexId, std::string> names_by_id;
    for (const auto& [name, id] : cfg.id_of) names_by_id[id] = name;

    const json& jedges = require(j, "edges", "\"tree\"");
    if (!jedges.is_array()) throw ConfigError("\"tree.edges\" must be an array");
    for (const json& e : jedges) {
        check_keys(e, "tree edge", {"u", "v", "rho"});
        const std::string un = as_string(require(e, "u", "tree edge"), "edge endpoint");
        const std::string vn = as_string(require(e, "v", "tree edge"), "edge endpoint");
        auto iu = cfg.id_of.find(un);
        auto iv = cfg.id_of.find(vn);
        if (iu == cfg.id_of.end()) throw ConfigError("edge endpoint \"" + un + "\" is not a vertex");
        if (iv == cfg.id_of.end()) throw ConfigError("edge endpoint \"" + vn + "\" is not a vertex");
        TreeEdge edge;
        edge.u = iu->second;
        edge.v = iv->second;
        edge.rho = as_number(require(e, "rho", "tree edge"), "edge correlation");
        edges.push_back(edge);
    }

    std::vector<VertexId> ids;
    for (std::size_t i = 0; i < cfg.names.size(); ++i) ids.push_back(static_cast<VertexId>(i));
    try {
        cfg.tree = build_tree(ids, edges, names_by_id);
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid tree: ") + e.what());
    }
}

void parse_rates(const json& j, Config& cfg) {
    check_keys(j, "\"rates\"", {"p", "n", "k", "bits"});
    cfg.p = as_int_in(require(j, "p", "\"rates\""), "\"rates.p\"", 2, 1 << 20);
    for (int d = 2; d * d <= cfg.p; ++d) {
        if (cfg.p % d == 0) throw ConfigError("\"rates.p\" must be prime");
    }
    cfg.n = as_int_in(require(j, "n", "\"rates\""), "\"rates.n\"", 1, 64);
    const bool has_k = j.contains("k");
    const bool has_bits = j.contains("bits");
    if (has_k == has_bits) {
        throw ConfigError("\"rates\" needs exactly one of \"k\" or \"bits\"");
    }

    auto dim_for = [&](const json& value, const std::string& what) {
        if (has_k) return as_int_in(value, what, 1, cfg.n);
        return rate_to_code_dim(as_number(value, what), cfg.p, cfg.n);
    };

    const json& spec = has_k ? j.at("k") : j.at("bits");
    if (spec.is_object()) {
        for (const auto& item : spec.items()) {
            auto it = cfg.id_of.find(item.key());
            if (it == cfg.id_of.end()) {
                throw ConfigError("rate entry for unknown vertex \"" + item.key() + "\"");
            }
            cfg.code_dims[it->second] = dim_for(item.value(), "rate for \"" + item.key() + "\"");
        }
        for (const auto& [name, id] : cfg.id_of) {
            if (!cfg.code_dims.count(id)) {
                throw ConfigError("no rate given for vertex \"" + name + "\"");
            }
        }
    } else {
        const int k = dim_for(spec, "shared rate");
        for (const auto& [name, id] : cfg.id_of) {
            static_cast<void>(name);
            cfg.code_dims[id] = k;
        }
    }
    cfg.has_rates = true;
}

void parse_protocol(const json& j, Config& cfg) {
    check_keys(j, "\"protocol\"",
               {"delta", "trials", "seed", "threads", "nout_cap", "extractor_margin",
                "extractor_floor", "sigma_samples", "chain_retries", "root", "middle_dim"});
    ProtocolConfig& pc = cfg.protocol;
    if (j.contains("delta")) {
        pc.delta = as_number(j.at("delta"), "\"protocol.delta\"");
        if (!(pc.delta > 0.0 && pc.delta < 1.0)) {
            throw ConfigError("\"protocol.delta\" must be in (0, 1)");
        }
    }
    if (j.contains("trials")) {
        pc.trials = as_int_in(j.at("trials"), "\"protocol.trials\"", 1, 1000000);
    }
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_integer()) throw ConfigError("\"protocol.seed\" must be an integer");
        pc.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                         : static_cast<std::uint64_t>(s.get<long long>());
    }
    if (j.contains("threads")) {
        pc.threads = as_int_in(j.at("threads"), "\"protocol.threads\"", 1, 256);
    }
    if (j.contains("nout_cap")) {
        pc.nout_cap = as_int_in(j.at("nout_cap"), "\"protocol.nout_cap\"", 2, 1 << 20);
    }
    if (j.contains("extractor_margin")) {
        pc.extractor_margin = as_number(j.at("extractor_margin"), "\"protocol.extractor_margin\"");
        if (pc.extractor_margin < 0.0) throw ConfigError("\"protocol.extractor_margin\" must be >= 0");
    }
    if (j.contains("extractor_floor")) {
        pc.extractor_floor = as_number(j.at("extractor_floor"), "\"protocol.extractor_floor\"");
        if (!(pc.extractor_floor > 0.0)) throw ConfigError("\"protocol.extractor_floor\" must be > 0");
    }
    if (j.contains("sigma_samples")) {
        pc.sigma_samples =
            as_int_in(j.at("sigma_samples"), "\"protocol.sigma_samples\"", 10000, 100000000);
    }
    if (j.contains("chain_retries")) {
        pc.chain_retries = as_int_in(j.at("chain_retries"), "\"protocol.chain_retries\"", 0, 1000);
    }
    if (j.contains("root")) {
        const std::string name = as_string(j.at("root"), "\"protocol.root\"");
        auto it = cfg.id_of.find(name);
        if (it == cfg.id_of.end()) {
            throw ConfigError("\"protocol.root\" names unknown vertex \"" + name + "\"");
        }
        cfg.root = it->second;
    }
    if (j.contains("middle_dim")) {
        cfg.middle_dim = as_int_in(j.at("middle_dim"), "\"protocol.middle_dim\"", 0, 64);
    }
}

void parse_evaluate(const json& j, Config& cfg) {
    check_keys(j, "\"evaluate\"", {"bins", "permutations"});
    if (j.contains("bins")) {
        cfg.evaluate.bins = as_int_in(j.at("bins"), "\"evaluate.bins\"", 2, 4096);
    }
    if (j.contains("permutations")) {
        cfg.evaluate.permutations =
            as_int_in(j.at("permutations"), "\"evaluate.permutations\"", 1, 1000000);
    }
}

}  // namespace

Config parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    check_keys(j, "the top level", {"tree", "rates", "protocol", "evaluate"});
    Config cfg;
    parse_tree(require(j, "tree", "the top level"), cfg);
    if (j.contains("rates")) parse_rates(j.at("rates"), cfg);
    if (j.contains("protocol")) parse_protocol(j.at("protocol"), cfg);
    if (j.contains("evaluate")) parse_evaluate(j.at("evaluate"), cfg);
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace treekey
