#include "aer/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "aer/errors.hpp"
#include "aer/hashing.hpp"

namespace aer {

namespace {

std::string_view trim(std::string_view s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
    }
    return out;
}

double parse_double(std::string_view key, std::string_view v) {
    std::string s(v);
    char* end = nullptr;
    double out = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" + s + "'");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: '" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view v) {
    std::filesystem::path p{std::string(v)};
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

}  // namespace

void RunConfig::validate() const {
    try {
        hybrid.validate();
        bm25.validate();
        sampling.validate();
        aggregation.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (hybrid.k_dense + hybrid.k_sparse == 0) throw ConfigError("config: at least one entry point is required");
    if (embedder.dim == 0) throw ConfigError("config: embedder.dim must be positive");
    if (workers == 0) throw ConfigError("config: workers must be positive");
    if (max_iterations < 1) throw ConfigError("config: max_iterations must be >= 1");
    if (llm.kind == LlmKind::MockScripted && llm.script_path.empty()) {
        throw ConfigError("config: llm.kind = mock-scripted needs llm.script");
    }
    if (llm.kind == LlmKind::Remote && llm.endpoint.empty()) throw ConfigError("config: llm.kind = remote needs llm.endpoint");
    if (embedder.kind == EmbedderKind::Remote && embedder.endpoint.empty()) {
        throw ConfigError("config: embedder.kind = remote needs embedder.endpoint");
    }
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view v, const std::filesystem::path& base) {
    static const auto table = [] {
        std::map<std::string, std::function<void(RunConfig&, std::string_view, std::string_view,
                                                  const std::filesystem::path&)>,
                 std::less<>>
            t;
        auto path_key = [&t](const char* name, std::filesystem::path RunConfig::*member) {
            t[name] = [member](RunConfig& c, std::string_view, std::string_view v, const std::filesystem::path& b) {
                c.*member = resolve(b, v);
            };
        };
        path_key("questions", &RunConfig::questions);
        path_key("docs", &RunConfig::docs);
        path_key("out", &RunConfig::out_dir);
        t["alpha"] = [](RunConfig& c, auto k, auto v, auto&) { c.hybrid.alpha = parse_double(k, v); };
        t["edge_threshold"] = [](RunConfig& c, auto k, auto v, auto&) { c.hybrid.edge_threshold = parse_double(k, v); };
        t["k_dense"] = [](RunConfig& c, auto k, auto v, auto&) { c.hybrid.k_dense = parse_number<std::size_t>(k, v); };
        t["k_sparse"] = [](RunConfig& c, auto k, auto v, auto&) { c.hybrid.k_sparse = parse_number<std::size_t>(k, v); };
        t["bm25.k1"] = [](RunConfig& c, auto k, auto v, auto&) { c.bm25.k1 = parse_double(k, v); };
        t["bm25.b"] = [](RunConfig& c, auto k, auto v, auto&) { c.bm25.b = parse_double(k, v); };
        t["bm25.delta"] = [](RunConfig& c, auto k, auto v, auto&) { c.bm25.delta = parse_double(k, v); };
        t["bm25.entity_boost"] = [](RunConfig& c, auto k, auto v, auto&) { c.bm25.entity_boost = parse_double(k, v); };
        t["embedder.kind"] = [](RunConfig& c, auto k, auto v, auto&) {
            if (v == "mock") {
                c.embedder.kind = EmbedderKind::Mock;
            } else if (v == "remote") {
                c.embedder.kind = EmbedderKind::Remote;
            } else {
                throw ConfigError("config: '" + std::string(k) + "' must be mock or remote");
            }
        };
        t["embedder.dim"] = [](RunConfig& c, auto k, auto v, auto&) { c.embedder.dim = parse_number<std::size_t>(k, v); };
        t["embedder.endpoint"] = [](RunConfig& c, auto, auto v, auto&) { c.embedder.endpoint = std::string(v); };
        t["embedder.model"] = [](RunConfig& c, auto, auto v, auto&) { c.embedder.model = std::string(v); };
        t["embedder.token_env"] = [](RunConfig& c, auto, auto v, auto&) { c.embedder.token_env = std::string(v); };
        t["embedder.query_input_type"] = [](RunConfig& c, auto, auto v, auto&) {
            c.embedder.query_input_type = std::string(v);
        };
        t["embedder.document_input_type"] = [](RunConfig& c, auto, auto v, auto&) {
            c.embedder.document_input_type = std::string(v);
        };
        t["embedder.batch_size"] = [](RunConfig& c, auto k, auto v, auto&) {
            c.embedder.batch_size = parse_number<std::size_t>(k, v);
        };
        t["embedder.max_in_flight"] = [](RunConfig& c, auto k, auto v, auto&) {
            c.embedder.max_in_flight = parse_number<std::size_t>(k, v);
        };
        t["embedder.max_attempts"] = [](RunConfig& c, auto k, auto v, auto&) {
            c.embedder.max_attempts = parse_number<int>(k, v);
        };
        t["embedder.cache_dir"] = [](RunConfig& c, auto, auto v, const std::filesystem::path& b) {
            c.embedder.cache_dir = resolve(b, v);
        };
        t["llm.kind"] = [](RunConfig& c, auto, auto v, auto&) { c.llm.kind = llm_kind_from_string(v); };
        t["llm.script"] = [](RunConfig& c, auto, auto v, const std::filesystem::path& b) {
            c.llm.script_path = resolve(b, v);
        };
        t["llm.endpoint"] = [](RunConfig& c, auto, auto v, auto&) { c.llm.endpoint = std::string(v); };
        t["llm.model"] = [](RunConfig& c, auto, auto v, auto&) { c.llm.model = std::string(v); };
        t["llm.token_env"] = [](RunConfig& c, auto, auto v, auto&) { c.llm.token_env = std::string(v); };
        t["llm.max_attempts"] = [](RunConfig& c, auto k, auto v, auto&) { c.llm.max_attempts = parse_number<int>(k, v); };
        t["llm.timeout_seconds"] = [](RunConfig& c, auto k, auto v, auto&) {
            c.llm.timeout_seconds = parse_number<int>(k, v);
        };
        t["k"] = [](RunConfig& c, auto k, auto v, auto&) { c.sampling.k = parse_number<int>(k, v); };
        t["temperature"] = [](RunConfig& c, auto k, auto v, auto&) { c.sampling.temperature = parse_double(k, v); };
        t["max_retries"] = [](RunConfig& c, auto k, auto v, auto&) {
            c.sampling.max_retries_on_parse_failure = parse_number<int>(k, v);
        };
        t["theta"] = [](RunConfig& c, auto k, auto v, auto&) { c.aggregation.theta = parse_double(k, v); };
        t["strategy"] = [](RunConfig& c, auto, auto v, auto&) {
            try {
                c.aggregation.theta = strategy_theta(v);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        };
        t["heuristics"] = [](RunConfig& c, auto k, auto v, auto&) { c.heuristics = parse_bool(k, v); };
        t["topic_union"] = [](RunConfig& c, auto k, auto v, auto&) { c.topic_union = parse_bool(k, v); };
        t["seed"] = [](RunConfig& c, auto k, auto v, auto&) {
            c.seed = parse_number<std::uint64_t>(k, v);
            c.embedder.seed = c.seed;
        };
        t["workers"] = [](RunConfig& c, auto k, auto v, auto&) { c.workers = parse_number<std::size_t>(k, v); };
        t["max_iterations"] = [](RunConfig& c, auto k, auto v, auto&) { c.max_iterations = parse_number<int>(k, v); };
        t["model"] = [](RunConfig& c, auto, auto v, auto&) { c.model_label = std::string(v); };
        return t;
    }();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config: unknown key '" + std::string(key) + "'");
    it->second(c, key, v, base);
}

void apply_config_text(RunConfig& cfg, std::string_view text, const std::filesystem::path& base_dir,
                       const std::string& source_name) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
        } catch (const ConfigError& e) {
            throw ConfigError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str(), path.parent_path(), path.string());
}

std::string canonical_config(const RunConfig& c) {
    std::ostringstream s;
    s << "alpha = " << fmt(c.hybrid.alpha) << "\n"
      << "edge_threshold = " << fmt(c.hybrid.edge_threshold) << "\n"
      << "k_dense = " << c.hybrid.k_dense << "\n"
      << "k_sparse = " << c.hybrid.k_sparse << "\n"
      << "bm25.k1 = " << fmt(c.bm25.k1) << "\n"
      << "bm25.b = " << fmt(c.bm25.b) << "\n"
      << "bm25.delta = " << fmt(c.bm25.delta) << "\n"
      << "bm25.entity_boost = " << fmt(c.bm25.entity_boost) << "\n"
      << "embedder.kind = " << (c.embedder.kind == EmbedderKind::Mock ? "mock" : "remote") << "\n"
      << "embedder.dim = " << c.embedder.dim << "\n"
      << "embedder.model = " << c.embedder.model << "\n"
      << "embedder.query_input_type = " << c.embedder.query_input_type << "\n"
      << "embedder.document_input_type = " << c.embedder.document_input_type << "\n"
      << "llm.kind = " << to_string(c.llm.kind) << "\n"
      << "llm.model = " << c.llm.model << "\n"
      << "k = " << c.sampling.k << "\n"
      << "temperature = " << fmt(c.sampling.temperature) << "\n"
      << "max_retries = " << c.sampling.max_retries_on_parse_failure << "\n"
      << "theta = " << fmt(c.aggregation.theta) << "\n"
      << "heuristics = " << (c.heuristics ? "true" : "false") << "\n"
      << "topic_union = " << (c.topic_union ? "true" : "false") << "\n"
      << "seed = " << c.seed << "\n"
      << "max_iterations = " << c.max_iterations << "\n";
    return s.str();
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_config(cfg)); }

}  // namespace aer
