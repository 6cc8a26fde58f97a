#include "svhom/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace svhom {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_quote = !in_quote;
        if (line[i] == '#' && !in_quote) return line.substr(0, i);
    }
    return line;
}

double parse_number(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("config: '" + where + "' is not a number: '" + s + "'");
    }
}

std::vector<std::string> split_list(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ConfigError("config: '" + where + "' is not a [list]: '" + s + "'");
    std::vector<std::string> out;
    std::string body = t.substr(1, t.size() - 2);
    std::stringstream ss(body);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const std::string c = trim(cell);
        if (!c.empty()) out.push_back(c);
    }
    return out;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

RawConfig RawConfig::parse_string(const std::string& text) {
    RawConfig cfg;
    std::stringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
            cfg.sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        auto& kv = cfg.sections[section];
        if (kv.count(key))
            throw ConfigError("config: duplicate key '" + section + "." + key + "'");
        kv[key] = val;
    }
    return cfg;
}

RawConfig RawConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

SectionReader::SectionReader(const RawConfig& cfg, const std::string& section)
    : section_(section) {
    auto it = cfg.sections.find(section);
    kv_ = it == cfg.sections.end() ? nullptr : &it->second;
    if (kv_)
        for (const auto& [k, v] : *kv_) consumed_[k] = false;
}

bool SectionReader::has(const std::string& key) const { return kv_ && kv_->count(key); }

std::string SectionReader::raw(const std::string& key) {
    consumed_[key] = true;
    return kv_->at(key);
}

double SectionReader::number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return parse_number(raw(key), section_ + "." + key);
}

double SectionReader::number_required(const std::string& key) {
    if (!has(key)) throw ConfigError("config: missing required key '" + section_ + "." + key + "'");
    return parse_number(raw(key), section_ + "." + key);
}

std::int64_t SectionReader::integer(const std::string& key, std::int64_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    return static_cast<std::int64_t>(v);
}

bool SectionReader::boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config: '" + section_ + "." + key + "' is not a boolean");
}

std::string SectionReader::text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return unquote(raw(key));
}

std::vector<double> SectionReader::numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& c : split_list(raw(key), section_ + "." + key))
        out.push_back(parse_number(c, section_ + "." + key));
    return out;
}

std::vector<std::string> SectionReader::texts(const std::string& key,
                                              std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    std::vector<std::string> out;
    for (const auto& c : split_list(raw(key), section_ + "." + key)) out.push_back(unquote(c));
    return out;
}

std::map<std::string, double> SectionReader::number_group(const std::string& prefix) {
    std::map<std::string, double> out;
    if (!kv_) return out;
    for (const auto& [k, v] : *kv_)
        if (k.rfind(prefix, 0) == 0) {
            consumed_[k] = true;
            out[k.substr(prefix.size())] = parse_number(v, section_ + "." + k);
        }
    return out;
}

void SectionReader::finish() {
    for (const auto& [k, used] : consumed_)
        if (!used) throw ConfigError("config: unknown key '" + section_ + "." + k + "'");
}

const std::vector<std::string>& known_stages() {
    static const std::vector<std::string> s = {"validate", "cell", "measure", "effham", "hj",
                                               "rate",     "mc",   "pde2d",   "ldp"};
    return s;
}

RunConfig RunConfig::load(const std::string& path) {
    const RawConfig raw = RawConfig::parse_file(path);
    for (const auto& [name, kv] : raw.sections) {
        static const std::vector<std::string> known = {
            "run", "model", "fast_grid", "validate", "cell",  "measure", "effham",
            "hj",  "rate",  "mc",        "pde2d",    "ldp"};
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw ConfigError("config: unknown section '[" + name + "]'");
    }

    RunConfig c;
    c.config_path = path;

    {
        SectionReader r(raw, "run");
        c.stages = r.texts("stages", known_stages());
        c.out_dir = r.text("out", c.out_dir);
        c.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<std::int64_t>(c.seed)));
        c.threads = static_cast<int>(r.integer("threads", c.threads));
        r.finish();
        for (const auto& s : c.stages)
            if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end())
                throw ConfigError("config: unknown stage '" + s + "'");
        require(!c.stages.empty(), "config: run.stages must be nonempty");
    }
    {
        SectionReader r(raw, "model");
        c.family = r.text("family", "");
        if (c.family.empty()) throw ConfigError("config: model.family is required");
        c.family_params = r.number_group("params.");
        if (r.has("alpha")) c.family_params["alpha"] = r.number("alpha", 2.0);
        r.finish();
    }
    {
        SectionReader r(raw, "fast_grid");
        c.fast_y_max = r.number("y_max", c.fast_y_max);
        c.fast_h = r.number("h", c.fast_h);
        r.finish();
    }
    {
        SectionReader r(raw, "validate");
        c.validate_budget = static_cast<int>(r.integer("budget", c.validate_budget));
        r.finish();
    }
    {
        SectionReader r(raw, "cell");
        c.cell_deltas = r.numbers("deltas", c.cell_deltas);
        c.cell_xbar = r.numbers("xbar", c.cell_xbar);
        c.cell_pbar = r.numbers("pbar", c.cell_pbar);
        r.finish();
    }
    {
        SectionReader r(raw, "measure");
        c.measure_h = r.number("h", c.measure_h);
        r.finish();
    }
    {
        SectionReader r(raw, "effham");
        c.x_min = r.number("x_min", c.x_min);
        c.x_max = r.number("x_max", c.x_max);
        c.x_h = r.number("x_h", c.x_h);
        c.p_min = r.number("p_min", c.p_min);
        c.p_max = r.number("p_max", c.p_max);
        c.p_h = r.number("p_h", c.p_h);
        c.q_min = r.number("q_min", c.q_min);
        c.q_max = r.number("q_max", c.q_max);
        c.q_h = r.number("q_h", c.q_h);
        r.finish();
    }
    {
        SectionReader r(raw, "hj");
        c.payoff_name = r.text("payoff", c.payoff_name);
        c.payoff_params = r.number_group("payoff_params.");
        c.hj_T = r.number("T", c.hj_T);
        c.hj_cfl = r.number("cfl", c.hj_cfl);
        c.hj_x_min = r.number("x_min", c.hj_x_min);
        c.hj_x_max = r.number("x_max", c.hj_x_max);
        c.hj_x_h = r.number("x_h", c.hj_x_h);
        r.finish();
    }
    {
        SectionReader r(raw, "rate");
        c.rate_x0 = r.numbers("x0", c.rate_x0);
        c.rate_x = r.numbers("x", c.rate_x);
        c.rate_t_list = r.numbers("t_list", c.rate_t_list);
        c.rate_k_steps = static_cast<int>(r.integer("k_steps", c.rate_k_steps));
        c.rate_x_h = r.number("x_h", c.rate_x_h);
        r.finish();
    }
    {
        SectionReader r(raw, "mc");
        c.mc_eps_list = r.numbers("eps_list", c.mc_eps_list);
        c.mc_n_paths = r.integer("n_paths", c.mc_n_paths);
        c.mc_t = r.number("t", c.mc_t);
        c.mc_dt = r.number("dt", c.mc_dt);
        c.mc_x0 = r.numbers("x0", c.mc_x0);
        c.mc_y0 = r.numbers("y0", c.mc_y0);
        r.finish();
    }
    {
        SectionReader r(raw, "pde2d");
        c.pde_x_min = r.number("x_min", c.pde_x_min);
        c.pde_x_max = r.number("x_max", c.pde_x_max);
        c.pde_h = r.number("h", c.pde_h);
        c.pde_dt = r.number("dt", c.pde_dt);
        r.finish();
    }
    {
        SectionReader r(raw, "ldp");
        c.ldp_level = r.number("level", c.ldp_level);
        c.ldp_eps_list = r.numbers("eps_list", c.ldp_eps_list);
        c.ldp_n_paths = r.integer("n_paths", c.ldp_n_paths);
        c.ldp_t = r.number("t", c.ldp_t);
        r.finish();
    }
    return c;
}

}  // namespace svhom
