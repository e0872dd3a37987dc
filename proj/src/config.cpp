#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "fbsde_ns/harness.hpp"

namespace fbsde {

ConfigError::ConfigError(const std::string& msg, int line_no)
    : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg), line(line_no) {}

std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::solve: return "solve";
    case Experiment::taylor_green: return "taylor_green";
    case Experiment::visc_sweep: return "visc_sweep";
    case Experiment::invariants: return "invariants";
    }
    return "?";
}

std::string to_string(InitialCondition c) {
    switch (c) {
    case InitialCondition::taylor_green: return "taylor_green";
    case InitialCondition::zero: return "zero";
    case InitialCondition::constant: return "constant";
    case InitialCondition::random: return "random";
    }
    return "?";
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::string fmt(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& s, int line, const std::string& key) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x))
        throw ConfigError("key '" + key + "' expects a real number, got '" + s + "'", line);
    return x;
}

long long to_integer(const std::string& s, int line, const std::string& key) {
    long long x = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'", line);
    return x;
}

int to_int(const std::string& s, int line, const std::string& key) {
    const long long x = to_integer(s, line, key);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError("key '" + key + "' is out of range", line);
    return static_cast<int>(x);
}

bool to_bool(const std::string& s, int line, const std::string& key) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + s + "'", line);
}

template <typename E>
E to_enum(const std::string& s, int line, const std::string& key, std::initializer_list<E> values) {
    std::string names;
    for (E v : values) {
        if (to_string(v) == s) return v;
        names += (names.empty() ? "" : ", ") + to_string(v);
    }
    throw ConfigError("key '" + key + "' expects one of {" + names + "}, got '" + s + "'", line);
}

NormSpec to_norm(const std::string& s, int line, const std::string& key) {
    // r/p/q
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '/')) parts.push_back(trim(item));
    if (parts.size() != 3) throw ConfigError("key '" + key + "' expects entries r/p/q, got '" + s + "'", line);
    return NormSpec{to_double(parts[0], line, key), to_double(parts[1], line, key), to_double(parts[2], line, key)};
}

struct Key {
    const char* section;
    const char* name;
    const char* type;
    const char* doc;
    std::function<void(ExperimentConfig&, const std::string&, int)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& keys() {
    using C = ExperimentConfig;
    using S = const std::string&;
    static const std::vector<Key> table = {
        {"grid", "dim", "int", "spatial dimension, 2 or 3",
         [](C& c, S v, int l) { c.d = to_int(v, l, "dim"); }, [](const C& c) { return std::to_string(c.d); }},
        {"grid", "n", "int", "points per axis, a power of two >= 8",
         [](C& c, S v, int l) { c.n = to_int(v, l, "n"); }, [](const C& c) { return std::to_string(c.n); }},
        {"grid", "box_length", "real", "period L of the torus",
         [](C& c, S v, int l) { c.box_length = to_double(v, l, "box_length"); },
         [](const C& c) { return fmt(c.box_length); }},

        {"solver", "viscosity", "real", "nu >= 0",
         [](C& c, S v, int l) { c.solver.nu = to_double(v, l, "viscosity"); },
         [](const C& c) { return fmt(c.solver.nu); }},
        {"solver", "horizon", "real", "final time T",
         [](C& c, S v, int l) { c.solver.T = to_double(v, l, "horizon"); },
         [](const C& c) { return fmt(c.solver.T); }},
        {"solver", "time_steps", "int", "output intervals on [0, T]",
         [](C& c, S v, int l) { c.solver.time_steps = to_int(v, l, "time_steps"); },
         [](const C& c) { return std::to_string(c.solver.time_steps); }},
        {"solver", "substeps", "int", "path steps per output interval",
         [](C& c, S v, int l) { c.solver.substeps = to_int(v, l, "substeps"); },
         [](const C& c) { return std::to_string(c.solver.substeps); }},
        {"solver", "paths", "int", "Monte-Carlo paths per grid point, >= 100",
         [](C& c, S v, int l) { c.solver.paths = to_int(v, l, "paths"); },
         [](const C& c) { return std::to_string(c.solver.paths); }},
        {"solver", "batches", "int", "batches for batch-means standard errors",
         [](C& c, S v, int l) { c.solver.batches = to_int(v, l, "batches"); },
         [](const C& c) { return std::to_string(c.solver.batches); }},
        {"solver", "smoothness", "real", "r of the full norm; monitoring uses max(r - 1, 1)",
         [](C& c, S v, int l) { c.solver.smoothness = to_double(v, l, "smoothness"); },
         [](const C& c) { return fmt(c.solver.smoothness); }},
        {"solver", "p", "real", "integrability of both norms",
         [](C& c, S v, int l) { c.solver.p = to_double(v, l, "p"); }, [](const C& c) { return fmt(c.solver.p); }},
        {"solver", "q", "real", "summability of both norms (inf allowed)",
         [](C& c, S v, int l) { c.solver.q = to_double(v, l, "q"); }, [](const C& c) { return fmt(c.solver.q); }},
        {"solver", "tol", "real", "stopping residual relative to the monitoring norm of u0",
         [](C& c, S v, int l) { c.solver.tol = to_double(v, l, "tol"); },
         [](const C& c) { return fmt(c.solver.tol); }},
        {"solver", "max_iters", "int", "Picard iterations per horizon",
         [](C& c, S v, int l) { c.solver.max_iters = to_int(v, l, "max_iters"); },
         [](const C& c) { return std::to_string(c.solver.max_iters); }},
        {"solver", "max_halvings", "int", "horizon halvings after divergence",
         [](C& c, S v, int l) { c.solver.max_halvings = to_int(v, l, "max_halvings"); },
         [](const C& c) { return std::to_string(c.solver.max_halvings); }},
        {"solver", "scheme", "enum", "mc_drifted or mild",
         [](C& c, S v, int l) {
             c.solver.scheme = to_enum(v, l, "scheme", {MapScheme::mc_drifted, MapScheme::mild});
         },
         [](const C& c) { return to_string(c.solver.scheme); }},
        {"solver", "integrator", "enum", "euler_maruyama or heun",
         [](C& c, S v, int l) {
             c.solver.integrator = to_enum(v, l, "integrator", {Integrator::euler_maruyama, Integrator::heun});
         },
         [](const C& c) { return to_string(c.solver.integrator); }},
        {"solver", "mild_substeps", "int", "Duhamel steps per output interval (mild scheme)",
         [](C& c, S v, int l) { c.solver.mild_substeps = to_int(v, l, "mild_substeps"); },
         [](const C& c) { return std::to_string(c.solver.mild_substeps); }},
        {"solver", "interp_refinement", "int", "Monte-Carlo fields are sampled on a grid 1, 2 or 4 times finer",
         [](C& c, S v, int l) { c.solver.interp_refinement = to_int(v, l, "interp_refinement"); },
         [](const C& c) { return std::to_string(c.solver.interp_refinement); }},
        {"solver", "seed", "uint64", "root seed of every random stream",
         [](C& c, S v, int l) {
             std::uint64_t x = 0;
             const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
             if (r.ec != std::errc() || r.ptr != v.data() + v.size())
                 throw ConfigError("key 'seed' expects an unsigned integer, got '" + v + "'", l);
             c.solver.seed = x;
         },
         [](const C& c) { return std::to_string(c.solver.seed); }},
        {"solver", "common_random_numbers", "bool", "reuse one noise ensemble across iterations",
         [](C& c, S v, int l) { c.solver.common_random_numbers = to_bool(v, l, "common_random_numbers"); },
         [](const C& c) { return std::string(c.solver.common_random_numbers ? "true" : "false"); }},
        {"solver", "radial_nodes", "int", "log-radial shells of the Besov quadrature",
         [](C& c, S v, int l) { c.solver.quadrature.radial_nodes = to_int(v, l, "radial_nodes"); },
         [](const C& c) { return std::to_string(c.solver.quadrature.radial_nodes); }},
        {"solver", "directions", "int", "shift directions (0 = axis + diagonal set)",
         [](C& c, S v, int l) { c.solver.quadrature.directions = to_int(v, l, "directions"); },
         [](const C& c) { return std::to_string(c.solver.quadrature.directions); }},
        {"solver", "y_min", "real", "inner shift radius (0 = one grid spacing)",
         [](C& c, S v, int l) { c.solver.quadrature.y_min = to_double(v, l, "y_min"); },
         [](const C& c) { return fmt(c.solver.quadrature.y_min); }},

        {"experiment", "experiment", "enum", "solve, taylor_green, visc_sweep or invariants",
         [](C& c, S v, int l) {
             c.experiment = to_enum(v, l, "experiment",
                                    {Experiment::solve, Experiment::taylor_green, Experiment::visc_sweep,
                                     Experiment::invariants});
         },
         [](const C& c) { return to_string(c.experiment); }},
        {"experiment", "output_dir", "path", "directory receiving CSV, NSF1 and manifest files",
         [](C& c, S v, int l) {
             if (v.empty()) throw ConfigError("key 'output_dir' must not be empty", l);
             c.output_dir = v;
         },
         [](const C& c) { return c.output_dir.string(); }},
        {"experiment", "visc_list", "real list", "sweep viscosities (the nu = 0 run is implicit)",
         [](C& c, S v, int l) {
             c.visc_list.clear();
             for (const auto& item : split_list(v)) c.visc_list.push_back(to_double(item, l, "visc_list"));
         },
         [](const C& c) {
             std::string s;
             for (double x : c.visc_list) s += (s.empty() ? "" : ", ") + fmt(x);
             return s;
         }},
        {"experiment", "norms", "r/p/q list", "norms reported for the fixed point",
         [](C& c, S v, int l) {
             c.norms.clear();
             for (const auto& item : split_list(v)) c.norms.push_back(to_norm(item, l, "norms"));
         },
         [](const C& c) {
             std::string s;
             for (const auto& x : c.norms) s += (s.empty() ? "" : ", ") + x.id();
             return s;
         }},
        {"experiment", "initial", "enum", "taylor_green, zero, constant or random",
         [](C& c, S v, int l) {
             c.initial = to_enum(v, l, "initial",
                                 {InitialCondition::taylor_green, InitialCondition::zero, InitialCondition::constant,
                                  InitialCondition::random});
         },
         [](const C& c) { return to_string(c.initial); }},
        {"experiment", "amplitude", "real", "scale of the initial velocity",
         [](C& c, S v, int l) { c.amplitude = to_double(v, l, "amplitude"); },
         [](const C& c) { return fmt(c.amplitude); }},
        {"experiment", "invariants", "name list", "invariants to run; all selects every one, empty none",
         [](C& c, S v, int) { c.invariants = split_list(v); },
         [](const C& c) {
             std::string s;
             for (const auto& x : c.invariants) s += (s.empty() ? "" : ", ") + x;
             return s;
         }},
        {"experiment", "leray_corruption", "real", "test hook: perturbs the Leray multiplier",
         [](C& c, S v, int l) { c.leray_corruption = to_double(v, l, "leray_corruption"); },
         [](const C& c) { return fmt(c.leray_corruption); }},
        {"experiment", "reference_substeps", "int", "RK4 steps per output interval of the reference solver",
         [](C& c, S v, int l) { c.reference_substeps = to_int(v, l, "reference_substeps"); },
         [](const C& c) { return std::to_string(c.reference_substeps); }},
    };
    return table;
}

const char* const kSections[] = {"grid", "solver", "experiment"};

const Key* find_key(const std::string& section, const std::string& name) {
    for (const auto& k : keys())
        if (section == k.section && name == k.name) return &k;
    return nullptr;
}

std::string suggestion(const std::string& section, const std::string& name) {
    const Key* best = nullptr;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& k : keys()) {
        // same-section keys win ties
        const std::size_t d = 2 * edit_distance(name, k.name) + (section == k.section ? 0 : 1);
        if (d < best_d) {
            best_d = d;
            best = &k;
        }
    }
    if (!best) return "";
    return std::string("; did you mean '") + best->name + "'" +
           (section == best->section ? "" : std::string(" in [") + best->section + "]") + "?";
}

struct Entry {
    std::string section, key, value;
    int line;
};

std::vector<Entry> scan(std::istream& is) {
    std::vector<Entry> out;
    std::string raw, section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("malformed section header '" + s + "'", line);
            section = trim(s.substr(1, s.size() - 2));
            if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections))
                throw ConfigError("unknown section [" + section + "] (expected grid, solver or experiment)", line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + s + "'", line);
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError("missing key before '='", line);
        if (section.empty()) throw ConfigError("key '" + key + "' appears before any section", line);
        if (!find_key(section, key))
            throw ConfigError("unknown key '" + key + "' in [" + section + "]" + suggestion(section, key), line);
        for (const auto& e : out)
            if (e.section == section && e.key == key)
                throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(e.line) + ")",
                                  line);
        out.push_back({section, key, trim(s.substr(eq + 1)), line});
    }
    return out;
}

void emit(std::ostream& os, const std::map<std::pair<int, int>, std::string>& values) {
    int current = -1;
    for (const auto& [pos, value] : values) {
        if (pos.first != current) {
            if (current >= 0) os << '\n';
            current = pos.first;
            os << '[' << kSections[current] << "]\n";
        }
        os << keys()[pos.second].name << (value.empty() ? " =" : " = ") << value << '\n';
    }
}

int section_index(const std::string& s) {
    return static_cast<int>(std::find(std::begin(kSections), std::end(kSections), s) - std::begin(kSections));
}

int key_index(const Key* k) { return static_cast<int>(k - keys().data()); }

} // namespace

std::string NormSpec::id() const { return fmt(r) + "/" + fmt(p) + "/" + fmt(q); }

ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    for (const auto& e : scan(is)) find_key(e.section, e.key)->set(cfg, e.value, e.line);
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'", 0);
    return parse_config(in);
}

void validate(const ExperimentConfig& cfg) {
    try {
        (void)cfg.grid();
        cfg.solver.validate();
        cfg.solver.quadrature.resolved(cfg.grid());
        for (const auto& nm : cfg.norms) {
            if (!(nm.r > 0.0) || nm.r > 3.0) throw std::invalid_argument("norms: r must lie in (0, 3]");
            if (!(nm.p > 1.0) || std::isinf(nm.p)) throw std::invalid_argument("norms: p must lie in (1, inf)");
            if (!(nm.q >= 1.0)) throw std::invalid_argument("norms: q must be >= 1");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), 0);
    }
    if (cfg.reference_substeps < 1) throw ConfigError("reference_substeps must be >= 1", 0);
    if (!(cfg.leray_corruption >= 0.0)) throw ConfigError("leray_corruption must be >= 0", 0);
    if (cfg.experiment == Experiment::visc_sweep) {
        if (cfg.visc_list.size() < 3) throw ConfigError("visc_sweep needs at least 3 viscosities", 0);
        double lo = kInf, hi = 0.0;
        for (double nu : cfg.visc_list) {
            if (!(nu > 0.0)) throw ConfigError("visc_list entries must be > 0 (nu = 0 is run implicitly)", 0);
            lo = std::min(lo, nu);
            hi = std::max(hi, nu);
        }
        if (std::log10(hi / lo) < 1.5 - 1e-9)
            throw ConfigError("visc_list must span at least 1.5 decades", 0);
        if (cfg.solver.scheme == MapScheme::mild)
            throw ConfigError("visc_sweep needs scheme = mc_drifted (the nu = 0 baseline)", 0);
    }
    if (cfg.experiment == Experiment::taylor_green && cfg.solver.scheme == MapScheme::mild && !(cfg.solver.nu > 0.0))
        throw ConfigError("taylor_green with the mild scheme needs viscosity > 0", 0);
}

std::string serialize(const ExperimentConfig& cfg) {
    std::map<std::pair<int, int>, std::string> values;
    for (const auto& k : keys()) values[{section_index(k.section), key_index(&k)}] = k.get(cfg);
    std::ostringstream os;
    emit(os, values);
    return os.str();
}

std::string normalize(const std::string& text) {
    std::istringstream is(text);
    std::map<std::pair<int, int>, std::string> values;
    for (const auto& e : scan(is)) {
        const Key* k = find_key(e.section, e.key);
        // canonical value text: parse into a scratch config and read it back
        ExperimentConfig scratch;
        k->set(scratch, e.value, e.line);
        values[{section_index(e.section), key_index(k)}] = k->get(scratch);
    }
    std::ostringstream os;
    emit(os, values);
    return os.str();
}

std::string config_reference_markdown() {
    const ExperimentConfig defaults;
    std::ostringstream os;
    os << "# Configuration reference\n\n"
       << "Generated by `fbsde-ns --config-reference`; do not edit by hand.\n\n"
       << "Files are INI style: `[section]` headers, `key = value` lines, `#` or `;` comments. "
       << "Unknown keys, duplicate keys and malformed values are errors reported with their line number.\n";
    std::string current;
    for (const auto& k : keys()) {
        if (current != k.section) {
            current = k.section;
            os << "\n## [" << current << "]\n\n| key | type | default | meaning |\n|---|---|---|---|\n";
        }
        os << "| `" << k.name << "` | " << k.type << " | `" << k.get(defaults) << "` | " << k.doc << " |\n";
    }
    return os.str();
}

} // namespace fbsde
