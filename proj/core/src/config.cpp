#include "cslab/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "cslab/errors.hpp"

namespace cslab {

namespace pt = boost::property_tree;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& where, const std::string& raw) {
    const std::string s = trim(raw);
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) throw ConfigError(where + ": expected a number, got '" + raw + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& where, const std::string& raw) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError(where + ": expected a nonnegative integer, got '" + raw + "'");
    return v;
}

bool parse_bool(const std::string& where, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(where + ": expected true or false, got '" + raw + "'");
}

/// Typed access to one section that remembers which keys were read.
class SectionReader {
public:
    SectionReader(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

    bool present() const { return tree_ != nullptr; }

    std::optional<std::string> raw(const std::string& key) {
        used_.insert(key);
        if (!tree_) return std::nullopt;
        const auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        return trim(it->second.data());
    }

    double number(const std::string& key, double fallback) {
        const auto r = raw(key);
        return r ? parse_double(where(key), *r) : fallback;
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        const auto r = raw(key);
        return r ? parse_unsigned(where(key), *r) : fallback;
    }
    int integer(const std::string& key, int fallback) {
        const auto r = raw(key);
        if (!r) return fallback;
        const double v = parse_double(where(key), *r);
        if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where(key) + ": expected an integer");
        return static_cast<int>(v);
    }
    bool flag(const std::string& key, bool fallback) {
        const auto r = raw(key);
        return r ? parse_bool(where(key), *r) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) { return raw(key).value_or(fallback); }
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
        const auto r = raw(key);
        if (!r) return fallback;
        std::vector<double> out;
        for (const auto& s : split_list(*r)) out.push_back(parse_double(where(key), s));
        return out;
    }
    std::vector<std::string> words(const std::string& key, const std::vector<std::string>& fallback) {
        const auto r = raw(key);
        return r ? split_list(*r) : fallback;
    }

    /// Throws ConfigError naming the first key that no reader asked for.
    void reject_unknown() const {
        if (!tree_) return;
        for (const auto& [key, child] : *tree_) {
            if (!child.empty()) throw ConfigError("[" + name_ + "] " + key + ": nested values are not allowed");
            if (!used_.count(key)) throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    std::string name_;
    const pt::ptree* tree_;
    std::set<std::string> used_;
};

const pt::ptree* find_section(const pt::ptree& root, const std::string& name) {
    const auto it = root.find(name);
    if (it == root.not_found()) return nullptr;
    if (it->second.empty() && !it->second.data().empty())
        throw ConfigError("'" + name + "' must be a section, not a key");
    return &it->second;
}

PotentialSpec read_potential(SectionReader& r, const PotentialSpec& fallback) {
    const auto kind = r.raw("potential");
    const double stiffness = r.number("stiffness", 1.0);
    const double depth = r.number("depth", 1.0);
    const double width = r.number("width", 1.0);
    const auto slope = r.numbers("slope", {0.0, 0.0, 0.0});
    if (!kind) return fallback;
    if (*kind == "zero") return PotentialZero{};
    if (*kind == "quadratic") return PotentialQuadratic{stiffness};
    if (*kind == "gaussian_well") return PotentialGaussianWell{depth, width};
    if (*kind == "uniform_shear") {
        PotentialUniformShear s;
        for (std::size_t i = 0; i < slope.size() && i < 3; ++i) s.slope[i] = slope[i];
        return s;
    }
    throw ConfigError(r.where("potential") + ": unknown potential '" + *kind + "'");
}

void read_controls(SectionReader& r, StepControls& c) {
    c.max_velocity_growth = r.number("max_velocity_growth", c.max_velocity_growth);
    c.velocity_floor = r.number("velocity_floor", c.velocity_floor);
    c.safety_box = r.number("safety_box", c.safety_box);
    c.stiffness_fraction = r.number("stiffness_fraction", c.stiffness_fraction);
}

ScalingSpec read_scaling(SectionReader& r) {
    ScalingSpec s;
    s.kind = parse_scaling_kind(r.text("kind", to_string(s.kind)));
    s.gamma = r.number("gamma", s.gamma);
    s.epsilon = r.number("epsilon", s.epsilon);
    s.lambda = r.number("lambda", s.lambda);
    s.k_law.coef = r.number("k_coef", s.k_law.coef);
    s.k_law.exponent = r.number("k_exponent", s.k_law.exponent);
    s.k_law.cap = r.number("k_cap", s.k_law.cap);
    s.alpha_law.coef = r.number("alpha_coef", s.alpha_law.coef);
    s.alpha_law.exponent = r.number("alpha_exponent", s.alpha_law.exponent);
    s.alpha_law.cap = r.number("alpha_cap", s.alpha_law.cap);
    return s;
}

ModelKind parse_model_kind(const std::string& where, const std::string& s) {
    if (s == "cucker_smale") return ModelKind::cucker_smale;
    if (s == "motsch_tadmor") return ModelKind::motsch_tadmor;
    if (s == "langevin") return ModelKind::langevin;
    if (s == "scaled") return ModelKind::scaled;
    throw ConfigError(where + ": unknown model '" + s + "'");
}

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::cucker_smale: return "cucker_smale";
        case ModelKind::motsch_tadmor: return "motsch_tadmor";
        case ModelKind::langevin: return "langevin";
        case ModelKind::scaled: return "scaled";
    }
    return "cucker_smale";
}

SimulationSection read_model(SectionReader& r, const ScalingSpec& scaling) {
    SimulationSection s;
    ModelSpec& m = s.model;
    m.model = parse_model_kind(r.where("kind"), r.text("kind", "cucker_smale"));
    const std::string kernel = r.text("kernel", "classical");
    const double lambda = r.number("lambda", 0.25);
    const double epsilon = r.number("epsilon", 0.0);
    const double strength = r.number("strength", 1.0);
    const double range = r.number("range", 1.0);
    s.dim = r.integer("dim", s.dim);
    if (kernel == "none")
        m.kernel = KernelNone{};
    else if (kernel == "classical")
        m.kernel = KernelClassical{lambda};
    else if (kernel == "scaled")
        m.kernel = KernelParams{lambda, epsilon, s.dim};
    else if (kernel == "dimensional")
        m.kernel = DimensionalKernelParams{lambda, strength, range};
    else
        throw ConfigError(r.where("kernel") + ": unknown kernel '" + kernel + "'");

    const std::string friction = r.text("friction", "none");
    const double mu = r.number("mu", 1.0);
    const double fa = r.number("friction_alpha", 0.0);
    const double fb = r.number("friction_beta", 1.0);
    const double fk = r.number("friction_k", 2.0);
    if (friction == "none")
        m.friction = FrictionNone{};
    else if (friction == "linear")
        m.friction = FrictionLinear{mu};
    else if (friction == "generalized")
        m.friction = FrictionGeneralized{fa, fb, fk};
    else
        throw ConfigError(r.where("friction") + ": unknown friction '" + friction + "'");

    m.potential = read_potential(r, PotentialZero{});
    m.diffusion = r.number("diffusion", m.diffusion);
    m.particle_mass = r.number("particle_mass", m.particle_mass);
    m.alignment_strength = r.number("alignment_strength", m.alignment_strength);
    read_controls(r, m.controls);
    s.scaling = scaling;
    s.particles = r.count("particles", s.particles);
    s.mass = r.number("mass", s.mass);
    s.position_half_width = r.number("position_half_width", s.position_half_width);
    s.velocity_half_width = r.number("velocity_half_width", s.velocity_half_width);
    s.horizon = r.number("horizon", s.horizon);
    s.dt = r.number("dt", s.dt);
    s.record_every = r.count("record_every", s.record_every);
    return s;
}

GridSpec read_grid(SectionReader& r, const GridSpec& fallback) {
    const int dim = r.integer("dim", fallback.dim);
    const double half = r.number("half_width", fallback.hi[0]);
    const auto nodes = r.count("nodes", fallback.nodes[0]);
    return make_cube_grid(dim, half, nodes);
}

SweepSection read_sweep(SectionReader& r, const ScalingSpec& scaling, const GridSpec& grid) {
    SweepSection s;
    SweepConfig& c = s.config;
    c.scaling = scaling;
    c.grid = grid;
    c.eps_list = r.numbers("eps", c.eps_list);
    const auto seeds = r.words("seeds", {});
    if (!seeds.empty()) {
        c.seeds.clear();
        for (const auto& w : seeds) c.seeds.push_back(parse_unsigned(r.where("seeds"), w));
    }
    c.model.model = ModelKind::scaled;
    c.model.potential = read_potential(r, PotentialQuadratic{1.0});
    read_controls(r, c.model.controls);
    c.particles = r.count("particles", c.particles);
    c.dim = r.integer("dim", c.dim);
    c.mass = r.number("mass", c.mass);
    c.position_half_width = r.number("position_half_width", c.position_half_width);
    c.velocity_half_width = r.number("velocity_half_width", c.velocity_half_width);
    c.horizon = r.number("horizon", c.horizon);
    c.dt_fraction = r.number("dt_fraction", c.dt_fraction);
    c.snapshots = r.count("snapshots", c.snapshots);
    c.bandwidth = r.number("bandwidth", c.bandwidth);
    c.radii = r.numbers("radii", c.radii);
    c.e0_scale = r.number("e0_scale", c.e0_scale);
    c.tests = default_test_dictionary(c.dim);

    SweepChecks& k = s.checks;
    k.bounds = r.words("bounds", {});
    k.require_all_seeds = r.flag("require_all_seeds", k.require_all_seeds);
    k.friction_hypotheses = r.flag("friction_hypotheses", k.friction_hypotheses);
    if (auto q = r.raw("fit_quantity"); q && !q->empty()) k.fit_quantity = *q;
    k.fit_min_slope = r.number("fit_min_slope", k.fit_min_slope);
    k.rh_limit = r.flag("rh_limit", k.rh_limit);
    k.monotone_points = r.count("monotone_points", k.monotone_points);
    k.options.mc_tol = r.number("mc_tol", k.options.mc_tol);
    k.options.boundedness_factor = r.number("boundedness_factor", k.options.boundedness_factor);
    k.options.exact_tol = r.number("exact_tol", k.options.exact_tol);
    s.write_series = r.flag("write_series", s.write_series);
    return s;
}

MacroSection read_macro(SectionReader& r) {
    MacroSection m;
    SolverConfig& c = m.solver;
    c.grid = read_grid(r, c.grid);
    c.lambda = r.number("lambda", c.lambda);
    c.p1 = r.number("p1", c.p1);
    c.p2 = r.number("p2", c.p2);
    c.k = r.integer("k", c.k);
    c.mu = r.number("mu", c.mu);
    c.ball_radius = r.number("ball_radius", c.ball_radius);
    c.tolerance = r.number("tolerance", c.tolerance);
    c.max_iterations = r.integer("max_iterations", c.max_iterations);
    c.horizon = r.number("horizon", c.horizon);
    c.dt = r.number("dt", c.dt);
    m.potential = read_potential(r, m.potential);
    const std::string shape = r.text("rho0", "gaussian");
    if (shape == "zero")
        m.shape = DensityShape::zero;
    else if (shape == "gaussian")
        m.shape = DensityShape::gaussian;
    else
        throw ConfigError(r.where("rho0") + ": unknown density '" + shape + "'");
    m.rho0_mass = r.number("rho0_mass", m.rho0_mass);
    m.rho0_width = r.number("rho0_width", m.rho0_width);
    m.field_stride = r.count("field_stride", m.field_stride);
    return m;
}

VerifySection read_verify(SectionReader& r) {
    VerifySection v;
    v.kernel_samples = r.count("kernel_samples", v.kernel_samples);
    v.defining_samples = r.count("defining_samples", v.defining_samples);
    v.h_kernel_samples = r.count("h_kernel_samples", v.h_kernel_samples);
    v.transport = r.flag("transport", v.transport);
    v.liouville = r.flag("liouville", v.liouville);
    v.commutator = r.flag("commutator", v.commutator);
    v.commutator_ratios = r.flag("commutator_ratios", v.commutator_ratios);
    v.kernel_c_factor = r.number("kernel_c_factor", v.kernel_c_factor);
    return v;
}

const std::set<std::string> kSections{"model", "scaling", "sweep", "grid", "macrosolver", "verify", "output"};

ExperimentConfig from_tree(const pt::ptree& root) {
    ExperimentConfig cfg;
    for (const auto& [key, child] : root) {
        if (child.empty()) {
            if (key != "schema_version" && key != "seed") throw ConfigError("unknown top-level key '" + key + "'");
        } else if (!kSections.count(key)) {
            throw ConfigError("unknown section [" + key + "]");
        }
    }
    SectionReader top("top", &root);
    cfg.schema_version = top.integer("schema_version", -1);
    if (cfg.schema_version != kSchemaVersion)
        throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion) + ", got " +
                          std::to_string(cfg.schema_version));
    cfg.seed = top.count("seed", 0);

    SectionReader output("output", find_section(root, "output"));
    cfg.output_dir = output.text("dir", cfg.output_dir.string());
    cfg.record_wall_clock = output.flag("record_wall_clock", cfg.record_wall_clock);
    output.reject_unknown();

    SectionReader scaling_reader("scaling", find_section(root, "scaling"));
    const ScalingSpec scaling = read_scaling(scaling_reader);
    scaling_reader.reject_unknown();

    SectionReader grid_reader("grid", find_section(root, "grid"));
    const GridSpec grid = read_grid(grid_reader, SweepConfig{}.grid);
    grid_reader.reject_unknown();

    if (const auto* t = find_section(root, "model")) {
        SectionReader r("model", t);
        cfg.simulation = read_model(r, scaling);
        r.reject_unknown();
    }
    if (const auto* t = find_section(root, "sweep")) {
        SectionReader r("sweep", t);
        cfg.sweep = read_sweep(r, scaling, grid);
        r.reject_unknown();
    }
    if (const auto* t = find_section(root, "macrosolver")) {
        SectionReader r("macrosolver", t);
        cfg.macro = read_macro(r);
        r.reject_unknown();
    }
    if (const auto* t = find_section(root, "verify")) {
        SectionReader r("verify", t);
        cfg.verify = read_verify(r);
        r.reject_unknown();
    }
    cfg.validate();
    return cfg;
}

std::string json_scalar(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_array()) {
        std::string out;
        for (const auto& e : v) {
            if (!out.empty()) out += ", ";
            out += json_scalar(e, where);
        }
        return out;
    }
    throw ConfigError(where + ": unsupported JSON value");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (schema_version != kSchemaVersion) throw ConfigError("unsupported schema_version");
    if (output_dir.empty()) throw ConfigError("[output] dir must not be empty");
    if (simulation) {
        const auto& s = *simulation;
        if (s.particles == 0) throw ConfigError("[model] particles must be >= 1");
        if (s.dim < 1 || s.dim > 3) throw ConfigError("[model] dim must be 1, 2 or 3");
        if (!(s.mass > 0.0)) throw ConfigError("[model] mass must be positive");
        if (!(s.horizon > 0.0) || !(s.dt > 0.0)) throw ConfigError("[model] horizon and dt must be positive");
        if (s.record_every == 0) throw ConfigError("[model] record_every must be >= 1");
        if (const auto* k = std::get_if<KernelParams>(&s.model.kernel)) {
            try {
                k->validate();
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("[model] ") + e.what());
            }
        }
        if (const auto* k = std::get_if<KernelClassical>(&s.model.kernel)) {
            if (!(k->lambda > 0.0 && k->lambda < s.dim / 2.0))
                throw ConfigError("[model] lambda = " + format_double(k->lambda) + " violates 0 < lambda < N/2 = " +
                                  format_double(s.dim / 2.0));
        }
        if (const auto* k = std::get_if<DimensionalKernelParams>(&s.model.kernel)) k->validate();
        s.model.validate();
        if (s.model.model == ModelKind::scaled) {
            ScalingSpec sc = s.scaling;
            sc.validate();
            if (!(sc.lambda > 0.0 && sc.lambda < s.dim / 2.0))
                throw ConfigError("[scaling] lambda violates 0 < lambda < N/2");
        }
    }
    if (sweep) {
        sweep->config.validate();
        if (sweep->checks.monotone_points < 2) throw ConfigError("[sweep] monotone_points must be >= 2");
    }
    if (macro) {
        macro->solver.validate();
        if (!(macro->rho0_mass >= 0.0) || !(macro->rho0_width > 0.0))
            throw ConfigError("[macrosolver] rho0_mass >= 0 and rho0_width > 0 required");
        if (macro->field_stride == 0) throw ConfigError("[macrosolver] field_stride must be >= 1");
    }
    if (verify) {
        if (!(verify->kernel_c_factor > 0.0)) throw ConfigError("[verify] kernel_c_factor must be positive");
    }
}

Field MacroSection::initial_density() const {
    const GridSpec& g = solver.grid;
    if (shape == DensityShape::zero) return Field(g.size(), 1, 0.0);
    const double n = static_cast<double>(g.dim);
    const double norm = rho0_mass / std::pow(2.0 * std::numbers::pi * rho0_width * rho0_width, n / 2.0);
    return sample_scalar(g, [&](const Vec& x) { return norm * std::exp(-0.5 * norm_sq(x) / (rho0_width * rho0_width)); });
}

ExperimentConfig parse_config_text(const std::string& text) {
    std::stringstream cleaned;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (!t.empty() && t.front() == '#') continue;
        cleaned << line << '\n';
    }
    pt::ptree root;
    try {
        pt::read_ini(cleaned, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    return from_tree(root);
}

ExperimentConfig parse_config_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config JSON must be an object");
    pt::ptree root;
    for (const auto& [key, value] : doc.items()) {
        if (value.is_object()) {
            pt::ptree section;
            for (const auto& [k, v] : value.items()) section.put(pt::ptree::path_type(k, '\0'), json_scalar(v, key + "." + k));
            root.add_child(pt::ptree::path_type(key, '\0'), section);
        } else {
            root.put(pt::ptree::path_type(key, '\0'), json_scalar(value, key));
        }
    }
    return from_tree(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") return parse_config_json(buf.str());
    return parse_config_text(buf.str());
}

namespace {

class TextWriter {
public:
    void section(const std::string& name) { out_ << "\n[" << name << "]\n"; }
    void put(const std::string& key, const std::string& v) { out_ << key << " = " << v << '\n'; }
    void put(const std::string& key, double v) { put(key, format_double(v)); }
    void put_count(const std::string& key, std::uint64_t v) { put(key, std::to_string(v)); }
    void put_int(const std::string& key, int v) { put(key, std::to_string(v)); }
    void put_flag(const std::string& key, bool v) { put(key, std::string(v ? "true" : "false")); }
    void put_list(const std::string& key, const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ", ") + format_double(x);
        put(key, s);
    }
    void put_words(const std::string& key, const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
        put(key, s);
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

void write_potential(TextWriter& w, const PotentialSpec& p) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PotentialZero>) {
                w.put("potential", std::string("zero"));
            } else if constexpr (std::is_same_v<T, PotentialQuadratic>) {
                w.put("potential", std::string("quadratic"));
                w.put("stiffness", v.stiffness);
            } else if constexpr (std::is_same_v<T, PotentialGaussianWell>) {
                w.put("potential", std::string("gaussian_well"));
                w.put("depth", v.depth);
                w.put("width", v.width);
            } else {
                w.put("potential", std::string("uniform_shear"));
                w.put_list("slope", {v.slope[0], v.slope[1], v.slope[2]});
            }
        },
        p);
}

void write_controls(TextWriter& w, const StepControls& c) {
    w.put("max_velocity_growth", c.max_velocity_growth);
    w.put("velocity_floor", c.velocity_floor);
    w.put("safety_box", c.safety_box);
    w.put("stiffness_fraction", c.stiffness_fraction);
}

void write_grid(TextWriter& w, const GridSpec& g) {
    w.put_int("dim", g.dim);
    w.put("half_width", g.hi[0]);
    w.put_count("nodes", g.nodes[0]);
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
    TextWriter w;
    w.put_int("schema_version", c.schema_version);
    w.put_count("seed", c.seed);
    w.section("output");
    w.put("dir", c.output_dir.generic_string());
    w.put_flag("record_wall_clock", c.record_wall_clock);

    const ScalingSpec* scaling = nullptr;
    if (c.sweep) scaling = &c.sweep->config.scaling;
    else if (c.simulation) scaling = &c.simulation->scaling;
    if (scaling) {
        w.section("scaling");
        w.put("kind", to_string(scaling->kind));
        w.put("gamma", scaling->gamma);
        w.put("epsilon", scaling->epsilon);
        w.put("lambda", scaling->lambda);
        w.put("k_coef", scaling->k_law.coef);
        w.put("k_exponent", scaling->k_law.exponent);
        w.put("k_cap", scaling->k_law.cap);
        w.put("alpha_coef", scaling->alpha_law.coef);
        w.put("alpha_exponent", scaling->alpha_law.exponent);
        w.put("alpha_cap", scaling->alpha_law.cap);
    }
    if (c.simulation) {
        const auto& s = *c.simulation;
        const auto& m = s.model;
        w.section("model");
        w.put("kind", model_kind_name(m.model));
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, KernelNone>) {
                    w.put("kernel", std::string("none"));
                } else if constexpr (std::is_same_v<T, KernelClassical>) {
                    w.put("kernel", std::string("classical"));
                    w.put("lambda", k.lambda);
                } else if constexpr (std::is_same_v<T, KernelParams>) {
                    w.put("kernel", std::string("scaled"));
                    w.put("lambda", k.lambda);
                    w.put("epsilon", k.epsilon);
                } else {
                    w.put("kernel", std::string("dimensional"));
                    w.put("lambda", k.lambda);
                    w.put("strength", k.strength);
                    w.put("range", k.range);
                }
            },
            m.kernel);
        std::visit(
            [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, FrictionNone>) {
                    w.put("friction", std::string("none"));
                } else if constexpr (std::is_same_v<T, FrictionLinear>) {
                    w.put("friction", std::string("linear"));
                    w.put("mu", f.mu);
                } else {
                    w.put("friction", std::string("generalized"));
                    w.put("friction_alpha", f.alpha);
                    w.put("friction_beta", f.beta);
                    w.put("friction_k", f.k);
                }
            },
            m.friction);
        write_potential(w, m.potential);
        w.put("diffusion", m.diffusion);
        w.put("particle_mass", m.particle_mass);
        w.put("alignment_strength", m.alignment_strength);
        write_controls(w, m.controls);
        w.put_count("particles", s.particles);
        w.put_int("dim", s.dim);
        w.put("mass", s.mass);
        w.put("position_half_width", s.position_half_width);
        w.put("velocity_half_width", s.velocity_half_width);
        w.put("horizon", s.horizon);
        w.put("dt", s.dt);
        w.put_count("record_every", s.record_every);
    }
    if (c.sweep) {
        const auto& sc = c.sweep->config;
        const auto& k = c.sweep->checks;
        w.section("grid");
        write_grid(w, sc.grid);
        w.section("sweep");
        w.put_list("eps", sc.eps_list);
        std::vector<std::string> seeds;
        for (auto s : sc.seeds) seeds.push_back(std::to_string(s));
        w.put_words("seeds", seeds);
        write_potential(w, sc.model.potential);
        write_controls(w, sc.model.controls);
        w.put_count("particles", sc.particles);
        w.put_int("dim", sc.dim);
        w.put("mass", sc.mass);
        w.put("position_half_width", sc.position_half_width);
        w.put("velocity_half_width", sc.velocity_half_width);
        w.put("horizon", sc.horizon);
        w.put("dt_fraction", sc.dt_fraction);
        w.put_count("snapshots", sc.snapshots);
        w.put("bandwidth", sc.bandwidth);
        w.put_list("radii", sc.radii);
        w.put("e0_scale", sc.e0_scale);
        w.put_words("bounds", k.bounds);
        w.put_flag("require_all_seeds", k.require_all_seeds);
        w.put_flag("friction_hypotheses", k.friction_hypotheses);
        w.put("fit_quantity", k.fit_quantity.value_or(""));
        w.put("fit_min_slope", k.fit_min_slope);
        w.put_flag("rh_limit", k.rh_limit);
        w.put_count("monotone_points", k.monotone_points);
        w.put("mc_tol", k.options.mc_tol);
        w.put("boundedness_factor", k.options.boundedness_factor);
        w.put("exact_tol", k.options.exact_tol);
        w.put_flag("write_series", c.sweep->write_series);
    }
    if (c.macro) {
        const auto& m = *c.macro;
        const auto& s = m.solver;
        w.section("macrosolver");
        write_grid(w, s.grid);
        w.put("lambda", s.lambda);
        w.put("p1", s.p1);
        w.put("p2", s.p2);
        w.put_int("k", s.k);
        w.put("mu", s.mu);
        w.put("ball_radius", s.ball_radius);
        w.put("tolerance", s.tolerance);
        w.put_int("max_iterations", s.max_iterations);
        w.put("horizon", s.horizon);
        w.put("dt", s.dt);
        write_potential(w, m.potential);
        w.put("rho0", std::string(m.shape == DensityShape::zero ? "zero" : "gaussian"));
        w.put("rho0_mass", m.rho0_mass);
        w.put("rho0_width", m.rho0_width);
        w.put_count("field_stride", m.field_stride);
    }
    if (c.verify) {
        const auto& v = *c.verify;
        w.section("verify");
        w.put_count("kernel_samples", v.kernel_samples);
        w.put_count("defining_samples", v.defining_samples);
        w.put_count("h_kernel_samples", v.h_kernel_samples);
        w.put_flag("transport", v.transport);
        w.put_flag("liouville", v.liouville);
        w.put_flag("commutator", v.commutator);
        w.put_flag("commutator_ratios", v.commutator_ratios);
        w.put("kernel_c_factor", v.kernel_c_factor);
    }
    return w.str();
}

}  // namespace cslab
