#include "lsm/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <boost/property_tree/ini_parser.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>
#include <sstream>

#include "lsm/errors.hpp"

namespace lsm {
namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

pt::ptree::path_type key_path(const std::string& section, const std::string& key) {
    return pt::ptree::path_type(section + "/" + key, '/');
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("expected a number for " + what + ", got '" + text + "'");
}

long long to_integer(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (trim(text.substr(used)).empty()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("expected an integer for " + what + ", got '" + text + "'");
}

bool to_bool(const std::string& text, const std::string& what) {
    const std::string t = lower(trim(text));
    if (t == "true" || t == "1" || t == "yes" || t == "on") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t == "off") {
        return false;
    }
    throw ConfigError("expected a boolean for " + what + ", got '" + text + "'");
}

std::string distribution_name(AngleDistribution d) {
    return d == AngleDistribution::Uniform ? "uniform" : "perturbed";
}

AngleDistribution parse_distribution(const std::string& text) {
    const std::string t = lower(trim(text));
    if (t == "uniform") {
        return AngleDistribution::Uniform;
    }
    if (t == "perturbed") {
        return AngleDistribution::Perturbed;
    }
    throw ConfigError("unknown source distribution: " + text);
}

ExperimentConfig base_config(const std::string& name, const std::string& shape, MatrixKind kind) {
    ExperimentConfig c;
    c.name = name;
    c.kind = kind;
    ScattererSpec s;
    s.shape = shape;
    s.center = shape == "ellipse" ? Point{-2.0, -2.0} : Point{2.0, 2.0};
    s.size = 0.5;
    c.scatterers.push_back(s);
    return c;
}

std::vector<std::string> split_args(const std::string& inside) {
    std::vector<std::string> out;
    std::stringstream ss(inside);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(trim(item));
    }
    return out;
}

}  // namespace

double parse_wavenumber(const std::string& text) {
    std::string t = lower(trim(text));
    t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
    const auto pos = t.find("pi");
    if (pos == std::string::npos) {
        return to_double(t, "wavenumber");
    }
    if (pos + 2 != t.size()) {
        throw ConfigError("malformed wavenumber: " + text);
    }
    std::string factor = t.substr(0, pos);
    if (!factor.empty() && factor.back() == '*') {
        factor.pop_back();
    }
    return (factor.empty() ? 1.0 : to_double(factor, "wavenumber")) * kPi;
}

bool ExperimentConfig::uses_point_model() const {
    return !scatterers.empty() &&
           std::all_of(scatterers.begin(), scatterers.end(), [](const ScattererSpec& s) { return s.shape == "point"; });
}

void ExperimentConfig::validate() const {
    if (!(k > 0.0)) {
        throw ConfigError("wave.k must be positive");
    }
    const bool any_point = std::any_of(scatterers.begin(), scatterers.end(),
                                       [](const ScattererSpec& s) { return s.shape == "point"; });
    if (any_point && !uses_point_model()) {
        throw ConfigError("point scatterers cannot be mixed with extended scatterers");
    }
    for (const auto& s : scatterers) {
        if (s.shape != "circle" && s.shape != "ellipse" && s.shape != "kite" && s.shape != "point") {
            throw ConfigError("unknown scatterer shape: " + s.shape);
        }
        if (!(s.size > 0.0)) {
            throw ConfigError("scatterer size must be positive");
        }
        if (s.nodes != 0 && (s.nodes < 32 || s.nodes % 2 != 0)) {
            throw ConfigError("scatterer nodes must be even and at least 32");
        }
    }
    if (receivers.count < 1 || !(receivers.radius > 0.0)) {
        throw ConfigError("receivers need a positive count and radius");
    }
    if (!(receivers.beta >= 0.0 && receivers.beta <= 1.0) || !(sources.beta >= 0.0 && sources.beta <= 1.0)) {
        throw ConfigError("beta must lie in [0, 1]");
    }
    const bool passive = kind == MatrixKind::CrossCorrelation || kind == MatrixKind::Covariance;
    if (passive && (sources.count < 1 || !(sources.radius > receivers.radius))) {
        throw ConfigError("passive setups need sources on a circle enclosing the receivers");
    }
    if (kind == MatrixKind::Covariance && realizations < 1) {
        throw ConfigError("covariance needs sources.realizations >= 1");
    }
    if (!(noise_amplitude > 0.0)) {
        throw ConfigError("noise.amplitude must be positive: the discrepancy principle needs delta > 0");
    }
    if (grid.nx < 1 || grid.ny < 1 || !(grid.x_max >= grid.x_min) || !(grid.y_max >= grid.y_min)) {
        throw ConfigError("invalid grid");
    }
    if (!(mask_radius > 0.0)) {
        throw ConfigError("grid.mask_radius must be positive");
    }
    if (boundary.nodes < 32 || boundary.nodes % 2 != 0 || boundary.max_nodes < boundary.nodes) {
        throw ConfigError("boundary.nodes must be even, >= 32 and <= boundary.max_nodes");
    }
    for (const ArrayConfig* a : {&receivers, &sources}) {
        if (a->arc && !(a->arc->theta_max > a->arc->theta_min)) {
            throw ConfigError("arc_max must exceed arc_min");
        }
    }
}

std::vector<std::string> preset_names() {
    return {"ellipse-N",          "ellipse-I",        "ellipse-C",        "kite-N", "kite-I", "kite-C",
            "kite-beta(beta,L)",  "wavenumber(k,J)",  "setup2(M)",        "limited-aperture(kind)",
            "point-scatterers"};
}

ExperimentConfig preset(const std::string& raw_name) {
    const std::string name = trim(raw_name);
    static const std::regex simple(R"((ellipse|kite)-(N|I|C))");
    static const std::regex call(R"(([a-z0-9-]+)\((.*)\))");
    std::smatch m;
    if (std::regex_match(name, m, simple)) {
        return base_config(name, m[1], parse_matrix_kind(m[2]));
    }
    if (name == "point-scatterers") {
        ExperimentConfig c;
        c.name = name;
        c.kind = MatrixKind::ImaginaryNearField;
        for (const Point p : {Point{-2.0, 1.0}, Point{1.5, -2.0}, Point{2.0, 2.5}}) {
            c.scatterers.push_back({"point", p, 0.01, 0.0, 0});
        }
        return c;
    }
    if (!std::regex_match(name, m, call)) {
        throw ConfigError("unknown preset: " + name);
    }
    const std::string head = m[1];
    const auto args = split_args(m[2]);
    if (head == "kite-beta" && args.size() == 2) {
        ExperimentConfig c = base_config(name, "kite", MatrixKind::CrossCorrelation);
        c.sources.beta = to_double(args[0], "beta");
        c.sources.count = static_cast<int>(to_integer(args[1], "L"));
        return c;
    }
    if (head == "wavenumber" && args.size() >= 2 && args.size() <= 4) {
        const std::string shape = args.size() >= 3 ? lower(args[2]) : "kite";
        const MatrixKind kind = args.size() == 4 ? parse_matrix_kind(args[3]) : MatrixKind::CrossCorrelation;
        ExperimentConfig c = base_config(name, shape, kind);
        c.k = parse_wavenumber(args[0]);
        const int j = static_cast<int>(to_integer(args[1], "J"));
        c.receivers.count = j;
        c.sources.count = j;
        return c;
    }
    if (head == "setup2" && args.size() == 1) {
        ExperimentConfig c = base_config(name, "kite", MatrixKind::Covariance);
        c.receivers.count = 200;
        c.sources.count = 200;
        c.sources.beta = 0.0;
        c.realizations = static_cast<int>(to_integer(args[0], "M"));
        return c;
    }
    if (head == "limited-aperture" && args.size() == 1) {
        ExperimentConfig c = base_config(name, "kite", parse_matrix_kind(args[0]));
        c.receivers.arc = Arc{kPi / 2.0, 3.0 * kPi / 2.0};
        c.sources.arc = c.receivers.arc;
        return c;
    }
    throw ConfigError("unknown preset or wrong arguments: " + name);
}

pt::ptree to_ptree(const ExperimentConfig& c) {
    pt::ptree t;
    const auto put = [&](const std::string& section, const std::string& key, const std::string& value) {
        t.put(key_path(section, key), value);
    };
    const auto num = [](double v) { return format_number(v); };
    put("experiment", "name", c.name);
    put("experiment", "kind", to_string(c.kind));
    put("experiment", "seed", std::to_string(c.seed));
    put("experiment", "output", c.output);
    put("wave", "k", num(c.k));
    for (std::size_t i = 0; i < c.scatterers.size(); ++i) {
        const auto& s = c.scatterers[i];
        const std::string sec = "scatterer." + std::to_string(i);
        put(sec, "shape", s.shape);
        put(sec, "center_x", num(s.center.x));
        put(sec, "center_y", num(s.center.y));
        put(sec, "size", num(s.size));
        put(sec, "rotation", num(s.rotation));
        put(sec, "nodes", std::to_string(s.nodes));
    }
    const auto put_array = [&](const std::string& sec, const ArrayConfig& a) {
        put(sec, "radius", num(a.radius));
        put(sec, "count", std::to_string(a.count));
        put(sec, "beta", num(a.beta));
        if (a.arc) {
            put(sec, "arc_min", num(a.arc->theta_min));
            put(sec, "arc_max", num(a.arc->theta_max));
        }
    };
    put_array("receivers", c.receivers);
    put_array("sources", c.sources);
    put("sources", "distribution", distribution_name(c.sources.distribution));
    put("sources", "realizations", std::to_string(c.realizations));
    put("noise", "amplitude", num(c.noise_amplitude));
    put("grid", "x_min", num(c.grid.x_min));
    put("grid", "x_max", num(c.grid.x_max));
    put("grid", "y_min", num(c.grid.y_min));
    put("grid", "y_max", num(c.grid.y_max));
    put("grid", "nx", std::to_string(c.grid.nx));
    put("grid", "ny", std::to_string(c.grid.ny));
    put("grid", "mask_radius", num(c.mask_radius));
    put("boundary", "nodes", std::to_string(c.boundary.nodes));
    put("boundary", "auto_refine", c.boundary.auto_refine ? "true" : "false");
    put("boundary", "refine_tolerance", num(c.boundary.refine_tolerance));
    put("boundary", "max_nodes", std::to_string(c.boundary.max_nodes));
    put("rhs", "direct_re", num(c.rhs.direct.real()));
    put("rhs", "direct_im", num(c.rhs.direct.imag()));
    put("rhs", "conjugate_re", num(c.rhs.conjugate.real()));
    put("rhs", "conjugate_im", num(c.rhs.conjugate.imag()));
    return t;
}

ExperimentConfig from_ptree(const pt::ptree& tree) {
    static const std::map<std::string, std::set<std::string>> known = {
        {"experiment", {"name", "kind", "seed", "output"}},
        {"wave", {"k"}},
        {"scatterer", {"shape", "center_x", "center_y", "size", "rotation", "nodes"}},
        {"receivers", {"radius", "count", "beta", "arc_min", "arc_max"}},
        {"sources", {"radius", "count", "beta", "distribution", "arc_min", "arc_max", "realizations"}},
        {"noise", {"amplitude"}},
        {"grid", {"x_min", "x_max", "y_min", "y_max", "nx", "ny", "mask_radius"}},
        {"boundary", {"nodes", "auto_refine", "refine_tolerance", "max_nodes"}},
        {"rhs", {"direct_re", "direct_im", "conjugate_re", "conjugate_im"}},
    };
    ExperimentConfig c;
    std::map<int, ScattererSpec> scatterers;
    for (const auto& [section, body] : tree) {
        std::string family = section;
        int index = -1;
        if (section.rfind("scatterer.", 0) == 0) {
            family = "scatterer";
            const auto idx = to_integer(section.substr(10), "scatterer index");
            if (idx < 0 || idx > 1000) {
                throw ConfigError("scatterer index out of range: " + section);
            }
            index = static_cast<int>(idx);
        }
        const auto it = known.find(family);
        if (it == known.end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        std::optional<double> arc_min;
        std::optional<double> arc_max;
        for (const auto& [key, node] : body) {
            if (!it->second.count(key)) {
                throw ConfigError("unknown key " + section + "." + key);
            }
            const std::string v = trim(node.data());
            const std::string what = section + "." + key;
            if (family == "experiment") {
                if (key == "name") c.name = v;
                else if (key == "kind") c.kind = parse_matrix_kind(v);
                else if (key == "seed") {
                    const auto s = to_integer(v, what);
                    if (s < 0) throw ConfigError("seed must be nonnegative");
                    c.seed = static_cast<std::uint64_t>(s);
                } else if (key == "output") c.output = v;
            } else if (family == "wave") {
                c.k = parse_wavenumber(v);
            } else if (family == "scatterer") {
                auto& s = scatterers[index];
                if (key == "shape") s.shape = lower(v);
                else if (key == "center_x") s.center.x = to_double(v, what);
                else if (key == "center_y") s.center.y = to_double(v, what);
                else if (key == "size") s.size = to_double(v, what);
                else if (key == "rotation") s.rotation = to_double(v, what);
                else if (key == "nodes") s.nodes = static_cast<int>(to_integer(v, what));
            } else if (family == "receivers" || family == "sources") {
                ArrayConfig& a = family == "receivers" ? c.receivers : c.sources;
                if (key == "radius") a.radius = to_double(v, what);
                else if (key == "count") a.count = static_cast<int>(to_integer(v, what));
                else if (key == "beta") a.beta = to_double(v, what);
                else if (key == "distribution") a.distribution = parse_distribution(v);
                else if (key == "arc_min") arc_min = to_double(v, what);
                else if (key == "arc_max") arc_max = to_double(v, what);
                else if (key == "realizations") c.realizations = static_cast<int>(to_integer(v, what));
            } else if (family == "noise") {
                c.noise_amplitude = to_double(v, what);
            } else if (family == "grid") {
                if (key == "x_min") c.grid.x_min = to_double(v, what);
                else if (key == "x_max") c.grid.x_max = to_double(v, what);
                else if (key == "y_min") c.grid.y_min = to_double(v, what);
                else if (key == "y_max") c.grid.y_max = to_double(v, what);
                else if (key == "nx") c.grid.nx = static_cast<int>(to_integer(v, what));
                else if (key == "ny") c.grid.ny = static_cast<int>(to_integer(v, what));
                else if (key == "mask_radius") c.mask_radius = to_double(v, what);
            } else if (family == "boundary") {
                if (key == "nodes") c.boundary.nodes = static_cast<int>(to_integer(v, what));
                else if (key == "auto_refine") c.boundary.auto_refine = to_bool(v, what);
                else if (key == "refine_tolerance") c.boundary.refine_tolerance = to_double(v, what);
                else if (key == "max_nodes") c.boundary.max_nodes = static_cast<int>(to_integer(v, what));
            } else if (family == "rhs") {
                const double x = to_double(v, what);
                if (key == "direct_re") c.rhs.direct.real(x);
                else if (key == "direct_im") c.rhs.direct.imag(x);
                else if (key == "conjugate_re") c.rhs.conjugate.real(x);
                else if (key == "conjugate_im") c.rhs.conjugate.imag(x);
            }
        }
        if (family == "receivers" || family == "sources") {
            ArrayConfig& a = family == "receivers" ? c.receivers : c.sources;
            if (arc_min.has_value() != arc_max.has_value()) {
                throw ConfigError("[" + section + "] needs both arc_min and arc_max");
            }
            if (arc_min) {
                a.arc = Arc{*arc_min, *arc_max};
            }
        }
    }
    int expected = 0;
    for (const auto& [index, spec] : scatterers) {
        if (index != expected++) {
            throw ConfigError("scatterer sections must be numbered 0, 1, 2, ...");
        }
        c.scatterers.push_back(spec);
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_ptree(tree);
}

void write_config(const ExperimentConfig& config, std::ostream& out) {
    pt::write_ini(out, to_ptree(config));
}

ExperimentConfig apply_override(const ExperimentConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like section.key=value: " + assignment);
    }
    const std::string lhs = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    const auto dot = lhs.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size()) {
        throw ConfigError("override must look like section.key=value: " + assignment);
    }
    pt::ptree tree = to_ptree(config);
    const std::string section = lhs.substr(0, dot);
    const std::string key = lhs.substr(dot + 1);
    if (section == "receivers" || section == "sources") {
        // Setting one arc end on a full-circle array starts from the full circle.
        if ((key == "arc_min" || key == "arc_max") && !tree.get_optional<std::string>(key_path(section, "arc_min"))) {
            tree.put(key_path(section, "arc_min"), format_number(0.0));
            tree.put(key_path(section, "arc_max"), format_number(kTwoPi));
        }
    }
    tree.put(key_path(section, key), value);
    return from_ptree(tree);
}

bool ForwardSetup::inside(Point p) const { return model && model->inside(p); }

namespace {

PointSet make_array(const ArrayConfig& a, std::uint64_t seed, PointRole role) {
    PointSetSpec spec;
    spec.radius = a.radius;
    spec.count = a.count;
    spec.beta = a.beta;
    spec.seed = seed;
    spec.arc = a.arc;
    spec.distribution = a.distribution;
    return make_point_set(spec, role);
}

std::vector<Point> probe_points(const PointSet& receivers) {
    std::vector<Point> out;
    const std::size_t step = std::max<std::size_t>(1, receivers.size() / 4);
    for (std::size_t i = 0; i < receivers.size() && out.size() < 4; i += step) {
        out.push_back(receivers.points[i]);
    }
    return out;
}

std::shared_ptr<const SingleLayerSystem> assemble(const std::vector<BoundaryCurve>& curves,
                                                  const std::vector<int>& nodes, const WaveContext& ctx) {
    std::vector<DiscretizedBoundary> parts;
    parts.reserve(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        parts.push_back(discretize(curves[i], nodes[i]));
    }
    return assemble_single_layer(std::move(parts), ctx);
}

}  // namespace

ForwardSetup build_forward(const ExperimentConfig& config) {
    config.validate();
    ForwardSetup setup{WaveContext(config.k), nullptr, {}, {}, 0.0, {}, {}, 0.0};
    setup.receivers = make_array(config.receivers, config.seed, PointRole::Receiver);
    const bool passive = config.kind == MatrixKind::CrossCorrelation || config.kind == MatrixKind::Covariance;
    if (passive) {
        PointRole role = config.kind == MatrixKind::Covariance ? PointRole::DeterministicSource : PointRole::RandomSource;
        setup.sources = make_array(config.sources, config.seed, role);
        const double span = config.sources.arc ? config.sources.arc->theta_max - config.sources.arc->theta_min : kTwoPi;
        setup.sigma_measure = config.sources.radius * span;
    }

    if (config.uses_point_model()) {
        PointScattererConfig pc;
        for (const auto& s : config.scatterers) {
            pc.centers.push_back(s.center);
            pc.radii.push_back(s.size);
        }
        setup.model = std::make_unique<PointScattererModel>(std::move(pc), setup.ctx);
    } else {
        for (const auto& s : config.scatterers) {
            Shape shape = KiteShape{};
            if (s.shape == "circle") shape = CircleShape{1.0};
            else if (s.shape == "ellipse") shape = EllipseShape{};
            BoundaryCurve base(shape, {}, 1.0, s.rotation);
            setup.curves.push_back(place_scatterer(base, s.center, s.size));
            setup.nodes.push_back(s.nodes > 0 ? s.nodes : config.boundary.nodes);
        }
        // Geometry is checked before any boundary solve.
        for (const auto* set : {&setup.receivers, &setup.sources}) {
            for (const Point p : set->points) {
                for (const auto& curve : setup.curves) {
                    if (curve.contains(p) || curve.distance_to(p) < kMinSourceClearance * setup.ctx.lambda()) {
                        throw GeometryError("point (" + format_number(p.x) + ", " + format_number(p.y) +
                                            ") is not exterior to the " + curve.kind_name());
                    }
                }
            }
        }
        auto system = assemble(setup.curves, setup.nodes, setup.ctx);
        if (config.boundary.auto_refine && !setup.curves.empty()) {
            const auto pts = probe_points(setup.receivers);
            Eigen::MatrixXcd current = BoundaryIntegralModel(system).scattered(pts, pts);
            while (true) {
                std::vector<int> doubled = setup.nodes;
                bool can_double = true;
                for (int& n : doubled) {
                    n *= 2;
                    can_double = can_double && n <= config.boundary.max_nodes;
                }
                if (!can_double) {
                    break;
                }
                auto finer = assemble(setup.curves, doubled, setup.ctx);
                const Eigen::MatrixXcd next = BoundaryIntegralModel(finer).scattered(pts, pts);
                const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
                setup.refine_change = (next - current).cwiseAbs().maxCoeff() / scale;
                if (setup.refine_change <= config.boundary.refine_tolerance) {
                    break;
                }
                setup.nodes = doubled;
                system = finer;
                current = next;
            }
        }
        setup.model = std::make_unique<BoundaryIntegralModel>(system);
    }
    for (const auto* set : {&setup.receivers, &setup.sources}) {
        for (const Point p : set->points) {
            setup.model->require_exterior(p);
        }
    }
    return setup;
}

FieldMatrix acquire(const ExperimentConfig& config, const ForwardSetup& setup) {
    switch (config.kind) {
        case MatrixKind::NearField:
            return near_field_matrix(setup.receivers, *setup.model);
        case MatrixKind::ImaginaryNearField:
            return imaginary_near_field_matrix(near_field_matrix(setup.receivers, *setup.model));
        case MatrixKind::CrossCorrelation:
            return cross_correlation_matrix(setup.receivers, setup.sources, setup.sigma_measure, *setup.model);
        case MatrixKind::Covariance:
            return covariance_matrix(setup.receivers, setup.sources, setup.sigma_measure, config.realizations,
                                     config.seed, *setup.model);
    }
    throw KindError("unhandled matrix kind");
}

StageError::StageError(std::string stage, const std::string& what)
    : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}

namespace {

template <typename F>
auto timed(std::vector<StageTiming>& timings, const std::string& stage, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            timings.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
        } else {
            auto result = body();
            timings.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
            return result;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

RunResult execute(const ExperimentConfig& config) {
    RunResult result;
    result.manifest.config = config;
    auto& timings = result.manifest.timings;
    timed(timings, "config", [&] { config.validate(); });
    ForwardSetup setup = timed(timings, "forward", [&] { return build_forward(config); });
    result.curves = setup.curves;
    if (config.uses_point_model()) {
        for (const auto& s : config.scatterers) {
            result.point_centers.push_back(s.center);
        }
    }
    result.manifest.boundary_nodes = setup.nodes;
    if (const auto* bem = dynamic_cast<const BoundaryIntegralModel*>(setup.model.get())) {
        result.manifest.condition_estimate = bem->system().condition_estimate();
    }
    result.clean = timed(timings, "acquire", [&] { return acquire(config, setup); });
    result.noisy = timed(timings, "noise", [&] { return add_noise(result.clean, config.noise_amplitude, config.seed); });
    result.manifest.delta = result.noisy.provenance.delta;
    result.map = timed(timings, "invert", [&] {
        return indicator_map(result.noisy, config.grid, config.mask_radius, setup.ctx, config.rhs);
    });
    result.manifest.failed_probes = result.map.failed_probes;
    return result;
}

void write_indicator_csv(const IndicatorMap& map, std::ostream& out) {
    out << "x,y,raw,reciprocal,mask\n";
    for (int iy = 0; iy < map.grid.ny; ++iy) {
        for (int ix = 0; ix < map.grid.nx; ++ix) {
            const auto i = map.index(ix, iy);
            const Point z = map.grid.at(ix, iy);
            out << format_number(z.x) << ',' << format_number(z.y) << ',' << format_number(map.values[i]) << ','
                << format_number(map.reciprocal[i]) << ',' << static_cast<int>(map.mask[i]) << '\n';
        }
    }
}

void write_indicator_raw_csv(const IndicatorMap& map, std::ostream& out) {
    out << "x,y,status,alpha,g_norm,residual\n";
    for (const auto& p : map.probes) {
        out << format_number(p.z.x) << ',' << format_number(p.z.y) << ',' << to_string(p.status) << ','
            << format_number(p.alpha) << ',' << format_number(p.g_norm) << ',' << format_number(p.residual) << '\n';
    }
}

void write_indicator_pgm(const IndicatorMap& map, std::ostream& out) {
    out << "P5\n" << map.grid.nx << ' ' << map.grid.ny << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(map.grid.nx));
    for (int iy = map.grid.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < map.grid.nx; ++ix) {
            const auto i = map.index(ix, iy);
            const double v = map.mask[i] ? std::clamp(map.reciprocal[i], 0.0, 1.0) : 0.0;
            row[static_cast<std::size_t>(ix)] = static_cast<unsigned char>(std::lround(255.0 * v));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

std::string sha256_hex(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

namespace {

nlohmann::ordered_json config_json(const ExperimentConfig& config) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [section, body] : to_ptree(config)) {
        nlohmann::ordered_json sec = nlohmann::ordered_json::object();
        for (const auto& [key, node] : body) {
            sec[key] = node.data();
        }
        out[section] = sec;
    }
    return out;
}

ExperimentConfig config_from_json(const nlohmann::ordered_json& j) {
    pt::ptree tree;
    for (const auto& [section, body] : j.items()) {
        for (const auto& [key, value] : body.items()) {
            tree.put(key_path(section, key), value.get<std::string>());
        }
    }
    return from_ptree(tree);
}

}  // namespace

std::string manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["version"] = m.version;
    j["config"] = config_json(m.config);
    j["delta"] = m.delta;
    j["boundary_nodes"] = m.boundary_nodes;
    j["condition_estimate"] = m.condition_estimate;
    j["failed_probes"] = m.failed_probes;
    auto& timings = j["timings"] = nlohmann::ordered_json::array();
    for (const auto& t : m.timings) {
        timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    }
    auto& files = j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : m.files) {
        files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    }
    return j.dump(2) + "\n";
}

RunResult run(const ExperimentConfig& config) {
    RunResult result = execute(config);
    auto& m = result.manifest;
    timed(m.timings, "write", [&] {
        const fs::path dir(config.output);
        fs::create_directories(dir);
        const auto emit = [&](const std::string& name, const auto& writer) {
            const fs::path path = dir / name;
            {
                std::ofstream out(path, std::ios::binary);
                if (!out) {
                    throw std::runtime_error("cannot write " + path.string());
                }
                writer(out);
                if (!out) {
                    throw std::runtime_error("write failed for " + path.string());
                }
            }
            m.files.push_back({name, fs::file_size(path), sha256_hex(path)});
        };
        emit("matrix.csv", [&](std::ostream& o) { write_field_matrix_csv(result.noisy, o); });
        emit("indicator_raw.csv", [&](std::ostream& o) { write_indicator_raw_csv(result.map, o); });
        emit("indicator.csv", [&](std::ostream& o) { write_indicator_csv(result.map, o); });
        emit("indicator.pgm", [&](std::ostream& o) { write_indicator_pgm(result.map, o); });
    });
    const fs::path manifest = fs::path(config.output) / "manifest.json";
    std::ofstream out(manifest, std::ios::binary);
    out << manifest_json(m);
    if (!out) {
        throw StageError("write", "cannot write " + manifest.string());
    }
    return result;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    std::vector<std::string> problems;
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        return {"manifest.json missing"};
    }
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const std::exception& e) {
        return {std::string("manifest.json does not parse: ") + e.what()};
    }
    try {
        const ExperimentConfig echoed = config_from_json(j.at("config"));
        if (config_json(echoed).dump() != nlohmann::ordered_json::parse(j.at("config").dump()).dump()) {
            problems.push_back("config echo does not round-trip");
        }
    } catch (const std::exception& e) {
        problems.push_back(std::string("config echo invalid: ") + e.what());
    }
    for (const auto& f : j.value("files", nlohmann::ordered_json::array())) {
        const std::string name = f.at("name");
        const fs::path path = dir / name;
        if (!fs::exists(path)) {
            problems.push_back(name + " missing");
            continue;
        }
        if (fs::file_size(path) != f.at("bytes").get<std::uintmax_t>()) {
            problems.push_back(name + " size differs");
        }
        if (sha256_hex(path) != f.at("sha256").get<std::string>()) {
            problems.push_back(name + " checksum differs");
        }
    }
    return problems;
}

}  // namespace lsm
