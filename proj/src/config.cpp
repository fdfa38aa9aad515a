#include "blayer/config.hpp"

#include "blayer/errors.hpp"
#include "blayer/grid.hpp"
#include "blayer/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace blayer {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

json field_to_json(const FieldSpec& f) {
    json terms = json::array();
    for (const auto& t : f.terms) {
        terms.push_back({{"coef", t.coef}, {"freq", t.freq}, {"phase", t.phase == Phase::Cos ? "cos" : "sin"}});
    }
    return {{"dim", f.dim}, {"constant", f.constant}, {"terms", terms}};
}

FieldSpec field_from_json(const json& j, const std::string& where, int default_dim) {
    reject_unknown(j, {"dim", "constant", "terms"}, where);
    FieldSpec f;
    f.dim = default_dim;
    read(j, "dim", f.dim, where);
    if (j.contains("constant")) {
        if (j["constant"].is_number()) f.constant = {j["constant"].get<double>()};
        else read(j, "constant", f.constant, where);
    }
    if (j.contains("terms")) {
        if (!j["terms"].is_array()) throw ConfigError(where + ".terms must be an array");
        for (const auto& t : j["terms"]) {
            const std::string tw = where + ".terms[]";
            reject_unknown(t, {"coef", "freq", "phase"}, tw);
            TrigTerm term;
            if (t.contains("coef") && t["coef"].is_number()) term.coef = {t["coef"].get<double>()};
            else read(t, "coef", term.coef, tw);
            read(t, "freq", term.freq, tw);
            std::string phase = "cos";
            read(t, "phase", phase, tw);
            if (phase == "cos") term.phase = Phase::Cos;
            else if (phase == "sin") term.phase = Phase::Sin;
            else throw ConfigError(tw + ".phase must be 'cos' or 'sin'");
            f.terms.push_back(std::move(term));
        }
    }
    return f;
}

const std::set<std::string> kKinds{"laplace", "isotropic", "laminate", "tensor", "kinked3d", "kinked_plane"};

json operator_to_json(const OperatorConfig& op) {
    json j{{"kind", op.kind}};
    if (op.kind == "laplace" || op.kind == "laminate") {
        j["dim"] = op.dim;
    } else if (op.kind == "isotropic") {
        j["coefficient"] = field_to_json(op.coefficient);
        j["lambda"] = op.lambda;
    } else if (op.kind == "tensor") {
        j["dim"] = op.dim;
        j["components"] = op.components;
        j["lambda"] = op.lambda;
        json e = json::array();
        for (const auto& f : op.entries) e.push_back(field_to_json(f));
        j["entries"] = e;
    } else if (op.kind == "kinked_plane") {
        j["c"] = op.c;
    }
    return j;
}

OperatorConfig operator_from_json(const json& j) {
    const std::string where = "operator";
    reject_unknown(j, {"kind", "dim", "components", "lambda", "coefficient", "entries", "c"}, where);
    OperatorConfig op;
    read(j, "kind", op.kind, where);
    if (!kKinds.count(op.kind)) throw ConfigError("operator.kind '" + op.kind + "' is not one of laplace, isotropic, laminate, tensor, kinked3d, kinked_plane");
    read(j, "dim", op.dim, where);
    read(j, "components", op.components, where);
    read(j, "lambda", op.lambda, where);
    read(j, "c", op.c, where);
    if (op.kind == "laminate") op.lambda = 0.25;
    if (op.kind == "kinked3d") op.dim = 3;
    if (op.kind == "kinked_plane") op.dim = 2;
    if (j.contains("coefficient")) {
        op.coefficient = field_from_json(j["coefficient"], "operator.coefficient", op.dim);
        op.dim = op.coefficient.dim;
    }
    if (j.contains("entries")) {
        if (!j["entries"].is_array()) throw ConfigError("operator.entries must be an array");
        for (const auto& e : j["entries"]) op.entries.push_back(field_from_json(e, "operator.entries[]", op.dim));
    }
    return op;
}

json numerics_to_json(const Numerics& n) {
    json etas = json::array();
    for (const auto& e : n.etas) etas.push_back(e);
    return {{"h", n.h},
            {"strict_mesh", n.strict_mesh},
            {"heights", n.heights},
            {"tolerance", n.tolerance},
            {"shift", n.shift},
            {"tau", n.tau},
            {"Q", n.Q},
            {"samples", n.samples},
            {"h_cell", n.h_cell},
            {"second_cell_h", n.second_cell_h},
            {"c_hat", n.c_hat},
            {"alpha", n.alpha},
            {"calibration_steps", n.calibration_steps},
            {"eps_scales", n.eps_scales},
            {"etas", etas},
            {"linear_tolerance", n.linear_tolerance},
            {"nonlinear_tolerance", n.nonlinear_tolerance}};
}

Numerics numerics_from_json(const json& j) {
    const std::string w = "numerics";
    reject_unknown(j, {"h", "strict_mesh", "heights", "tolerance", "shift", "tau", "Q", "samples", "h_cell",
                       "second_cell_h", "c_hat", "alpha", "calibration_steps", "eps_scales", "etas",
                       "linear_tolerance", "nonlinear_tolerance"},
                   w);
    Numerics n;
    read(j, "h", n.h, w);
    read(j, "strict_mesh", n.strict_mesh, w);
    read(j, "heights", n.heights, w);
    read(j, "tolerance", n.tolerance, w);
    read(j, "shift", n.shift, w);
    read(j, "tau", n.tau, w);
    read(j, "Q", n.Q, w);
    read(j, "samples", n.samples, w);
    read(j, "h_cell", n.h_cell, w);
    read(j, "second_cell_h", n.second_cell_h, w);
    read(j, "c_hat", n.c_hat, w);
    read(j, "alpha", n.alpha, w);
    read(j, "calibration_steps", n.calibration_steps, w);
    read(j, "eps_scales", n.eps_scales, w);
    read(j, "etas", n.etas, w);
    read(j, "linear_tolerance", n.linear_tolerance, w);
    read(j, "nonlinear_tolerance", n.nonlinear_tolerance, w);
    return n;
}

bool divides(double length, double h) {
    const double r = length / h;
    return r >= 1.0 - 1e-9 && std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

}  // namespace

PeriodicField FieldSpec::build() const {
    try {
        return PeriodicField(dim, constant, terms);
    } catch (const Error& e) {
        throw ConfigError(std::string("field: ") + e.what());
    }
}

int OperatorConfig::space_dim() const {
    if (kind == "kinked3d") return 3;
    if (kind == "kinked_plane") return 2;
    return dim;
}

OperatorSpec OperatorConfig::build() const {
    if (kind == "laplace") {
        std::vector<double> id(static_cast<std::size_t>(dim * dim), 0.0);
        for (int a = 0; a < dim; ++a) id[static_cast<std::size_t>(a * dim + a)] = 1.0;
        return LinearTensorField::constant(dim, 1, id, 1.0);
    }
    if (kind == "laminate") {
        IVec k(static_cast<std::size_t>(dim), 0);
        k[0] = 1;
        return LinearTensorField::isotropic(PeriodicField(dim, {0.5}, {TrigTerm{{0.25}, k, Phase::Cos}}), 0.25);
    }
    if (kind == "isotropic") return LinearTensorField::isotropic(coefficient.build(), lambda);
    if (kind == "tensor") {
        const std::size_t want = static_cast<std::size_t>(components * dim) * static_cast<std::size_t>(components * dim);
        if (entries.size() != want) {
            throw ConfigError("operator.entries needs " + std::to_string(want) + " fields, got " + std::to_string(entries.size()));
        }
        std::vector<PeriodicField> fields;
        for (const auto& e : entries) fields.push_back(e.build());
        return LinearTensorField(dim, components, std::move(fields), lambda);
    }
    if (kind == "kinked3d") return MapPtr(std::make_shared<KinkedMap3d>());
    if (kind == "kinked_plane") return MapPtr(std::make_shared<KinkedPlaneMap>(c, 0.0));
    throw ConfigError("unknown operator kind '" + kind + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"experiment", "operator", "data", "directions", "numerics", "output", "seed", "threads"}, "config");
    ExperimentConfig c;
    read(j, "experiment", c.experiment, "config");
    if (j.contains("operator")) c.op = operator_from_json(j["operator"]);
    c.data.dim = c.op.space_dim();
    if (j.contains("data")) c.data = field_from_json(j["data"], "data", c.op.space_dim());
    if (j.contains("directions")) {
        if (!j["directions"].is_array()) throw ConfigError("directions must be an array of strings");
        for (const auto& d : j["directions"]) {
            if (!d.is_string()) throw ConfigError("directions must be an array of strings");
            try {
                c.directions.push_back(parse_direction(d.get<std::string>()));
            } catch (const InvalidInput& e) {
                throw ConfigError(std::string("directions: ") + e.what());
            }
        }
    }
    if (j.contains("numerics")) c.numerics = numerics_from_json(j["numerics"]);
    read(j, "output", c.output, "config");
    read(j, "seed", c.seed, "config");
    read(j, "threads", c.threads, "config");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::dump() const {
    json dirs = json::array();
    for (const auto& d : directions) dirs.push_back(format_direction(d));
    const json j{{"experiment", experiment},
                 {"operator", operator_to_json(op)},
                 {"data", field_to_json(data)},
                 {"directions", dirs},
                 {"numerics", numerics_to_json(numerics)},
                 {"output", output},
                 {"seed", seed},
                 {"threads", threads}};
    return j.dump(2) + "\n";
}

std::string ExperimentConfig::canonical() const {
    json j = json::parse(dump());
    j.erase("output");
    j.erase("threads");
    return j.dump(2) + "\n";
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(canonical())); }

void ExperimentConfig::validate() const {
    const auto& n = numerics;
    const int d = op.space_dim();
    if (d != 2 && d != 3) throw ConfigError("operator.dim must be 2 or 3");
    if (data.dim != d) throw ConfigError("data.dim does not match the operator dimension");
    if (!(n.h > 0.0) || n.h > 0.5) throw ConfigError("numerics.h must lie in (0, 1/2]");
    if (!(n.tolerance > 0.0)) throw ConfigError("numerics.tolerance must be positive");
    if (!(n.linear_tolerance > 0.0) || !(n.nonlinear_tolerance > 0.0)) throw ConfigError("solver tolerances must be positive");
    if (n.Q < 1) throw ConfigError("numerics.Q must be at least 1");
    if (n.samples < 8) throw ConfigError("numerics.samples must be at least 8");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (op.is_nonlinear() && !(n.tau > 0.0)) throw ConfigError("numerics.tau must be positive for nonlinear operators");
    if (n.tau < 0.0) throw ConfigError("numerics.tau must be non-negative");
    if (n.h_cell < 0.0 || n.h_cell > 0.5) throw ConfigError("numerics.h_cell must lie in [0, 1/2]");
    if (!(n.second_cell_h > 0.0)) throw ConfigError("numerics.second_cell_h must be positive");
    if (n.c_hat < 0.0) throw ConfigError("numerics.c_hat must be non-negative");
    if (!(n.alpha > 0.0) || n.alpha > 1.0) throw ConfigError("numerics.alpha must lie in (0, 1]");
    if (n.calibration_steps < 0) throw ConfigError("numerics.calibration_steps must be non-negative");
    for (auto m : n.eps_scales) {
        if (m < 1) throw ConfigError("numerics.eps_scales entries must be positive integers");
    }
    for (const auto& e : n.etas) {
        if (static_cast<int>(e.size()) != d) throw ConfigError("numerics.etas entries must have the operator dimension");
    }
    for (std::size_t i = 1; i < n.heights.size(); ++i) {
        if (!(n.heights[i] > n.heights[i - 1])) throw ConfigError("numerics.heights must be increasing");
    }
    for (const auto& spec : directions) {
        const Vec u = direction_unit_vector(spec);
        if (static_cast<int>(u.size()) != d) throw ConfigError("direction " + format_direction(spec) + " has the wrong dimension");
        const auto* iv = std::get_if<IVec>(&spec);
        if (!iv) continue;
        const RationalDirection xi = make_rational_direction(*iv);
        const StripFrame frame = StripFrame::from_direction(xi, 0.0);
        if (n.strict_mesh) {
            for (const auto& l : frame.lateral) {
                if (!divides(norm(l), n.h)) {
                    throw ConfigError("numerics.h = " + format_double(n.h) + " does not divide the lateral period " +
                                      format_double(norm(l)) + " of " + format_direction(spec) +
                                      " (set strict_mesh to false to round cell counts)");
                }
            }
        }
        for (double R : n.heights) {
            if (R < 4.0 * frame.M * (1.0 - 1e-12)) {
                throw ConfigError("numerics.heights: R = " + format_double(R) + " is below 4M = " +
                                  format_double(4.0 * frame.M) + " for " + format_direction(spec));
            }
            if (n.strict_mesh && !divides(R, n.h)) {
                throw ConfigError("numerics.heights: R = " + format_double(R) + " is not a multiple of h");
            }
        }
    }
}

double ExperimentConfig::check_operator() const {
    const OperatorSpec spec = op.build();
    if (const auto* A = std::get_if<LinearTensorField>(&spec)) return validate_tensor(*A, 1000, seed).lambda_hat;
    const auto& map = std::get<MapPtr>(spec);
    const MapPtr checked = numerics.tau > 0.0 ? map->smoothed(numerics.tau) : map;
    return validate_operator(*checked, 1000, 1.0, seed).lambda_hat;
}

DataPtr ExperimentConfig::build_data() const { return std::make_shared<FieldData>(data.build()); }

SolverOptions ExperimentConfig::solver_options() const {
    SolverOptions o;
    o.linear_tolerance = numerics.linear_tolerance;
    o.nonlinear_tolerance = numerics.nonlinear_tolerance;
    return o;
}

}  // namespace blayer
