#include "blayer/second_cell.hpp"

#include "blayer/errors.hpp"
#include "blayer/io.hpp"
#include "blayer/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace blayer {

namespace {

/// g(y) = profile(y_0) for a known profile.
class FunctionProfileData final : public BoundaryData {
public:
    FunctionProfileData(std::function<double(double)> g, std::string label) : g_(std::move(g)), label_(std::move(label)) {}
    int components() const override { return 1; }
    void evaluate(std::span<const double> y, std::span<double> out) const override { out[0] = g_(y[0]); }
    std::string describe() const override { return label_; }

private:
    std::function<double(double)> g_;
    std::string label_;
};

double max_abs_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

SecondCellData second_cell_data(const PhiStarProfile& profile, Interpolation kind) {
    SecondCellData out;
    out.period = profile.period();
    out.profile_error = profile.max_error;
    out.mean = profile.mean;
    const PeriodicInterpolant full = profile.interpolant(kind);
    const std::size_t n = profile.samples.size();
    if (n % 2 == 0 && n >= 8) {
        std::vector<Vec> even;
        for (std::size_t j = 0; j < n; j += 2) even.push_back(profile.samples[j].value);
        const PeriodicInterpolant coarse(out.period, std::move(even), kind);
        double worst = 0.0;
        for (std::size_t j = 1; j < n; j += 2) {
            worst = std::max(worst, max_abs_diff(coarse.evaluate(profile.s[j]), profile.samples[j].value));
        }
        out.interpolation_error = worst / (kind == Interpolation::CubicSpline ? 16.0 : 4.0);
    }
    out.data = std::make_shared<ProfileData>(full);
    return out;
}

SecondCellData second_cell_data(std::function<double(double)> profile, double period, const std::string& label) {
    if (!(period > 0.0)) throw InvalidInput("second cell data: period must be positive");
    SecondCellData out;
    out.period = period;
    const int n = 1024;
    long double s = 0.0L;
    for (int j = 0; j < n; ++j) s += profile(period * j / n);
    out.mean = {static_cast<double>(s / n)};
    out.data = std::make_shared<FunctionProfileData>(std::move(profile), label);
    return out;
}

OperatorSpec planar_operator(const OperatorSpec& effective, const Vec& eta, const Vec& xi_hat, double tau) {
    if (const auto* A = std::get_if<LinearTensorField>(&effective)) {
        if (!A->is_constant()) throw InvalidInput("planar operator: the effective tensor must be constant");
        const int d = A->dim();
        const int N = A->components();
        if (static_cast<int>(eta.size()) != d || static_cast<int>(xi_hat.size()) != d) {
            throw InvalidInput("planar operator: basis has the wrong dimension");
        }
        const Vec full = A->average();
        const int s = N * d, s2 = 2 * N;
        const Vec* B[2] = {&eta, &xi_hat};
        Vec red(s2 * s2, 0.0);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        double v = 0.0;
                        for (int al = 0; al < d; ++al) {
                            for (int be = 0; be < d; ++be) {
                                v += (*B[a])[al] * full[(i * d + al) * s + j * d + be] * (*B[b])[be];
                            }
                        }
                        red[(i * 2 + a) * s2 + j * 2 + b] = v;
                    }
                }
            }
        }
        return LinearTensorField::constant(2, N, red, A->lambda());
    }
    const MapPtr& m = std::get<MapPtr>(effective);
    if (!m) throw InvalidInput("planar operator: null operator");
    if (m->depends_on_y()) throw InvalidInput("planar operator: the effective map must not depend on y");
    return m->restrict_to_plane(eta, xi_hat, tau);
}

DirectionalLimit directional_limit(const RationalDirection& xi, const Vec& eta, const SecondCellData& data,
                                   const OperatorSpec& effective, const SecondCellOptions& options) {
    if (!data.data) throw InvalidInput("directional limit: missing profile");
    if (static_cast<int>(eta.size()) != xi.dim()) throw InvalidInput("directional limit: eta has the wrong dimension");
    if (std::abs(norm(eta) - 1.0) > 1e-9 || std::abs(dot(eta, xi.xi_hat)) > 1e-9) {
        throw InvalidInput("directional limit: eta must be a unit vector orthogonal to xi");
    }
    const OperatorSpec op = planar_operator(effective, eta, xi.xi_hat, options.tau);
    StripProblem p = StripProblem::planar(data.period, 4.0 * data.period, options.mesh, op, data.data);
    p.tau = options.tau;
    DirectionalLimit out;
    out.eta = eta;
    out.strip = boundary_layer_limit(p, options.limit);
    out.L = out.strip.value;
    out.error_bar = out.strip.error_bar + data.error();
    return out;
}

EtaSpread eta_independence_check(const RationalDirection& xi, const SecondCellData& data, const OperatorSpec& effective,
                                 const std::vector<Vec>& etas, const SecondCellOptions& options) {
    if (etas.size() < 2) throw InvalidInput("eta independence: at least two approach directions");
    EtaSpread out;
    for (const auto& eta : etas) {
        out.limits.push_back(directional_limit(xi, eta, data, effective, options));
        out.max_error = std::max(out.max_error, out.limits.back().error_bar);
    }
    for (std::size_t a = 0; a < out.limits.size(); ++a) {
        for (std::size_t b = a + 1; b < out.limits.size(); ++b) {
            out.spread = std::max(out.spread, max_abs_diff(out.limits[a].L, out.limits[b].L));
        }
    }
    return out;
}

Vec average_formula(const SecondCellData& data, int samples) {
    if (samples < 1) throw InvalidInput("average formula: samples must be positive");
    const int N = data.data->components();
    std::vector<long double> acc(N, 0.0L);
    Vec v(N);
    for (int j = 0; j < samples; ++j) {
        const double y[2] = {data.period * j / samples, 0.0};
        data.data->evaluate(std::span<const double>(y, 2), v);
        for (int i = 0; i < N; ++i) acc[i] += v[i];
    }
    Vec out(N);
    for (int i = 0; i < N; ++i) out[i] = static_cast<double>(acc[i] / samples);
    return out;
}

// ---------------------------------------------------------------------------

PhiStarPredictor::PhiStarPredictor(OperatorSpec op, DataPtr data, PredictionSettings settings)
    : op_(std::move(op)), data_(std::move(data)), settings_(std::move(settings)) {
    if (!data_) throw InvalidInput("predictor: missing boundary data");
    if (settings_.Q < 1) throw InvalidInput("predictor: Q must be >= 1");
    if (!(settings_.alpha > 0.0) || settings_.c_hat < 0.0) throw InvalidInput("predictor: invalid approximation constants");
    linear_ = std::holds_alternative<LinearTensorField>(op_) ||
              dynamic_cast<const LinearMap*>(std::get<MapPtr>(op_).get()) != nullptr;
    const auto* field = dynamic_cast<const FieldData*>(data_.get());
    gradient_bound_ = field ? field->field().gradient_bound() : 1.0;
}

const OperatorSpec& PhiStarPredictor::effective() const {
    std::call_once(effective_once_, [&] { effective_ = std::make_unique<OperatorSpec>(effective_operator(op_, settings_.cell)); });
    return *effective_;
}

const PhiStarProfile& PhiStarPredictor::profile(const RationalDirection& xi) const {
    std::shared_ptr<Entry> e;
    {
        std::lock_guard lock(mutex_);
        auto& slot = profiles_[xi.xi];
        if (!slot) slot = std::make_shared<Entry>();
        e = slot;
    }
    std::call_once(e->once, [&] {
        ProfileOptions po;
        // Nonlinear profiles are interpolated linearly, so they get twice the samples.
        po.sample_count = linear_ ? settings_.profile_samples : 2 * settings_.profile_samples;
        po.tau = settings_.second_cell.tau;
        e->profile = std::make_unique<PhiStarProfile>(
            phi_star_profile(op_, data_, xi, settings_.profile_mesh, settings_.profile_limit, po));
    });
    return *e->profile;
}

SecondCellData PhiStarPredictor::data_for(const PhiStarProfile& prof) const {
    return second_cell_data(prof, linear_ ? Interpolation::CubicSpline : Interpolation::Linear);
}

double PhiStarPredictor::approximation_constant(const RationalDirection& xi) const {
    if (settings_.calibration_steps <= 0) return settings_.c_hat * gradient_bound_;
    std::shared_ptr<Calibration> c;
    {
        std::lock_guard lock(mutex_);
        auto& slot = calibrations_[xi.xi];
        if (!slot) slot = std::make_shared<Calibration>();
        c = slot;
    }
    std::call_once(c->once, [&] {
        const SecondCellData base = data_for(profile(xi));
        const IVec& p = xi.periods.front();
        double worst = 0.0;
        for (int k = 1; k <= settings_.calibration_steps; ++k) {
            IVec z(xi.xi.size());
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = k * xi.xi[i] + p[i];
            const RationalDirection zeta = make_rational_direction(z);
            const DirectionalApproach dec = decompose_direction(zeta.xi_hat, xi);
            const DirectionalLimit dl = directional_limit(xi, dec.eta, base, effective(), settings_.second_cell);
            const PhiStarProfile& pz = profile(zeta);
            double dev = 0.0;
            for (const auto& sample : pz.samples) dev = std::max(dev, max_abs_diff(sample.value, dl.L));
            worst = std::max(worst, dev / std::pow(xi.norm * dec.epsilon, settings_.alpha));
        }
        c->value = worst;
    });
    return c->value;
}

Prediction PhiStarPredictor::predict(const Vec& n_in) const {
    Prediction out;
    out.n = n_in;
    try {
        const Vec n = normalized(n_in);
        out.n = n;
        const DiophantineApprox approx = dirichlet_approximate(n, settings_.Q);
        const RationalDirection xi = make_rational_direction(approx.xi);
        const DirectionalApproach dec = decompose_direction(n, xi);
        out.xi = xi.xi;
        out.k = approx.k;
        out.epsilon = dec.epsilon;
        out.eta = dec.eta;
        out.provenance = dec.epsilon < 1e-12 ? "rational" : "approximation";
        const PhiStarProfile& prof = profile(xi);
        const DirectionalLimit dl = directional_limit(xi, dec.eta, data_for(prof), effective(), settings_.second_cell);
        out.value = dl.L;
        if (dec.epsilon >= 1e-12) {
            out.c_hat = approximation_constant(xi);
            out.approximation_term = out.c_hat * std::pow(xi.norm * dec.epsilon, settings_.alpha);
        }
        out.error_bar = dl.error_bar + out.approximation_term;
        if (!prof.converged || !dl.strip.converged) {
            out.ok = false;
            out.message = "not converged: " + (dl.strip.converged ? std::string("profile") : dl.strip.diagnostics);
        }
    } catch (const Error& e) {
        out.ok = false;
        out.message = e.what();
    }
    return out;
}

Prediction predict_phi_star(const Vec& n, const OperatorSpec& op, DataPtr data, const PredictionSettings& settings) {
    return PhiStarPredictor(op, std::move(data), settings).predict(n);
}

SweepReport continuity_sweep(const PhiStarPredictor& predictor, const std::vector<Vec>& directions) {
    for (std::size_t a = 0; a < directions.size(); ++a) {
        for (std::size_t b = a + 1; b < directions.size(); ++b) {
            if (max_abs_diff(normalized(directions[a]), normalized(directions[b])) < 1e-14) {
                throw InvalidInput("continuity sweep: directions must be pairwise distinct");
            }
        }
    }
    SweepReport rep;
    rep.rows.resize(directions.size());
    parallel_for(directions.size(), predictor.settings().threads,
                 [&](std::size_t i) { rep.rows[i] = predictor.predict(directions[i]); });

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int pairs = 0;
    bool have_jump = false;
    for (std::size_t a = 0; a < rep.rows.size(); ++a) {
        for (std::size_t b = a + 1; b < rep.rows.size(); ++b) {
            const auto& ra = rep.rows[a];
            const auto& rb = rep.rows[b];
            if (ra.value.empty() || rb.value.empty()) continue;
            const double dphi = max_abs_diff(ra.value, rb.value);
            Vec dn(ra.n.size());
            for (std::size_t k = 0; k < dn.size(); ++k) dn[k] = ra.n[k] - rb.n[k];
            const double sep = norm(dn);
            const double excess = dphi - ra.error_bar - rb.error_bar;
            if (!have_jump || excess > rep.max_excess_jump) {
                rep.max_excess_jump = excess;
                rep.jump_separation = sep;
                have_jump = true;
            }
            if (excess > 0.0 && sep > 0.0) {
                const double x = std::log(sep), y = std::log(dphi);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++pairs;
            }
        }
    }
    rep.fit.pairs = pairs;
    const double den = pairs * sxx - sx * sx;
    if (pairs >= 2 && den > 1e-12 * std::max(1.0, pairs * sxx)) {
        rep.fit.alpha = (pairs * sxy - sx * sy) / den;
        rep.fit.C = std::exp((sy - rep.fit.alpha * sx) / pairs);
        rep.fit.degenerate = false;
    } else {
        rep.notice = "degenerate fit: fewer than two direction pairs differ by more than their error bars";
    }
    for (const auto& r : rep.rows) {
        if (!r.ok) {
            rep.notice += (rep.notice.empty() ? "" : "; ") + std::string("some rows failed");
            break;
        }
    }
    return rep;
}

namespace {

std::string join_ints(const IVec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

std::string sweep_csv(const SweepReport& report) {
    const std::size_t d = report.rows.empty() ? 0 : report.rows.front().n.size();
    std::vector<std::string> header;
    for (std::size_t k = 0; k < d; ++k) header.push_back("n" + std::to_string(k));
    for (const auto& h : {"value", "error_bar", "xi", "k", "epsilon", "provenance", "ok", "message"}) header.emplace_back(h);
    CsvTable t(header);
    for (const auto& r : report.rows) {
        std::vector<std::string> cells;
        for (double v : r.n) cells.push_back(format_double(v));
        cells.push_back(r.value.empty() ? "nan" : format_double(r.value.front()));
        cells.push_back(format_double(r.error_bar));
        cells.push_back(join_ints(r.xi));
        cells.push_back(std::to_string(r.k));
        cells.push_back(format_double(r.epsilon));
        cells.push_back(r.provenance);
        cells.push_back(r.ok ? "1" : "0");
        std::string msg = r.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        cells.push_back(msg);
        t.add_row(cells);
    }
    return t.str();
}

std::string sweep_json(const SweepReport& report) {
    nlohmann::json j;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row;
        row["n"] = r.n;
        row["value"] = r.value;
        row["error_bar"] = r.error_bar;
        row["xi"] = r.xi;
        row["k"] = r.k;
        row["epsilon"] = r.epsilon;
        row["eta"] = r.eta;
        row["provenance"] = r.provenance;
        row["ok"] = r.ok;
        row["message"] = r.message;
        rows.push_back(row);
    }
    j["rows"] = rows;
    j["fit"] = {{"C", report.fit.C}, {"alpha", report.fit.alpha}, {"pairs", report.fit.pairs}, {"degenerate", report.fit.degenerate}};
    j["max_excess_jump"] = report.max_excess_jump;
    j["jump_separation"] = report.jump_separation;
    j["notice"] = report.notice;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

double subsolution_residual_formula(double y, double z) {
    const double c = std::cos(y);
    double v = 0.0;
    if (c < 0.0) v += -4.0 / 9.0 - c / 3.0;
    if (c > 0.0) v += 0.25 * (c - 1.0);
    return v * std::exp(-z);
}

double subsolution_residual_direct(double y, double z) {
    // w_z = −(1/3 + cos y)e^{−z}; a_z = (3/4) w_z when w_z < 0 and (3/2) w_z otherwise.
    const double c = std::cos(y);
    const double slope = (1.0 / 3.0 + c > 0.0) ? 0.75 : 1.5;
    return (c - slope * (1.0 / 3.0 + c)) * std::exp(-z);
}

ResidualScan subsolution_scan(int n, double z_max) {
    if (n < 2) throw InvalidInput("subsolution scan: at least 2 samples per axis");
    ResidualScan out;
    out.max_formula = -INFINITY;
    out.max_direct = -INFINITY;
    for (int i = 0; i < n; ++i) {
        const double y = 2.0 * M_PI * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double z = z_max * j / (n - 1);
            out.max_formula = std::max(out.max_formula, subsolution_residual_formula(y, z));
            out.max_direct = std::max(out.max_direct, subsolution_residual_direct(y, z));
            ++out.samples;
        }
    }
    return out;
}

GapCertificate gap_certificate(const SecondCellData& data, double h, double tau, const LimitOptions& limit) {
    if (!(h > 0.0) || !(tau >= 0.0)) throw InvalidInput("gap certificate: invalid mesh or smoothing");
    if (std::abs(data.period - 1.0) > 1e-12) throw InvalidInput("gap certificate: the profile must have unit period");
    const OperatorSpec op = planar_operator(MapPtr(std::make_shared<KinkedMap3d>()), {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, tau);
    StripProblem p = StripProblem::planar(1.0, 4.0, MeshSpec{h, true}, op, data.data);
    p.tau = tau;
    LimitOptions lim = limit;
    lim.keep_solution = true;
    const BoundaryLayerResult res = boundary_layer_limit(p, lim);
    const StripSolution& sol = *res.solution;
    const StructuredGrid& g = *sol.grid;

    GapCertificate out;
    out.h = h;
    out.tau = tau;
    out.limit = res.value.front();
    out.limit_error = res.error_bar;
    auto w = [](double t, double r) { return (1.0 / 3.0 + std::cos(2.0 * M_PI * t)) * std::exp(-2.0 * M_PI * r); };

    const std::size_t L = g.slice_size();
    out.min_ordering = INFINITY;
    double y[3];
    for (std::size_t node = 0; node < g.node_count(); ++node) {
        g.node_position(node, y);
        out.min_ordering = std::min(out.min_ordering, sol.at(node) - w(y[0], y[1]));
    }

    const double rstar = 1.0 / (2.0 * M_PI);
    const double dr = g.normal_spacing();
    int k0 = static_cast<int>(std::floor(rstar / dr)) - 1;
    k0 = std::clamp(k0, 0, g.slice_count() - 4);
    double lw[4];
    for (int a = 0; a < 4; ++a) {
        lw[a] = 1.0;
        const double ra = g.slice_height(k0 + a);
        for (int b = 0; b < 4; ++b) {
            if (b != a) lw[a] *= (rstar - g.slice_height(k0 + b)) / (ra - g.slice_height(k0 + b));
        }
    }
    out.delta_hat = INFINITY;
    for (std::size_t j = 0; j < L; ++j) {
        g.node_position(j, y);
        double v = 0.0;
        for (int a = 0; a < 4; ++a) v += lw[a] * sol.at((k0 + a) * L + j);
        const double gap = v - w(y[0], rstar);
        if (gap < out.delta_hat) {
            out.delta_hat = gap;
            out.worst_t = y[0];
        }
    }
    return out;
}

}  // namespace blayer
