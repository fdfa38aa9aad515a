#pragma once

#include "blayer/boundary_data.hpp"
#include "blayer/lattice.hpp"
#include "blayer/strip_solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace blayer {

/// Trig-polynomial literal: {"dim", "constant": [..], "terms": [{"coef", "freq", "phase"}]}.
struct FieldSpec {
    int dim = 2;
    Vec constant{0.0};
    std::vector<TrigTerm> terms;

    PeriodicField build() const;
};

/// Operator literal. Kinds:
///   laplace        identity tensor in `dim` dimensions
///   isotropic      coefficient(y)·I, scalar field
///   laminate       (1/2 + cos(2πy_1)/4)·I
///   tensor         (N·d)² entry fields, row index i·d+α, column j·d+β
///   kinked3d       the three-dimensional kinked example map
///   kinked_plane   the planar reduction of it with kink normal `c`
struct OperatorConfig {
    std::string kind = "laplace";
    int dim = 2;
    int components = 1;
    double lambda = 1.0;
    FieldSpec coefficient;            ///< isotropic
    std::vector<FieldSpec> entries;   ///< tensor
    Vec c{0.0, 1.0};                  ///< kinked_plane

    bool is_nonlinear() const { return kind == "kinked3d" || kind == "kinked_plane"; }
    int space_dim() const;
    OperatorSpec build() const;
};

struct Numerics {
    double h = 1.0 / 16.0;
    bool strict_mesh = true;
    Vec heights;                    ///< ladder of strip heights; empty means 4M·2^j
    double tolerance = 1e-6;        ///< top-slice oscillation target
    double shift = 0.0;             ///< s of a single cell solve
    double tau = 1.0 / 32.0;        ///< smoothing width of kinked maps
    std::int64_t Q = 4;
    int samples = 16;               ///< profile samples per period
    double h_cell = 0.0;            ///< 0: default for the dimension
    double second_cell_h = 1.0 / 32.0;
    double c_hat = 1.0;
    double alpha = 0.5;
    int calibration_steps = 0;
    std::vector<std::int64_t> eps_scales;   ///< ε = 1/m for the refinement study
    std::vector<Vec> etas;          ///< approach directions for second-cell
    double linear_tolerance = 1e-10;
    double nonlinear_tolerance = 1e-8;
};

struct ExperimentConfig {
    std::string experiment = "cell-solve";
    OperatorConfig op;
    FieldSpec data;
    std::vector<DirectionSpec> directions;
    Numerics numerics;
    std::string output = "out";
    std::uint64_t seed = 0;
    int threads = 1;

    /// Parses JSON text. Throws ConfigError on malformed input or unknown keys.
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    /// Canonical JSON (sorted keys, every field present).
    std::string dump() const;
    /// dump() without the run-placement keys (output, threads), which do not change results.
    std::string canonical() const;
    /// FNV-1a of canonical(), hex.
    std::string hash() const;
    /// Range checks; throws ConfigError with the offending key.
    void validate() const;
    /// Sampled ellipticity / monotonicity check of the operator (1000 samples, seeded).
    /// Returns the sampled lower constant; throws OperatorInvalid.
    double check_operator() const;

    DataPtr build_data() const;
    SolverOptions solver_options() const;
    MeshSpec mesh() const { return MeshSpec{numerics.h, numerics.strict_mesh}; }
};

}  // namespace blayer
