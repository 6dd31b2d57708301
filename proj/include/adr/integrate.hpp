#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adr/matfun.hpp"
#include "adr/models.hpp"

namespace adr {

enum class Scheme { Etd2rkds, Lawson2b, DenseEtd2rkOracle, Rk4Oracle };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

// Propagators for one component: the directional operators and, depending on
// the scheme, phi_1/phi_2 of tau*A_mu or exp(tau*A_mu) per axis.
struct PropagatorComponent {
    std::vector<DenseMatrix> ops;
    std::vector<DenseMatrix> phi1;
    std::vector<DenseMatrix> phi2;
    std::vector<DenseMatrix> exp;
};

struct PropagatorSet {
    double tau = 0.0;
    Scheme scheme = Scheme::Etd2rkds;
    PropagatorComponent u, v;
};

PropagatorSet precompute_propagators(std::span<const DenseMatrix> ops_u,
                                     std::span<const DenseMatrix> ops_v, double tau,
                                     Scheme scheme);

struct SimState {
    double t = 0.0;
    std::int64_t n = 0;
    TensorField U, V;
};

struct BlowUpError : std::runtime_error {
    std::int64_t step;
    explicit BlowUpError(std::int64_t s)
        : std::runtime_error("solution lost finiteness at step " + std::to_string(s)), step(s) {}
};

// Scratch fields reused across steps; the stepping loop does not allocate.
struct StepWorkspace {
    TensorField gu, gv, gu2, gv2, w, w2, scratch, u2, v2;
    void resize(const std::vector<int>& dims);
};

void step_etd2rkds(SimState& state, const PropagatorSet& props, const ModelSpec& model,
                   StepWorkspace& ws);
void step_lawson2b(SimState& state, const PropagatorSet& props, const ModelSpec& model,
                   StepWorkspace& ws);
SimState step_etd2rkds(const SimState& state, const PropagatorSet& props, const ModelSpec& model);
SimState step_lawson2b(const SimState& state, const PropagatorSet& props, const ModelSpec& model);

// Directional operators A_mu for one component on the given grid.
std::vector<DenseMatrix> build_component_operators(const ModelSpec& model, const GridSpec& grid,
                                                   bool v_component);

// Spatially constant state at the model's equilibrium.
SimState equilibrium_state(const ModelSpec& model, const GridSpec& grid);

// Reference integrators on small grids (guarded at N <= 4096): the unsplit
// exponential two-stage scheme with phi functions of the assembled Kronecker
// sum, and classical fixed-step RK4.
SimState dense_etd2rk_oracle(const ModelSpec& model, const GridSpec& grid, SimState state,
                             double tau, std::int64_t steps);
SimState rk4_oracle(const ModelSpec& model, const GridSpec& grid, SimState state, double tau,
                    std::int64_t steps);

struct IndicatorSample {
    std::int64_t step = 0;
    double t = 0.0;
    double mean_u = 0.0;
    double increment_u = 0.0;  // Frobenius norm of U_n - U_{n-1}; 0 for the first sample
};

struct Indicators {
    std::vector<IndicatorSample> samples;
    double peak_increment = 0.0;
    double final_increment = 0.0;
};

struct RunObservers {
    std::int64_t indicator_stride = 1;  // 0 disables per-step samples (peak/final still tracked)
    std::int64_t snapshot_stride = 0;   // 0 = only via on_snapshot at the final step
    std::function<void(const SimState&)> on_snapshot;
};

struct RunResult {
    SimState state;
    Indicators indicators;
    double wall_seconds = 0.0;
    double per_step_seconds = 0.0;
};

RunResult run_steps(const ModelSpec& model, const GridSpec& grid, Scheme scheme, double tau,
                    std::int64_t steps, const RunObservers& observers, std::uint64_t seed);

// Variant taking the horizon; T/tau must be an integer up to rounding slack.
RunResult run(const ModelSpec& model, const GridSpec& grid, Scheme scheme, double tau, double T,
              const RunObservers& observers, std::uint64_t seed);

// sqrt of the sum of squared relative Frobenius errors of both components.
double error_norm(const TensorField& U, const TensorField& V, const TensorField& U_ref,
                  const TensorField& V_ref);

// order_k = ln(e_{k-1}/e_k) / ln(s_k/s_{k-1}), one entry per refinement.
std::vector<double> observed_order(std::span<const double> errors,
                                   std::span<const std::int64_t> step_counts);

double spatial_mean(const TensorField& U);
double time_increment(const TensorField& U_next, const TensorField& U);
double frobenius_norm(const TensorField& U);
double max_abs(const TensorField& U);

struct ConvergenceRow {
    std::int64_t steps = 0;
    double seconds = 0.0;
    double error = 0.0;
    double order = 0.0;  // NaN in the first row
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    std::int64_t reference_steps = 0;
};

// Errors at final time against a same-scheme reference run with
// reference_steps steps, for each entry of step_counts.
ConvergenceStudy convergence_study(const ModelSpec& model, const GridSpec& grid, Scheme scheme,
                                   double T, std::span<const std::int64_t> step_counts,
                                   std::int64_t reference_steps, std::uint64_t seed);

struct SplittingRow {
    double tau = 0.0;
    double defect = 0.0;
    bool roundoff = false;        // defect at roundoff level, excluded from the fit
    bool pre_asymptotic = false;  // pairwise slope to the next finer tau well below cubic
};

struct SplittingStudy {
    std::vector<SplittingRow> rows;
    double slope = 0.0;  // least-squares log-log slope over non-roundoff rows, NaN if < 2
};

// One-step defect between the split stepper and the dense two-stage
// exponential oracle, per tau, from a common initial state.
SplittingStudy splitting_study(const ModelSpec& model, const GridSpec& grid,
                               std::span<const double> taus, std::uint64_t seed);

}  // namespace adr
