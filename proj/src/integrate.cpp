#include "adr/integrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace adr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

DenseMatrix scaled_matrix(const DenseMatrix& A, double c) {
    DenseMatrix B = A;
    for (double& x : B.entries) x *= c;
    return B;
}

bool all_finite(const TensorField& T) {
    for (double x : T.values())
        if (!std::isfinite(x)) return false;
    return true;
}

void check_finite(const SimState& state) {
    if (!all_finite(state.U) || !all_finite(state.V)) throw BlowUpError(state.n);
}

// y = a + c*b, elementwise.
void axpy_into(const TensorField& a, double c, const TensorField& b, TensorField& y) {
    const double* pa = a.data();
    const double* pb = b.data();
    double* py = y.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] + c * pb[i];
}

// y = a - b, elementwise.
void sub_into(const TensorField& a, const TensorField& b, TensorField& y) {
    const double* pa = a.data();
    const double* pb = b.data();
    double* py = y.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] - pb[i];
}

void copy_into(const TensorField& src, TensorField& dst) {
    std::copy(src.values().begin(), src.values().end(), dst.values().begin());
}

}  // namespace

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::Etd2rkds: return "etd2rkds";
        case Scheme::Lawson2b: return "lawson2b";
        case Scheme::DenseEtd2rkOracle: return "etd2rk-dense-oracle";
        case Scheme::Rk4Oracle: return "rk4-oracle";
    }
    return "?";
}

Scheme scheme_from_string(std::string_view name) {
    if (name == "etd2rkds") return Scheme::Etd2rkds;
    if (name == "lawson2b") return Scheme::Lawson2b;
    if (name == "etd2rk-dense-oracle") return Scheme::DenseEtd2rkOracle;
    if (name == "rk4-oracle") return Scheme::Rk4Oracle;
    throw std::invalid_argument("unknown scheme '" + std::string(name) +
                                "'; expected etd2rkds, lawson2b, etd2rk-dense-oracle or rk4-oracle");
}

PropagatorSet precompute_propagators(std::span<const DenseMatrix> ops_u,
                                     std::span<const DenseMatrix> ops_v, double tau,
                                     Scheme scheme) {
    if (!(tau >= 0.0)) throw std::invalid_argument("precompute_propagators: tau must be >= 0");
    PropagatorSet props;
    props.tau = tau;
    props.scheme = scheme;
    props.u.ops.assign(ops_u.begin(), ops_u.end());
    props.v.ops.assign(ops_v.begin(), ops_v.end());
    auto fill = [&](PropagatorComponent& c) {
        for (const DenseMatrix& A : c.ops) {
            if (!A.square()) throw std::invalid_argument("precompute_propagators: operators must be square");
            if (scheme == Scheme::Etd2rkds) {
                PhiFamily fam = phi_funcs(scaled_matrix(A, tau), 2);
                c.phi1.push_back(std::move(fam.phi[0]));
                c.phi2.push_back(std::move(fam.phi[1]));
            } else if (scheme == Scheme::Lawson2b) {
                c.exp.push_back(expm_dense(scaled_matrix(A, tau)));
            }
        }
    };
    fill(props.u);
    fill(props.v);
    return props;
}

void StepWorkspace::resize(const std::vector<int>& dims) {
    auto fit = [&](TensorField& f) {
        if (f.dims() != dims) f = TensorField(dims);
    };
    fit(gu); fit(gv); fit(gu2); fit(gv2); fit(w); fit(w2); fit(scratch); fit(u2); fit(v2);
}

void step_etd2rkds(SimState& state, const PropagatorSet& props, const ModelSpec& model,
                   StepWorkspace& ws) {
    const double tau = props.tau;
    const int d = state.U.order();
    const double corr = std::ldexp(tau, d - 1);  // 2^{d-1} * tau
    ws.resize(state.U.dims());

    reaction_eval(model, state.U, state.V, ws.gu, ws.gv);

    // Stages: U_n + tau * Tucker_phi1(sum_mu U_n x_mu A_mu + G(U_n,V_n)).
    copy_into(ws.gu, ws.w);
    kron_action_add(state.U, props.u.ops, ws.w);
    tucker_apply_into(ws.w, props.u.phi1, ws.w2, ws.scratch);
    axpy_into(state.U, tau, ws.w2, ws.u2);

    copy_into(ws.gv, ws.w);
    kron_action_add(state.V, props.v.ops, ws.w);
    tucker_apply_into(ws.w, props.v.phi1, ws.w2, ws.scratch);
    axpy_into(state.V, tau, ws.w2, ws.v2);

    // Correctors: stage + 2^{d-1} tau * Tucker_phi2(G(stage) - G(old)).
    reaction_eval(model, ws.u2, ws.v2, ws.gu2, ws.gv2);

    sub_into(ws.gu2, ws.gu, ws.w);
    tucker_apply_into(ws.w, props.u.phi2, ws.w2, ws.scratch);
    axpy_into(ws.u2, corr, ws.w2, state.U);

    sub_into(ws.gv2, ws.gv, ws.w);
    tucker_apply_into(ws.w, props.v.phi2, ws.w2, ws.scratch);
    axpy_into(ws.v2, corr, ws.w2, state.V);

    state.t += tau;
    state.n += 1;
    check_finite(state);
}

void step_lawson2b(SimState& state, const PropagatorSet& props, const ModelSpec& model,
                   StepWorkspace& ws) {
    const double tau = props.tau;
    ws.resize(state.U.dims());

    reaction_eval(model, state.U, state.V, ws.gu, ws.gv);

    // Stages: Tucker_exp(U_n + tau*G).
    axpy_into(state.U, tau, ws.gu, ws.w);
    tucker_apply_into(ws.w, props.u.exp, ws.u2, ws.scratch);
    axpy_into(state.V, tau, ws.gv, ws.w);
    tucker_apply_into(ws.w, props.v.exp, ws.v2, ws.scratch);

    reaction_eval(model, ws.u2, ws.v2, ws.gu2, ws.gv2);

    // Tucker_exp(U_n + tau/2*G) + tau/2*G(stage).
    axpy_into(state.U, 0.5 * tau, ws.gu, ws.w);
    tucker_apply_into(ws.w, props.u.exp, ws.w2, ws.scratch);
    axpy_into(ws.w2, 0.5 * tau, ws.gu2, state.U);

    axpy_into(state.V, 0.5 * tau, ws.gv, ws.w);
    tucker_apply_into(ws.w, props.v.exp, ws.w2, ws.scratch);
    axpy_into(ws.w2, 0.5 * tau, ws.gv2, state.V);

    state.t += tau;
    state.n += 1;
    check_finite(state);
}

SimState step_etd2rkds(const SimState& state, const PropagatorSet& props, const ModelSpec& model) {
    SimState next = state;
    StepWorkspace ws;
    step_etd2rkds(next, props, model, ws);
    return next;
}

SimState step_lawson2b(const SimState& state, const PropagatorSet& props, const ModelSpec& model) {
    SimState next = state;
    StepWorkspace ws;
    step_lawson2b(next, props, model, ws);
    return next;
}

std::vector<DenseMatrix> build_component_operators(const ModelSpec& model, const GridSpec& grid,
                                                   bool v_component) {
    if (grid.order() != model.dim)
        throw std::invalid_argument("build_component_operators: grid dimension differs from model");
    const OperatorRecipe& recipe = v_component ? model.recipe_v : model.recipe_u;
    std::vector<DenseMatrix> ops;
    ops.reserve(static_cast<std::size_t>(grid.order()));
    for (int mu = 0; mu < grid.order(); ++mu)
        ops.push_back(build_directional_operator(grid.intervals[static_cast<std::size_t>(mu)],
                                                 grid.points[static_cast<std::size_t>(mu)], recipe));
    return ops;
}

SimState equilibrium_state(const ModelSpec& model, const GridSpec& grid) {
    const auto [ue, ve] = equilibrium(model);
    SimState state;
    state.U = TensorField(grid.points);
    state.V = TensorField(grid.points);
    std::fill(state.U.values().begin(), state.U.values().end(), ue);
    std::fill(state.V.values().begin(), state.V.values().end(), ve);
    return state;
}

namespace {

// Unsplit two-stage exponential scheme on the assembled N x N operators.
struct DenseOracleStepper {
    const ModelSpec& model;
    double tau;
    DenseMatrix Ku, Kv, phi1u, phi2u, phi1v, phi2v;
    TensorField gu, gv, gu2, gv2, w, tmp, u2, v2;

    DenseOracleStepper(const ModelSpec& m, const GridSpec& grid, double tau_) : model(m), tau(tau_) {
        const std::int64_t N = grid.total_points();
        if (N > 4096) {
            std::ostringstream msg;
            msg << "dense_etd2rk_oracle: N = " << N << " exceeds the 4096 oracle-scale guard";
            throw std::invalid_argument(msg.str());
        }
        const auto ops_u = build_component_operators(model, grid, false);
        const auto ops_v = build_component_operators(model, grid, true);
        Ku = assemble_kronecker_sum(ops_u);
        Kv = assemble_kronecker_sum(ops_v);
        auto phis = [&](const DenseMatrix& K, DenseMatrix& p1, DenseMatrix& p2) {
            const DenseMatrix Kt = scaled_matrix(K, tau);
            if (K.rows <= 1024) {
                PhiFamily fam = phi_funcs(Kt, 2);
                p1 = std::move(fam.phi[0]);
                p2 = std::move(fam.phi[1]);
            } else {
                p1 = phi_series_oracle(Kt, 1);
                p2 = phi_series_oracle(Kt, 2);
            }
        };
        phis(Ku, phi1u, phi2u);
        phis(Kv, phi1v, phi2v);
        const std::vector<int> dims = grid.points;
        for (TensorField* f : {&gu, &gv, &gu2, &gv2, &w, &tmp, &u2, &v2}) *f = TensorField(dims);
    }

    void step(SimState& state) {
        reaction_eval(model, state.U, state.V, gu, gv);

        // Stage: u + tau*phi1(tau K)(K u + g).
        matvec(Ku, state.U.values(), w.values());
        for (std::int64_t i = 0; i < w.size(); ++i) w[i] += gu[i];
        matvec(phi1u, w.values(), tmp.values());
        axpy_into(state.U, tau, tmp, u2);

        matvec(Kv, state.V.values(), w.values());
        for (std::int64_t i = 0; i < w.size(); ++i) w[i] += gv[i];
        matvec(phi1v, w.values(), tmp.values());
        axpy_into(state.V, tau, tmp, v2);

        reaction_eval(model, u2, v2, gu2, gv2);

        // Corrector: stage + tau*phi2(tau K)(g(stage) - g(old)).
        sub_into(gu2, gu, w);
        matvec(phi2u, w.values(), tmp.values());
        axpy_into(u2, tau, tmp, state.U);

        sub_into(gv2, gv, w);
        matvec(phi2v, w.values(), tmp.values());
        axpy_into(v2, tau, tmp, state.V);

        state.t += tau;
        state.n += 1;
        check_finite(state);
    }
};

// Classical fixed-step RK4 on the tensor-form right-hand side.
struct Rk4Stepper {
    const ModelSpec& model;
    double tau;
    std::vector<DenseMatrix> ops_u, ops_v;
    TensorField k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v, au, av, gu, gv;

    Rk4Stepper(const ModelSpec& m, const GridSpec& grid, double tau_)
        : model(m),
          tau(tau_),
          ops_u(build_component_operators(m, grid, false)),
          ops_v(build_component_operators(m, grid, true)) {
        const std::vector<int> dims = grid.points;
        for (TensorField* f : {&k1u, &k1v, &k2u, &k2v, &k3u, &k3v, &k4u, &k4v, &au, &av, &gu, &gv})
            *f = TensorField(dims);
    }

    void rhs(const TensorField& U, const TensorField& V, TensorField& fu, TensorField& fv) {
        reaction_eval(model, U, V, gu, gv);
        copy_into(gu, fu);
        kron_action_add(U, ops_u, fu);
        copy_into(gv, fv);
        kron_action_add(V, ops_v, fv);
    }

    void step(SimState& state) {
        rhs(state.U, state.V, k1u, k1v);
        axpy_into(state.U, 0.5 * tau, k1u, au);
        axpy_into(state.V, 0.5 * tau, k1v, av);
        rhs(au, av, k2u, k2v);
        axpy_into(state.U, 0.5 * tau, k2u, au);
        axpy_into(state.V, 0.5 * tau, k2v, av);
        rhs(au, av, k3u, k3v);
        axpy_into(state.U, tau, k3u, au);
        axpy_into(state.V, tau, k3v, av);
        rhs(au, av, k4u, k4v);
        const double c = tau / 6.0;
        for (std::int64_t i = 0; i < state.U.size(); ++i) {
            state.U[i] += c * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            state.V[i] += c * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        state.t += tau;
        state.n += 1;
        check_finite(state);
    }
};

}  // namespace

SimState dense_etd2rk_oracle(const ModelSpec& model, const GridSpec& grid, SimState state,
                             double tau, std::int64_t steps) {
    DenseOracleStepper stepper(model, grid, tau);
    for (std::int64_t k = 0; k < steps; ++k) stepper.step(state);
    return state;
}

SimState rk4_oracle(const ModelSpec& model, const GridSpec& grid, SimState state, double tau,
                    std::int64_t steps) {
    Rk4Stepper stepper(model, grid, tau);
    for (std::int64_t k = 0; k < steps; ++k) stepper.step(state);
    return state;
}

RunResult run_steps(const ModelSpec& model, const GridSpec& grid, Scheme scheme, double tau,
                    std::int64_t steps, const RunObservers& observers, std::uint64_t seed) {
    if (steps < 0) throw std::invalid_argument("run: negative step count");
    if (steps > 0 && !(tau > 0.0)) throw std::invalid_argument("run: tau must be positive");

    const auto t_total = Clock::now();
    auto [U0, V0] = initial_condition(model, grid, default_noise(model, seed));
    SimState state{0.0, 0, std::move(U0), std::move(V0)};

    RunResult result;
    if (observers.indicator_stride > 0)
        result.indicators.samples.push_back({0, 0.0, spatial_mean(state.U), 0.0});
    if (steps == 0) {
        if (observers.on_snapshot) observers.on_snapshot(state);
        result.state = std::move(state);
        result.wall_seconds = seconds_since(t_total);
        return result;
    }

    PropagatorSet props;
    std::unique_ptr<DenseOracleStepper> dense;
    std::unique_ptr<Rk4Stepper> rk4;
    StepWorkspace ws;
    if (scheme == Scheme::Etd2rkds || scheme == Scheme::Lawson2b) {
        props = precompute_propagators(build_component_operators(model, grid, false),
                                       build_component_operators(model, grid, true), tau, scheme);
        ws.resize(grid.points);
    } else if (scheme == Scheme::DenseEtd2rkOracle) {
        dense = std::make_unique<DenseOracleStepper>(model, grid, tau);
    } else {
        rk4 = std::make_unique<Rk4Stepper>(model, grid, tau);
    }

    TensorField prev = state.U;
    const auto t_loop = Clock::now();
    for (std::int64_t k = 1; k <= steps; ++k) {
        switch (scheme) {
            case Scheme::Etd2rkds: step_etd2rkds(state, props, model, ws); break;
            case Scheme::Lawson2b: step_lawson2b(state, props, model, ws); break;
            case Scheme::DenseEtd2rkOracle: dense->step(state); break;
            case Scheme::Rk4Oracle: rk4->step(state); break;
        }
        const double inc = time_increment(state.U, prev);
        result.indicators.peak_increment = std::max(result.indicators.peak_increment, inc);
        result.indicators.final_increment = inc;
        const bool record = (observers.indicator_stride > 0 &&
                             (k % observers.indicator_stride == 0 || k == steps));
        if (record)
            result.indicators.samples.push_back({k, state.t, spatial_mean(state.U), inc});
        if (observers.on_snapshot &&
            ((observers.snapshot_stride > 0 && k % observers.snapshot_stride == 0) || k == steps))
            observers.on_snapshot(state);
        if (k < steps) copy_into(state.U, prev);
    }
    const double loop_seconds = seconds_since(t_loop);

    result.state = std::move(state);
    result.wall_seconds = seconds_since(t_total);
    result.per_step_seconds = loop_seconds / static_cast<double>(steps);
    return result;
}

RunResult run(const ModelSpec& model, const GridSpec& grid, Scheme scheme, double tau, double T,
              const RunObservers& observers, std::uint64_t seed) {
    if (T < 0.0) throw std::invalid_argument("run: negative final time");
    std::int64_t steps = 0;
    if (T > 0.0) {
        if (!(tau > 0.0)) throw std::invalid_argument("run: tau must be positive");
        const double ratio = T / tau;
        const double rounded = std::round(ratio);
        if (rounded < 1.0 ||
            std::abs(ratio - rounded) > 8.0 * std::numeric_limits<double>::epsilon() * std::max(ratio, 1.0)) {
            std::ostringstream msg;
            msg << "run: T/tau = " << ratio << " is not an integral step count";
            throw std::invalid_argument(msg.str());
        }
        steps = static_cast<std::int64_t>(rounded);
    }
    return run_steps(model, grid, scheme, tau, steps, observers, seed);
}

double frobenius_norm(const TensorField& U) {
    double s = 0.0;
    for (double x : U.values()) s += x * x;
    return std::sqrt(s);
}

double max_abs(const TensorField& U) {
    double m = 0.0;
    for (double x : U.values()) m = std::max(m, std::abs(x));
    return m;
}

double error_norm(const TensorField& U, const TensorField& V, const TensorField& U_ref,
                  const TensorField& V_ref) {
    if (!U.same_dims(U_ref) || !V.same_dims(V_ref))
        throw std::invalid_argument("error_norm: dims mismatch");
    const double nu = frobenius_norm(U_ref);
    const double nv = frobenius_norm(V_ref);
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("error_norm: zero reference norm");
    double su = 0.0, sv = 0.0;
    for (std::int64_t i = 0; i < U.size(); ++i) {
        const double du = U[i] - U_ref[i];
        const double dv = V[i] - V_ref[i];
        su += du * du;
        sv += dv * dv;
    }
    const double ru = std::sqrt(su) / nu;
    const double rv = std::sqrt(sv) / nv;
    return std::sqrt(ru * ru + rv * rv);
}

std::vector<double> observed_order(std::span<const double> errors,
                                   std::span<const std::int64_t> step_counts) {
    if (errors.size() != step_counts.size() || errors.size() < 2)
        throw std::invalid_argument("observed_order: need matching lists of length >= 2");
    for (double e : errors)
        if (!(e > 0.0)) throw std::invalid_argument("observed_order: errors must be positive");
    for (std::size_t k = 1; k < step_counts.size(); ++k)
        if (step_counts[k] <= step_counts[k - 1])
            throw std::invalid_argument("observed_order: step counts must increase");
    std::vector<double> orders;
    orders.reserve(errors.size() - 1);
    for (std::size_t k = 1; k < errors.size(); ++k)
        orders.push_back(std::log(errors[k - 1] / errors[k]) /
                         std::log(static_cast<double>(step_counts[k]) / static_cast<double>(step_counts[k - 1])));
    return orders;
}

double spatial_mean(const TensorField& U) {
    double s = 0.0;
    for (double x : U.values()) s += x;
    return s / static_cast<double>(U.size());
}

double time_increment(const TensorField& U_next, const TensorField& U) {
    if (!U_next.same_dims(U)) throw std::invalid_argument("time_increment: dims mismatch");
    double s = 0.0;
    for (std::int64_t i = 0; i < U.size(); ++i) {
        const double d = U_next[i] - U[i];
        s += d * d;
    }
    return std::sqrt(s);
}

ConvergenceStudy convergence_study(const ModelSpec& model, const GridSpec& grid, Scheme scheme,
                                   double T, std::span<const std::int64_t> step_counts,
                                   std::int64_t reference_steps, std::uint64_t seed) {
    if (step_counts.size() < 2)
        throw std::invalid_argument("convergence_study: need at least 2 step counts");
    for (std::size_t k = 0; k < step_counts.size(); ++k) {
        if (step_counts[k] < 1) throw std::invalid_argument("convergence_study: step counts must be >= 1");
        if (k > 0 && step_counts[k] <= step_counts[k - 1])
            throw std::invalid_argument("convergence_study: step counts must increase");
    }
    if (reference_steps <= step_counts.back())
        throw std::invalid_argument("convergence_study: reference must use more steps than the sweep");
    if (!(T > 0.0)) throw std::invalid_argument("convergence_study: final time must be positive");

    RunObservers quiet;
    quiet.indicator_stride = 0;
    const RunResult ref = run_steps(model, grid, scheme, T / static_cast<double>(reference_steps),
                                    reference_steps, quiet, seed);

    ConvergenceStudy study;
    study.reference_steps = reference_steps;
    std::vector<double> errors;
    for (std::int64_t steps : step_counts) {
        const RunResult r =
            run_steps(model, grid, scheme, T / static_cast<double>(steps), steps, quiet, seed);
        const double err = error_norm(r.state.U, r.state.V, ref.state.U, ref.state.V);
        errors.push_back(err);
        study.rows.push_back({steps, r.wall_seconds, err, std::numeric_limits<double>::quiet_NaN()});
    }
    const std::vector<double> orders = [&] {
        for (double e : errors)
            if (!(e > 0.0)) return std::vector<double>();  // degenerate; leave orders NaN
        return observed_order(errors, step_counts);
    }();
    for (std::size_t k = 0; k + 1 < study.rows.size() && k < orders.size(); ++k)
        study.rows[k + 1].order = orders[k];
    return study;
}

SplittingStudy splitting_study(const ModelSpec& model, const GridSpec& grid,
                               std::span<const double> taus, std::uint64_t seed) {
    if (taus.empty()) throw std::invalid_argument("splitting_study: need at least one tau");
    auto [U0, V0] = initial_condition(model, grid, default_noise(model, seed));
    const SimState start{0.0, 0, std::move(U0), std::move(V0)};
    const auto ops_u = build_component_operators(model, grid, false);
    const auto ops_v = build_component_operators(model, grid, true);

    SplittingStudy study;
    for (double tau : taus) {
        if (!(tau > 0.0)) throw std::invalid_argument("splitting_study: tau must be positive");
        const PropagatorSet props = precompute_propagators(ops_u, ops_v, tau, Scheme::Etd2rkds);
        const SimState split = step_etd2rkds(start, props, model);
        const SimState dense = dense_etd2rk_oracle(model, grid, start, tau, 1);
        const double defect = error_norm(split.U, split.V, dense.U, dense.V);
        study.rows.push_back({tau, defect, defect < 1e-12, false});
    }

    // A row is flagged (not failed) when the pairwise slope towards the next
    // finer tau falls well short of the cubic local defect.
    for (std::size_t k = 0; k + 1 < study.rows.size(); ++k) {
        SplittingRow& row = study.rows[k];
        const SplittingRow& next = study.rows[k + 1];
        if (row.roundoff || next.roundoff || next.tau >= row.tau) continue;
        const double pair_slope =
            std::log(row.defect / next.defect) / std::log(row.tau / next.tau);
        row.pre_asymptotic = pair_slope < 2.5;
    }

    // Least-squares slope of ln(defect) vs ln(tau) over rows clear of roundoff.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const SplittingRow& row : study.rows) {
        if (row.roundoff) continue;
        const double x = std::log(row.tau), y = std::log(row.defect);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++m;
    }
    study.slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx)
                         : std::numeric_limits<double>::quiet_NaN();
    return study;
}

}  // namespace adr
