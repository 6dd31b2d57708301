#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "adr/integrate.hpp"
#include "adr/matfun.hpp"

using namespace adr;

namespace {

// Reaction-free model for linear-propagation checks.
ModelSpec linear_model(int dim, double delta_u, double delta_v, double alpha = 0.0) {
    ModelSpec m;
    m.name = "linear-test";
    m.dim = dim;
    m.intervals.assign(static_cast<std::size_t>(dim), {0.0, 1.0});
    m.recipe_u = {delta_u, alpha};
    m.recipe_v = {delta_v, alpha};
    m.reaction = [](std::span<const double>, std::span<const double>, std::span<double> gu,
                    std::span<double> gv) {
        std::fill(gu.begin(), gu.end(), 0.0);
        std::fill(gv.begin(), gv.end(), 0.0);
    };
    m.equilibrium_value = {{0.0, 0.0}};
    m.ic = DeterministicIC{[](std::span<const double> x) {
                               double s = 1.0;
                               for (double xi : x) s *= std::cos(std::numbers::pi * xi);
                               return 1.0 + 0.3 * s;
                           },
                           [](std::span<const double> x) {
                               double s = 1.0;
                               for (double xi : x) s *= std::cos(2.0 * std::numbers::pi * xi);
                               return 0.5 + 0.1 * s;
                           }};
    return m;
}

double rel_diff(const TensorField& A, const TensorField& B) {
    double diff = 0.0, scale = 0.0;
    for (std::int64_t i = 0; i < A.size(); ++i) {
        diff = std::max(diff, std::abs(A[i] - B[i]));
        scale = std::max(scale, std::abs(B[i]));
    }
    return diff / std::max(scale, 1e-300);
}

// Exact linear propagation by one Tucker application of exp(tau*A_mu).
SimState exact_linear_step(const ModelSpec& model, const GridSpec& grid, const SimState& state,
                           double tau) {
    auto exps = [&](bool v_comp) {
        std::vector<DenseMatrix> mats;
        auto ops = build_component_operators(model, grid, v_comp);
        for (DenseMatrix& A : ops) {
            for (double& x : A.entries) x *= tau;
            mats.push_back(expm_dense(A));
        }
        return mats;
    };
    SimState next = state;
    next.U = tucker_apply(state.U, exps(false));
    next.V = tucker_apply(state.V, exps(true));
    next.t += tau;
    next.n += 1;
    return next;
}

}  // namespace

TEST_CASE("scheme names round trip") {
    for (Scheme s : {Scheme::Etd2rkds, Scheme::Lawson2b, Scheme::DenseEtd2rkOracle, Scheme::Rk4Oracle})
        CHECK(scheme_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(scheme_from_string("euler"), std::invalid_argument);
}

TEST_CASE("propagators at tau = 0 are the phi values at zero") {
    const ModelSpec m = linear_model(1, 0.7, 0.4);
    const GridSpec grid = uniform_grid(m, 6);
    const auto ops = build_component_operators(m, grid, false);
    const PropagatorSet props = precompute_propagators(ops, ops, 0.0, Scheme::Etd2rkds);
    const PropagatorSet lawson = precompute_propagators(ops, ops, 0.0, Scheme::Lawson2b);
    for (int i = 0; i < 6; ++i) {
        CHECK(props.u.phi1[0](i, i) == doctest::Approx(1.0));
        CHECK(props.u.phi2[0](i, i) == doctest::Approx(0.5));
        CHECK(lawson.u.exp[0](i, i) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(precompute_propagators(ops, ops, -1.0, Scheme::Etd2rkds), std::invalid_argument);
}

TEST_CASE("propagators rebuild differently when tau changes and match the series oracle") {
    const ModelSpec m = linear_model(1, 0.9, 0.9);
    const GridSpec grid = uniform_grid(m, 8);
    const auto ops = build_component_operators(m, grid, false);
    const PropagatorSet p1 = precompute_propagators(ops, ops, 0.01, Scheme::Etd2rkds);
    const PropagatorSet p2 = precompute_propagators(ops, ops, 0.02, Scheme::Etd2rkds);
    CHECK(p1.tau != p2.tau);
    double diff = 0.0;
    for (std::size_t i = 0; i < p1.u.phi1[0].entries.size(); ++i)
        diff = std::max(diff, std::abs(p1.u.phi1[0].entries[i] - p2.u.phi1[0].entries[i]));
    CHECK(diff > 0.0);

    DenseMatrix At = ops[0];
    for (double& x : At.entries) x *= 0.01;
    const DenseMatrix oracle1 = phi_series_oracle(At, 1);
    const DenseMatrix oracle2 = phi_series_oracle(At, 2);
    double d1 = 0.0, d2 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < oracle1.entries.size(); ++i) {
        d1 = std::max(d1, std::abs(p1.u.phi1[0].entries[i] - oracle1.entries[i]));
        s1 = std::max(s1, std::abs(oracle1.entries[i]));
        d2 = std::max(d2, std::abs(p1.u.phi2[0].entries[i] - oracle2.entries[i]));
        s2 = std::max(s2, std::abs(oracle2.entries[i]));
    }
    CHECK(d1 / s1 < 1e-11);
    CHECK(d2 / s2 < 1e-11);
}

TEST_CASE("both steppers hold the equilibrium fixed") {
    for (const char* name : {"schnakenberg2d", "dib2d", "adv-brusselator3d"}) {
        const ModelSpec& m = find_model(name);
        const GridSpec grid = uniform_grid(m, m.dim == 2 ? 10 : 6);
        const double tau = 1e-3;
        const auto ops_u = build_component_operators(m, grid, false);
        const auto ops_v = build_component_operators(m, grid, true);
        const auto [ue, ve] = equilibrium(m);
        const double scale = std::max({std::abs(ue), std::abs(ve), 1.0});

        for (Scheme s : {Scheme::Etd2rkds, Scheme::Lawson2b}) {
            const PropagatorSet props = precompute_propagators(ops_u, ops_v, tau, s);
            SimState state = equilibrium_state(m, grid);
            StepWorkspace ws;
            for (int k = 0; k < 5; ++k) {
                if (s == Scheme::Etd2rkds)
                    step_etd2rkds(state, props, m, ws);
                else
                    step_lawson2b(state, props, m, ws);
            }
            double drift = 0.0;
            for (std::int64_t i = 0; i < state.U.size(); ++i) {
                drift = std::max(drift, std::abs(state.U[i] - ue));
                drift = std::max(drift, std::abs(state.V[i] - ve));
            }
            CHECK(drift <= 5 * 1e-12 * scale);
        }
    }
}

TEST_CASE("one-dimensional linear problems are propagated exactly") {
    const ModelSpec m = linear_model(1, 0.8, 0.2, 0.4);
    const GridSpec grid = uniform_grid(m, 14);
    const double tau = 0.05;
    const auto ops_u = build_component_operators(m, grid, false);
    const auto ops_v = build_component_operators(m, grid, true);
    auto [U0, V0] = initial_condition(m, grid, default_noise(m, 0));
    const SimState start{0.0, 0, std::move(U0), std::move(V0)};
    const SimState exact = exact_linear_step(m, grid, start, tau);

    const PropagatorSet pe = precompute_propagators(ops_u, ops_v, tau, Scheme::Etd2rkds);
    const SimState etd = step_etd2rkds(start, pe, m);
    CHECK(rel_diff(etd.U, exact.U) < 1e-12);
    CHECK(rel_diff(etd.V, exact.V) < 1e-12);

    const PropagatorSet pl = precompute_propagators(ops_u, ops_v, tau, Scheme::Lawson2b);
    const SimState law = step_lawson2b(start, pl, m);
    CHECK(rel_diff(law.U, exact.U) < 1e-12);
    CHECK(rel_diff(law.V, exact.V) < 1e-12);

    // and the dense two-stage oracle agrees with the split stepper here
    const SimState dense = dense_etd2rk_oracle(m, grid, start, tau, 1);
    CHECK(rel_diff(etd.U, dense.U) < 1e-12);
}

TEST_CASE("lawson2b is exact on linear problems in any dimension") {
    const ModelSpec m = linear_model(2, 0.6, 1.1, 0.3);
    const GridSpec grid = uniform_grid(m, 9);
    const double tau = 0.04;
    const auto ops_u = build_component_operators(m, grid, false);
    const auto ops_v = build_component_operators(m, grid, true);
    auto [U0, V0] = initial_condition(m, grid, default_noise(m, 0));
    SimState state{0.0, 0, std::move(U0), std::move(V0)};
    const PropagatorSet props = precompute_propagators(ops_u, ops_v, tau, Scheme::Lawson2b);
    SimState exact = state;
    StepWorkspace ws;
    for (int k = 0; k < 3; ++k) {
        step_lawson2b(state, props, m, ws);
        exact = exact_linear_step(m, grid, exact, tau);
    }
    CHECK(rel_diff(state.U, exact.U) < 1e-12);
    CHECK(rel_diff(state.V, exact.V) < 1e-12);
}

TEST_CASE("splitting rows outside the asymptotic range are flagged, not failed") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 12);
    // tau*rho of order one: defects decay visibly slower than cubic here.
    const std::vector<double> taus = {1e-3, 5e-4, 2.5e-4};
    const SplittingStudy study = splitting_study(m, grid, taus, 0);
    CHECK(study.rows[0].pre_asymptotic);
    CHECK(study.rows[1].pre_asymptotic);
    CHECK_FALSE(study.rows[0].roundoff);
    CHECK(std::isfinite(study.slope));
}

TEST_CASE("splitting defect on a linear 1D problem sits at roundoff") {
    const ModelSpec m = linear_model(1, 0.5, 0.25);
    const GridSpec grid = uniform_grid(m, 10);
    const std::vector<double> taus = {1e-2, 5e-3};
    const SplittingStudy study = splitting_study(m, grid, taus, 0);
    for (const SplittingRow& row : study.rows) CHECK(row.roundoff);
    CHECK(std::isnan(study.slope));
}

TEST_CASE("split stepper and dense oracle converge to the same fine-tau limit") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 12);
    const double T = 0.01;
    RunObservers quiet;
    quiet.indicator_stride = 0;
    const RunResult split = run_steps(m, grid, Scheme::Etd2rkds, T / 400, 400, quiet, 0);
    const RunResult dense = run_steps(m, grid, Scheme::DenseEtd2rkOracle, T / 400, 400, quiet, 0);
    CHECK(error_norm(split.state.U, split.state.V, dense.state.U, dense.state.V) < 1e-7);
}

TEST_CASE("one-step splitting defect shrinks by about 8x per tau halving") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 12);
    // The tau range must resolve the reaction (rho = 1000) before the local
    // defect shows its asymptotic cubic decay.
    const std::vector<double> taus = {3.125e-5, 1.5625e-5, 7.8125e-6};
    const SplittingStudy study = splitting_study(m, grid, taus, 0);
    REQUIRE(study.rows.size() == 3);
    for (const SplittingRow& row : study.rows) CHECK_FALSE(row.roundoff);
    CHECK(study.rows[0].defect > study.rows[1].defect);
    CHECK(study.rows[1].defect > study.rows[2].defect);
    CHECK(study.slope > 2.7);
    CHECK(study.slope < 3.3);
}

TEST_CASE("dense oracle refuses oversized grids") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 80);  // N = 6400
    SimState state = equilibrium_state(m, grid);
    CHECK_THROWS_WITH_AS(dense_etd2rk_oracle(m, grid, state, 1e-3, 1),
                         doctest::Contains("4096"), std::invalid_argument);
}

TEST_CASE("rk4 leaves the state alone when operators and reactions vanish") {
    const ModelSpec m = linear_model(2, 0.0, 0.0);
    const GridSpec grid = uniform_grid(m, 5);
    auto [U0, V0] = initial_condition(m, grid, default_noise(m, 0));
    SimState state{0.0, 0, U0, V0};
    state = rk4_oracle(m, grid, state, 0.1, 3);
    CHECK(rel_diff(state.U, U0) == 0.0);
    CHECK(rel_diff(state.V, V0) == 0.0);
}

TEST_CASE("rk4 one-step defect against the exact flow is fifth order") {
    const ModelSpec m = linear_model(1, 0.35, 0.35);
    const GridSpec grid = uniform_grid(m, 12);
    auto [U0, V0] = initial_condition(m, grid, default_noise(m, 0));
    const SimState start{0.0, 0, std::move(U0), std::move(V0)};
    std::vector<double> defects;
    for (double tau : {0.02, 0.01}) {
        const SimState rk = rk4_oracle(m, grid, start, tau, 1);
        const SimState exact = exact_linear_step(m, grid, start, tau);
        defects.push_back(error_norm(rk.U, rk.V, exact.U, exact.V));
    }
    const double slope = std::log2(defects[0] / defects[1]);
    CHECK(slope > 4.5);
    CHECK(slope < 5.5);
}

TEST_CASE("advective brusselator sits near (2.00x, 0.49x) at T = 5") {
    const ModelSpec& m = find_model("adv-brusselator3d");
    const GridSpec grid = uniform_grid(m, 16);
    RunObservers quiet;
    quiet.indicator_stride = 0;
    const RunResult r = run_steps(m, grid, Scheme::Etd2rkds, 5e-2, 100, quiet, 0);
    for (std::int64_t i = 0; i < r.state.U.size(); ++i) {
        CHECK(r.state.U[i] >= 2.0);
        CHECK(r.state.U[i] < 2.01);
        CHECK(r.state.V[i] >= 0.49);
        CHECK(r.state.V[i] < 0.50);
    }
}

TEST_CASE("rk4 agrees with a fine split solution on the brusselator") {
    const ModelSpec& m = find_model("adv-brusselator3d");
    const GridSpec grid = uniform_grid(m, 8);
    const double T = 0.5;
    RunObservers quiet;
    quiet.indicator_stride = 0;
    const RunResult rk = run_steps(m, grid, Scheme::Rk4Oracle, T / 250, 250, quiet, 0);
    const RunResult fine = run_steps(m, grid, Scheme::Etd2rkds, T / 2000, 2000, quiet, 0);
    CHECK(error_norm(rk.state.U, rk.state.V, fine.state.U, fine.state.V) < 1e-6);
}

TEST_CASE("error_norm arithmetic") {
    TensorField U({2, 2}), V({2, 2});
    for (std::int64_t i = 0; i < 4; ++i) {
        U[i] = 1.0 + static_cast<double>(i);
        V[i] = 2.0 - 0.5 * static_cast<double>(i);
    }
    CHECK(error_norm(U, V, U, V) == 0.0);

    TensorField Us = U;
    for (std::int64_t i = 0; i < 4; ++i) Us[i] *= 1.01;
    CHECK(error_norm(Us, V, U, V) == doctest::Approx(0.01).epsilon(1e-12));

    TensorField Ue = U, Ve = V;
    for (std::int64_t i = 0; i < 4; ++i) {
        Ue[i] *= 1.0 + 3e-3;
        Ve[i] *= 1.0 + 4e-3;
    }
    CHECK(error_norm(Ue, Ve, U, V) == doctest::Approx(5e-3).epsilon(1e-10));

    const TensorField zero({2, 2});
    CHECK_THROWS_AS(error_norm(U, V, zero, V), std::invalid_argument);
}

TEST_CASE("observed_order reproduces tabulated values") {
    {
        const std::vector<double> errors = {1.78e-3, 1.01e-3};
        const std::vector<std::int64_t> steps = {3000, 4000};
        const auto orders = observed_order(errors, steps);
        REQUIRE(orders.size() == 1);
        CHECK(orders[0] == doctest::Approx(1.97).epsilon(0.006));
    }
    {
        const std::vector<double> errors = {3.46e-4, 7.94e-5};
        const std::vector<std::int64_t> steps = {50, 100};
        const auto orders = observed_order(errors, steps);
        CHECK(orders[0] == doctest::Approx(2.12).epsilon(0.005));
    }
    {
        const std::vector<double> errors = {1.0, 0.5};
        const std::vector<std::int64_t> steps = {100, 200};
        CHECK(observed_order(errors, steps)[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(observed_order(std::vector<double>{1.0, -1.0}, std::vector<std::int64_t>{1, 2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(observed_order(std::vector<double>{1.0}, std::vector<std::int64_t>{1}),
                    std::invalid_argument);
}

TEST_CASE("spatial mean and time increment") {
    TensorField U({3, 3});
    for (std::int64_t i = 0; i < 9; ++i) U[i] = 4.2;
    CHECK(spatial_mean(U) == doctest::Approx(4.2).epsilon(1e-15));
    CHECK(time_increment(U, U) == 0.0);

    TensorField A({2, 3}), B({2, 3});
    double mean = 0.0, inc = 0.0;
    for (std::int64_t i = 0; i < 6; ++i) {
        A[i] = 0.1 * static_cast<double>(i * i) - 0.2;
        B[i] = 0.3 - 0.05 * static_cast<double>(i);
        mean += A[i];
        inc += (A[i] - B[i]) * (A[i] - B[i]);
    }
    CHECK(spatial_mean(A) == doctest::Approx(mean / 6.0).epsilon(1e-14));
    CHECK(time_increment(A, B) == doctest::Approx(std::sqrt(inc)).epsilon(1e-14));
}

TEST_CASE("run with T = 0 returns the initial condition") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 6);
    const RunResult r = run(m, grid, Scheme::Etd2rkds, 1e-3, 0.0, {}, 0);
    const auto [U0, V0] = initial_condition(m, grid, default_noise(m, 0));
    CHECK(rel_diff(r.state.U, U0) == 0.0);
    CHECK(r.state.n == 0);
}

TEST_CASE("run rejects non-integral step counts") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 6);
    CHECK_THROWS_AS(run(m, grid, Scheme::Etd2rkds, 3e-3, 0.01, {}, 0), std::invalid_argument);
    CHECK_NOTHROW(run(m, grid, Scheme::Etd2rkds, 0.01 / 7, 0.01, {}, 0));
}

TEST_CASE("identical seeds give bitwise identical finals under one thread") {
    set_parallelism(1);
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 10);
    RunObservers quiet;
    quiet.indicator_stride = 0;
    const RunResult a = run_steps(m, grid, Scheme::Etd2rkds, 1e-3, 20, quiet, 3);
    const RunResult b = run_steps(m, grid, Scheme::Etd2rkds, 1e-3, 20, quiet, 3);
    CHECK(std::memcmp(a.state.U.data(), b.state.U.data(),
                      sizeof(double) * static_cast<std::size_t>(a.state.U.size())) == 0);
    CHECK(std::memcmp(a.state.V.data(), b.state.V.data(),
                      sizeof(double) * static_cast<std::size_t>(a.state.V.size())) == 0);
}

TEST_CASE("indicators are sampled at the stride and always at the end") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 6);
    RunObservers obs;
    obs.indicator_stride = 3;
    const RunResult r = run_steps(m, grid, Scheme::Etd2rkds, 1e-4, 10, obs, 0);
    REQUIRE(r.indicators.samples.size() == 5);  // steps 0, 3, 6, 9, 10
    CHECK(r.indicators.samples[0].step == 0);
    CHECK(r.indicators.samples[0].increment_u == 0.0);
    CHECK(r.indicators.samples[1].step == 3);
    CHECK(r.indicators.samples.back().step == 10);
    CHECK(r.indicators.final_increment > 0.0);
    CHECK(r.indicators.peak_increment >= r.indicators.final_increment);
}

TEST_CASE("blow-up raises an error carrying the step index") {
    const ModelSpec& m = find_model("schnakenberg2d");
    const GridSpec grid = uniform_grid(m, 6);
    RunObservers quiet;
    quiet.indicator_stride = 0;
    try {
        run_steps(m, grid, Scheme::Etd2rkds, 1.0, 2000, quiet, 0);
        FAIL("expected blow-up");
    } catch (const BlowUpError& e) {
        CHECK(e.step >= 1);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("convergence study validates input and reports decreasing errors") {
    const ModelSpec& m = find_model("adv-brusselator3d");
    const GridSpec grid = uniform_grid(m, 8);
    const std::vector<std::int64_t> steps = {20, 40, 80};
    const ConvergenceStudy study = convergence_study(m, grid, Scheme::Etd2rkds, 0.5, steps, 320, 0);
    REQUIRE(study.rows.size() == 3);
    CHECK(std::isnan(study.rows[0].order));
    CHECK(study.rows[0].error > study.rows[1].error);
    CHECK(study.rows[1].error > study.rows[2].error);
    CHECK(study.rows[1].order > 1.75);
    CHECK(study.rows[1].order < 2.4);
    CHECK(study.rows[2].order > 1.75);
    CHECK(study.rows[2].order < 2.4);

    CHECK_THROWS_AS(
        convergence_study(m, grid, Scheme::Etd2rkds, 0.5, std::vector<std::int64_t>{10}, 100, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(convergence_study(m, grid, Scheme::Etd2rkds, 0.5, steps, 80, 0),
                    std::invalid_argument);
}
