#include "adr/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace adr {

namespace {

ReactionFn schnakenberg_reaction(double rho, double au, double av) {
    return [=](std::span<const double> u, std::span<const double> v,
               std::span<double> gu, std::span<double> gv) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double q = u[i] * u[i] * v[i];
            gu[i] = rho * (au - u[i] + q);
            gv[i] = rho * (av - q);
        }
    };
}

ReactionFn fhn_reaction(double rho, double a1v, double a2v) {
    return [=](std::span<const double> u, std::span<const double> v,
               std::span<double> gu, std::span<double> gv) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            gu[i] = rho * (-u[i] * (u[i] * u[i] - 1.0) - v[i]);
            gv[i] = rho * a1v * (u[i] - a2v * v[i]);
        }
    };
}

ReactionFn dib_reaction(double rho, double a1u, double a2u, double a3u, double a4u,
                        double a1v, double a2v, double a3v, double a4v, double a5v) {
    return [=](std::span<const double> u, std::span<const double> v,
               std::span<double> gu, std::span<double> gv) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double uu = u[i], vv = v[i];
            gu[i] = rho * (a1u * (1.0 - vv) * uu - a2u * uu * uu * uu - a3u * (vv - a4u));
            gv[i] = rho * (a1v * (1.0 + a2v * uu) * (1.0 - vv) * (1.0 - a3v * (1.0 - vv)) -
                           a4v * vv * (1.0 + a5v * uu) * (1.0 + a3v * vv));
        }
    };
}

ReactionFn brusselator_reaction(double a1u, double a2u) {
    return [=](std::span<const double> u, std::span<const double> v,
               std::span<double> gu, std::span<double> gv) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double q = u[i] * u[i] * v[i];
            gu[i] = q - (a1u + 1.0) * u[i] + a2u;
            gv[i] = -q + a1u * u[i];
        }
    };
}

std::vector<ModelSpec> build_catalog() {
    std::vector<ModelSpec> catalog;

    {
        ModelSpec m;
        m.name = "schnakenberg2d";
        m.description = "autocatalytic two-species kinetics, stationary spot pattern";
        m.dim = 2;
        m.intervals = {{0.0, 1.0}, {0.0, 1.0}};
        const double rho = 1000.0, au = 0.1, av = 0.9;
        m.recipe_u = {1.0, 0.0};
        m.recipe_v = {10.0, 0.0};
        m.parameters = {{"delta_u", 1.0}, {"delta_v", 10.0}, {"rho", rho},
                        {"a_u", au},      {"a_v", av}};
        m.reaction = schnakenberg_reaction(rho, au, av);
        m.equilibrium_value = {{au + av, av / ((au + av) * (au + av))}};
        m.ic = PerturbedEquilibriumIC{1e-5};
        m.default_seed = 0;
        catalog.push_back(std::move(m));
    }

    {
        ModelSpec m;
        m.name = "fhn2d";
        m.description = "nerve-fiber activator/recovery kinetics, square (4,4) pattern";
        m.dim = 2;
        m.intervals = {{0.0, std::numbers::pi}, {0.0, std::numbers::pi}};
        const double rho = 65.731, a1v = 11.0, a2v = 0.1;
        m.recipe_u = {1.0, 0.0};
        m.recipe_v = {42.1887, 0.0};
        m.parameters = {{"delta_u", 1.0}, {"delta_v", 42.1887}, {"rho", rho},
                        {"a1_v", a1v},    {"a2_v", a2v}};
        m.reaction = fhn_reaction(rho, a1v, a2v);
        m.equilibrium_value = {{0.0, 0.0}};
        m.ic = PerturbedEquilibriumIC{1e-3};
        m.default_seed = 0;
        catalog.push_back(std::move(m));
    }

    {
        ModelSpec m;
        m.name = "fhn3d";
        m.description = "three-dimensional activator/recovery kinetics, (2,2,2) pattern";
        m.dim = 3;
        m.intervals = {{0.0, std::numbers::pi}, {0.0, std::numbers::pi}, {0.0, std::numbers::pi}};
        const double rho = 24.649, a1v = 11.0, a2v = 0.1;
        m.recipe_u = {1.0, 0.0};
        m.recipe_v = {42.1887, 0.0};
        m.parameters = {{"delta_u", 1.0}, {"delta_v", 42.1887}, {"rho", rho},
                        {"a1_v", a1v},    {"a2_v", a2v}};
        m.reaction = fhn_reaction(rho, a1v, a2v);
        m.equilibrium_value = {{0.0, 0.0}};
        m.ic = PerturbedEquilibriumIC{1e-3};
        m.default_seed = 0;
        catalog.push_back(std::move(m));
    }

    {
        ModelSpec m;
        m.name = "dib2d";
        m.description = "electrodeposition morphology/composition kinetics, labyrinth pattern";
        m.dim = 2;
        m.intervals = {{0.0, 20.0}, {0.0, 20.0}};
        const double rho = 25.0 / 4.0;
        const double a1u = 10.0, a2u = 1.0, a3u = 66.0, a4u = 0.5;
        const double a1v = 3.0, a2v = 2.5, a3v = 0.2, a5v = 1.5;
        // Closure that puts the equilibrium at (0, a4u).
        const double a4v = a1v * (1.0 - a4u) * (1.0 - a3v + a3v * a4u) / (a4u * (1.0 + a3v * a4u));
        m.recipe_u = {1.0, 0.0};
        m.recipe_v = {20.0, 0.0};
        m.parameters = {{"delta_u", 1.0}, {"delta_v", 20.0}, {"rho", rho},
                        {"a1_u", a1u},    {"a2_u", a2u},     {"a3_u", a3u},  {"a4_u", a4u},
                        {"a1_v", a1v},    {"a2_v", a2v},     {"a3_v", a3v},  {"a4_v", a4v},
                        {"a5_v", a5v}};
        m.reaction = dib_reaction(rho, a1u, a2u, a3u, a4u, a1v, a2v, a3v, a4v, a5v);
        m.equilibrium_value = {{0.0, a4u}};
        m.ic = PerturbedEquilibriumIC{1e-5};
        m.default_seed = 123;
        catalog.push_back(std::move(m));
    }

    {
        ModelSpec m;
        m.name = "adv-schnakenberg3d";
        m.description = "advected autocatalytic kinetics, spot pattern drifting from a seed bump";
        m.dim = 3;
        m.intervals = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
        const double rho = 100.0, au = 0.1305, av = 0.7695;
        m.recipe_u = {0.05, 0.01};
        m.recipe_v = {1.0, 0.01};
        m.parameters = {{"delta_u", 0.05}, {"delta_v", 1.0}, {"alpha_u", 0.01},
                        {"alpha_v", 0.01}, {"rho", rho},     {"a_u", au},
                        {"a_v", av}};
        m.reaction = schnakenberg_reaction(rho, au, av);
        m.equilibrium_value = {{au + av, av / ((au + av) * (au + av))}};
        m.ic = GaussianBumpIC{1e-5, 100.0, {1.0 / 3.0, 1.0 / 2.0, 1.0 / 3.0}};
        m.default_seed = 0;
        catalog.push_back(std::move(m));
    }

    {
        ModelSpec m;
        m.name = "adv-brusselator3d";
        m.description = "advected activator/inhibitor kinetics relaxing to equilibrium";
        m.dim = 3;
        m.intervals = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
        const double a1u = 1.0, a2u = 2.0;
        m.recipe_u = {0.01, 0.1};
        m.recipe_v = {0.02, 0.1};
        m.parameters = {{"delta_u", 0.01}, {"delta_v", 0.02}, {"alpha_u", 0.1},
                        {"alpha_v", 0.1},  {"a1_u", a1u},     {"a2_u", a2u}};
        m.reaction = brusselator_reaction(a1u, a2u);
        m.equilibrium_value = {{a2u, a1u / a2u}};
        m.ic = DeterministicIC{
            [](std::span<const double> x) {
                double s = 1.0;
                for (double xi : x) s *= std::sin(2.0 * std::numbers::pi * xi);
                return 1.0 + s;
            },
            [](std::span<const double>) { return 3.0; }};
        m.default_seed = 0;
        catalog.push_back(std::move(m));
    }

    return catalog;
}

}  // namespace

std::span<const ModelSpec> model_catalog() {
    static const std::vector<ModelSpec> catalog = build_catalog();
    return catalog;
}

const ModelSpec& find_model(std::string_view name) {
    for (const ModelSpec& m : model_catalog())
        if (m.name == name) return m;
    std::ostringstream msg;
    msg << "unknown model '" << name << "'; registered models:";
    for (const ModelSpec& m : model_catalog()) msg << ' ' << m.name;
    throw std::invalid_argument(msg.str());
}

void reaction_eval(const ModelSpec& model, const TensorField& U, const TensorField& V,
                   TensorField& Gu, TensorField& Gv) {
    if (!U.same_dims(V)) throw std::invalid_argument("reaction_eval: U and V dims differ");
    if (!Gu.same_dims(U) || !Gv.same_dims(U))
        throw std::invalid_argument("reaction_eval: output dims differ from inputs");
    model.reaction(U.values(), V.values(), Gu.values(), Gv.values());
}

std::pair<TensorField, TensorField> reaction_eval(const ModelSpec& model, const TensorField& U,
                                                  const TensorField& V) {
    TensorField Gu(U.dims()), Gv(U.dims());
    reaction_eval(model, U, V, Gu, Gv);
    return {std::move(Gu), std::move(Gv)};
}

std::pair<double, double> equilibrium(const ModelSpec& model) {
    if (!model.equilibrium_value)
        throw std::logic_error("equilibrium: model '" + model.name + "' has no closed-form equilibrium");
    return *model.equilibrium_value;
}

std::pair<TensorField, TensorField> initial_condition(const ModelSpec& model, const GridSpec& grid,
                                                      const SeededNoise& noise) {
    if (grid.order() != model.dim)
        throw std::invalid_argument("initial_condition: grid dimension differs from model");
    TensorField U(grid.points), V(grid.points);

    if (const auto* pert = std::get_if<PerturbedEquilibriumIC>(&model.ic)) {
        (void)pert;
        const auto [ue, ve] = equilibrium(model);
        SplitMix64 rng(noise.seed);
        for (std::int64_t i = 0; i < U.size(); ++i) U[i] = ue + noise.amplitude * rng.next_unit();
        for (std::int64_t i = 0; i < V.size(); ++i) V[i] = ve + noise.amplitude * rng.next_unit();
        return {std::move(U), std::move(V)};
    }

    const auto axes = build_grid(grid);
    const int d = grid.order();
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);

    auto for_each_node = [&](auto&& fn) {
        std::fill(idx.begin(), idx.end(), 0);
        for (std::int64_t lin = 0; lin < U.size(); ++lin) {
            for (int mu = 0; mu < d; ++mu)
                x[static_cast<std::size_t>(mu)] =
                    axes[static_cast<std::size_t>(mu)][static_cast<std::size_t>(idx[static_cast<std::size_t>(mu)])];
            fn(lin, x);
            for (int mu = 0; mu < d; ++mu) {
                if (++idx[static_cast<std::size_t>(mu)] < grid.points[static_cast<std::size_t>(mu)]) break;
                idx[static_cast<std::size_t>(mu)] = 0;
            }
        }
    };

    if (const auto* bump = std::get_if<GaussianBumpIC>(&model.ic)) {
        const auto [ue, ve] = equilibrium(model);
        for_each_node([&](std::int64_t lin, std::span<const double> xs) {
            double r2 = 0.0;
            for (int mu = 0; mu < d; ++mu) {
                const double dx = xs[static_cast<std::size_t>(mu)] - bump->center[static_cast<std::size_t>(mu)];
                r2 += dx * dx;
            }
            U[lin] = ue + bump->amplitude * std::exp(-bump->width * r2);
            V[lin] = ve;
        });
        return {std::move(U), std::move(V)};
    }

    const auto& det = std::get<DeterministicIC>(model.ic);
    for_each_node([&](std::int64_t lin, std::span<const double> xs) {
        U[lin] = det.u0(xs);
        V[lin] = det.v0(xs);
    });
    return {std::move(U), std::move(V)};
}

SeededNoise default_noise(const ModelSpec& model, std::uint64_t seed) {
    double amplitude = 0.0;
    if (const auto* pert = std::get_if<PerturbedEquilibriumIC>(&model.ic)) amplitude = pert->amplitude;
    return {seed, amplitude};
}

GridSpec uniform_grid(const ModelSpec& model, int n) {
    GridSpec g;
    g.intervals = model.intervals;
    g.points.assign(static_cast<std::size_t>(model.dim), n);
    return g;
}

}  // namespace adr
