#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "adr/discretize.hpp"
#include "adr/tensor.hpp"

namespace adr {

// Deterministic stream used for initial-condition noise. Identical
// (seed, dims) pairs produce identical draws on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform draw in the open interval (0,1), 53-bit resolution.
    double next_unit() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

struct SeededNoise {
    std::uint64_t seed = 0;
    double amplitude = 0.0;
};

// Pointwise reaction terms evaluated over whole buffers at once.
using ReactionFn = std::function<void(std::span<const double> u, std::span<const double> v,
                                      std::span<double> gu, std::span<double> gv)>;

// u0 = u_e + amplitude*U(0,1), v0 = v_e + amplitude*U(0,1); the u draws are
// taken first (whole field), then the v draws, in linearization order.
struct PerturbedEquilibriumIC {
    double amplitude = 0.0;
};

// u0 = u_e + amplitude*exp(-width*|x - center|^2), v0 = v_e.
struct GaussianBumpIC {
    double amplitude = 0.0;
    double width = 0.0;
    std::vector<double> center;
};

// Arbitrary closed-form fields of the node coordinates.
struct DeterministicIC {
    std::function<double(std::span<const double>)> u0;
    std::function<double(std::span<const double>)> v0;
};

using InitialConditionKind = std::variant<PerturbedEquilibriumIC, GaussianBumpIC, DeterministicIC>;

// A two-component advection-diffusion-reaction system: linear operator
// coefficients per component, reaction closures, equilibrium, and the
// initial-condition recipe. Embedding programs may register their own.
struct ModelSpec {
    std::string name;
    std::string description;
    int dim = 0;
    std::vector<std::array<double, 2>> intervals;
    OperatorRecipe recipe_u, recipe_v;
    std::vector<std::pair<std::string, double>> parameters;  // stable order
    ReactionFn reaction;
    std::optional<std::pair<double, double>> equilibrium_value;
    InitialConditionKind ic;
    std::uint64_t default_seed = 0;
};

// Registered benchmark systems, stable order:
// schnakenberg2d, fhn2d, fhn3d, dib2d, adv-schnakenberg3d, adv-brusselator3d.
std::span<const ModelSpec> model_catalog();
const ModelSpec& find_model(std::string_view name);

void reaction_eval(const ModelSpec& model, const TensorField& U, const TensorField& V,
                   TensorField& Gu, TensorField& Gv);
std::pair<TensorField, TensorField> reaction_eval(const ModelSpec& model, const TensorField& U,
                                                  const TensorField& V);

// The spatially uniform state that zeroes both reactions.
std::pair<double, double> equilibrium(const ModelSpec& model);

std::pair<TensorField, TensorField> initial_condition(const ModelSpec& model, const GridSpec& grid,
                                                      const SeededNoise& noise);

// Noise record with the model's documented amplitude and the given seed.
SeededNoise default_noise(const ModelSpec& model, std::uint64_t seed);

// Cube grid over the model's domain with n points per axis.
GridSpec uniform_grid(const ModelSpec& model, int n);

}  // namespace adr
