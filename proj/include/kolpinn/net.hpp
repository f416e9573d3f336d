#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kolpinn {

enum class Activation { Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// A tanh multilayer perceptron shape: depth L, widths l0..lL and the
// parameter box half-width R. Parameters live in [-R, R]^k with
// k = sum_k l_k (l_{k-1} + 1).
struct Architecture {
  std::vector<int> widths;  // l0..lL, size L+1
  double weight_bound = 1.0;
  Activation activation = Activation::Tanh;

  Architecture() = default;
  Architecture(std::vector<int> widths_in, double r,
               Activation act = Activation::Tanh);

  int depth() const { return static_cast<int>(widths.size()) - 1; }
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int max_width() const;
  std::size_t parameter_count() const;

  // Offset of layer k's block (weights row-major, then biases), k in [1, L].
  std::size_t layer_offset(int k) const;

  bool operator==(const Architecture&) const = default;
};

// Flat parameter vector tied to an architecture. Immutable by convention
// after construction; all evaluations are pure.
struct ParameterVector {
  Architecture arch;
  std::vector<double> values;

  ParameterVector() = default;
  ParameterVector(Architecture a, std::vector<double> v);
  explicit ParameterVector(Architecture a);  // all-zero

  double weight(int layer, int row, int col) const;
  double bias(int layer, int row) const;
  double max_abs() const;
  bool in_box() const;  // every entry in [-R, R]
};

// Realization u_theta(x): tanh on hidden layers, affine output layer.
std::vector<double> forward(const ParameterVector& params,
                            std::span<const double> x);

inline std::vector<double> forward(const ParameterVector& params,
                                   const std::vector<double>& x) {
  return forward(params, std::span<const double>(x));
}

struct LayerState {
  std::vector<double> pre;   // W_k a_{k-1} + b_k
  std::vector<double> post;  // activation(pre), or pre for the output layer
};

// Per-layer states along the forward pass; state[L-1].post is the output.
std::vector<LayerState> layer_states(const ParameterVector& params,
                                     std::span<const double> x);

// Entries i.i.d. uniform on [-R, R], reproducible per seed.
ParameterVector random_params(const Architecture& arch, std::uint64_t seed);

// Projection onto the parameter box [-R, R]^k.
ParameterVector clamp_params(const ParameterVector& params);
void clamp_params_inplace(ParameterVector& params);

// Text checkpoint with exact decimal round trip (17 significant digits).
void save_checkpoint(const ParameterVector& params, std::ostream& os);
void save_checkpoint(const ParameterVector& params, const std::string& path);
ParameterVector load_checkpoint(std::istream& is);
ParameterVector load_checkpoint(const std::string& path);

namespace act {
double value(Activation a, double z);
}

}  // namespace kolpinn
