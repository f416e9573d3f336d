#include "kolpinn/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kolpinn/rng.hpp"

namespace kolpinn {

std::string to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "sigmoid";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

namespace act {
double value(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}
}  // namespace act

Architecture::Architecture(std::vector<int> widths_in, double r,
                           Activation act)
    : widths(std::move(widths_in)), weight_bound(r), activation(act) {
  if (widths.size() < 2) {
    throw std::invalid_argument("architecture needs at least one layer");
  }
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("layer widths must be positive");
  }
  if (!(r >= 0.0)) {
    throw std::invalid_argument("weight bound must be non-negative");
  }
}

int Architecture::max_width() const {
  return *std::max_element(widths.begin(), widths.end());
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0;
  for (int k = 1; k <= depth(); ++k) {
    n += static_cast<std::size_t>(widths[k]) *
         static_cast<std::size_t>(widths[k - 1] + 1);
  }
  return n;
}

std::size_t Architecture::layer_offset(int k) const {
  std::size_t off = 0;
  for (int j = 1; j < k; ++j) {
    off += static_cast<std::size_t>(widths[j]) *
           static_cast<std::size_t>(widths[j - 1] + 1);
  }
  return off;
}

ParameterVector::ParameterVector(Architecture a, std::vector<double> v)
    : arch(std::move(a)), values(std::move(v)) {
  if (values.size() != arch.parameter_count()) {
    throw std::invalid_argument("parameter vector length mismatch");
  }
}

ParameterVector::ParameterVector(Architecture a)
    : arch(std::move(a)), values(arch.parameter_count(), 0.0) {}

double ParameterVector::weight(int layer, int row, int col) const {
  const std::size_t off = arch.layer_offset(layer);
  const int prev = arch.widths[layer - 1];
  return values[off + static_cast<std::size_t>(row) *
                          static_cast<std::size_t>(prev) +
                static_cast<std::size_t>(col)];
}

double ParameterVector::bias(int layer, int row) const {
  const std::size_t off = arch.layer_offset(layer);
  const int prev = arch.widths[layer - 1];
  const int rows = arch.widths[layer];
  return values[off + static_cast<std::size_t>(rows) *
                          static_cast<std::size_t>(prev) +
                static_cast<std::size_t>(row)];
}

double ParameterVector::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

bool ParameterVector::in_box() const {
  return max_abs() <= arch.weight_bound;
}

std::vector<double> forward(const ParameterVector& params,
                            std::span<const double> x) {
  const auto states = layer_states(params, x);
  return states.back().post;
}

std::vector<LayerState> layer_states(const ParameterVector& params,
                                     std::span<const double> x) {
  const Architecture& arch = params.arch;
  if (static_cast<int>(x.size()) != arch.input_dim()) {
    throw std::invalid_argument("input length does not match l0");
  }
  const int L = arch.depth();
  std::vector<LayerState> states;
  states.reserve(static_cast<std::size_t>(L));
  std::vector<double> a(x.begin(), x.end());
  std::size_t off = 0;
  for (int k = 1; k <= L; ++k) {
    const int rows = arch.widths[k];
    const int cols = arch.widths[k - 1];
    LayerState st;
    st.pre.resize(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
      double z = params.values[off + static_cast<std::size_t>(rows) *
                                         static_cast<std::size_t>(cols) +
                               static_cast<std::size_t>(i)];  // bias
      const std::size_t row_off =
          off + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
      for (int j = 0; j < cols; ++j) {
        z += params.values[row_off + static_cast<std::size_t>(j)] *
             a[static_cast<std::size_t>(j)];
      }
      st.pre[static_cast<std::size_t>(i)] = z;
    }
    st.post = st.pre;
    if (k < L) {
      for (double& z : st.post) z = act::value(arch.activation, z);
    }
    a = st.post;
    off += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols + 1);
    states.push_back(std::move(st));
  }
  return states;
}

ParameterVector random_params(const Architecture& arch, std::uint64_t seed) {
  const std::size_t n = arch.parameter_count();
  std::vector<double> v(n);
  const double r = arch.weight_bound;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = uniform(-r, r, seed, /*c0=*/0x70617261, /*c1=*/i);
  }
  return ParameterVector(arch, std::move(v));
}

ParameterVector clamp_params(const ParameterVector& params) {
  ParameterVector out = params;
  clamp_params_inplace(out);
  return out;
}

void clamp_params_inplace(ParameterVector& params) {
  const double r = params.arch.weight_bound;
  for (double& v : params.values) v = std::clamp(v, -r, r);
}

void save_checkpoint(const ParameterVector& params, std::ostream& os) {
  const Architecture& a = params.arch;
  os << "kolpinn-checkpoint 1\n";
  os << "activation " << to_string(a.activation) << "\n";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", a.weight_bound);
  os << "weight_bound " << buf << "\n";
  os << "widths";
  for (int w : a.widths) os << ' ' << w;
  os << "\nvalues " << params.values.size() << "\n";
  for (double v : params.values) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << "\n";
  }
}

void save_checkpoint(const ParameterVector& params, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open checkpoint for write: " + path);
  save_checkpoint(params, os);
}

ParameterVector load_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "kolpinn-checkpoint" || version != 1) {
    throw std::runtime_error("bad checkpoint header");
  }
  std::string key, actname;
  is >> key >> actname;
  if (key != "activation") throw std::runtime_error("bad checkpoint: activation");
  double r = 0.0;
  is >> key >> r;
  if (key != "weight_bound") throw std::runtime_error("bad checkpoint: weight_bound");
  is >> key;
  if (key != "widths") throw std::runtime_error("bad checkpoint: widths");
  std::string line;
  std::getline(is, line);
  std::istringstream ws(line);
  std::vector<int> widths;
  int w;
  while (ws >> w) widths.push_back(w);
  std::size_t n = 0;
  is >> key >> n;
  if (key != "values") throw std::runtime_error("bad checkpoint: values");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> values[i])) throw std::runtime_error("truncated checkpoint");
  }
  Architecture arch(std::move(widths), r, activation_from_string(actname));
  return ParameterVector(std::move(arch), std::move(values));
}

ParameterVector load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(is);
}

}  // namespace kolpinn
