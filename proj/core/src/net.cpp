#include "windex/net.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace windex {

namespace {

// Flat layout: [W1 (32x5) | b1 (32) | W2 (8x32) | b2 (8) | W3 (1x8) | b3 (1)]
constexpr int kW1 = 0;
constexpr int kB1 = kW1 + kNetHidden1 * kNetInputs;
constexpr int kW2 = kB1 + kNetHidden1;
constexpr int kB2 = kW2 + kNetHidden2 * kNetHidden1;
constexpr int kW3 = kB2 + kNetHidden2;
constexpr int kB3 = kW3 + kNetHidden2;
static_assert(kB3 + 1 == kNetParams);

// Doubles are stored as hex bit patterns: text-friendly and bit-exact.
void put_double(std::ostream& out, double d) {
  out << " " << std::hex << std::bit_cast<std::uint64_t>(d) << std::dec;
}

double get_double(std::istream& in) {
  std::uint64_t bits = 0;
  in >> std::hex >> bits >> std::dec;
  return std::bit_cast<double>(bits);
}

}  // namespace

WhittleNetwork::WhittleNetwork() : theta_(kNetParams, 0.0) {
  adam_.m.assign(kNetParams, 0.0);
  adam_.v.assign(kNetParams, 0.0);
}

WhittleNetwork WhittleNetwork::init(Rng& rng, InputNorm norm) {
  WhittleNetwork net;
  net.norm_ = norm;
  auto xavier = [&](int offset, int rows, int cols) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (int i = 0; i < rows * cols; ++i) {
      net.theta_[offset + i] = rng.uniform(-bound, bound);
    }
  };
  xavier(kW1, kNetHidden1, kNetInputs);
  xavier(kW2, kNetHidden2, kNetHidden1);
  // final layer stays zero: unbiased starting policy independent of state
  return net;
}

double WhittleNetwork::forward(const std::array<double, kNetInputs>& state) const {
  for (double x : state) {
    if (!std::isfinite(x)) throw std::invalid_argument("WhittleNetwork: non-finite input");
  }
  double x[kNetInputs];
  for (int i = 0; i < kNetInputs; ++i) x[i] = (state[i] - norm_.offset[i]) * norm_.scale[i];

  double h1[kNetHidden1];
  for (int j = 0; j < kNetHidden1; ++j) {
    double z = theta_[kB1 + j];
    const double* w = &theta_[kW1 + j * kNetInputs];
    for (int i = 0; i < kNetInputs; ++i) z += w[i] * x[i];
    h1[j] = std::tanh(z);
  }
  double h2[kNetHidden2];
  for (int j = 0; j < kNetHidden2; ++j) {
    double z = theta_[kB2 + j];
    const double* w = &theta_[kW2 + j * kNetHidden1];
    for (int i = 0; i < kNetHidden1; ++i) z += w[i] * h1[i];
    h2[j] = std::tanh(z);
  }
  double out = theta_[kB3];
  for (int j = 0; j < kNetHidden2; ++j) out += theta_[kW3 + j] * h2[j];
  return out;
}

double WhittleNetwork::forward_grad(const std::array<double, kNetInputs>& state,
                                    std::vector<double>& grad) const {
  for (double v : state) {
    if (!std::isfinite(v)) throw std::invalid_argument("WhittleNetwork: non-finite input");
  }
  grad.assign(kNetParams, 0.0);

  double x[kNetInputs];
  for (int i = 0; i < kNetInputs; ++i) x[i] = (state[i] - norm_.offset[i]) * norm_.scale[i];

  double h1[kNetHidden1];
  for (int j = 0; j < kNetHidden1; ++j) {
    double z = theta_[kB1 + j];
    const double* w = &theta_[kW1 + j * kNetInputs];
    for (int i = 0; i < kNetInputs; ++i) z += w[i] * x[i];
    h1[j] = std::tanh(z);
  }
  double h2[kNetHidden2];
  for (int j = 0; j < kNetHidden2; ++j) {
    double z = theta_[kB2 + j];
    const double* w = &theta_[kW2 + j * kNetHidden1];
    for (int i = 0; i < kNetHidden1; ++i) z += w[i] * h1[i];
    h2[j] = std::tanh(z);
  }
  double out = theta_[kB3];
  for (int j = 0; j < kNetHidden2; ++j) out += theta_[kW3 + j] * h2[j];

  // backward pass; d(out)/d(out) = 1
  grad[kB3] = 1.0;
  double d2[kNetHidden2];  // gradient at pre-activation of layer 2
  for (int j = 0; j < kNetHidden2; ++j) {
    grad[kW3 + j] = h2[j];
    d2[j] = theta_[kW3 + j] * (1.0 - h2[j] * h2[j]);
    grad[kB2 + j] = d2[j];
    double* g = &grad[kW2 + j * kNetHidden1];
    for (int i = 0; i < kNetHidden1; ++i) g[i] = d2[j] * h1[i];
  }
  for (int j = 0; j < kNetHidden1; ++j) {
    double back = 0.0;
    for (int k = 0; k < kNetHidden2; ++k) back += d2[k] * theta_[kW2 + k * kNetHidden1 + j];
    const double d1 = back * (1.0 - h1[j] * h1[j]);
    grad[kB1 + j] = d1;
    double* g = &grad[kW1 + j * kNetInputs];
    for (int i = 0; i < kNetInputs; ++i) g[i] = d1 * x[i];
  }
  return out;
}

void WhittleNetwork::adam_step(const std::vector<double>& grad, double lr) {
  if (grad.size() != theta_.size()) {
    throw std::invalid_argument("adam_step: gradient size mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
  }
  ++adam_.step;
  const double bc1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(adam_.step));
  const double bc2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(adam_.step));
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    adam_.m[i] = adam_.beta1 * adam_.m[i] + (1.0 - adam_.beta1) * grad[i];
    adam_.v[i] = adam_.beta2 * adam_.v[i] + (1.0 - adam_.beta2) * grad[i] * grad[i];
    const double mhat = adam_.m[i] / bc1;
    const double vhat = adam_.v[i] / bc2;
    // ascent on the supplied gradient
    theta_[i] += lr * mhat / (std::sqrt(vhat) + adam_.eps);
  }
}

void WhittleNetwork::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("WhittleNetwork::save: cannot open " + path);
  out << "windexnet 1\n";
  out << "class " << class_tag_ << "\n";
  out << "shape " << kNetInputs << " " << kNetHidden1 << " " << kNetHidden2 << " 1\n";
  out << "norm";
  for (int i = 0; i < kNetInputs; ++i) {
    put_double(out, norm_.scale[i]);
    put_double(out, norm_.offset[i]);
  }
  out << "\ntheta";
  for (double p : theta_) put_double(out, p);
  out << "\nadam " << adam_.step;
  for (double m : adam_.m) put_double(out, m);
  for (double v : adam_.v) put_double(out, v);
  out << "\n";
  if (!out) throw std::runtime_error("WhittleNetwork::save: write failed for " + path);
}

WhittleNetwork WhittleNetwork::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("WhittleNetwork::load: cannot open " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "windexnet" || version != 1) {
    throw std::runtime_error("WhittleNetwork::load: bad header in " + path);
  }
  WhittleNetwork net;
  std::string key;
  in >> key >> net.class_tag_;
  if (key != "class") throw std::runtime_error("WhittleNetwork::load: malformed file " + path);
  int n_in = 0, h1 = 0, h2 = 0, n_out = 0;
  in >> key >> n_in >> h1 >> h2 >> n_out;
  if (key != "shape" || n_in != kNetInputs || h1 != kNetHidden1 || h2 != kNetHidden2 ||
      n_out != 1) {
    throw std::runtime_error("WhittleNetwork::load: unsupported shape in " + path);
  }
  in >> key;
  if (key != "norm") throw std::runtime_error("WhittleNetwork::load: malformed file " + path);
  for (int i = 0; i < kNetInputs; ++i) {
    net.norm_.scale[i] = get_double(in);
    net.norm_.offset[i] = get_double(in);
  }
  in >> key;
  if (key != "theta") throw std::runtime_error("WhittleNetwork::load: malformed file " + path);
  for (double& p : net.theta_) p = get_double(in);
  in >> key;
  if (key == "adam") {
    in >> net.adam_.step;
    for (double& m : net.adam_.m) m = get_double(in);
    for (double& v : net.adam_.v) v = get_double(in);
  }
  if (in.fail() && !in.eof()) {
    throw std::runtime_error("WhittleNetwork::load: parse error in " + path);
  }
  return net;
}

double action_prob(double index, double lambda, double m) {
  if (m <= 0.0) throw std::invalid_argument("action_prob: m must be > 0");
  const double p = 1.0 / (1.0 + std::exp(-m * (index - lambda)));
  constexpr double lo = 1e-12;
  if (p < lo) return lo;
  if (p > 1.0 - lo) return 1.0 - lo;
  return p;
}

double logprob_grad(const WhittleNetwork& net, const std::array<double, kNetInputs>& state,
                    double lambda, double m, int action, std::vector<double>& acc,
                    std::vector<double>& scratch) {
  if (action != 0 && action != 1) throw std::invalid_argument("logprob_grad: action not in {0,1}");
  const double f = net.forward_grad(state, scratch);
  const double p = action_prob(f, lambda, m);
  // d ln(p)/df = (1-p)*m for action 1; d ln(1-p)/df = -p*m for action 0
  const double coeff = action == 1 ? (1.0 - p) * m : -p * m;
  if (acc.size() != scratch.size()) acc.assign(scratch.size(), 0.0);
  for (std::size_t i = 0; i < scratch.size(); ++i) acc[i] += coeff * scratch[i];
  return p;
}

}  // namespace windex
