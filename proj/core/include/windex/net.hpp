#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "windex/rng.hpp"

namespace windex {

inline constexpr int kNetInputs = 5;
inline constexpr int kNetHidden1 = 32;
inline constexpr int kNetHidden2 = 8;
// 5*32+32 + 32*8+8 + 8*1+1
inline constexpr int kNetParams =
    kNetInputs * kNetHidden1 + kNetHidden1 + kNetHidden1 * kNetHidden2 + kNetHidden2 +
    kNetHidden2 + 1;

// Per-feature affine input normalization: x_norm = (x - offset) * scale.
struct InputNorm {
  std::array<double, kNetInputs> scale{1.0, 1.0, 1.0, 1.0, 1.0};
  std::array<double, kNetInputs> offset{0.0, 0.0, 0.0, 0.0, 0.0};
};

struct AdamState {
  std::vector<double> m;  // first moments
  std::vector<double> v;  // second moments
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// The index function f_theta: a fully connected 5 -> 32 -> 8 -> 1 network
// with tanh hidden activations and a linear scalar head. Parameters live in
// one flat row-major vector so policy-gradient accumulation is a plain
// vector sum.
class WhittleNetwork {
 public:
  WhittleNetwork();

  // Xavier-uniform hidden layers, zero final layer: the initial index is 0
  // for every input.
  static WhittleNetwork init(Rng& rng, InputNorm norm = {});

  double forward(const std::array<double, kNetInputs>& state) const;

  // Gradient of the output w.r.t. every parameter, as a flat vector.
  // Returns the forward value.
  double forward_grad(const std::array<double, kNetInputs>& state,
                      std::vector<double>& grad) const;

  // Ascent step on `grad` with standard Adam. Throws on non-finite input,
  // leaving parameters untouched.
  void adam_step(const std::vector<double>& grad, double lr);

  const std::vector<double>& params() const { return theta_; }
  std::vector<double>& mutable_params() { return theta_; }
  const InputNorm& input_norm() const { return norm_; }
  void set_input_norm(const InputNorm& n) { norm_ = n; }
  const AdamState& adam_state() const { return adam_; }

  void save(const std::string& path) const;
  static WhittleNetwork load(const std::string& path);

  // Model files carry the class name so the scheduler can reject mismatches.
  const std::string& class_tag() const { return class_tag_; }
  void set_class_tag(std::string tag) { class_tag_ = std::move(tag); }

 private:
  std::vector<double> theta_;
  InputNorm norm_;
  AdamState adam_;
  std::string class_tag_ = "generic";
};

// sigma_m(index - lambda), clamped away from {0,1} for log safety.
double action_prob(double index, double lambda, double m);

// Gradient of ln sigma_m(f - lambda) (action=1) or ln(1 - sigma_m(f - lambda))
// (action=0) w.r.t. theta, accumulated into `acc` (same flat layout).
// Returns the action probability that was used.
double logprob_grad(const WhittleNetwork& net, const std::array<double, kNetInputs>& state,
                    double lambda, double m, int action, std::vector<double>& acc,
                    std::vector<double>& scratch);

}  // namespace windex
