#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace windex {

// Single-queue two-action MDP used as ground truth for the learned index
// networks. States are integer queue lengths in [0, max_queue]; the high
// action serves r1 units, the low action r0, and one arrival occurs with
// probability beta. Transitions clamp at both ends of the state range.
struct TabularMDP {
  int max_queue = 20;
  int r0 = 0;        // service amount under the low action
  int r1 = 1;        // service amount under the high action
  double beta = 0.3; // arrival probability per step
  double gamma = 0.9;
  double mu_r = 0.0; // throughput-penalty multiplier
  double mu_l = 0.0; // service-regularity penalty multiplier

  int num_states() const { return max_queue + 1; }

  void validate() const {
    if (max_queue < 1) throw std::invalid_argument("TabularMDP: max_queue must be >= 1");
    if (r0 < 0 || r0 >= r1) throw std::invalid_argument("TabularMDP: need 0 <= r0 < r1");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("TabularMDP: beta outside [0,1]");
    if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("TabularMDP: gamma outside (0,1)");
    if (mu_r < 0.0 || mu_l < 0.0) throw std::invalid_argument("TabularMDP: penalties must be >= 0");
  }

  // Realized service at state s: never more than the queue holds, zero at s=0.
  int served(int s, int action) const {
    if (s <= 0) return 0;
    const int r = action == 1 ? r1 : r0;
    return r < s ? r : s;
  }

  // Per-step reward (1+mu_r)*served - (mu_l + lambda)*a. The regularity
  // penalty acts as a constant extra activation cost, matching the
  // indifference condition of the threshold analysis up to an additive
  // constant that leaves policies and indices unchanged.
  double reward(int s, int action, double lambda) const {
    const double tpt = (1.0 + mu_r) * static_cast<double>(served(s, action));
    return tpt - (action == 1 ? (mu_l + lambda) : 0.0);
  }

  int clamp_state(int s) const {
    if (s < 0) return 0;
    if (s > max_queue) return max_queue;
    return s;
  }

  // Successor pair: (no-arrival state, arrival state).
  std::pair<int, int> successors(int s, int action) const {
    const int base = clamp_state(s - served(s, action));
    return {base, clamp_state(base + 1)};
  }
};

struct ValueTable {
  std::vector<double> values;  // indexed by state
  std::vector<int> policy;     // greedy action per state, 0 or 1
  double lambda = 0.0;
  double residual = 0.0;       // final sup-norm Bellman residual
  int iterations = 0;
};

struct IndexTable {
  std::vector<double> index;  // whittle index per state
  double tolerance = 0.0;     // width of the indifference bracket
};

// Report returned by the structural property checks; empty violations means
// the property holds.
struct CheckReport {
  bool ok = true;
  std::vector<std::string> violations;
};

struct ConvergenceError : std::runtime_error {
  double residual;
  ConvergenceError(const std::string& msg, double res)
      : std::runtime_error(msg), residual(res) {}
};

// Discounted value iteration to sup-norm tolerance. Ties between actions
// resolve to the low action.
ValueTable value_iterate(const TabularMDP& mdp, double lambda, double tol = 1e-9,
                         int max_iters = 1000000);

// Action-value of playing `action` at `state` and then following vt's values.
double q_value(const TabularMDP& mdp, const ValueTable& vt, int state, int action);

// V(s+1)-V(s) non-increasing in s, up to `slack`.
CheckReport check_concavity(const ValueTable& vt, double slack = 1e-8);

// Policy is 0 below some threshold state and 1 at and above it.
CheckReport check_threshold(const ValueTable& vt);

// Inactive sets nested along an increasing lambda grid, and the value
// difference bound DV_{l+d}(s) - DV_l(s) <= d/gamma between adjacent points.
CheckReport check_indexability(const TabularMDP& mdp, const std::vector<double>& lambda_grid,
                               double tol = 1e-9, double slack = 1e-8);

// Indifference cost at `state` located by bisection on Q_high - Q_low over
// lambda. Throws if the bracket contains no sign change.
double whittle_index(const TabularMDP& mdp, int state, double lambda_lo, double lambda_hi,
                     double tol = 1e-6, double vi_tol = 1e-9);

// Indices for all states that are active somewhere on the bracket; states
// that stay inactive get the bracket's lower edge.
IndexTable index_table(const TabularMDP& mdp, double lambda_lo, double lambda_hi,
                       double tol = 1e-6);

// CSV rows "state,index" with a header line.
void export_index_csv(const IndexTable& table, const std::string& path);

}  // namespace windex
