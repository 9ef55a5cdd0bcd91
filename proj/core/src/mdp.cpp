#include "windex/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace windex {

namespace {

double backup(const TabularMDP& mdp, const std::vector<double>& v, int s, int action,
              double lambda) {
  const auto [s_stay, s_arr] = mdp.successors(s, action);
  const double ev = (1.0 - mdp.beta) * v[s_stay] + mdp.beta * v[s_arr];
  return mdp.reward(s, action, lambda) + mdp.gamma * ev;
}

}  // namespace

ValueTable value_iterate(const TabularMDP& mdp, double lambda, double tol, int max_iters) {
  mdp.validate();
  if (tol <= 0.0) throw std::invalid_argument("value_iterate: tol must be > 0");
  if (max_iters < 1) throw std::invalid_argument("value_iterate: max_iters must be >= 1");

  const int n = mdp.num_states();
  std::vector<double> v(n, 0.0), next(n, 0.0);
  double residual = 0.0;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    residual = 0.0;
    for (int s = 0; s < n; ++s) {
      const double q0 = backup(mdp, v, s, 0, lambda);
      const double q1 = backup(mdp, v, s, 1, lambda);
      next[s] = std::max(q0, q1);
      residual = std::max(residual, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (residual <= tol) break;
  }
  if (residual > tol) {
    throw ConvergenceError("value_iterate: no convergence after " + std::to_string(max_iters) +
                               " iterations, residual " + std::to_string(residual),
                           residual);
  }

  ValueTable vt;
  vt.values = v;
  vt.lambda = lambda;
  vt.residual = residual;
  vt.iterations = iter + 1;
  vt.policy.resize(n);
  for (int s = 0; s < n; ++s) {
    const double q0 = backup(mdp, v, s, 0, lambda);
    const double q1 = backup(mdp, v, s, 1, lambda);
    vt.policy[s] = q1 > q0 ? 1 : 0;  // ties go to the low action
  }
  return vt;
}

double q_value(const TabularMDP& mdp, const ValueTable& vt, int state, int action) {
  return backup(mdp, vt.values, state, action, vt.lambda);
}

CheckReport check_concavity(const ValueTable& vt, double slack) {
  CheckReport rep;
  const auto& v = vt.values;
  for (std::size_t s = 1; s + 1 < v.size(); ++s) {
    const double d_lo = v[s] - v[s - 1];
    const double d_hi = v[s + 1] - v[s];
    if (d_hi > d_lo + slack) {
      rep.ok = false;
      std::ostringstream msg;
      msg << "concavity violated at s=" << s << ": DV(s)=" << d_hi << " > DV(s-1)=" << d_lo;
      rep.violations.push_back(msg.str());
    }
  }
  return rep;
}

CheckReport check_threshold(const ValueTable& vt) {
  CheckReport rep;
  int first_active = static_cast<int>(vt.policy.size());
  for (std::size_t s = 0; s < vt.policy.size(); ++s) {
    if (vt.policy[s] == 1) {
      first_active = static_cast<int>(s);
      break;
    }
  }
  for (std::size_t s = first_active; s < vt.policy.size(); ++s) {
    if (vt.policy[s] == 0) {
      rep.ok = false;
      std::ostringstream msg;
      msg << "threshold broken: policy(" << first_active << ")=1 but policy(" << s << ")=0";
      rep.violations.push_back(msg.str());
    }
  }
  return rep;
}

CheckReport check_indexability(const TabularMDP& mdp, const std::vector<double>& lambda_grid,
                               double tol, double slack) {
  CheckReport rep;
  if (lambda_grid.empty()) return rep;
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (lambda_grid[i] <= lambda_grid[i - 1]) {
      throw std::invalid_argument("check_indexability: lambda grid must be strictly increasing");
    }
  }
  if (lambda_grid.front() < 0.0) {
    throw std::invalid_argument("check_indexability: lambda grid must be non-negative");
  }

  ValueTable prev = value_iterate(mdp, lambda_grid[0], tol);
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    ValueTable cur = value_iterate(mdp, lambda_grid[i], tol);
    const double delta = lambda_grid[i] - lambda_grid[i - 1];
    for (int s = 0; s < mdp.num_states(); ++s) {
      // Nested inactive sets: once passive at the lower cost, stay passive.
      if (prev.policy[s] == 0 && cur.policy[s] == 1) {
        rep.ok = false;
        std::ostringstream msg;
        msg << "inactive set not nested at s=" << s << " between lambda=" << lambda_grid[i - 1]
            << " and " << lambda_grid[i];
        rep.violations.push_back(msg.str());
      }
      if (s + 1 < mdp.num_states()) {
        const double dv_prev = prev.values[s + 1] - prev.values[s];
        const double dv_cur = cur.values[s + 1] - cur.values[s];
        if (dv_cur - dv_prev > delta / mdp.gamma + slack) {
          rep.ok = false;
          std::ostringstream msg;
          msg << "DV bound violated at s=" << s << ": " << (dv_cur - dv_prev) << " > "
              << delta / mdp.gamma;
          rep.violations.push_back(msg.str());
        }
      }
    }
    prev = std::move(cur);
  }
  return rep;
}

double whittle_index(const TabularMDP& mdp, int state, double lambda_lo, double lambda_hi,
                     double tol, double vi_tol) {
  if (state < 0 || state > mdp.max_queue) {
    throw std::invalid_argument("whittle_index: state out of range");
  }
  if (lambda_hi <= lambda_lo) {
    throw std::invalid_argument("whittle_index: empty bracket");
  }
  auto q_diff = [&](double lambda) {
    ValueTable vt = value_iterate(mdp, lambda, vi_tol);
    return q_value(mdp, vt, state, 1) - q_value(mdp, vt, state, 0);
  };
  double f_lo = q_diff(lambda_lo);
  double f_hi = q_diff(lambda_hi);
  if (f_lo <= 0.0) {
    throw std::runtime_error("whittle_index: state always inactive on bracket");
  }
  if (f_hi > 0.0) {
    throw std::runtime_error("whittle_index: state always active on bracket");
  }
  while (lambda_hi - lambda_lo > tol) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (q_diff(mid) > 0.0) {
      lambda_lo = mid;
    } else {
      lambda_hi = mid;
    }
  }
  return 0.5 * (lambda_lo + lambda_hi);
}

IndexTable index_table(const TabularMDP& mdp, double lambda_lo, double lambda_hi, double tol) {
  IndexTable table;
  table.tolerance = tol;
  table.index.resize(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) {
    double w;
    try {
      w = whittle_index(mdp, s, lambda_lo, lambda_hi, tol);
    } catch (const std::runtime_error&) {
      // Always inactive (e.g. s=0): index sits at the bracket's lower edge.
      w = lambda_lo;
    }
    table.index[s] = w;
  }
  return table;
}

void export_index_csv(const IndexTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_index_csv: cannot open " + path);
  out << "state,index\n";
  for (std::size_t s = 0; s < table.index.size(); ++s) {
    out << s << "," << table.index[s] << "\n";
  }
  if (!out) throw std::runtime_error("export_index_csv: write failed for " + path);
}

}  // namespace windex
