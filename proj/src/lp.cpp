#include "smval/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace smval::lp {
namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class At { Lower, Upper, Zero, Basic };

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const Options& opts) : lp_(lp), opts_(opts) { build(); }

  Result run() {
    Result res;
    if (num_art_ > 0) {
      Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols_);
      phase1.tail(num_art_).setOnes();
      const Status s = iterate(phase1, res.iterations);
      if (s == Status::IterationLimit) {
        res.status = s;
        return res;
      }
      double infeasibility = 0.0;
      double worst = 0.0;
      for (int k = 0; k < num_art_; ++k) {
        const double v = x_[first_art_ + k];
        infeasibility += v;
        if (v > worst) {
          worst = v;
          res.infeasible_row = art_row_[static_cast<std::size_t>(k)];
        }
      }
      if (infeasibility > opts_.feasibility_tol * rhs_scale_) {
        res.status = Status::Infeasible;
        return res;
      }
      res.infeasible_row = -1;
      for (int k = 0; k < num_art_; ++k) upper_[first_art_ + k] = 0.0;
    }
    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols_);
    phase2.head(n_) = lp_.cost;
    res.status = iterate(phase2, res.iterations);
    if (res.status != Status::Optimal) return res;
    res.x = x_.head(n_);
    res.objective = lp_.cost.dot(res.x);
    return res;
  }

 private:
  void build() {
    m_ = static_cast<int>(lp_.rows.size());
    n_ = lp_.num_columns();
    if (lp_.lower.size() != n_ || lp_.upper.size() != n_) {
      throw std::invalid_argument("lp::solve: bound vectors do not match columns");
    }
    int num_slack = 0;
    for (const auto& row : lp_.rows) num_slack += row.sense != Sense::Equal;

    // Start structurals at a finite bound (or zero) and work out which rows
    // can use their slack as the initial basic variable.
    Eigen::VectorXd x0(n_);
    for (int j = 0; j < n_; ++j) {
      const double lo = lp_.lower[j], hi = lp_.upper[j];
      if (lo > hi) throw std::invalid_argument("lp::solve: column with lower > upper");
      x0[j] = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
    }
    Eigen::VectorXd residual(m_);
    rhs_scale_ = 1.0;
    for (int i = 0; i < m_; ++i) {
      double r = lp_.rows[static_cast<std::size_t>(i)].rhs;
      rhs_scale_ = std::max(rhs_scale_, std::abs(r));
      for (const auto& [j, a] : lp_.rows[static_cast<std::size_t>(i)].terms) {
        if (j < 0 || j >= n_) throw std::invalid_argument("lp::solve: row references bad column");
        r -= a * x0[j];
      }
      residual[i] = r;
    }
    std::vector<int> needs_art(static_cast<std::size_t>(m_), 0);
    num_art_ = 0;
    for (int i = 0; i < m_; ++i) {
      const Sense s = lp_.rows[static_cast<std::size_t>(i)].sense;
      const bool slack_ok = (s == Sense::LessEqual && residual[i] >= 0.0) ||
                            (s == Sense::GreaterEqual && residual[i] <= 0.0);
      if (!slack_ok) {
        needs_art[static_cast<std::size_t>(i)] = 1;
        ++num_art_;
      }
    }
    first_slack_ = n_;
    first_art_ = n_ + num_slack;
    cols_ = first_art_ + num_art_;

    original_ = Tableau::Zero(m_, cols_);
    lower_ = Eigen::VectorXd::Zero(cols_);
    upper_ = Eigen::VectorXd::Constant(cols_, kInf);
    x_ = Eigen::VectorXd::Zero(cols_);
    lower_.head(n_) = lp_.lower;
    upper_.head(n_) = lp_.upper;
    x_.head(n_) = x0;
    at_.assign(static_cast<std::size_t>(cols_), At::Lower);
    for (int j = 0; j < n_; ++j) {
      at_[static_cast<std::size_t>(j)] =
          std::isfinite(lp_.lower[j]) ? At::Lower : (std::isfinite(lp_.upper[j]) ? At::Upper : At::Zero);
    }
    basis_.assign(static_cast<std::size_t>(m_), -1);
    diag_.resize(m_);
    init_col_.assign(static_cast<std::size_t>(m_), -1);
    art_row_.clear();

    int slack = first_slack_;
    int art = first_art_;
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[static_cast<std::size_t>(i)];
      for (const auto& [j, a] : row.terms) original_(i, j) += a;
      int slack_col = -1;
      if (row.sense != Sense::Equal) {
        slack_col = slack++;
        original_(i, slack_col) = row.sense == Sense::LessEqual ? 1.0 : -1.0;
      }
      if (needs_art[static_cast<std::size_t>(i)]) {
        const double sign = residual[i] >= 0.0 ? 1.0 : -1.0;
        original_(i, art) = sign;
        set_basic(i, art, sign, std::abs(residual[i]));
        art_row_.push_back(i);
        ++art;
      } else {
        const double coef = original_(i, slack_col);
        set_basic(i, slack_col, coef, residual[i] / coef);
      }
    }
    tab_ = original_;
    for (int i = 0; i < m_; ++i) tab_.row(i) /= diag_[i];
  }

  void set_basic(int row, int col, double diag, double value) {
    basis_[static_cast<std::size_t>(row)] = col;
    init_col_[static_cast<std::size_t>(row)] = col;
    diag_[row] = diag;
    at_[static_cast<std::size_t>(col)] = At::Basic;
    x_[col] = value;
  }

  // Recomputes basic values and reduced costs from the original data.
  void refresh(const Eigen::VectorXd& cost) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i) v[i] = lp_.rows[static_cast<std::size_t>(i)].rhs;
    Eigen::VectorXd xn = x_;
    for (int i = 0; i < m_; ++i) xn[basis_[static_cast<std::size_t>(i)]] = 0.0;
    v -= original_ * xn;
    Eigen::VectorXd xb = Eigen::VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      xb += tab_.col(init_col_[static_cast<std::size_t>(i)]) * (v[i] / diag_[i]);
    }
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) {
      x_[basis_[static_cast<std::size_t>(i)]] = xb[i];
      cb[i] = cost[basis_[static_cast<std::size_t>(i)]];
    }
    reduced_ = cost - tab_.transpose() * cb;
  }

  Status iterate(const Eigen::VectorXd& cost, int& iterations) {
    refresh(cost);
    const double cost_scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double opt_tol = opts_.optimality_tol * cost_scale;
    int degenerate = 0;
    int since_refresh = 0;
    Eigen::VectorXd col(m_);
    Eigen::RowVectorXd pivot_row(cols_);

    for (;;) {
      if (iterations >= opts_.max_iterations) return Status::IterationLimit;
      if (since_refresh >= opts_.refactor_every) {
        refresh(cost);
        since_refresh = 0;
      }
      const bool bland = degenerate >= opts_.degenerate_before_bland;

      int enter = -1;
      double dir = 0.0;
      double best = 0.0;
      for (int j = 0; j < cols_; ++j) {
        const At state = at_[static_cast<std::size_t>(j)];
        if (state == At::Basic || lower_[j] == upper_[j]) continue;
        const double d = reduced_[j];
        double score = 0.0, jdir = 0.0;
        if ((state == At::Lower || state == At::Zero) && d < -opt_tol) {
          score = -d;
          jdir = 1.0;
        } else if ((state == At::Upper || state == At::Zero) && d > opt_tol) {
          score = d;
          jdir = -1.0;
        } else {
          continue;
        }
        if (bland) {
          enter = j;
          dir = jdir;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
          dir = jdir;
        }
      }
      if (enter < 0) {
        refresh(cost);
        return Status::Optimal;
      }

      col = tab_.col(enter);
      double theta = upper_[enter] - lower_[enter];  // inf when either side is open
      int leave = -1;
      double leave_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = dir * col[i];
        const int bj = basis_[static_cast<std::size_t>(i)];
        double t;
        if (a > opts_.pivot_tol) {
          if (!std::isfinite(lower_[bj])) continue;
          t = (x_[bj] - lower_[bj]) / a;
        } else if (a < -opts_.pivot_tol) {
          if (!std::isfinite(upper_[bj])) continue;
          t = (upper_[bj] - x_[bj]) / -a;
        } else {
          continue;
        }
        t = std::max(t, 0.0);
        const bool better = t < theta - 1e-12;
        const bool tie = !better && t <= theta + 1e-12 && leave >= 0;
        if (better ||
            (tie && (bland ? bj < basis_[static_cast<std::size_t>(leave)]
                           : std::abs(a) > std::abs(leave_alpha)))) {
          theta = t;
          leave = i;
          leave_alpha = a;
        }
      }
      if (!std::isfinite(theta)) return Status::Unbounded;

      ++iterations;
      ++since_refresh;
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;

      x_[enter] += dir * theta;
      for (int i = 0; i < m_; ++i) {
        if (col[i] != 0.0) x_[basis_[static_cast<std::size_t>(i)]] -= dir * theta * col[i];
      }

      if (leave < 0) {
        const bool to_upper = dir > 0;
        x_[enter] = to_upper ? upper_[enter] : lower_[enter];
        at_[static_cast<std::size_t>(enter)] = to_upper ? At::Upper : At::Lower;
        continue;
      }

      const int out = basis_[static_cast<std::size_t>(leave)];
      const bool to_lower = leave_alpha > 0;
      x_[out] = to_lower ? lower_[out] : upper_[out];
      at_[static_cast<std::size_t>(out)] = to_lower ? At::Lower : At::Upper;

      const double piv = col[leave];
      tab_.row(leave) /= piv;
      pivot_row = tab_.row(leave);
      col[leave] = 0.0;
      tab_.noalias() -= col * pivot_row;
      reduced_ -= reduced_[enter] * pivot_row.transpose();
      reduced_[enter] = 0.0;
      basis_[static_cast<std::size_t>(leave)] = enter;
      at_[static_cast<std::size_t>(enter)] = At::Basic;
    }
  }

  const LinearProgram& lp_;
  const Options& opts_;
  int m_ = 0, n_ = 0, cols_ = 0;
  int first_slack_ = 0, first_art_ = 0, num_art_ = 0;
  double rhs_scale_ = 1.0;
  Tableau original_;
  Tableau tab_;
  Eigen::VectorXd lower_, upper_, x_, reduced_, diag_;
  std::vector<At> at_;
  std::vector<int> basis_, init_col_, art_row_;
};

}  // namespace

int LinearProgram::add_column(double c, double lo, double hi) {
  const auto n = cost.size();
  cost.conservativeResize(n + 1);
  lower.conservativeResize(n + 1);
  upper.conservativeResize(n + 1);
  cost[n] = c;
  lower[n] = lo;
  upper[n] = hi;
  return static_cast<int>(n);
}

int LinearProgram::add_row(Row row) {
  rows.push_back(std::move(row));
  return static_cast<int>(rows.size()) - 1;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

Result solve(const LinearProgram& lp, const Options& opts) {
  if (lp.rows.empty()) {
    // Pure bound problem: every column sits at its cheaper bound.
    Result res;
    res.x.resize(lp.num_columns());
    for (int j = 0; j < lp.num_columns(); ++j) {
      const double c = lp.cost[j];
      const double bound = c > 0 ? lp.lower[j] : (c < 0 ? lp.upper[j]
                                                        : (std::isfinite(lp.lower[j]) ? lp.lower[j]
                                                           : std::isfinite(lp.upper[j]) ? lp.upper[j] : 0.0));
      if (!std::isfinite(bound)) {
        res.status = Status::Unbounded;
        return res;
      }
      res.x[j] = bound;
    }
    res.status = Status::Optimal;
    res.objective = lp.cost.dot(res.x);
    return res;
  }
  Simplex simplex(lp, opts);
  return simplex.run();
}

}  // namespace smval::lp
