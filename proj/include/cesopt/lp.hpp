#pragma once

// Bounded-variable revised primal simplex.
//
// Problems are stated as
//     minimize  c'x   subject to  row_lo <= A x <= row_hi  (via sense + rhs),  lo <= x <= up
// with A stored column-wise. Each row gets a logical (slack) variable s_i with
// a_i x + s_i = b_i, so the working basis is always square. The basis inverse
// is kept explicitly and updated with rank-one eta updates; it is rebuilt from
// scratch every `refactor_every` pivots. Dimensions in this code base stay in
// the low hundreds of rows, where a dense inverse is the fastest option.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cesopt::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration limit";
    }
    return "unknown";
}

class Problem {
public:
    int add_column(double lower, double upper, double cost) {
        if (lower > upper) throw std::invalid_argument("lp: column lower bound exceeds upper bound");
        lower_.push_back(lower);
        upper_.push_back(upper);
        cost_.push_back(cost);
        columns_.emplace_back();
        return static_cast<int>(cost_.size()) - 1;
    }

    int add_row(Sense sense, double rhs) {
        sense_.push_back(sense);
        rhs_.push_back(rhs);
        return static_cast<int>(rhs_.size()) - 1;
    }

    // Entries for the same (row, col) pair accumulate.
    void add_entry(int row, int col, double value) {
        if (value == 0.0) return;
        auto& column = columns_.at(static_cast<std::size_t>(col));
        if (row < 0 || row >= num_rows()) throw std::out_of_range("lp: row index");
        for (auto& [r, v] : column) {
            if (r == row) {
                v += value;
                return;
            }
        }
        column.emplace_back(row, value);
    }

    void set_cost(int col, double cost) { cost_.at(static_cast<std::size_t>(col)) = cost; }
    void set_bounds(int col, double lower, double upper) {
        lower_.at(static_cast<std::size_t>(col)) = lower;
        upper_.at(static_cast<std::size_t>(col)) = upper;
    }
    void set_rhs(int row, double rhs) { rhs_.at(static_cast<std::size_t>(row)) = rhs; }

    int num_rows() const { return static_cast<int>(rhs_.size()); }
    int num_cols() const { return static_cast<int>(cost_.size()); }

    const std::vector<double>& cost() const { return cost_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    const std::vector<double>& rhs() const { return rhs_; }
    const std::vector<Sense>& sense() const { return sense_; }
    const std::vector<std::pair<int, double>>& column(int j) const {
        return columns_[static_cast<std::size_t>(j)];
    }

    // Row activity a_i x for a given point.
    std::vector<double> activity(const std::vector<double>& x) const {
        std::vector<double> act(rhs_.size(), 0.0);
        for (std::size_t j = 0; j < columns_.size(); ++j)
            for (auto [r, v] : columns_[j]) act[static_cast<std::size_t>(r)] += v * x[j];
        return act;
    }

private:
    std::vector<double> cost_, lower_, upper_, rhs_;
    std::vector<Sense> sense_;
    std::vector<std::vector<std::pair<int, double>>> columns_;
};

struct Options {
    int max_iterations = 200000;
    double primal_tol = 1e-9;
    double dual_tol = 1e-12;   // objective tie-breaks live around 1e-9
    double pivot_tol = 1e-9;
    int refactor_every = 80;
    int degenerate_before_bland = 60;
    // Optional starting basis: one entry per row, either a structural column
    // index or num_cols + row for that row's slack. Falls back to the slack
    // basis when the given columns are singular.
    std::vector<int> initial_basis;
    // Structural columns outside the starting basis that rest at their upper
    // bound instead of the lower one (entries indexed by column, nonzero = upper).
    std::vector<char> initial_at_upper;
};

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    int iterations = 0;
    bool warm_started = false;   // the supplied initial basis was accepted
};

namespace detail {

class Simplex {
public:
    Simplex(const Problem& p, const Options& opt) : p_(p), opt_(opt) {
        m_ = p.num_rows();
        n_ = p.num_cols();
        const int total = n_ + m_;
        lo_.resize(static_cast<std::size_t>(total));
        up_.resize(static_cast<std::size_t>(total));
        c_.assign(static_cast<std::size_t>(total), 0.0);
        x_.assign(static_cast<std::size_t>(total), 0.0);
        pos_.assign(static_cast<std::size_t>(total), -1);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = p.lower()[j];
            up_[j] = p.upper()[j];
            c_[j] = p.cost()[j];
        }
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            switch (p.sense()[i]) {
                case Sense::LessEqual: lo_[s] = 0.0; up_[s] = kInf; break;
                case Sense::GreaterEqual: lo_[s] = -kInf; up_[s] = 0.0; break;
                case Sense::Equal: lo_[s] = 0.0; up_[s] = 0.0; break;
            }
        }
        for (int j = 0; j < total; ++j) x_[j] = resting_value(j);
        for (std::size_t j = 0; j < opt.initial_at_upper.size() && static_cast<int>(j) < n_; ++j)
            if (opt.initial_at_upper[j] && up_[j] < kInf) x_[j] = up_[j];
        head_.resize(static_cast<std::size_t>(m_));
    }

    Solution run() {
        Solution sol;
        sol.warm_started = install_basis();
        if (!sol.warm_started) install_slack_basis();

        bool phase_one = true;
        int degenerate_run = 0;
        int since_refactor = 0;
        Eigen::VectorXd cb(m_), y(m_), alpha(m_);

        for (int iter = 0; iter < opt_.max_iterations; ++iter) {
            if (since_refactor >= opt_.refactor_every) {
                refactor();
                since_refactor = 0;
            }

            bool infeasible = false;
            for (int i = 0; i < m_; ++i) {
                const int j = head_[i];
                const double xv = x_[j];
                if (xv < lo_[j] - feas_tol(lo_[j]) || xv > up_[j] + feas_tol(up_[j])) {
                    infeasible = true;
                    break;
                }
            }
            if (phase_one && !infeasible) phase_one = false;
            if (!phase_one && infeasible) {
                // Drift after a refactor; go back to phase one.
                phase_one = true;
            }

            for (int i = 0; i < m_; ++i) {
                const int j = head_[i];
                if (phase_one) {
                    const double xv = x_[j];
                    cb[i] = xv < lo_[j] - feas_tol(lo_[j]) ? -1.0 : (xv > up_[j] + feas_tol(up_[j]) ? 1.0 : 0.0);
                } else {
                    cb[i] = c_[j];
                }
            }
            y.noalias() = binv_.transpose() * cb;

            const bool bland = degenerate_run >= opt_.degenerate_before_bland;
            const double dtol = phase_one ? 1e-9 : opt_.dual_tol;
            int entering = -1;
            double best = 0.0;
            double entering_d = 0.0;
            const int total = n_ + m_;
            for (int j = 0; j < total; ++j) {
                if (pos_[j] >= 0) continue;
                if (lo_[j] == up_[j]) continue;
                double d = phase_one ? 0.0 : c_[j];
                if (j < n_) {
                    for (auto [r, v] : p_.column(j)) d -= y[r] * v;
                } else {
                    d -= y[j - n_];
                }
                const bool can_inc = x_[j] < up_[j];
                const bool can_dec = x_[j] > lo_[j];
                double score = 0.0;
                if (d < -dtol && can_inc) score = -d;
                else if (d > dtol && can_dec) score = d;
                if (score <= 0.0) continue;
                if (bland) {
                    entering = j;
                    entering_d = d;
                    break;
                }
                if (score > best) {
                    best = score;
                    entering = j;
                    entering_d = d;
                }
            }

            if (entering < 0) {
                sol.iterations = iter;
                if (phase_one) {
                    sol.status = Status::Infeasible;
                    return sol;
                }
                sol.status = Status::Optimal;
                finish(sol);
                return sol;
            }

            const double dir = entering_d < 0.0 ? 1.0 : -1.0;
            ftran(entering, alpha);

            double theta = up_[entering] - lo_[entering];   // bound flip distance
            int leave_row = -1;
            double leave_value = 0.0;
            double leave_pivot = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double a = alpha[i];
                if (std::abs(a) < opt_.pivot_tol) continue;
                const double rate = -dir * a;   // d x_B[i] / d theta
                const int j = head_[i];
                const double xv = x_[j];
                double limit = kInf;
                double target = 0.0;
                const bool below = xv < lo_[j] - feas_tol(lo_[j]);
                const bool above = xv > up_[j] + feas_tol(up_[j]);
                if (rate > 0.0) {
                    if (below) { limit = (lo_[j] - xv) / rate; target = lo_[j]; }
                    else if (!above && up_[j] < kInf) { limit = (up_[j] - xv) / rate; target = up_[j]; }
                } else {
                    if (above) { limit = (xv - up_[j]) / -rate; target = up_[j]; }
                    else if (!below && lo_[j] > -kInf) { limit = (xv - lo_[j]) / -rate; target = lo_[j]; }
                }
                if (limit == kInf) continue;
                if (limit < 0.0) limit = 0.0;
                // Among near-ties prefer the larger pivot element.
                const bool better = limit < theta - 1e-12 ||
                                    (limit <= theta + 1e-12 && leave_row >= 0 && std::abs(a) > std::abs(leave_pivot));
                if (better) {
                    theta = limit;
                    leave_row = i;
                    leave_value = target;
                    leave_pivot = a;
                }
            }

            if (theta == kInf) {
                sol.iterations = iter;
                sol.status = phase_one ? Status::Infeasible : Status::Unbounded;
                return sol;
            }

            degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

            x_[entering] += dir * theta;
            for (int i = 0; i < m_; ++i) x_[head_[i]] -= dir * theta * alpha[i];

            if (leave_row < 0) {
                // Entering variable reached its opposite bound.
                x_[entering] = dir > 0 ? up_[entering] : lo_[entering];
                continue;
            }

            const int leaving = head_[leave_row];
            x_[leaving] = leave_value;
            pos_[leaving] = -1;
            head_[leave_row] = entering;
            pos_[entering] = leave_row;
            pivot(leave_row, alpha);
            ++since_refactor;
        }
        sol.status = Status::IterationLimit;
        sol.iterations = opt_.max_iterations;
        return sol;
    }

private:
    double feas_tol(double bound) const { return opt_.primal_tol * (1.0 + (std::isfinite(bound) ? std::abs(bound) : 0.0)); }

    double resting_value(int j) const {
        if (lo_[j] > -kInf) return lo_[j];
        if (up_[j] < kInf) return up_[j];
        return 0.0;
    }

    void column_dense(int j, Eigen::VectorXd& out) const {
        out.setZero(m_);
        if (j < n_) {
            for (auto [r, v] : p_.column(j)) out[r] = v;
        } else {
            out[j - n_] = 1.0;
        }
    }

    void ftran(int j, Eigen::VectorXd& alpha) const {
        if (j < n_) {
            alpha.setZero(m_);
            for (auto [r, v] : p_.column(j)) alpha.noalias() += v * binv_.col(r);
        } else {
            alpha = binv_.col(j - n_);
        }
    }

    void pivot(int r, const Eigen::VectorXd& alpha) {
        const double piv = alpha[r];
        Eigen::RowVectorXd row = binv_.row(r) / piv;
        Eigen::VectorXd a = alpha;
        a[r] = 0.0;
        binv_.noalias() -= a * row;
        binv_.row(r) = row;
    }

    bool factor_current(bool check_rank) {
        Eigen::MatrixXd b(m_, m_);
        Eigen::VectorXd col;
        for (int i = 0; i < m_; ++i) {
            column_dense(head_[i], col);
            b.col(i) = col;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
        if (check_rank) {
            const auto d = lu.matrixLU().diagonal().cwiseAbs();
            if (!(d.minCoeff() > 1e-11 * std::max(1.0, d.maxCoeff()))) return false;
        }
        binv_ = lu.inverse();
        return true;
    }

    void recompute_basic_values() {
        Eigen::VectorXd rhs(m_);
        for (int i = 0; i < m_; ++i) rhs[i] = p_.rhs()[i];
        const int total = n_ + m_;
        for (int j = 0; j < total; ++j) {
            if (pos_[j] >= 0) continue;
            const double xv = x_[j];
            if (xv == 0.0) continue;
            if (j < n_) {
                for (auto [r, v] : p_.column(j)) rhs[r] -= v * xv;
            } else {
                rhs[j - n_] -= xv;
            }
        }
        Eigen::VectorXd xb = binv_ * rhs;
        for (int i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
    }

    bool install_basis() {
        if (opt_.initial_basis.empty()) return false;
        if (static_cast<int>(opt_.initial_basis.size()) != m_) return false;
        std::vector<char> used(static_cast<std::size_t>(n_ + m_), 0);
        for (int i = 0; i < m_; ++i) {
            const int j = opt_.initial_basis[i];
            if (j < 0 || j >= n_ + m_ || used[j]) return false;
            used[j] = 1;
        }
        for (int i = 0; i < m_; ++i) {
            head_[i] = opt_.initial_basis[i];
            pos_[head_[i]] = i;
        }
        if (!factor_current(true)) {
            for (int i = 0; i < m_; ++i) pos_[head_[i]] = -1;
            return false;
        }
        recompute_basic_values();
        return true;
    }

    void install_slack_basis() {
        for (int i = 0; i < m_; ++i) {
            head_[i] = n_ + i;
            pos_[n_ + i] = i;
        }
        binv_ = Eigen::MatrixXd::Identity(m_, m_);
        recompute_basic_values();
    }

    void refactor() {
        factor_current(false);
        recompute_basic_values();
    }

    void finish(Solution& sol) {
        sol.x.assign(x_.begin(), x_.begin() + n_);
        for (int j = 0; j < n_; ++j) {
            // Snap values that sit on a bound up to round-off.
            if (std::isfinite(lo_[j]) && std::abs(sol.x[j] - lo_[j]) <= 1e-12 * (1.0 + std::abs(lo_[j])))
                sol.x[j] = lo_[j];
            else if (std::isfinite(up_[j]) && std::abs(sol.x[j] - up_[j]) <= 1e-12 * (1.0 + std::abs(up_[j])))
                sol.x[j] = up_[j];
        }
        double obj = 0.0;
        for (int j = 0; j < n_; ++j) obj += c_[j] * sol.x[j];
        sol.objective = obj;
    }

    const Problem& p_;
    const Options& opt_;
    int m_ = 0, n_ = 0;
    std::vector<double> lo_, up_, c_, x_;
    std::vector<int> head_, pos_;
    Eigen::MatrixXd binv_;
};

}  // namespace detail

inline Solution solve(const Problem& problem, const Options& options = {}) {
    if (problem.num_rows() == 0) {
        // Pure bound problem: each column sits at its cheapest finite bound.
        Solution sol;
        sol.status = Status::Optimal;
        sol.x.resize(static_cast<std::size_t>(problem.num_cols()));
        for (int j = 0; j < problem.num_cols(); ++j) {
            const double c = problem.cost()[j];
            const double lo = problem.lower()[j], up = problem.upper()[j];
            double v;
            if (c > 0.0) v = lo;
            else if (c < 0.0) v = up;
            else v = lo > -kInf ? lo : (up < kInf ? up : 0.0);
            if (!std::isfinite(v)) {
                sol.status = Status::Unbounded;
                return sol;
            }
            sol.x[j] = v;
            sol.objective += c * v;
        }
        return sol;
    }
    detail::Simplex simplex(problem, options);
    return simplex.run();
}

}  // namespace cesopt::lp
