#pragma once

// Piecewise time grids for impulsive problems and trajectories in the
// weighted space PC_{1-lambda}. Solutions behave like (t - t_k)^{lambda-1}
// just after 0 and after each impulse, so raw values at those instants are
// replaced by weighted limit records:
//   * node 0 stores  lim_{t->0+} t^{1-lambda} x(t)
//   * each impulse k stores  lim_{t->t_k+} (t-t_k)^{1-lambda} x(t)
// All other node slots hold raw values; the slot at an impulse time is the
// left-limit value (the node belongs to the closing subinterval).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace hfe {

class TimeGrid {
  public:
    /// Graded grid on [0,T]: within each impulse subinterval (t_k, t_{k+1}]
    /// the nodes are t_k + (t_{k+1}-t_k) (j/m)^q, dense at t_k+.
    static TimeGrid graded(double T, std::vector<double> impulse_times,
                           int nodes_per_subinterval, double grading) {
        if (!(T > 0.0)) throw std::domain_error("TimeGrid: horizon must be positive");
        if (nodes_per_subinterval < 2) throw std::domain_error("TimeGrid: need >= 2 nodes per subinterval");
        if (!(grading >= 1.0)) throw std::domain_error("TimeGrid: grading exponent must be >= 1");
        for (std::size_t k = 0; k < impulse_times.size(); ++k) {
            const double tk = impulse_times[k];
            if (!(tk > 0.0) || !(tk < T)) throw std::domain_error("TimeGrid: impulse times must lie in (0,T)");
            if (k > 0 && !(tk > impulse_times[k - 1])) {
                throw std::domain_error("TimeGrid: impulse times must be strictly increasing");
            }
        }
        TimeGrid g;
        g.T_ = T;
        g.impulse_times_ = std::move(impulse_times);
        const std::size_t l = g.impulse_times_.size();
        const std::size_t m = static_cast<std::size_t>(nodes_per_subinterval);
        g.nodes_.reserve(1 + m * (l + 1));
        g.sub_of_node_.reserve(1 + m * (l + 1));
        g.nodes_.push_back(0.0);
        g.sub_of_node_.push_back(0);
        g.impulse_node_.resize(l);
        for (std::size_t k = 0; k <= l; ++k) {
            const double left = (k == 0) ? 0.0 : g.impulse_times_[k - 1];
            const double right = (k == l) ? T : g.impulse_times_[k];
            const double len = right - left;
            for (std::size_t j = 1; j <= m; ++j) {
                const double frac = std::pow(static_cast<double>(j) / m, grading);
                double t = left + len * frac;
                if (j == m) t = right;  // land exactly on impulse times / horizon
                g.nodes_.push_back(t);
                g.sub_of_node_.push_back(k);
            }
            if (k < l) g.impulse_node_[k] = g.nodes_.size() - 1;
        }
        return g;
    }

    double horizon() const { return T_; }
    std::size_t size() const { return nodes_.size(); }
    double node(std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    std::size_t impulse_count() const { return impulse_times_.size(); }
    double impulse_time(std::size_t k) const { return impulse_times_[k]; }
    /// Index of the node sitting exactly at t_{k+1} (0-based impulse k).
    std::size_t impulse_node(std::size_t k) const { return impulse_node_[k]; }

    /// Subinterval index: node i lies in (t_k, t_{k+1}] -> k. Node 0 maps to 0.
    std::size_t subinterval(std::size_t i) const { return sub_of_node_[i]; }
    double subinterval_left(std::size_t k) const { return k == 0 ? 0.0 : impulse_times_[k - 1]; }

    /// Weight (t_i - t_k)^{1-lambda} of node i in the PC_{1-lambda} norm.
    double weight(std::size_t i, double lambda) const {
        if (i == 0) return 1.0;  // node 0 slot is stored pre-weighted
        const double d = nodes_[i] - subinterval_left(sub_of_node_[i]);
        return std::pow(d, 1.0 - lambda);
    }

    bool same_layout(const TimeGrid& other) const {
        return nodes_ == other.nodes_ && impulse_times_ == other.impulse_times_;
    }

  private:
    double T_ = 0.0;
    std::vector<double> nodes_;
    std::vector<std::size_t> sub_of_node_;
    std::vector<double> impulse_times_;
    std::vector<std::size_t> impulse_node_;
};

/// Grid function in PC_{1-lambda}: raw values at nodes plus weighted limit
/// records at t=0 and at each impulse (see file comment).
class PCTrajectory {
  public:
    PCTrajectory() = default;
    PCTrajectory(std::shared_ptr<const TimeGrid> grid, double lambda, int dim)
        : grid_(std::move(grid)), lambda_(lambda), dim_(dim) {
        if (!grid_) throw std::invalid_argument("PCTrajectory: null grid");
        if (!(lambda > 0.0) || lambda > 1.0) throw std::domain_error("PCTrajectory: lambda must lie in (0,1]");
        if (dim < 1) throw std::domain_error("PCTrajectory: dim must be positive");
        values_.assign(grid_->size(), Eigen::VectorXd::Zero(dim));
        jump_right_weighted_.assign(grid_->impulse_count(), Eigen::VectorXd::Zero(dim));
    }

    const TimeGrid& grid() const { return *grid_; }
    std::shared_ptr<const TimeGrid> grid_ptr() const { return grid_; }
    double lambda() const { return lambda_; }
    int dim() const { return dim_; }

    Eigen::VectorXd& value(std::size_t i) { return values_[i]; }
    const Eigen::VectorXd& value(std::size_t i) const { return values_[i]; }

    /// Weighted right limit at t=0 (the node-0 slot).
    Eigen::VectorXd& start_record() { return values_[0]; }
    const Eigen::VectorXd& start_record() const { return values_[0]; }

    /// Weighted right limit just after impulse k.
    Eigen::VectorXd& jump_right(std::size_t k) { return jump_right_weighted_[k]; }
    const Eigen::VectorXd& jump_right(std::size_t k) const { return jump_right_weighted_[k]; }

    /// Weighted left limit at impulse k (node value scaled by its weight).
    Eigen::VectorXd jump_left(std::size_t k) const {
        const std::size_t i = grid_->impulse_node(k);
        return grid_->weight(i, lambda_) * values_[i];
    }

    /// Weighted jump at impulse k. For lambda < 1 the incoming branch is
    /// annihilated by the (t-t_k)^{1-lambda} weight, so the jump equals the
    /// right record itself; for lambda = 1 it is the plain difference.
    Eigen::VectorXd weighted_jump(std::size_t k) const {
        if (lambda_ == 1.0) return jump_right_weighted_[k] - values_[grid_->impulse_node(k)];
        return jump_right_weighted_[k];
    }

    bool compatible(const PCTrajectory& other) const {
        return dim_ == other.dim_ && lambda_ == other.lambda_ && grid_ &&
               other.grid_ && grid_->same_layout(*other.grid_);
    }

    PCTrajectory& operator+=(const PCTrajectory& o) { return combine(o, 1.0); }
    PCTrajectory& operator-=(const PCTrajectory& o) { return combine(o, -1.0); }
    PCTrajectory& operator*=(double s) {
        for (auto& v : values_) v *= s;
        for (auto& v : jump_right_weighted_) v *= s;
        return *this;
    }
    friend PCTrajectory operator-(PCTrajectory a, const PCTrajectory& b) { return a -= b; }
    friend PCTrajectory operator+(PCTrajectory a, const PCTrajectory& b) { return a += b; }
    friend PCTrajectory operator*(double s, PCTrajectory a) { return a *= s; }

  private:
    PCTrajectory& combine(const PCTrajectory& o, double s) {
        if (!compatible(o)) throw std::invalid_argument("PCTrajectory: grid mismatch");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
        for (std::size_t k = 0; k < jump_right_weighted_.size(); ++k) {
            jump_right_weighted_[k] += s * o.jump_right_weighted_[k];
        }
        return *this;
    }

    std::shared_ptr<const TimeGrid> grid_;
    double lambda_ = 1.0;
    int dim_ = 0;
    std::vector<Eigen::VectorXd> values_;
    std::vector<Eigen::VectorXd> jump_right_weighted_;
};

/// PC_{1-lambda} norm: max over subintervals of sup (t-t_k)^{1-lambda}|x(t)|,
/// with the weighted limit records standing in at t=0+ and t_k+.
inline double weighted_norm(const PCTrajectory& x) {
    const TimeGrid& g = x.grid();
    double nrm = x.start_record().cwiseAbs().maxCoeff();
    for (std::size_t i = 1; i < g.size(); ++i) {
        nrm = std::max(nrm, g.weight(i, x.lambda()) * x.value(i).cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 0; k < g.impulse_count(); ++k) {
        nrm = std::max(nrm, x.jump_right(k).cwiseAbs().maxCoeff());
    }
    return nrm;
}

}  // namespace hfe
