#include "ssa/linmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace ssa {

LearnerState::LearnerState(int d) {
    if (d < 1) throw std::invalid_argument("LearnerState: d must be >= 1");
    gram_ = Eigen::MatrixXd::Identity(d, d);
    inv_ = Eigen::MatrixXd::Identity(d, d);
    response_ = Vec::Zero(d);
    theta_ = Vec::Zero(d);
}

void LearnerState::update(const Vec& x, int r) {
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    if (r != 0) response_ += x;
    ++observations_;

    const Vec u = inv_ * x;
    const double denom = 1.0 + x.dot(u);
    // A is SPD with eigenvalues >= 1, so denom >= 1 unless the cache drifted.
    if (denom < 0.5 || observations_ % kRefactorPeriod == 0) {
        refactor();
    } else {
        inv_.noalias() -= (u * u.transpose()) / denom;
        theta_.noalias() = inv_ * response_;
    }
}

void LearnerState::refactor() {
    inv_ = gram_.llt().solve(Eigen::MatrixXd::Identity(gram_.rows(), gram_.cols()));
    theta_.noalias() = inv_ * response_;
}

double LearnerState::inverse_quadform(const Vec& x) const { return x.dot(inv_ * x); }

LearnerState LearnerState::from_parts(Eigen::MatrixXd gram, Eigen::MatrixXd inv, Vec response,
                                      Vec theta, std::int64_t observations) {
    LearnerState s;
    s.gram_ = std::move(gram);
    s.inv_ = std::move(inv);
    s.response_ = std::move(response);
    s.theta_ = std::move(theta);
    s.observations_ = observations;
    return s;
}

ConfidenceScore LearnerState::score(const Vec& x, double alpha) const {
    if (alpha < 0.0) throw std::invalid_argument("score: alpha must be >= 0");
    ConfidenceScore s;
    s.estimate = theta_.dot(x);
    s.width = alpha * std::sqrt(std::max(0.0, inverse_quadform(x)));
    s.ucb = s.estimate + s.width;
    s.lcb = s.estimate - s.width;
    return s;
}

}  // namespace ssa
