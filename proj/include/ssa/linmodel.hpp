#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ssa/core.hpp"

namespace ssa {

struct ConfidenceScore {
    double estimate = 0.0;  // theta_hat . x
    double width = 0.0;     // alpha * sqrt(x' A^-1 x)
    double ucb = 0.0;
    double lcb = 0.0;
};

// Regularized least-squares accumulator shared by every allocator:
// A = I_d + sum x x', c = sum r x, theta_hat = A^-1 c. The inverse is
// maintained by rank-one (Sherman-Morrison) updates with a full
// refactorization every kRefactorPeriod updates and whenever the update
// denominator looks suspect.
class LearnerState {
public:
    LearnerState() = default;
    explicit LearnerState(int d);

    void update(const Vec& x, int r);

    ConfidenceScore score(const Vec& x, double alpha) const;

    // Quadratic form x' A^-1 x (the squared width at alpha = 1).
    double inverse_quadform(const Vec& x) const;

    int dim() const { return static_cast<int>(gram_.rows()); }
    std::int64_t observations() const { return observations_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::MatrixXd& gram_inverse() const { return inv_; }
    const Vec& response() const { return response_; }
    const Vec& estimate() const { return theta_; }

    bool operator==(const LearnerState& other) const {
        return gram_ == other.gram_ && response_ == other.response_ &&
               observations_ == other.observations_;
    }

    // Rebuild from serialized parts; the inverse/estimate caches are restored
    // verbatim so a resumed run continues bit-identically.
    static LearnerState from_parts(Eigen::MatrixXd gram, Eigen::MatrixXd inv, Vec response,
                                   Vec theta, std::int64_t observations);

private:
    void refactor();

    Eigen::MatrixXd gram_;  // A
    Eigen::MatrixXd inv_;   // A^-1 cache
    Vec response_;          // c
    Vec theta_;             // A^-1 c
    std::int64_t observations_ = 0;

    static constexpr std::int64_t kRefactorPeriod = 512;
};

}  // namespace ssa
