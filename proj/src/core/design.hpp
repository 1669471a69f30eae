#ifndef BMDL_CORE_DESIGN_HPP
#define BMDL_CORE_DESIGN_HPP

#include "types.hpp"

namespace bmdl {

// Seasonal indicator matrix A (N x T) and regime indicator matrix D
// (N x m, columns for regimes 2..m+1). Row t of A has a single 1 in the
// season column v(t); row t of D has a 1 in column r(t)-2 when r(t) >= 2.
struct DesignPair {
    MatrixXd seasonal;  // A
    MatrixXd regime;    // D
};

DesignPair build_design(const std::vector<std::int64_t>& times, std::int64_t n,
                        std::int64_t period);

// AR filter applied row-wise: rows p+1..N of the input minus the
// phi-weighted lagged rows. With phi empty this is plain row slicing.
MatrixXd whiten(const MatrixXd& rows_1_to_n, const VectorXd& phi);
VectorXd whiten(const VectorXd& rows_1_to_n, const VectorXd& phi);

// The whitened regression pieces X^, A^, D^ for one component, together
// with the phi used to build them.
struct WhitenedSystem {
    VectorXd x;       // (N-p)
    MatrixXd a;       // (N-p) x T
    MatrixXd d;       // (N-p) x m
    VectorXd phi;
    std::int64_t n = 0;
    std::int64_t p = 0;
};

WhitenedSystem whiten_system(const VectorXd& x, const DesignPair& design, const VectorXd& phi);

}  // namespace bmdl

#endif
