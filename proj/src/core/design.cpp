#include "design.hpp"

namespace bmdl {

DesignPair build_design(const std::vector<std::int64_t>& times, std::int64_t n,
                        std::int64_t period) {
    const std::int64_t m = static_cast<std::int64_t>(times.size());
    DesignPair design;
    design.seasonal = MatrixXd::Zero(n, period);
    design.regime = MatrixXd::Zero(n, m);
    for (std::int64_t t = 1; t <= n; ++t) {
        design.seasonal(t - 1, season_of(t, period) - 1) = 1.0;
    }
    // regime r spans [tau_{r-1}, tau_r - 1]; column r-2 covers regime r >= 2
    for (std::int64_t r = 0; r < m; ++r) {
        const std::int64_t first = times[static_cast<std::size_t>(r)];
        const std::int64_t last = (r + 1 < m) ? times[static_cast<std::size_t>(r + 1)] - 1 : n;
        for (std::int64_t t = first; t <= last; ++t) design.regime(t - 1, r) = 1.0;
    }
    return design;
}

MatrixXd whiten(const MatrixXd& rows, const VectorXd& phi) {
    const std::int64_t n = rows.rows();
    const std::int64_t p = phi.size();
    if (n <= p) throw DimensionMismatchError("whiten requires N > p");
    MatrixXd out = rows.bottomRows(n - p);
    for (std::int64_t j = 1; j <= p; ++j) {
        out.noalias() -= phi(j - 1) * rows.middleRows(p - j, n - p);
    }
    return out;
}

VectorXd whiten(const VectorXd& rows, const VectorXd& phi) {
    const std::int64_t n = rows.size();
    const std::int64_t p = phi.size();
    if (n <= p) throw DimensionMismatchError("whiten requires N > p");
    VectorXd out = rows.tail(n - p);
    for (std::int64_t j = 1; j <= p; ++j) {
        out.noalias() -= phi(j - 1) * rows.segment(p - j, n - p);
    }
    return out;
}

WhitenedSystem whiten_system(const VectorXd& x, const DesignPair& design, const VectorXd& phi) {
    if (design.seasonal.rows() != x.size() || design.regime.rows() != x.size()) {
        throw DimensionMismatchError("design rows must match series length");
    }
    WhitenedSystem ws;
    ws.n = x.size();
    ws.p = phi.size();
    ws.x = whiten(x, phi);
    ws.a = whiten(design.seasonal, phi);
    ws.d = whiten(design.regime, phi);
    ws.phi = phi;
    return ws;
}

}  // namespace bmdl
