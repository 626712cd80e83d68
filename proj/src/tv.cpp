#include "qab/tv.hpp"

#include <cmath>
#include <stdexcept>

namespace qab {

namespace {

// Forward differences, zero at the far edge (reflexive boundary).
void gradient(const Eigen::VectorXd& z, int n, Eigen::VectorXd& gx, Eigen::VectorXd& gy) {
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int i = r * n + c;
            gx[i] = c + 1 < n ? z[i + 1] - z[i] : 0.0;
            gy[i] = r + 1 < n ? z[i + n] - z[i] : 0.0;
        }
}

// Negative adjoint of the gradient above.
void divergence(const Eigen::VectorXd& px, const Eigen::VectorXd& py, int n,
                Eigen::VectorXd& div) {
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int i = r * n + c;
            double d = 0.0;
            if (c + 1 < n) d += px[i];
            if (c > 0) d -= px[i - 1];
            if (r + 1 < n) d += py[i];
            if (r > 0) d -= py[i - n];
            div[i] = d;
        }
}

} // namespace

Eigen::VectorXd tv_prox(const Eigen::VectorXd& v, int side, double weight, int iters) {
    if (!(weight >= 0.0)) throw std::invalid_argument("tv_prox: negative weight");
    if (iters < 1) throw std::invalid_argument("tv_prox: need at least one iteration");
    if (v.size() != static_cast<Eigen::Index>(side) * side)
        throw std::invalid_argument("tv_prox: size mismatch");
    if (weight == 0.0) return v;

    const Eigen::Index m = v.size();
    Eigen::VectorXd px = Eigen::VectorXd::Zero(m), py = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd div(m), gx(m), gy(m), work(m);
    const double tau = 0.125; // stable for the 8-bounded dual operator

    for (int it = 0; it < iters; ++it) {
        divergence(px, py, side, div);
        work = div - v / weight;
        gradient(work, side, gx, gy);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double mag = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
            const double denom = 1.0 + tau * mag;
            px[i] = (px[i] + tau * gx[i]) / denom;
            py[i] = (py[i] + tau * gy[i]) / denom;
        }
    }
    divergence(px, py, side, div);
    return v - weight * div;
}

Image tv_prox(const Image& v, double weight, int iters) {
    return Image(v.side(), tv_prox(v.vec(), v.side(), weight, iters));
}

std::pair<Image, AdmmTrace> run_tv_admm(const Image& y, const BlurOperator& blur,
                                        const TvConfig& config,
                                        const Image* reference) {
    if (!(config.tv_weight >= 0.0))
        throw std::invalid_argument("run_tv_admm: negative tv_weight");
    if (config.prox_iters < 1)
        throw std::invalid_argument("run_tv_admm: prox_iters must be positive");

    const int side = y.side();
    const ZStep step = [&config, side](const Eigen::VectorXd& v, int, double lambda) {
        return tv_prox(v, side, config.tv_weight / lambda, config.prox_iters);
    };
    LoopConfig loop{config.lambda0, config.gamma, config.outer_iters, config.inner};
    return run_admm(y, blur, loop, step, reference);
}

} // namespace qab
