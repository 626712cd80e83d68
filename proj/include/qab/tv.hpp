#pragma once

#include "qab/admm.hpp"
#include "qab/image.hpp"

#include <utility>

namespace qab {

struct TvConfig {
    double tv_weight = 0.35;
    double lambda0 = 1.0;
    double gamma = 1.05;
    int outer_iters = 30;
    InnerSolverConfig inner;
    int prox_iters = 60; // dual-projection iterations per z-step
};

/// Approximate proximal map of weight * isotropic TV via Chambolle's dual
/// projection (forward differences, reflexive boundary). Weight 0 returns
/// the input unchanged.
Image tv_prox(const Image& v, double weight, int iters);
Eigen::VectorXd tv_prox(const Eigen::VectorXd& v, int side, double weight, int iters);

/// Same ADMM loop as the adaptive-basis method with the TV proximal operator
/// as z-step (prox weight tv_weight / lambda, following the scaled form).
std::pair<Image, AdmmTrace> run_tv_admm(const Image& y, const BlurOperator& blur,
                                        const TvConfig& config,
                                        const Image* reference = nullptr);

} // namespace qab
