#pragma once

#include "qab/basis.hpp"
#include "qab/blur.hpp"
#include "qab/denoiser.hpp"
#include "qab/image.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qab {

struct InnerSolverConfig {
    int max_iters = 100;
    double grad_tol = 0.0; // <= 0: auto, 1e-6 * image side
    double initial_step = 1.0;
    double shrink = 0.5;   // backtracking factor, in (0,1)
    double armijo = 1e-4;  // sufficient-decrease constant
    double eps_scale = 1e-6; // elementwise floor on x as a fraction of peak(y)
};

struct AdmmConfig {
    double lambda0 = 1.0;
    double gamma = 1.05; // penalty multiplied by gamma > 1 each iteration
    int outer_iters = 30;
    double energy_cutoff = 4.1;
    HamiltonianParams hamiltonian;
    std::optional<ThresholdProfile> threshold; // default derives from T
    InnerSolverConfig inner;
    bool use_omp = true; // false: full basis, direct-projection z-step
};

struct IterationRecord {
    int iteration = 0;
    double lambda = 0.0;
    double rmse = 0.0; // NaN when no reference was given
    double objective = 0.0; // Poisson data term at the accepted x
    double primal_residual = 0.0; // ||x - z||_2
    int inner_iterations = 0;
    double millis = 0.0;
};

struct AdmmTrace {
    std::vector<IterationRecord> records;
    int clamped_pixels = 0; // negatives clamped at pipeline exit
    int sparsity = 0;       // T for the adaptive-basis run, 0 otherwise
};

/// -y^T log(Hx) + 1^T Hx. Domain error when any (Hx)[i] <= eps.
double poisson_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         const BlurOperator& blur, double eps = 0.0);

/// -H^T(y / Hx) + H^T 1 + lambda (x - z + u), elementwise division.
Eigen::VectorXd augmented_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const BlurOperator& blur, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& u, double lambda,
                                   double eps = 0.0);

struct XUpdateResult {
    Eigen::VectorXd x;
    int iterations = 0;
};

/// Projected backtracking gradient descent on the augmented objective
/// f(x) + (lambda/2) ||x - z + u||^2 over { x >= floor }. The elementwise
/// floor keeps Hx >= floor (normalized nonnegative taps), so the logs stay
/// defined without a separate feasibility check. Stops at the projected
/// gradient tolerance or when no decreasing step exists within float
/// resolution.
XUpdateResult x_update(const Eigen::VectorXd& x0, const Eigen::VectorXd& y,
                       const BlurOperator& blur, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& u, double lambda,
                       const InnerSolverConfig& config, double floor);

/// z-step seam: receives x + u, the 1-based outer iteration, and the current
/// penalty lambda.
using ZStep =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, double)>;

struct LoopConfig {
    double lambda0 = 1.0;
    double gamma = 1.05;
    int outer_iters = 30;
    InnerSolverConfig inner;
};

/// Scaled-form ADMM: x-update, z = step(x + u), u += x - z, lambda *= gamma.
/// Starts from x = z = max(y, eps), u = 0. The returned image is clamped to
/// >= 0 on exit, with the clamp count recorded in the trace.
std::pair<Image, AdmmTrace> run_admm(const Image& y, const BlurOperator& blur,
                                     const LoopConfig& config, const ZStep& z_step,
                                     const Image* reference = nullptr);

/// The adaptive-basis restoration: builds the basis once from the smoothed
/// observation, takes T = #{E_i < cutoff}, then runs the ADMM loop with the
/// sparse-projection denoiser as z-step.
std::pair<Image, AdmmTrace> run_qab_pnp(const Image& y, const BlurOperator& blur,
                                        const AdmmConfig& config,
                                        const Image* reference = nullptr);

void write_trace_csv(std::ostream& out, const AdmmTrace& trace);
bool write_trace_csv(const std::string& path, const AdmmTrace& trace);

} // namespace qab
