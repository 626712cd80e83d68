#include "qab/admm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace qab {

namespace {

double data_term(const Eigen::VectorXd& hx, const Eigen::VectorXd& y, double eps) {
    if (hx.minCoeff() <= eps)
        throw std::domain_error("poisson objective: Hx not strictly positive");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < hx.size(); ++i)
        acc += hx[i] - y[i] * std::log(hx[i]);
    return acc;
}

void validate(const InnerSolverConfig& c) {
    if (c.max_iters < 1 || !(c.grad_tol == c.grad_tol) || !(c.initial_step > 0.0) ||
        !(c.shrink > 0.0 && c.shrink < 1.0) || !(c.armijo > 0.0) ||
        !(c.eps_scale > 0.0))
        throw std::invalid_argument("InnerSolverConfig: invalid parameters");
}

double rmse_or_nan(const Eigen::VectorXd& x, const Image* reference) {
    if (!reference) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt((x - reference->vec()).squaredNorm() /
                     static_cast<double>(x.size()));
}

void format_double(std::string& row, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    row += buf;
}

} // namespace

double poisson_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         const BlurOperator& blur, double eps) {
    if (x.size() != y.size())
        throw std::invalid_argument("poisson_objective: size mismatch");
    return data_term(blur.apply(x), y, eps);
}

Eigen::VectorXd augmented_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const BlurOperator& blur, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& u, double lambda,
                                   double eps) {
    const Eigen::VectorXd hx = blur.apply(x);
    if (hx.minCoeff() <= eps)
        throw std::domain_error("augmented_gradient: Hx not strictly positive");
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.size());
    return -blur.apply_adjoint(y.cwiseQuotient(hx)) + blur.apply_adjoint(ones) +
           lambda * (x - z + u);
}

XUpdateResult x_update(const Eigen::VectorXd& x0, const Eigen::VectorXd& y,
                       const BlurOperator& blur, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& u, double lambda,
                       const InnerSolverConfig& config, double floor) {
    validate(config);
    if (!(floor > 0.0))
        throw std::invalid_argument("x_update: floor must be positive");
    const double tol =
        config.grad_tol > 0.0 ? config.grad_tol : 1e-6 * blur.side();
    const Eigen::VectorXd ht_one =
        blur.apply_adjoint(Eigen::VectorXd::Ones(x0.size()));

    // Positivity lives on x: every iterate is >= floor, which keeps Hx >= floor
    // exactly (normalized nonnegative taps) and the logs well defined.
    Eigen::VectorXd x = x0.cwiseMax(floor);
    Eigen::VectorXd hx = blur.apply(x);

    const auto objective = [&](const Eigen::VectorXd& hxc, const Eigen::VectorXd& xc) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < hxc.size(); ++i)
            acc += hxc[i] - y[i] * std::log(hxc[i]);
        return acc + 0.5 * lambda * (xc - z + u).squaredNorm();
    };

    XUpdateResult result;
    for (int it = 0; it < config.max_iters; ++it) {
        const Eigen::VectorXd grad =
            -blur.apply_adjoint(y.cwiseQuotient(hx)) + ht_one + lambda * (x - z + u);
        // Projected stationarity: how far a unit step moves after clamping.
        if ((x - (x - grad).cwiseMax(floor)).norm() <= tol) break;

        const double current = objective(hx, x);
        double step = config.initial_step;
        bool accepted = false;
        while (step > 1e-20) {
            const Eigen::VectorXd xc = (x - step * grad).cwiseMax(floor);
            const double moved = (xc - x).squaredNorm();
            if (moved == 0.0) break;
            const Eigen::VectorXd hxc = blur.apply(xc);
            if (objective(hxc, xc) <= current - config.armijo / step * moved) {
                x = xc;
                hx = hxc;
                accepted = true;
                break;
            }
            step *= config.shrink;
        }
        // No decreasing step within floating-point resolution: stationary.
        if (!accepted) break;
        ++result.iterations;
    }
    result.x = std::move(x);
    return result;
}

std::pair<Image, AdmmTrace> run_admm(const Image& y, const BlurOperator& blur,
                                     const LoopConfig& config, const ZStep& z_step,
                                     const Image* reference) {
    if (!(config.lambda0 > 0.0))
        throw std::invalid_argument("run_admm: lambda0 must be positive");
    if (!(config.gamma > 1.0))
        throw std::invalid_argument("run_admm: gamma must exceed 1");
    if (config.outer_iters < 1)
        throw std::invalid_argument("run_admm: need at least one iteration");
    validate(config.inner);
    if (y.side() != blur.side())
        throw std::invalid_argument("run_admm: observation/operator size mismatch");
    if (y.min_value() < 0.0)
        throw std::invalid_argument("run_admm: negative observation");
    if (!(y.max_value() > 0.0))
        throw std::invalid_argument("run_admm: observation carries no counts");
    if (reference && reference->side() != y.side())
        throw std::invalid_argument("run_admm: reference size mismatch");

    const double floor = config.inner.eps_scale * y.max_value();
    // Iterates stay >= floor by projection, so Hx >= floor holds exactly;
    // recorded objectives are validated half a floor lower to stay clear of
    // roundoff at the boundary.
    const double eps = 0.5 * floor;

    Eigen::VectorXd x = y.vec().cwiseMax(floor);
    Eigen::VectorXd z = x;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(x.size());
    double lambda = config.lambda0;

    AdmmTrace trace;
    trace.records.reserve(config.outer_iters);
    for (int k = 1; k <= config.outer_iters; ++k) {
        const auto started = std::chrono::steady_clock::now();
        XUpdateResult xres =
            x_update(x, y.vec(), blur, z, u, lambda, config.inner, floor);
        Eigen::VectorXd znew = z_step(xres.x + u, k, lambda);
        if (znew.size() != x.size())
            throw std::runtime_error("run_admm: z-step returned a wrong size");
        u += xres.x - znew;
        const auto stopped = std::chrono::steady_clock::now();

        x = std::move(xres.x);
        z = std::move(znew);

        IterationRecord rec;
        rec.iteration = k;
        rec.lambda = lambda;
        rec.rmse = rmse_or_nan(x, reference);
        rec.objective = poisson_objective(x, y.vec(), blur, eps);
        rec.primal_residual = (x - z).norm();
        rec.inner_iterations = xres.iterations;
        rec.millis =
            std::chrono::duration<double, std::milli>(stopped - started).count();
        trace.records.push_back(rec);

        lambda *= config.gamma;
    }

    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < 0.0) {
            x[i] = 0.0;
            ++trace.clamped_pixels;
        }
    return {Image(y.side(), std::move(x)), std::move(trace)};
}

std::pair<Image, AdmmTrace> run_qab_pnp(const Image& y, const BlurOperator& blur,
                                        const AdmmConfig& config,
                                        const Image* reference) {
    QuantumBasis basis = config.use_omp
                             ? build_basis_below(y, config.hamiltonian,
                                                 config.energy_cutoff)
                             : build_basis(y, config.hamiltonian);
    const int sparsity = config.use_omp
                             ? basis.count()
                             : count_below_energy(basis, config.energy_cutoff);
    if (sparsity == 0)
        throw std::invalid_argument(
            "run_qab_pnp: energy cutoff admits no basis vectors");
    const ThresholdProfile profile =
        config.threshold.value_or(ThresholdProfile::defaults_for(sparsity));

    ZStep step;
    if (config.use_omp)
        step = [&basis, sparsity, profile](const Eigen::VectorXd& v, int, double) {
            return denoise(v, basis, sparsity, profile);
        };
    else
        step = [&basis, profile](const Eigen::VectorXd& v, int, double) {
            return denoise_full_projection(v, basis, profile);
        };

    LoopConfig loop{config.lambda0, config.gamma, config.outer_iters, config.inner};
    auto out = run_admm(y, blur, loop, step, reference);
    out.second.sparsity = sparsity;
    return out;
}

void write_trace_csv(std::ostream& out, const AdmmTrace& trace) {
    out << "iter,lambda,rmse,objective,primal_residual,inner_iters,millis\n";
    for (const IterationRecord& rec : trace.records) {
        std::string row = std::to_string(rec.iteration);
        row += ',';
        format_double(row, rec.lambda);
        row += ',';
        format_double(row, rec.rmse);
        row += ',';
        format_double(row, rec.objective);
        row += ',';
        format_double(row, rec.primal_residual);
        row += ',';
        row += std::to_string(rec.inner_iterations);
        row += ',';
        format_double(row, rec.millis);
        row += '\n';
        out << row;
    }
}

bool write_trace_csv(const std::string& path, const AdmmTrace& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) return false;
    write_trace_csv(out, trace);
    return static_cast<bool>(out);
}

} // namespace qab
