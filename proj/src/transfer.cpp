#include "cornsoy/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cornsoy/errors.hpp"

namespace cornsoy {

double TransferParams::inflection_n() const { return std::log(b) / c; }

double gompertz_yield(double n, const TransferParams& p) {
    if (n < 0.0) throw Error("gompertz_yield: negative N rate");
    return p.y_max * std::exp(-p.b * std::exp(-p.c * n));
}

GompertzDerivatives gompertz_derivatives(double n, const TransferParams& p) {
    if (n < 0.0) throw Error("gompertz_derivatives: negative N rate");
    const double g = p.b * p.c * std::exp(-p.c * n);  // b*c*exp(-c*n)
    const double y = p.y_max * std::exp(-p.b * std::exp(-p.c * n));
    GompertzDerivatives d;
    d.dy_dn = y * g;
    d.d2y_dn2 = d.dy_dn * (g - p.c);
    return d;
}

double leach_rate(double n, const TransferParams& p) {
    if (n < 0.0) throw Error("leach_rate: negative N rate");
    return p.alpha0 + p.alpha1 * n + p.alpha2 * n * n;
}

// ---------------------------------------------------------------------------
// Gompertz fit: damped Gauss-Newton in theta = (ln y_max, ln b, ln c).
// Log-parameter space keeps all three parameters positive without constraints
// and makes the step-size stopping rule a relative criterion.
// ---------------------------------------------------------------------------

namespace {

struct Sym3 {
    // symmetric 3x3, row-major upper triangle
    double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
};

// Cholesky solve of (A + lambda*diag(A)) x = rhs. Returns false if the matrix
// is not positive definite at this damping level.
bool solve_damped(const Sym3& A, double lambda, const double rhs[3], double x[3]) {
    double m[3][3] = {
        {A.a00 * (1.0 + lambda), A.a01, A.a02},
        {A.a01, A.a11 * (1.0 + lambda), A.a12},
        {A.a02, A.a12, A.a22 * (1.0 + lambda)},
    };
    double L[3][3] = {{0}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m[i][j];
            for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
            if (i == j) {
                if (!(s > 0.0) || !std::isfinite(s)) return false;
                L[i][i] = std::sqrt(s);
            } else {
                L[i][j] = s / L[j][j];
            }
        }
    }
    double y[3];
    for (int i = 0; i < 3; ++i) {
        double s = rhs[i];
        for (int k = 0; k < i; ++k) s -= L[i][k] * y[k];
        y[i] = s / L[i][i];
    }
    for (int i = 2; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < 3; ++k) s -= L[k][i] * x[k];
        x[i] = s / L[i][i];
    }
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

struct Gradients {
    Sym3 jtj;
    double jtr[3] = {0, 0, 0};  // J^T r with r = y_obs - y_model
    double ssr = 0.0;
};

// Model value and its Jacobian with respect to the log parameters:
//   d y / d ln y_max = y
//   d y / d ln b     = -y * b * exp(-c n)
//   d y / d ln c     =  y * b * c * n * exp(-c n)
Gradients evaluate(const std::vector<ResponsePoint>& pts, const double theta[3]) {
    const double ymax = std::exp(theta[0]);
    const double b = std::exp(theta[1]);
    const double c = std::exp(theta[2]);
    Gradients g;
    for (const auto& pt : pts) {
        const double e = b * std::exp(-c * pt.n_rate);
        const double y = ymax * std::exp(-e);
        const double r = pt.value - y;
        const double j0 = y;
        const double j1 = -y * e;
        const double j2 = y * e * c * pt.n_rate;
        g.ssr += r * r;
        g.jtr[0] += j0 * r;
        g.jtr[1] += j1 * r;
        g.jtr[2] += j2 * r;
        g.jtj.a00 += j0 * j0;
        g.jtj.a01 += j0 * j1;
        g.jtj.a02 += j0 * j2;
        g.jtj.a11 += j1 * j1;
        g.jtj.a12 += j1 * j2;
        g.jtj.a22 += j2 * j2;
    }
    return g;
}

bool rank_deficient(const Sym3& jtj) {
    const double dmax = std::max({jtj.a00, jtj.a11, jtj.a22});
    const double dmin = std::min({jtj.a00, jtj.a11, jtj.a22});
    return !(dmax > 0.0) || dmin < 1e-24 * dmax;
}

std::size_t count_distinct_n(const std::vector<ResponsePoint>& pts) {
    std::set<double> n;
    for (const auto& p : pts) n.insert(p.n_rate);
    return n.size();
}

}  // namespace

GompertzFit fit_gompertz(const std::vector<ResponsePoint>& points,
                         const std::optional<TransferParams>& init) {
    if (points.size() < 4 || count_distinct_n(points) < 3)
        throw Error("fit_gompertz: need >= 4 points with >= 3 distinct N rates");
    for (const auto& p : points)
        if (!(p.value > 0.0) || p.n_rate < 0.0)
            throw Error("fit_gompertz: points must have n_rate >= 0 and value > 0");

    double theta[3];
    if (init) {
        theta[0] = std::log(init->y_max);
        theta[1] = std::log(init->b);
        theta[2] = std::log(init->c);
    } else {
        // Closed-form, scale-aware start: y_max above the largest observation,
        // b from the lowest-N point, c from the mean N rate.
        double vmax = 0.0, n_min = points[0].n_rate, v_at_nmin = points[0].value;
        double n_mean = 0.0;
        for (const auto& p : points) {
            vmax = std::max(vmax, p.value);
            n_mean += p.n_rate;
            if (p.n_rate < n_min) {
                n_min = p.n_rate;
                v_at_nmin = p.value;
            }
        }
        n_mean /= static_cast<double>(points.size());
        const double ymax0 = 1.05 * vmax;
        theta[0] = std::log(ymax0);
        theta[1] = std::log(std::max(std::log(ymax0 / v_at_nmin), 1e-8));
        theta[2] = std::log(1.0 / std::max(n_mean, 1e-8));
    }

    GompertzFit fit;
    Gradients cur = evaluate(points, theta);
    double best_theta[3] = {theta[0], theta[1], theta[2]};
    double best_ssr = cur.ssr;
    double lambda = 1e-3;
    bool singular = true;  // cleared the first time a damped solve succeeds

    const int max_iter = 500;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const double gnorm = std::max({std::abs(cur.jtr[0]), std::abs(cur.jtr[1]),
                                       std::abs(cur.jtr[2])});
        if (gnorm < 1e-12) break;

        if (rank_deficient(cur.jtj)) {
            fit.status = FitStatus::SingularFit;
            break;
        }

        double step[3];
        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            if (!solve_damped(cur.jtj, lambda, cur.jtr, step)) {
                lambda *= 10.0;
                continue;
            }
            singular = false;
            double trial[3] = {theta[0] + step[0], theta[1] + step[1], theta[2] + step[2]};
            Gradients next = evaluate(points, trial);
            if (std::isfinite(next.ssr) && next.ssr <= cur.ssr) {
                theta[0] = trial[0];
                theta[1] = trial[1];
                theta[2] = trial[2];
                cur = next;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 2.0;
        }
        if (singular) {
            fit.status = FitStatus::SingularFit;
            break;
        }
        if (!accepted) break;  // no productive step at any damping: stationary

        if (cur.ssr < best_ssr) {
            best_ssr = cur.ssr;
            best_theta[0] = theta[0];
            best_theta[1] = theta[1];
            best_theta[2] = theta[2];
        }
        const double rel_step = std::max({std::abs(step[0]), std::abs(step[1]),
                                          std::abs(step[2])});
        if (rel_step < 1e-10) break;
    }

    if (iter == max_iter && fit.status == FitStatus::Converged)
        fit.status = FitStatus::NoConvergence;

    // A rank-deficient Jacobian at the final point means the data never pinned
    // down all three parameters (e.g. a flat response leaves c free).
    if (fit.status == FitStatus::Converged && rank_deficient(cur.jtj))
        fit.status = FitStatus::SingularFit;

    fit.params.y_max = std::exp(best_theta[0]);
    fit.params.b = std::exp(best_theta[1]);
    fit.params.c = std::exp(best_theta[2]);
    fit.rmse = std::sqrt(best_ssr / static_cast<double>(points.size()));
    fit.iterations = iter;
    return fit;
}

// ---------------------------------------------------------------------------
// Quadratic leaching fit: normal equations with active-set clamping.
// ---------------------------------------------------------------------------

namespace {

// Least squares of value on the basis subset of {1, n, n^2} selected by
// `free_mask`, with the clamped coefficients fixed at `coef`.
void refit_free(const std::vector<ResponsePoint>& pts, const bool free_mask[3],
                double coef[3]) {
    int idx[3];
    int k = 0;
    for (int i = 0; i < 3; ++i)
        if (free_mask[i]) idx[k++] = i;
    if (k == 0) return;

    double ata[3][3] = {{0}};
    double atb[3] = {0, 0, 0};
    for (const auto& p : pts) {
        const double basis[3] = {1.0, p.n_rate, p.n_rate * p.n_rate};
        double resid = p.value;
        for (int i = 0; i < 3; ++i)
            if (!free_mask[i]) resid -= coef[i] * basis[i];
        for (int i = 0; i < k; ++i) {
            atb[i] += basis[idx[i]] * resid;
            for (int j = 0; j < k; ++j) ata[i][j] += basis[idx[i]] * basis[idx[j]];
        }
    }
    // Gaussian elimination with partial pivoting on the k x k system.
    for (int col = 0; col < k; ++col) {
        int piv = col;
        for (int r = col + 1; r < k; ++r)
            if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
        std::swap(ata[col], ata[piv]);
        std::swap(atb[col], atb[piv]);
        if (std::abs(ata[col][col]) < 1e-300)
            throw CalibrationError("fit_quadratic: singular normal equations");
        for (int r = col + 1; r < k; ++r) {
            const double f = ata[r][col] / ata[col][col];
            for (int c2 = col; c2 < k; ++c2) ata[r][c2] -= f * ata[col][c2];
            atb[r] -= f * atb[col];
        }
    }
    for (int r = k - 1; r >= 0; --r) {
        double s = atb[r];
        for (int c2 = r + 1; c2 < k; ++c2) s -= ata[r][c2] * atb[c2];
        atb[r] = s / ata[r][r];
    }
    for (int i = 0; i < k; ++i) coef[idx[i]] = atb[i];
}

}  // namespace

TransferParams fit_quadratic(const std::vector<ResponsePoint>& points) {
    if (count_distinct_n(points) < 3)
        throw CalibrationError("fit_quadratic: degenerate design (need 3 distinct N rates)");

    bool free_mask[3] = {true, true, true};
    double coef[3] = {0, 0, 0};
    refit_free(points, free_mask, coef);

    // Clamp the most negative coefficient and refit the rest, at most twice.
    for (int round = 0; round < 3; ++round) {
        int worst = -1;
        double worst_val = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (!free_mask[i]) continue;
            const bool bad = (i == 2) ? (coef[i] <= 0.0) : (coef[i] < 0.0);
            if (bad && coef[i] < worst_val) {
                worst = i;
                worst_val = coef[i];
            }
        }
        if (worst < 0) break;
        free_mask[worst] = false;
        coef[worst] = (worst == 2) ? std::numeric_limits<double>::min() : 0.0;
        refit_free(points, free_mask, coef);
    }
    // A final negative alpha0/alpha1 left over after alpha2 was pinned.
    for (int i = 0; i < 2; ++i)
        if (coef[i] < 0.0) coef[i] = 0.0;

    TransferParams p;
    p.alpha0 = coef[0];
    p.alpha1 = coef[1];
    p.alpha2 = coef[2];
    return p;
}

}  // namespace cornsoy
