#include "roial/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseCore>

#include "roial/errors.hpp"

namespace roial {

namespace {

struct CurvatureRoot {
    Eigen::MatrixXd root;  // symmetric square root of W, negative eigenvalues set to zero
    bool was_clamped = false;
};

CurvatureRoot curvature_root(const Eigen::MatrixXd& hessian) {
    CurvatureRoot out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of likelihood curvature failed");
    }
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if (lambda.minCoeff() < -1e-10 * scale) {
        out.was_clamped = true;
    }
    lambda = lambda.cwiseMax(0.0);
    const Eigen::MatrixXd& q = eig.eigenvectors();
    out.root = q * lambda.cwiseSqrt().asDiagonal() * q.transpose();
    return out;
}

Eigen::MatrixXd clamp_curvature(const Eigen::MatrixXd& hessian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of likelihood curvature failed");
    }
    const Eigen::MatrixXd& q = eig.eigenvectors();
    return q * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * q.transpose();
}

// Newton target in the alpha parametrization f = K alpha:
//   (I + W K) alpha_new = W f - grad NLL.
// The NLL Hessian W is sparse: one entry per label, four per preference.
Eigen::VectorXd newton_alpha(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& kdd, const Eigen::VectorXd& f,
                             const Eigen::VectorXd& nll_gradient) {
    const Eigen::SparseMatrix<double> w = hessian.sparseView();
    Eigen::MatrixXd a_mat = w * kdd;
    a_mat.diagonal().array() += 1.0;
    return Eigen::PartialPivLU<Eigen::MatrixXd>(a_mat).solve(Eigen::VectorXd(w * f - nll_gradient));
}

double objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& f, const LocalFeedback& data,
                 const LikelihoodModel& model) {
    try {
        return 0.5 * alpha.dot(f) + neg_log_likelihood(data, f, model);
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
    }
}

std::vector<ActionIndex> dedupe(std::span<const ActionIndex> indices) {
    std::vector<ActionIndex> out;
    out.reserve(indices.size());
    std::unordered_set<ActionIndex> seen;
    seen.reserve(indices.size());
    for (ActionIndex a : indices) {
        if (seen.insert(a).second) {
            out.push_back(a);
        }
    }
    return out;
}

}  // namespace

std::optional<std::size_t> PosteriorState::position_of(ActionIndex a) const {
    auto it = position_.find(a);
    if (it == position_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double PosteriorState::covariance(std::size_t p, std::size_t q) const {
    const double prior = (*kernel_)(indices_.at(p), indices_.at(q));
    if (data_.empty()) {
        return prior;
    }
    return prior - cross_.col(static_cast<Eigen::Index>(p)).dot(cross_.col(static_cast<Eigen::Index>(q)));
}

Eigen::MatrixXd PosteriorState::covariance() const {
    Eigen::MatrixXd cov = kernel_->covariance(indices_);
    if (!data_.empty()) {
        cov.noalias() -= cross_.transpose() * cross_;
    }
    return cov;
}

Eigen::MatrixXd PosteriorState::whitened_cross(std::span<const ActionIndex> cols) const {
    if (data_.empty()) {
        return Eigen::MatrixXd(0, static_cast<Eigen::Index>(cols.size()));
    }
    Eigen::MatrixXd v = w_sqrt_ * kernel_->covariance(data_, cols);
    chol_.triangularView<Eigen::Lower>().solveInPlace(v);
    return v;
}

PosteriorState laplace_fit(const FeedbackDataset& dataset, std::span<const ActionIndex> indices,
                           std::shared_ptr<const SquaredExponentialKernel> kernel, const LikelihoodModel& model,
                           const LaplaceOptions& options) {
    if (!kernel) {
        throw std::invalid_argument("laplace_fit needs a kernel");
    }
    PosteriorState state;
    state.kernel_ = std::move(kernel);
    state.indices_ = dedupe(indices);
    for (std::size_t i = 0; i < state.indices_.size(); ++i) {
        state.position_.emplace(state.indices_[i], i);
    }
    state.data_ = dataset.touched_actions();
    for (ActionIndex a : state.data_) {
        if (!state.position_.contains(a)) {
            throw std::invalid_argument("action " + std::to_string(a) + " has feedback but is not in the inference set");
        }
    }

    const auto n_set = static_cast<Eigen::Index>(state.indices_.size());
    const SquaredExponentialKernel& k = *state.kernel_;

    if (state.data_.empty()) {
        state.mean_ = Eigen::VectorXd::Zero(n_set);
        state.stddev_ = Eigen::VectorXd::Constant(n_set, std::sqrt(k.prior_variance()));
        state.cross_ = Eigen::MatrixXd(0, n_set);
        return state;
    }

    const LocalFeedback local = localize(dataset, state.data_);
    const Eigen::MatrixXd kdd = k.covariance(state.data_);
    const auto n = kdd.rows();

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    double s = objective(alpha, f, local, model);
    double grad_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iter = 0;
    for (; iter <= options.max_iterations; ++iter) {
        const LikelihoodTerms terms = neg_log_likelihood_terms(local, f, model);
        const Eigen::VectorXd grad = alpha + terms.gradient;
        grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (grad_norm < options.gradient_tolerance) {
            converged = true;
            break;
        }
        if (iter == options.max_iterations) {
            break;
        }

        auto line_search = [&](const Eigen::VectorXd& delta_alpha) {
            if (!delta_alpha.allFinite()) {
                return false;
            }
            const Eigen::VectorXd delta_f = kdd * delta_alpha;
            const double slope = grad.dot(delta_f);
            if (!(slope < 0.0)) {
                return false;
            }
            const double slack = 1e-12 * (1.0 + std::abs(s));
            double step = 1.0;
            for (int ls = 0; ls < 50; ++ls) {
                const Eigen::VectorXd alpha_try = alpha + step * delta_alpha;
                const Eigen::VectorXd f_try = f + step * delta_f;
                const double s_try = objective(alpha_try, f_try, local, model);
                if (s_try <= s + 1e-4 * step * slope + slack) {
                    alpha = alpha_try;
                    f = f_try;
                    s = s_try;
                    return true;
                }
                step *= 0.5;
            }
            return false;
        };

        bool moved = line_search(newton_alpha(terms.hessian, kdd, f, terms.gradient) - alpha);
        if (!moved) {
            // Retry with negative curvature clamped to zero, then with a
            // preconditioned gradient step.
            const Eigen::MatrixXd clamped = clamp_curvature(terms.hessian);
            moved = line_search(newton_alpha(clamped, kdd, f, terms.gradient) - alpha) || line_search(-grad);
        }
        if (!moved) {
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("Laplace mode search did not converge (gradient inf-norm "
                                   + std::to_string(grad_norm) + " after " + std::to_string(iter) + " iterations)",
                               grad_norm, iter);
    }

    const LikelihoodTerms terms = neg_log_likelihood_terms(local, f, model);
    const CurvatureRoot w = curvature_root(terms.hessian);
    Eigen::MatrixXd b_mat = w.root * kdd * w.root;
    b_mat.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(b_mat);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("posterior covariance factorization failed");
    }

    state.alpha_ = alpha;
    state.w_sqrt_ = w.root;
    state.chol_ = llt.matrixL();
    state.iterations_ = iter;
    state.gradient_norm_ = grad_norm;
    state.clamped_ = w.was_clamped;

    const Eigen::MatrixXd kds = k.covariance(state.data_, state.indices_);
    state.mean_ = kds.transpose() * alpha;
    for (std::size_t i = 0; i < state.data_.size(); ++i) {
        state.mean_[static_cast<Eigen::Index>(state.position_.at(state.data_[i]))] = f[static_cast<Eigen::Index>(i)];
    }
    state.cross_ = w.root * kds;
    state.chol_.triangularView<Eigen::Lower>().solveInPlace(state.cross_);
    state.stddev_.resize(n_set);
    const double prior = k.prior_variance();
    for (Eigen::Index i = 0; i < n_set; ++i) {
        state.stddev_[i] = std::sqrt(std::max(0.0, prior - state.cross_.col(i).squaredNorm()));
    }
    return state;
}

Prediction predict(const PosteriorState& state, std::span<const ActionIndex> query) {
    const auto q = static_cast<Eigen::Index>(query.size());
    Prediction out{Eigen::VectorXd(q), Eigen::VectorXd(q)};

    std::vector<ActionIndex> outside;
    std::vector<Eigen::Index> outside_pos;
    for (Eigen::Index i = 0; i < q; ++i) {
        if (auto p = state.position_of(query[static_cast<std::size_t>(i)])) {
            const auto pi = static_cast<Eigen::Index>(*p);
            out.mean[i] = state.mean()[pi];
            out.variance[i] = state.stddev()[pi] * state.stddev()[pi];
        } else {
            outside.push_back(query[static_cast<std::size_t>(i)]);
            outside_pos.push_back(i);
        }
    }
    if (outside.empty()) {
        return out;
    }
    const double prior = state.kernel().prior_variance();
    if (state.data_indices().empty()) {
        for (Eigen::Index i : outside_pos) {
            out.mean[i] = 0.0;
            out.variance[i] = prior;
        }
        return out;
    }
    const Eigen::MatrixXd kdq = state.kernel().covariance(state.data_indices(), outside);
    const Eigen::VectorXd means = kdq.transpose() * state.alpha();
    const Eigen::MatrixXd v = state.whitened_cross(outside);
    for (std::size_t j = 0; j < outside.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        out.mean[outside_pos[j]] = means[col];
        out.variance[outside_pos[j]] = std::max(0.0, prior - v.col(col).squaredNorm());
    }
    return out;
}

Eigen::VectorXd predict_mean(const PosteriorState& state, std::span<const ActionIndex> query) {
    const auto q = static_cast<Eigen::Index>(query.size());
    Eigen::VectorXd out(q);
    if (state.data_indices().empty()) {
        return Eigen::VectorXd::Zero(q);
    }
    const Eigen::MatrixXd kdq = state.kernel().covariance(state.data_indices(), query);
    out.noalias() = kdq.transpose() * state.alpha();
    for (Eigen::Index i = 0; i < q; ++i) {
        if (auto p = state.position_of(query[static_cast<std::size_t>(i)])) {
            out[i] = state.mean()[static_cast<Eigen::Index>(*p)];
        }
    }
    return out;
}

Eigen::MatrixXd sample(const PosteriorState& state, std::size_t count, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(state.size());
    const auto m = static_cast<Eigen::Index>(count);
    Eigen::MatrixXd out(n, m);
    if (m == 0 || n == 0) {
        return out;
    }
    const Eigen::MatrixXd cov = state.covariance();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success) {
        throw NumericalError("posterior covariance factorization failed");
    }
    Eigen::VectorXd d = ldlt.vectorD();
    const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
    if (d.minCoeff() < -1e-8 * scale) {
        throw NumericalError("posterior covariance is indefinite");
    }
    d = d.cwiseMax(0.0).cwiseSqrt();

    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            z(i, j) = normal(rng);
        }
    }
    z = d.asDiagonal() * z;
    z = ldlt.matrixL() * z;
    out = ldlt.transpositionsP().transpose() * z;
    out.colwise() += state.mean();
    return out;
}

Eigen::MatrixXd sample(const PosteriorState& state, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    return sample(state, count, rng);
}

}  // namespace roial
