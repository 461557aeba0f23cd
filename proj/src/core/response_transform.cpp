#include "core/response_transform.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnhp {

namespace {

constexpr double kStdFloor = 1e-9;

}  // namespace

ResponseTransform fit_response_transform(const TrendsPanel& trends, MonthIndex fit_begin,
                                         MonthIndex fit_end, int retained,
                                         const std::string& orientation_term) {
    trends.validate();
    const int n_terms = static_cast<int>(trends.terms.size());
    const int n_months = static_cast<int>(trends.calendar.months);
    if (fit_begin < 0 || fit_end >= n_months || fit_begin > fit_end) {
        throw std::invalid_argument("response transform fit window out of range");
    }
    const int w = fit_end - fit_begin + 1;
    if (w < 3) throw std::invalid_argument("response transform fit window too short");
    if (retained < 1 || retained > n_terms) {
        throw std::invalid_argument("retained component count out of range");
    }

    ResponseTransform t;
    t.fit_begin = fit_begin;
    t.fit_end = fit_end;
    t.terms = trends.terms;
    t.retained = retained;
    t.orientation_term = orientation_term;

    const Eigen::MatrixXd window = trends.values.middleRows(fit_begin, w);
    t.term_means = window.colwise().mean();
    Eigen::MatrixXd centered = window.rowwise() - t.term_means.transpose();
    t.term_stds.resize(n_terms);
    for (int j = 0; j < n_terms; ++j) {
        const double var = centered.col(j).squaredNorm() / static_cast<double>(w - 1);
        t.term_stds[j] = std::max(std::sqrt(var), kStdFloor);
    }
    Eigen::MatrixXd z = centered.array().rowwise() / t.term_stds.transpose().array();

    const Eigen::MatrixXd corr = (z.transpose() * z) / static_cast<double>(w - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("correlation eigendecomposition failed");
    }

    // SelfAdjointEigenSolver sorts ascending; take the trailing columns.
    t.loadings.resize(n_terms, retained);
    t.explained_variance.resize(retained);
    const double total = eig.eigenvalues().sum();
    for (int k = 0; k < retained; ++k) {
        const int src = n_terms - 1 - k;
        t.loadings.col(k) = eig.eigenvectors().col(src);
        t.explained_variance[k] = total > 0.0 ? eig.eigenvalues()[src] / total : 0.0;
    }

    int anchor = -1;
    for (int j = 0; j < n_terms; ++j) {
        if (trends.terms[j] == orientation_term) {
            anchor = j;
            break;
        }
    }
    for (int k = 0; k < retained; ++k) {
        double pivot = anchor >= 0 ? t.loadings(anchor, k) : 0.0;
        if (anchor < 0 || pivot == 0.0) {
            // Fall back to the largest-magnitude loading so the sign is still pinned.
            int arg = 0;
            t.loadings.col(k).cwiseAbs().maxCoeff(&arg);
            pivot = t.loadings(arg, k);
        }
        if (pivot < 0.0) t.loadings.col(k) = -t.loadings.col(k);
    }
    return t;
}

ResponseSeries apply_response_transform(const ResponseTransform& t, const TrendsPanel& trends,
                                        MonthIndex begin, MonthIndex end) {
    if (static_cast<int>(trends.terms.size()) != t.term_means.size() || trends.terms != t.terms) {
        throw std::invalid_argument("trends panel does not match fitted transform");
    }
    const int n_months = static_cast<int>(trends.calendar.months);
    if (begin < 0 || end >= n_months || begin > end) {
        throw std::invalid_argument("response transform apply window out of range");
    }
    const int w = end - begin + 1;
    Eigen::MatrixXd centered =
        trends.values.middleRows(begin, w).rowwise() - t.term_means.transpose();
    Eigen::MatrixXd z = centered.array().rowwise() / t.term_stds.transpose().array();

    ResponseSeries out;
    out.calendar = Calendar{add_months(trends.calendar.origin, begin), w};
    out.values = z * t.loadings;
    return out;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson length mismatch");
    const int n = static_cast<int>(a.size());
    if (n < 2) throw std::invalid_argument("pearson needs at least two points");
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    const double denom = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    if (denom <= 0.0) throw std::invalid_argument("pearson input has zero variance");
    return ac.dot(bc) / denom;
}

}  // namespace cnhp
