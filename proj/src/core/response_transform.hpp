#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "core/panel.hpp"

namespace cnhp {

/// Frozen within-term normalization statistics plus PCA loadings, fit on a
/// pre-evaluation window only. Applying the transform never re-estimates
/// anything, which is what keeps the response channel free of lookahead.
struct ResponseTransform {
    MonthIndex fit_begin{0};
    MonthIndex fit_end{0};  // inclusive
    std::vector<std::string> terms;
    Eigen::VectorXd term_means;
    Eigen::VectorXd term_stds;
    Eigen::MatrixXd loadings;  // terms x retained, orthonormal columns
    int retained{1};
    Eigen::VectorXd explained_variance;  // per retained component, fractions of total
    std::string orientation_term;
};

/// Z-scores each term over the fit window, eigendecomposes the window
/// correlation matrix, keeps `retained` components and sign-fixes component 1
/// so the orientation term loads non-negatively.
ResponseTransform fit_response_transform(const TrendsPanel& trends, MonthIndex fit_begin,
                                         MonthIndex fit_end, int retained,
                                         const std::string& orientation_term =
                                             "artificial intelligence");

/// Projects trends months [begin, end] through a frozen transform.
ResponseSeries apply_response_transform(const ResponseTransform& t, const TrendsPanel& trends,
                                        MonthIndex begin, MonthIndex end);

/// Product-moment correlation; both series need length >= 2 and nonzero variance.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace cnhp
