#include "dqe/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqe {

namespace {

double off_diagonal_norm(const std::vector<double>& a, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = a[static_cast<std::size_t>(i) * n + j];
            sum += 2.0 * v * v;
        }
    }
    return std::sqrt(sum);
}

}  // namespace

std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n,
                                          double tol) {
    if (n < 0 || a.size() != static_cast<std::size_t>(n) * n) {
        throw std::invalid_argument("symmetric_eigenvalues: bad dimensions");
    }
    if (n <= 1) {
        return n == 1 ? std::vector<double>{a[0]} : std::vector<double>{};
    }

    auto at = [&](int i, int j) -> double& {
        return a[static_cast<std::size_t>(i) * n + j];
    };

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a, n) <= tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                // Smaller-angle root of t^2 + 2t*theta - 1 = 0; the guarded
                // form avoids overflow when theta is huge.
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // A <- J^T A J with J the (p,q) rotation: columns first,
                // then rows.
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k);
                    const double aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }

    std::vector<double> eigenvalues(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eigenvalues[static_cast<std::size_t>(i)] = at(i, i);
    std::sort(eigenvalues.begin(), eigenvalues.end());
    return eigenvalues;
}

}  // namespace dqe
