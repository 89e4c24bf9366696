#pragma once
// Point estimates with batch-means confidence intervals.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace bran {

struct MeanEstimate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double ci95 = std::numeric_limits<double>::quiet_NaN();  // half-width
    std::size_t samples = 0;
};

inline constexpr std::size_t kBatchCount = 32;

// Two-sided 97.5% Student-t quantile with kBatchCount - 1 = 31 degrees of freedom.
inline constexpr double kStudentT31 = 2.0395134463964077;

/// Mean of `xs` and the 95% half-width from `kBatchCount` contiguous batch
/// means. Trailing samples that do not fill a batch enter the mean only.
/// The half-width is NaN when there are fewer than two samples per batch.
inline MeanEstimate batch_means(std::span<const double> xs) {
    MeanEstimate est;
    est.samples = xs.size();
    if (xs.empty()) return est;

    double sum = 0.0;
    for (double x : xs) sum += x;
    est.mean = sum / static_cast<double>(xs.size());

    const std::size_t per_batch = xs.size() / kBatchCount;
    if (per_batch < 2) return est;
    double batch_sum[kBatchCount] = {};
    for (std::size_t b = 0; b < kBatchCount; ++b)
        for (std::size_t k = 0; k < per_batch; ++k) batch_sum[b] += xs[b * per_batch + k];

    double grand = 0.0;
    for (double& s : batch_sum) {
        s /= static_cast<double>(per_batch);
        grand += s;
    }
    grand /= kBatchCount;
    double ss = 0.0;
    for (double s : batch_sum) ss += (s - grand) * (s - grand);
    const double var = ss / (kBatchCount - 1);
    est.ci95 = kStudentT31 * std::sqrt(var / kBatchCount);
    return est;
}

}  // namespace bran
