#pragma once

/**
 * @file metrics.hpp
 * @brief Metric definitions and CSV reporting.
 *
 * NMSE is the Frobenius-normalized channel-matrix error
 * ||H - H_hat||_F^2 / ||H||_F^2, averaged in the linear domain across trials
 * before conversion to dB. For path-sum channels the ratio is computed in
 * closed form from the pairwise Frobenius inner products (no dense matrices).
 */

#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "otfsim/common.hpp"
#include "otfsim/dd_operator.hpp"
#include "otfsim/frame.hpp"

namespace otfsim {

/// Linear NMSE ratio between dense channel matrices.
inline double nmse_ratio(const Mat& H_true, const Mat& H_est) {
  require(H_true.rows() == H_est.rows() && H_true.cols() == H_est.cols(),
          "nmse_ratio: shape mismatch");
  double den = H_true.squaredNorm();
  require(den > 0, "nmse_ratio: true channel has zero norm");
  return (H_true - H_est).squaredNorm() / den;
}

/// Linear NMSE ratio between two path-sum channels, via the closed-form
/// Frobenius inner products (equals the dense computation to rounding).
inline double nmse_ratio_paths(const FrameGeometry& g, const PathSet& truth,
                               const PathSet& est) {
  double den = std::real(channel_frobenius_inner(g, truth, truth));
  require(den > 0, "nmse_ratio_paths: true channel has zero norm");
  if (est.empty()) return 1.0;  // zero estimate: full error
  double num = den - 2.0 * std::real(channel_frobenius_inner(g, truth, est)) +
               std::real(channel_frobenius_inner(g, est, est));
  return num / den;
}

/// dB conversion with a -300 dB floor for exact recovery.
inline double nmse_db(double linear_ratio) {
  if (linear_ratio <= 1e-30) return -300.0;
  return linear_to_db(linear_ratio);
}

struct MetricRow {
  double sweep_value = 0;
  std::string metric;
  double mean = 0;
  double stderr_ = 0;
  long trials = 0;
};

/// Sample mean and standard error of the mean.
inline std::pair<double, double> mean_stderr(const std::vector<double>& samples) {
  require(!samples.empty(), "mean_stderr: no samples");
  double mean = 0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  if (samples.size() < 2) return {mean, 0.0};
  double var = 0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples.size()))};
}

/// CSV schema: header `sweep_name,sweep_value,metric,mean,stderr,trials`,
/// UTF-8, LF line endings, one file per experiment.
inline void write_csv(const std::string& path, const std::string& sweep_name,
                      const std::vector<MetricRow>& rows) {
  std::ofstream os(path, std::ios::binary);  // binary: keep LF endings everywhere
  require(static_cast<bool>(os), "write_csv: cannot open " + path);
  os << "sweep_name,sweep_value,metric,mean,stderr,trials\n";
  os << std::setprecision(12);
  for (const auto& r : rows) {
    require(std::isfinite(r.mean) && std::isfinite(r.stderr_),
            "write_csv: non-finite metric value for " + r.metric);
    os << sweep_name << ',' << r.sweep_value << ',' << r.metric << ',' << r.mean << ','
       << r.stderr_ << ',' << r.trials << '\n';
  }
  require(static_cast<bool>(os), "write_csv: write failed for " + path);
}

}  // namespace otfsim
