#pragma once
// Early-exit gating (confidence threshold and the patience variant),
// Expected Calibration Error over equal-width confidence bins, and
// temperature scaling fitted by NLL minimization.

#include <string>
#include <vector>

#include "eat/autograd.hpp"
#include "eat/matrix.hpp"

namespace eat {

enum class ExitMode { kThreshold, kPatience };

struct ExitPolicy {
  double tau = 0.9;
  ExitMode mode = ExitMode::kThreshold;
  double calibration_temperature = 1.0;

  void validate() const;
};

// Linear classifier read off the CLS row of one layer.
template <class T>
struct ExitHeadT {
  int layer_index = 0;
  Param<T> w;  // d x num_classes
  Param<T> b;  // 1 x num_classes
};

using ExitHead = ExitHeadT<float>;

struct CalibrationBin {
  int size = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
};

struct CalibrationReport {
  double ece = 0.0;
  int bin_count = 15;
  std::vector<CalibrationBin> bins;
  double fitted_temperature = 1.0;

  std::string to_json() const;
};

// True iff max probability >= tau (inclusive).
bool exit_decision(std::span<const double> probs, const ExitPolicy& policy);

// Patience variant: requires agreeing argmax at the two consecutive layers
// AND the threshold condition on the later layer's distribution.
bool patience_decision(int argmax_prev, int argmax_curr,
                       std::span<const double> probs_curr, const ExitPolicy& policy);

// Equal-width bins over [0,1], half-open except the last (closed at 1.0).
CalibrationReport compute_ece(std::span<const double> confidences,
                              std::span<const bool> correct, int bins = 15);

// Minimizes NLL of softmax(logits / T) over a log-uniform grid on [0.25, 8]
// followed by golden-section refinement. Never worse than T = 1 on the
// fitting set; degenerate inputs (single class) return 1.
double fit_temperature(const Mat<double>& logits, std::span<const int> labels);

// Applies the fitted temperature when the report's ECE exceeds 2%.
ExitPolicy calibrate_if_needed(const CalibrationReport& report, const ExitPolicy& policy);

}  // namespace eat
