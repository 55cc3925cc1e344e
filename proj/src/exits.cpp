#include "eat/exits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace eat {

void ExitPolicy::validate() const {
  // tau = 0 is the degenerate always-exit probe used in sweeps' sanity
  // checks; tau > 1 can never fire and is rejected.
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("ExitPolicy: tau must be in [0, 1]");
  if (calibration_temperature <= 0.0)
    throw std::invalid_argument("ExitPolicy: calibration temperature must be positive");
}

namespace {

void check_distribution(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("exit gate: empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("exit gate: invalid probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("exit gate: distribution does not sum to 1");
}

double nll_at_temperature(const Mat<double>& logits, std::span<const int> labels,
                          double temp) {
  double nll = 0.0;
  for (int i = 0; i < logits.rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < logits.cols; ++j) mx = std::max(mx, logits(i, j) / temp);
    double sum = 0.0;
    for (int j = 0; j < logits.cols; ++j) sum += std::exp(logits(i, j) / temp - mx);
    const double logp = logits(i, labels[static_cast<size_t>(i)]) / temp - mx - std::log(sum);
    nll -= logp;
  }
  return nll / double(logits.rows);
}

}  // namespace

bool exit_decision(std::span<const double> probs, const ExitPolicy& policy) {
  policy.validate();
  check_distribution(probs);
  const double max_p = *std::max_element(probs.begin(), probs.end());
  return max_p >= policy.tau;
}

bool patience_decision(int argmax_prev, int argmax_curr,
                       std::span<const double> probs_curr, const ExitPolicy& policy) {
  if (argmax_prev != argmax_curr) return false;
  return exit_decision(probs_curr, policy);
}

CalibrationReport compute_ece(std::span<const double> confidences,
                              std::span<const bool> correct, int bins) {
  if (confidences.empty()) throw std::invalid_argument("compute_ece: empty input");
  if (confidences.size() != correct.size())
    throw std::invalid_argument("compute_ece: length mismatch");
  if (bins < 1) throw std::invalid_argument("compute_ece: bins must be >= 1");

  CalibrationReport report;
  report.bin_count = bins;
  report.bins.assign(static_cast<size_t>(bins), {});
  std::vector<double> conf_sum(static_cast<size_t>(bins), 0.0);
  std::vector<int> hits(static_cast<size_t>(bins), 0);

  for (size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (c < 0.0 || c > 1.0)
      throw std::invalid_argument("compute_ece: confidence outside [0, 1]");
    int b = static_cast<int>(c * bins);
    if (b == bins) b = bins - 1;  // confidence exactly 1.0 falls in the last bin
    report.bins[static_cast<size_t>(b)].size += 1;
    conf_sum[static_cast<size_t>(b)] += c;
    if (correct[i]) hits[static_cast<size_t>(b)] += 1;
  }

  const double n = double(confidences.size());
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) {
    CalibrationBin& bin = report.bins[static_cast<size_t>(b)];
    if (bin.size == 0) continue;
    bin.accuracy = double(hits[static_cast<size_t>(b)]) / bin.size;
    bin.mean_confidence = conf_sum[static_cast<size_t>(b)] / bin.size;
    ece += (bin.size / n) * std::abs(bin.accuracy - bin.mean_confidence);
  }
  report.ece = ece;
  return report;
}

double fit_temperature(const Mat<double>& logits, std::span<const int> labels) {
  if (logits.rows != static_cast<int>(labels.size()))
    throw std::invalid_argument("fit_temperature: logits rows != labels length");
  if (logits.rows == 0 || logits.cols < 2) return 1.0;
  const int first = labels[0];
  bool degenerate = true;
  for (int l : labels)
    if (l != first) {
      degenerate = false;
      break;
    }
  if (degenerate) return 1.0;

  const double lo = 0.25, hi = 8.0;
  const int grid = 512;
  double best_t = 1.0;
  double best_nll = nll_at_temperature(logits, labels, 1.0);
  for (int i = 0; i < grid; ++i) {
    const double t = lo * std::pow(hi / lo, double(i) / double(grid - 1));
    const double nll = nll_at_temperature(logits, labels, t);
    if (nll < best_nll) {
      best_nll = nll;
      best_t = t;
    }
  }

  // One golden-section pass around the grid winner.
  const double step = std::pow(hi / lo, 1.0 / double(grid - 1));
  double a = std::max(lo, best_t / step);
  double b = std::min(hi, best_t * step);
  const double gr = 0.6180339887498949;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = nll_at_temperature(logits, labels, x1);
  double f2 = nll_at_temperature(logits, labels, x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = nll_at_temperature(logits, labels, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = nll_at_temperature(logits, labels, x2);
    }
  }
  const double refined = 0.5 * (a + b);
  if (nll_at_temperature(logits, labels, refined) < best_nll) best_t = refined;
  return best_t;
}

ExitPolicy calibrate_if_needed(const CalibrationReport& report, const ExitPolicy& policy) {
  if (report.ece > 0.02) {
    ExitPolicy out = policy;
    out.calibration_temperature = report.fitted_temperature;
    return out;
  }
  return policy;
}

std::string CalibrationReport::to_json() const {
  std::ostringstream os;
  os.precision(12);
  os << "{\"ece\":" << ece << ",\"bin_count\":" << bin_count
     << ",\"fitted_temperature\":" << fitted_temperature << ",\"bins\":[";
  for (size_t i = 0; i < bins.size(); ++i) {
    if (i) os << ",";
    os << "{\"size\":" << bins[i].size << ",\"accuracy\":" << bins[i].accuracy
       << ",\"mean_confidence\":" << bins[i].mean_confidence << "}";
  }
  os << "]}";
  return os.str();
}

}  // namespace eat
