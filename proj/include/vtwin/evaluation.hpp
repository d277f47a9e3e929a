#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtwin/dataset.hpp"

namespace vtwin {

/// Higher score means more likely OOD.
struct ScoredSample {
  double score = 0.0;
  Label label = Label::ind;
};

/// Mann-Whitney AUROC with midranks; OOD is the positive class.
/// Throws std::invalid_argument unless both classes are present.
double auroc(std::span<const ScoredSample> samples);

/// Candidate thresholds are the distinct scores; score >= alpha flags OOD.
/// Picks the alpha whose TPR is closest to 0.95, preferring the larger TNR on ties.
double tnr_at_tpr95(std::span<const ScoredSample> samples);

/// Average ranks, 1-based.
std::vector<double> midranks(std::span<const double> values);

/// Pearson correlation of midranks.  Throws std::domain_error when either
/// series has zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

enum class EffectMagnitude { negligible, small, medium, large };
std::string to_string(EffectMagnitude m);

/// Classified on |2 * (a12 - 0.5)| with cutoffs 0.147, 0.33, 0.474.
EffectMagnitude effect_magnitude(double a12_scaled);

struct EffectSizeResult {
  double a12 = 0.5;
  double a12_scaled = 0.0;
  EffectMagnitude magnitude = EffectMagnitude::negligible;
  std::optional<double> cohens_h;
  std::optional<double> spearman;
};

/// P(a > b) + 0.5 P(a == b) over all pairs.
EffectSizeResult vargha_delaney(std::span<const double> a, std::span<const double> b);

/// 2 asin(sqrt(p1)) - 2 asin(sqrt(p2)).
double cohens_h(double p1, double p2);

struct GroupKey {
  std::string vessel;
  std::string maneuver;
  std::string disturbance;
  std::string magnitude;
  auto operator<=>(const GroupKey&) const = default;
};

/// Scores and decisions of one method on one test path.
struct ScoredRun {
  GroupKey group;
  double magnitude_value = 0.0;
  std::string method;
  std::string path_id;
  std::vector<ScoredSample> samples;
  std::vector<Label> decisions;  // optional; same length as samples when present
};

struct MetricReport {
  GroupKey group;
  std::string method;
  double auroc = 0.0;
  double tnr_at_tpr95 = 0.0;
  std::size_t n_ind = 0;
  std::size_t n_ood = 0;
  double score_min = 0.0;
  double score_max = 0.0;
  double score_mean = 0.0;
  double score_median = 0.0;
  std::optional<double> accuracy;
  std::vector<double> path_auroc;  // per path with both classes, in path order
};

struct TrendReport {
  std::string vessel;
  std::string maneuver;
  std::string disturbance;
  std::string method;
  std::size_t n_paths = 0;
  std::optional<double> spearman;  // per-path AUROC against magnitude
};

struct ComparisonReport {
  GroupKey group;
  std::string method_a;
  std::string method_b;
  EffectSizeResult effect;  // A12 over per-path AUROCs, Cohen's h over accuracy
};

struct Report {
  std::vector<MetricReport> groups;
  std::vector<TrendReport> trends;
  std::vector<ComparisonReport> comparisons;
  std::vector<std::string> warnings;
};

/// Groups runs by (group key, method).  Degenerate groups are skipped with a warning.
Report build_report(const std::vector<ScoredRun>& runs);

std::string report_json(const Report& report);
/// One row per group x method.
std::string report_csv(const Report& report);

}  // namespace vtwin
