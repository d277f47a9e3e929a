#include "vtwin/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vtwin {

namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const ScoredSample> samples, const char* what) {
  ClassCounts c;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw std::invalid_argument(std::string(what) + ": non-finite score");
    (s.label == Label::ood ? c.pos : c.neg) += 1;
  }
  if (c.pos == 0 || c.neg == 0) {
    throw std::invalid_argument(std::string(what) + ": both IND and OOD samples are required");
  }
  return c;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double auroc(std::span<const ScoredSample> samples) {
  const ClassCounts c = count_classes(samples, "auroc");
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) scores.push_back(s.score);
  const std::vector<double> ranks = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label == Label::ood) rank_sum += ranks[i];
  }
  const double p = static_cast<double>(c.pos);
  const double n = static_cast<double>(c.neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double tnr_at_tpr95(std::span<const ScoredSample> samples) {
  const ClassCounts c = count_classes(samples, "tnr_at_tpr95");
  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  // |TPR - 0.95| scaled by 20 * pos to keep comparisons exact.
  const auto pos = static_cast<std::int64_t>(c.pos);
  std::int64_t best_dist = -1;
  std::size_t best_tn = 0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double alpha = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == alpha; ++i) (sorted[i].label == Label::ood ? tp : fp) += 1;
    const std::int64_t dist = std::abs(20 * static_cast<std::int64_t>(tp) - 19 * pos);
    const std::size_t tn = c.neg - fp;
    if (best_dist < 0 || dist < best_dist || (dist == best_dist && tn > best_tn)) {
      best_dist = dist;
      best_tn = tn;
    }
  }
  return static_cast<double>(best_tn) / static_cast<double>(c.neg);
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("spearman: at least 3 observations are required");
  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("spearman: undefined for zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string to_string(EffectMagnitude m) {
  switch (m) {
    case EffectMagnitude::negligible: return "negligible";
    case EffectMagnitude::small: return "small";
    case EffectMagnitude::medium: return "medium";
    case EffectMagnitude::large: return "large";
  }
  return "unknown";
}

EffectMagnitude effect_magnitude(double a12_scaled) {
  const double m = std::abs(a12_scaled);
  if (m < 0.147) return EffectMagnitude::negligible;
  if (m < 0.33) return EffectMagnitude::small;
  if (m < 0.474) return EffectMagnitude::medium;
  return EffectMagnitude::large;
}

EffectSizeResult vargha_delaney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("vargha_delaney: both samples must be nonempty");
  double wins = 0.0;
  for (double x : a) {
    for (double y : b) wins += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  EffectSizeResult r;
  r.a12 = wins / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  r.a12_scaled = (r.a12 - 0.5) * 2.0;
  r.magnitude = effect_magnitude(r.a12_scaled);
  return r;
}

double cohens_h(double p1, double p2) {
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) {
    throw std::invalid_argument("cohens_h: proportions must lie in [0, 1]");
  }
  return 2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2));
}

Report build_report(const std::vector<ScoredRun>& runs) {
  Report report;
  std::map<std::pair<GroupKey, std::string>, std::vector<const ScoredRun*>> by_group;
  for (const auto& r : runs) {
    if (!r.decisions.empty() && r.decisions.size() != r.samples.size()) {
      throw std::invalid_argument("build_report: decisions and samples differ in length for " + r.path_id);
    }
    by_group[{r.group, r.method}].push_back(&r);
  }

  struct TrendData {
    std::vector<double> magnitude;
    std::vector<double> path_auroc;
  };
  std::map<std::vector<std::string>, TrendData> trends;

  for (const auto& [key, members] : by_group) {
    MetricReport m;
    m.group = key.first;
    m.method = key.second;
    std::vector<ScoredSample> pooled;
    std::size_t correct = 0, decided = 0;
    bool all_decided = true;
    for (const ScoredRun* r : members) {
      pooled.insert(pooled.end(), r->samples.begin(), r->samples.end());
      if (r->decisions.empty()) {
        all_decided = false;
      } else {
        for (std::size_t i = 0; i < r->samples.size(); ++i) correct += r->decisions[i] == r->samples[i].label;
        decided += r->samples.size();
      }
      const bool has_ood = std::any_of(r->samples.begin(), r->samples.end(), [](const auto& s) { return s.label == Label::ood; });
      const bool has_ind = std::any_of(r->samples.begin(), r->samples.end(), [](const auto& s) { return s.label == Label::ind; });
      if (has_ood && has_ind) {
        m.path_auroc.push_back(auroc(r->samples));
        auto& t = trends[{m.group.vessel, m.group.maneuver, m.group.disturbance, m.method}];
        t.magnitude.push_back(r->magnitude_value);
        t.path_auroc.push_back(m.path_auroc.back());
      }
    }
    for (const auto& s : pooled) (s.label == Label::ood ? m.n_ood : m.n_ind) += 1;
    if (m.n_ood == 0 || m.n_ind == 0) {
      report.warnings.push_back("skipped degenerate group " + m.group.vessel + "/" + m.group.maneuver + "/" +
                                m.group.disturbance + "/" + m.group.magnitude + " (" + m.method +
                                "): only one class present");
      continue;
    }
    m.auroc = auroc(pooled);
    m.tnr_at_tpr95 = tnr_at_tpr95(pooled);
    std::vector<double> scores;
    for (const auto& s : pooled) scores.push_back(s.score);
    m.score_min = *std::min_element(scores.begin(), scores.end());
    m.score_max = *std::max_element(scores.begin(), scores.end());
    m.score_mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    m.score_median = median(scores);
    if (all_decided && decided > 0) m.accuracy = static_cast<double>(correct) / static_cast<double>(decided);
    report.groups.push_back(std::move(m));
  }

  for (const auto& [key, t] : trends) {
    TrendReport tr{key[0], key[1], key[2], key[3], t.path_auroc.size(), std::nullopt};
    try {
      tr.spearman = spearman(t.magnitude, t.path_auroc);
    } catch (const std::exception& e) {
      report.warnings.push_back("trend " + key[0] + "/" + key[1] + "/" + key[2] + " (" + key[3] + "): " + e.what());
    }
    report.trends.push_back(std::move(tr));
  }

  // Pairwise comparisons within each group; oddit is listed first when present.
  std::map<GroupKey, std::vector<const MetricReport*>> per_group;
  for (const auto& m : report.groups) per_group[m.group].push_back(&m);
  for (auto& [group, ms] : per_group) {
    std::stable_sort(ms.begin(), ms.end(), [](const MetricReport* a, const MetricReport* b) {
      return std::make_pair(a->method != "oddit", a->method) < std::make_pair(b->method != "oddit", b->method);
    });
    for (std::size_t i = 0; i < ms.size(); ++i) {
      for (std::size_t j = i + 1; j < ms.size(); ++j) {
        if (ms[i]->path_auroc.empty() || ms[j]->path_auroc.empty()) {
          report.warnings.push_back("no per-path AUROC for " + ms[i]->method + " vs " + ms[j]->method + " in " +
                                    group.vessel + "/" + group.magnitude);
          continue;
        }
        ComparisonReport c{group, ms[i]->method, ms[j]->method, vargha_delaney(ms[i]->path_auroc, ms[j]->path_auroc)};
        if (ms[i]->accuracy && ms[j]->accuracy) c.effect.cohens_h = cohens_h(*ms[i]->accuracy, *ms[j]->accuracy);
        report.comparisons.push_back(std::move(c));
      }
    }
  }
  return report;
}

namespace {

nlohmann::json key_json(const GroupKey& k) {
  return {{"vessel", k.vessel}, {"maneuver", k.maneuver}, {"disturbance", k.disturbance}, {"magnitude", k.magnitude}};
}

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string report_json(const Report& report) {
  nlohmann::json j;
  j["groups"] = nlohmann::json::array();
  for (const auto& m : report.groups) {
    j["groups"].push_back({{"group", key_json(m.group)},
                           {"method", m.method},
                           {"auroc", m.auroc},
                           {"tnr_at_tpr95", m.tnr_at_tpr95},
                           {"n_ind", m.n_ind},
                           {"n_ood", m.n_ood},
                           {"score", {{"min", m.score_min}, {"max", m.score_max}, {"mean", m.score_mean}, {"median", m.score_median}}},
                           {"accuracy", opt(m.accuracy)},
                           {"path_auroc", m.path_auroc}});
  }
  j["trends"] = nlohmann::json::array();
  for (const auto& t : report.trends) {
    j["trends"].push_back({{"vessel", t.vessel}, {"maneuver", t.maneuver}, {"disturbance", t.disturbance},
                           {"method", t.method}, {"n_paths", t.n_paths}, {"spearman", opt(t.spearman)}});
  }
  j["comparisons"] = nlohmann::json::array();
  for (const auto& c : report.comparisons) {
    j["comparisons"].push_back({{"group", key_json(c.group)},
                                {"method_a", c.method_a},
                                {"method_b", c.method_b},
                                {"a12", c.effect.a12},
                                {"a12_scaled", c.effect.a12_scaled},
                                {"magnitude", to_string(c.effect.magnitude)},
                                {"cohens_h", opt(c.effect.cohens_h)}});
  }
  j["warnings"] = report.warnings;
  return j.dump(2);
}

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out << "vessel,maneuver,disturbance,magnitude,method,auroc,tnr_at_tpr95,n_ind,n_ood,score_min,score_max,"
         "score_mean,score_median,accuracy,n_paths\n";
  for (const auto& m : report.groups) {
    out << m.group.vessel << ',' << m.group.maneuver << ',' << m.group.disturbance << ',' << m.group.magnitude
        << ',' << m.method << ',' << fmt(m.auroc) << ',' << fmt(m.tnr_at_tpr95) << ',' << m.n_ind << ','
        << m.n_ood << ',' << fmt(m.score_min) << ',' << fmt(m.score_max) << ',' << fmt(m.score_mean) << ','
        << fmt(m.score_median) << ',' << (m.accuracy ? fmt(*m.accuracy) : "") << ',' << m.path_auroc.size()
        << '\n';
  }
  return out.str();
}

}  // namespace vtwin
