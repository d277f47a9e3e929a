// Acceptance suite: runs the three built-in experiments twice through the
// CLI, then prints one PASS/FAIL line per criterion.  Exit status is 0 when
// every criterion was evaluated; with --strict any FAIL also exits 1.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../common/gradcheck.hpp"
#include "../common/oracles.hpp"
#include "vtwin/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vtwin;

namespace {

// Pinned tolerances and targets.
constexpr double kSensorAuroc = 0.85;
constexpr double kSensorTnr = 0.70;
constexpr double kSensorRuntimeSeconds = 20.0 * 60.0;
constexpr double kCurrentAuroc = 0.95;
constexpr double kCurrentTnr = 0.90;
constexpr double kActuatorAuroc = 0.80;
constexpr double kTrendSpearman = 0.3;
constexpr int kMetricInstances = 1000;
constexpr std::size_t kMetricMaxN = 200;
constexpr double kAurocOracleTol = 1e-9;
constexpr double kTnrOracleTol = 1e-12;
constexpr int kGradTrials = 100;
constexpr double kChebyshevRate = 1.0 / 9.0;
constexpr double kEuclidTol = 1e-12;
constexpr int kMonotoneMaps = 100;
constexpr double kMonotoneTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

struct Run {
  fs::path dir;
  double seconds = 0.0;
  int status = 0;
  json report;
};

Run repro(const std::string& experiment, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cmd = std::string(VTWIN_CLI_PATH) + " repro " + experiment + " --out " + dir.string() + " > " +
                          (dir / "repro.log").string() + " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  Run r;
  r.dir = dir;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.status = status;
  if (status == 0) r.report = json::parse(slurp(dir / "report.json"));
  return r;
}

std::vector<json> groups(const Run& r, const std::string& vessel, const std::string& disturbance,
                         const std::string& method) {
  std::vector<json> out;
  if (r.status != 0) return out;
  for (const auto& g : r.report["groups"]) {
    if (g["group"]["vessel"] == vessel && g["group"]["disturbance"] == disturbance && g["method"] == method) {
      out.push_back(g);
    }
  }
  return out;
}

Outcome detection(const Run& r, const std::string& vessel, const std::string& disturbance, std::size_t expected,
                  double min_auroc, std::optional<double> min_tnr) {
  if (r.status != 0) return {false, "repro failed, see " + (r.dir / "repro.log").string()};
  const auto gs = groups(r, vessel, disturbance, "oddit");
  if (gs.size() != expected) return {false, "expected " + std::to_string(expected) + " groups, found " + std::to_string(gs.size())};
  bool ok = true;
  std::string detail;
  for (const auto& g : gs) {
    const double a = g["auroc"], t = g["tnr_at_tpr95"];
    ok = ok && a >= min_auroc && (!min_tnr || t >= *min_tnr);
    detail += std::string(g["group"]["magnitude"]) + "/" + std::string(g["group"]["maneuver"]) + ": auroc " +
              fmt(a) + " tnr " + fmt(t) + "; ";
  }
  return {ok, detail};
}

std::vector<LabeledTrajectory> training_set(const fs::path& data, const std::string& vessel) {
  const DatasetSplit split = parse_split_manifest(slurp(data / vessel / "manifest.json"));
  const ColumnSchema schema = column_schema(vessel);
  std::vector<LabeledTrajectory> out;
  for (const auto& e : split.train) out.push_back(read_csv(data / vessel / e.csv, schema, vessel));
  return out;
}

Outcome criterion_metric_oracles() {
  std::mt19937_64 rng(20240601);
  double worst_auroc = 0.0, worst_tnr = 0.0;
  for (int i = 0; i < kMetricInstances; ++i) {
    const auto s = verify::random_instance(rng, kMetricMaxN);
    worst_auroc = std::max(worst_auroc, std::abs(auroc(s) - verify::auroc_pairwise(s)));
    worst_tnr = std::max(worst_tnr, std::abs(tnr_at_tpr95(s) - verify::tnr_at_tpr95_scan(s)));
  }
  return {worst_auroc <= kAurocOracleTol && worst_tnr <= kTnrOracleTol,
          std::to_string(kMetricInstances) + " instances; max |auroc - pairwise| " + std::to_string(worst_auroc) +
              ", max |tnr - scan| " + std::to_string(worst_tnr)};
}

Outcome criterion_gradients() {
  using verify::GradCheck;
  const std::vector<std::pair<std::string, std::function<GradCheck(std::uint64_t)>>> kinds = {
      {"dense/identity", [](std::uint64_t s) { return verify::check_dense(nn::Activation::identity, nn::Mode::training, s); }},
      {"dense/relu", [](std::uint64_t s) { return verify::check_dense(nn::Activation::relu, nn::Mode::training, s); }},
      {"dense/rrelu-train", [](std::uint64_t s) { return verify::check_dense(nn::Activation::rrelu, nn::Mode::training, s); }},
      {"dense/rrelu-eval", [](std::uint64_t s) { return verify::check_dense(nn::Activation::rrelu, nn::Mode::inference, s); }},
      {"dense/sigmoid", [](std::uint64_t s) { return verify::check_dense(nn::Activation::sigmoid, nn::Mode::training, s); }},
      {"recurrent", [](std::uint64_t s) { return verify::check_recurrent(s); }},
      {"autoencoder", [](std::uint64_t s) { return verify::check_autoencoder(s); }},
      {"dtm/teacher-forced", [](std::uint64_t s) { return verify::check_dtm(true, s); }},
      {"dtm/rollout", [](std::uint64_t s) { return verify::check_dtm(false, s); }},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, check] : kinds) {
    double worst = 0.0;
    std::size_t redraws = 0;
    for (int t = 0; t < kGradTrials; ++t) {
      const GradCheck r = check(static_cast<std::uint64_t>(t));
      worst = std::max(worst, r.max_rel_error);
      redraws += r.redraws;
    }
    ok = ok && worst < verify::kFdTolerance;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %.1e (%zu redrawn); ", name.c_str(), worst, redraws);
    detail += buf;
  }
  return {ok, std::to_string(kGradTrials) + " trials each, worst rel. error: " + detail};
}

Outcome criterion_thresholds(const std::vector<Run>& runs) {
  bool ok = true;
  std::string detail;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.status != 0) return {false, "repro failed in " + r.dir.string()};
    for (const auto& e : fs::directory_iterator(r.dir / "checkpoints")) {
      if (e.path().extension() != ".json") continue;
      const TwinCheckpoint twin = load_checkpoint(e.path());
      const auto errors = training_errors(twin, training_set(r.dir / "data", twin.vessel));
      const OodThreshold recomputed = compute_threshold(errors);
      std::size_t flagged = 0;
      for (double x : errors) flagged += classify(x, twin.threshold) == Label::ood;
      const double rate = static_cast<double>(flagged) / static_cast<double>(errors.size());
      const bool exact = twin.threshold.value == twin.threshold.mean + 3.0 * twin.threshold.stddev &&
                         recomputed == twin.threshold;
      ok = ok && exact && rate <= kChebyshevRate;
      detail += r.dir.filename().string() + "/" + twin.vessel + ": T " + fmt(twin.threshold.value, 6) +
                (exact ? " exact" : " MISMATCH") + ", flag rate " + fmt(rate) + "; ";
      ++n;
    }
  }
  return {ok && n > 0, detail};
}

Outcome criterion_determinism(const std::vector<std::pair<Run, Run>>& pairs) {
  bool ok = true;
  std::string detail;
  for (const auto& [a, b] : pairs) {
    if (a.status != 0 || b.status != 0) return {false, "repro failed"};
    auto ta = tree(a.dir), tb = tree(b.dir);
    ta.erase("repro.log");
    tb.erase("repro.log");
    std::size_t differing = 0;
    for (const auto& [k, v] : ta) differing += !tb.count(k) || tb.at(k) != v;
    differing += tb.size() > ta.size() ? tb.size() - ta.size() : 0;
    const bool has_outputs = ta.count("report.json") && ta.count("verdicts/index.json");
    ok = ok && differing == 0 && has_outputs;
    detail += a.dir.parent_path().filename().string() + ": " + std::to_string(ta.size()) + " files, " +
              std::to_string(differing) + " differ; ";
  }
  return {ok, detail};
}

Outcome criterion_baselines(const Run& r) {
  if (r.status != 0) return {false, "repro failed"};
  const json index = json::parse(slurp(r.dir / "verdicts" / "index.json"));
  std::map<std::string, std::map<std::string, std::string>> by_path;  // path -> method -> file
  for (const auto& v : index["verdicts"]) {
    by_path[std::string(v["vessel"]) + "/" + std::string(v["path_id"])][v["method"]] = v["file"];
  }
  bool ok = !by_path.empty();
  for (const auto& [path, methods] : by_path) {
    if (methods.size() != 3) {
      ok = false;
      continue;
    }
    std::vector<double> reference;
    for (const auto& [method, file] : methods) {
      std::vector<double> anchors;
      for (const auto& v : parse_verdict_csv(slurp(r.dir / "verdicts" / file))) anchors.push_back(v.anchor_time);
      if (reference.empty()) reference = anchors;
      ok = ok && anchors == reference;
    }
  }
  std::set<std::string> groups_seen;
  std::map<std::string, std::vector<double>> a12;
  std::size_t with_h = 0, total = 0;
  for (const auto& c : r.report["comparisons"]) {
    if (c["method_a"] != "oddit") continue;
    a12[c["method_b"]].push_back(c["a12"]);
    with_h += !c["cohens_h"].is_null();
    ++total;
    groups_seen.insert(c["group"].dump());
  }
  const std::size_t n_groups = groups(r, "mariner", "sensor_noise", "oddit").size() +
                               groups(r, "nps_auv", "sensor_noise", "oddit").size();
  ok = ok && a12.count("dtm-r") && a12.count("dtm-e") && with_h == total && groups_seen.size() == n_groups &&
       total == 2 * n_groups;
  std::string detail = std::to_string(by_path.size()) + " paths with identical anchors across methods; ";
  for (const auto& [m, v] : a12) {
    double mean = 0.0;
    for (double x : v) mean += x;
    detail += "mean A12(oddit vs " + m + ") " + fmt(mean / static_cast<double>(v.size()), 3) + " over " +
              std::to_string(v.size()) + " groups; ";
  }
  return {ok, detail};
}

Outcome criterion_identities(const std::vector<Run>& runs) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 40);
  std::normal_distribution<double> n(0.0, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    nn::Matrix p(dim(rng), dim(rng)), q(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p.data()[i] = n(rng);
      q.data()[i] = n(rng);
    }
    const double e = baseline_score(BaselineKind::euclid, p, q);
    const double r = baseline_score(BaselineKind::rmse, p, q) * std::sqrt(static_cast<double>(p.size()));
    worst = std::max(worst, std::abs(e - r) / std::max(1.0, std::abs(e)));
  }
  bool classify_ok = true;
  std::size_t thresholds = 0;
  for (const auto& r : runs) {
    if (r.status != 0) continue;
    for (const auto& e : fs::directory_iterator(r.dir / "checkpoints")) {
      if (e.path().extension() != ".json") continue;
      const TwinCheckpoint twin = load_checkpoint(e.path());
      for (const auto* t : {&twin.threshold, &twin.rmse_threshold, &twin.euclid_threshold}) {
        classify_ok = classify_ok && classify(t->value, *t) == Label::ind;
        ++thresholds;
      }
    }
  }
  std::uniform_real_distribution<double> u(0.1, 3.0);
  double worst_mono = 0.0;
  for (int m = 0; m < kMonotoneMaps; ++m) {
    auto s = verify::random_instance(rng);
    const double before = auroc(s);
    const double a = u(rng), b = u(rng) - 1.5, c = u(rng);
    const int kind = m % 4;
    for (auto& x : s) {
      const double z = a * x.score + b;
      x.score = kind == 0 ? z : kind == 1 ? std::exp(c * z) : kind == 2 ? std::atan(z) : z * z * z + c * z;
    }
    worst_mono = std::max(worst_mono, std::abs(auroc(s) - before));
  }
  const bool ok = worst <= kEuclidTol && classify_ok && thresholds > 0 && worst_mono <= kMonotoneTol;
  std::ostringstream d;
  d << "euclid vs rmse*sqrt(N) worst rel " << worst << "; classify(T)=IND on " << thresholds
    << " stored thresholds: " << (classify_ok ? "yes" : "no") << "; " << kMonotoneMaps
    << " monotone maps, worst |dAUROC| " << worst_mono;
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_runs";
  bool strict = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) out = argv[++i];
    else if (a == "--strict") strict = true;
    else {
      std::cerr << "usage: vtwin_acceptance [--out DIR] [--strict]\n";
      return 2;
    }
  }
  fs::create_directories(out);
  std::map<int, Outcome> results;
  try {
    results[5] = criterion_metric_oracles();
    results[6] = criterion_gradients();

    std::vector<std::pair<Run, Run>> pairs;
    for (const std::string exp : {"sensor", "current", "actuator"}) {
      std::cerr << "running " << exp << " (twice)\n";
      Run first = repro(exp, out / exp / "run1");
      Run second = repro(exp, out / exp / "run2");
      pairs.emplace_back(std::move(first), std::move(second));
    }
    const Run& sensor = pairs[0].first;
    const Run& current = pairs[1].first;
    const Run& actuator = pairs[2].first;

    results[1] = detection(sensor, "mariner", "sensor_noise", 7, kSensorAuroc, kSensorTnr);
    results[1].detail += "runtime " + fmt(sensor.seconds, 0) + " s";
    results[1].pass = results[1].pass && sensor.seconds <= kSensorRuntimeSeconds;
    results[2] = detection(current, "remus100", "current_spike", 1, kCurrentAuroc, kCurrentTnr);
    results[3] = detection(actuator, "mariner", "actuator_extreme", 4, kActuatorAuroc, std::nullopt);

    Outcome trend{false, "no trend"};
    if (sensor.status == 0) {
      for (const auto& t : sensor.report["trends"]) {
        if (t["vessel"] == "nps_auv" && t["method"] == "oddit" && !t["spearman"].is_null()) {
          const double rs = t["spearman"];
          trend = {rs >= kTrendSpearman, "nps_auv oddit r_s " + fmt(rs) + " over " +
                                             std::to_string(t["n_paths"].get<int>()) + " paths"};
        }
      }
    }
    results[4] = trend;
    results[7] = criterion_thresholds({sensor, current, actuator});
    results[8] = criterion_determinism(pairs);
    results[9] = criterion_baselines(sensor);
    results[10] = criterion_identities({sensor, current, actuator});
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }

  std::ostringstream summary;
  int failures = 0;
  for (int c = 1; c <= 10; ++c) {
    const Outcome& o = results.at(c);
    failures += !o.pass;
    summary << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "\n";
  }
  std::cout << summary.str();
  std::ofstream(out / "acceptance.txt") << summary.str();
  return strict && failures > 0 ? 1 : 0;
}
