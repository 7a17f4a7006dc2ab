#include "pink/analysis/reproducibility.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <tuple>

#include "pink/error.h"
#include "pink/metrics.h"

namespace pink::analysis {
namespace {

const std::vector<int>& TotalCategories() {
  static const std::vector<int> kCategories = [] {
    std::vector<int> c(kRubricTotal + 1);
    std::iota(c.begin(), c.end(), 0);
    return c;
  }();
  return kCategories;
}

// Runs `compute`; a statistic undefined on degenerate data becomes a note.
std::optional<double> TryStat(const std::string& name,
                              const std::function<double()>& compute,
                              std::vector<std::string>& notes) {
  try {
    return compute();
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kZeroVariance:
      case ErrorCode::kEmptyInput:
      case ErrorCode::kAllTied:
        notes.push_back(name + " undefined: " + e.what());
        return std::nullopt;
      default:
        throw;
    }
  }
}

using AlignKey = std::tuple<std::string, std::string, int, std::string>;

AlignKey KeyOf(const EvalRecord& r) {
  return {r.sample_id, r.model_id, r.run_index, r.prompt_variant};
}

std::map<AlignKey, const EvalRecord*> IndexRecords(
    std::span<const EvalRecord> records, const char* side) {
  std::map<AlignKey, const EvalRecord*> index;
  for (const auto& r : records) {
    if (!index.emplace(KeyOf(r), &r).second) {
      throw Error(ErrorCode::kDuplicateKey,
                  std::string("judge ") + side + " has two records for " +
                      r.sample_id + "/" + r.model_id + " run " +
                      std::to_string(r.run_index));
    }
  }
  return index;
}

std::map<std::string, const EvalRecord*> BySample(
    std::span<const EvalRecord> records, const std::string& what) {
  std::map<std::string, const EvalRecord*> out;
  for (const auto& r : records) {
    if (!out.emplace(r.sample_id, &r).second) {
      throw Error(ErrorCode::kDuplicateKey,
                  what + " has two records for sample " + r.sample_id);
    }
  }
  return out;
}

}  // namespace

CrossGraderReport CrossGrader(std::span<const EvalRecord> records_a,
                              std::span<const EvalRecord> records_b) {
  const auto index_a = IndexRecords(records_a, "a");
  const auto index_b = IndexRecords(records_b, "b");
  CrossGraderReport out;
  if (!records_a.empty()) out.judge_a = records_a.front().judge_id;
  if (!records_b.empty()) out.judge_b = records_b.front().judge_id;

  std::vector<double> model_a, model_b, pen_a, pen_b;
  std::vector<int> model_ia, model_ib, pen_ia, pen_ib;
  std::map<std::string, std::vector<EvalRecord>> per_model_a, per_model_b;
  for (const auto& [key, ra] : index_a) {
    auto it = index_b.find(key);
    if (it == index_b.end()) {
      ++out.dropped_a;
      continue;
    }
    const EvalRecord* rb = it->second;
    ++out.aligned;
    model_a.push_back(ra->model.total());
    model_b.push_back(rb->model.total());
    model_ia.push_back(ra->model.total());
    model_ib.push_back(rb->model.total());
    pen_a.push_back(ra->penalized_total);
    pen_b.push_back(rb->penalized_total);
    pen_ia.push_back(ra->penalized_total);
    pen_ib.push_back(rb->penalized_total);
    per_model_a[ra->model_id].push_back(*ra);
    per_model_b[ra->model_id].push_back(*rb);
  }
  out.dropped_b = index_b.size() - out.aligned;
  if (out.aligned == 0) {
    throw Error(ErrorCode::kNoOverlap, "judges " + out.judge_a + " and " +
                                           out.judge_b + " share no graded record");
  }

  const auto& cats = TotalCategories();
  out.grading_pearson = TryStat(
      "grading pearson", [&] { return stats::Pearson(model_a, model_b); }, out.notes);
  out.grading_qwk = stats::WeightedKappa(model_ia, model_ib, cats);
  out.penalized_pearson = TryStat(
      "penalized pearson", [&] { return stats::Pearson(pen_a, pen_b); }, out.notes);
  out.penalized_qwk = stats::WeightedKappa(pen_ia, pen_ib, cats);

  for (const auto& [model, recs] : per_model_a) {
    const auto& recs_b = per_model_b.at(model);
    try {
      const double pa = metrics::PinkScore(recs);
      const double pb = metrics::PinkScore(recs_b);
      out.pink_a[model] = pa;
      out.pink_b[model] = pb;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAllOraclesZero) throw;
      out.notes.push_back("model " + model + " left out of model-level stats: " +
                          e.what());
    }
  }
  out.pink_pearson = TryStat(
      "model-level pink pearson",
      [&] { return stats::Pearson(stats::AlignByLabel(out.pink_a, out.pink_b)); },
      out.notes);
  if (!out.pink_a.empty()) {
    out.rank_tau = stats::RankingTau(stats::RankDescending(out.pink_a),
                                     stats::RankDescending(out.pink_b));
  }
  return out;
}

RunStability ComputeRunStability(const std::string& model_id,
                                 std::span<const std::vector<EvalRecord>> runs) {
  if (runs.size() < 2) {
    throw Error(ErrorCode::kInsufficientRuns,
                "run stability of " + model_id + " needs at least 2 runs, got " +
                    std::to_string(runs.size()));
  }
  std::vector<std::map<std::string, const EvalRecord*>> indexed;
  for (std::size_t i = 0; i < runs.size(); ++i)
    indexed.push_back(BySample(runs[i], model_id + " run #" + std::to_string(i)));

  std::vector<std::string> shared;
  for (const auto& [sample, _] : indexed.front()) {
    bool everywhere = std::all_of(indexed.begin() + 1, indexed.end(),
                                  [&](const auto& m) { return m.count(sample) > 0; });
    if (everywhere) shared.push_back(sample);
  }
  if (shared.empty()) {
    throw Error(ErrorCode::kNoOverlap,
                "runs of " + model_id + " share no graded sample");
  }

  RunStability out;
  out.model_id = model_id;
  out.shared_samples = shared.size();
  std::vector<std::vector<int>> penalized(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<EvalRecord> subset;
    for (const auto& s : shared) {
      subset.push_back(*indexed[i].at(s));
      penalized[i].push_back(indexed[i].at(s)->penalized_total);
    }
    out.run_indices.push_back(subset.front().run_index);
    out.pink_per_run.push_back(metrics::PinkScore(subset));
  }
  out.cv_percent = stats::CoefficientOfVariation(out.pink_per_run);

  double sum = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      const double k =
          stats::WeightedKappa(penalized[i], penalized[j], TotalCategories());
      out.pairwise_qwk.push_back({"run" + std::to_string(out.run_indices[i]),
                                  "run" + std::to_string(out.run_indices[j]), k,
                                  shared.size()});
      sum += k;
    }
  }
  out.mean_pairwise_qwk = sum / static_cast<double>(out.pairwise_qwk.size());
  return out;
}

PromptSensitivity ComputePromptSensitivity(
    const std::map<std::string, std::vector<EvalRecord>>& by_variant) {
  if (by_variant.size() < 2) {
    throw Error(ErrorCode::kEmptyInput,
                "prompt sensitivity needs at least 2 rubric variants, got " +
                    std::to_string(by_variant.size()));
  }
  // variant -> model -> records
  std::map<std::string, std::map<std::string, std::vector<EvalRecord>>> grouped;
  std::set<std::string> models;
  for (const auto& [variant, records] : by_variant) {
    auto& g = grouped[variant];
    for (const auto& r : records) {
      g[r.model_id].push_back(r);
      models.insert(r.model_id);
    }
  }
  auto sample_set = [](const std::vector<EvalRecord>& recs) {
    std::set<std::string> s;
    for (const auto& r : recs) s.insert(r.sample_id);
    return s;
  };

  PromptSensitivity out;
  for (const auto& [variant, _] : by_variant) out.variants.push_back(variant);
  const std::string& first = out.variants.front();
  for (const auto& model : models) {
    auto it0 = grouped[first].find(model);
    if (it0 == grouped[first].end()) {
      throw Error(ErrorCode::kSampleSetMismatch,
                  "model " + model + " has no records under variant " + first);
    }
    const auto reference = sample_set(it0->second);
    for (const auto& variant : out.variants) {
      auto it = grouped[variant].find(model);
      if (it == grouped[variant].end()) {
        throw Error(ErrorCode::kSampleSetMismatch,
                    "model " + model + " has no records under variant " + variant);
      }
      if (sample_set(it->second) != reference) {
        throw Error(ErrorCode::kSampleSetMismatch,
                    "model " + model + " covers different samples under " +
                        variant + " than under " + first);
      }
      out.models[model].pink[variant] = metrics::PinkScore(it->second);
    }
  }
  for (const auto& variant : out.variants) {
    std::map<std::string, double> scores;
    for (const auto& [model, row] : out.models) scores[model] = row.pink.at(variant);
    const auto ranking = stats::RankDescending(scores);
    for (auto& [model, row] : out.models) row.rank[variant] = ranking.rank.at(model);
  }
  for (auto& [model, row] : out.models) {
    std::vector<double> values;
    for (const auto& v : out.variants) values.push_back(row.pink.at(v));
    row.stddev = stats::SampleStdDev(values);
  }
  return out;
}

MitigationReport CompareMitigation(std::span<const EvalRecord> original,
                                   std::span<const EvalRecord> mitigated) {
  using ModelIndex = std::map<std::string, std::map<std::string, const EvalRecord*>>;
  auto index = [](std::span<const EvalRecord> records, const char* what) {
    ModelIndex out;
    for (const auto& r : records) {
      if (!out[r.model_id].emplace(r.sample_id, &r).second) {
        throw Error(ErrorCode::kDuplicateKey,
                    std::string(what) + " set has two records for " + r.sample_id +
                        "/" + r.model_id);
      }
    }
    return out;
  };
  const ModelIndex orig = index(original, "original");
  const ModelIndex mit = index(mitigated, "mitigated");

  MitigationReport out;
  std::vector<std::string> models;
  for (const auto& [m, _] : orig) {
    if (mit.count(m)) models.push_back(m);
    else out.excluded_models.push_back(m);
  }
  for (const auto& [m, _] : mit)
    if (!orig.count(m)) out.excluded_models.push_back(m);
  std::sort(out.excluded_models.begin(), out.excluded_models.end());
  if (models.empty()) {
    throw Error(ErrorCode::kSampleSetMismatch,
                "no model has records under both prompt variants");
  }

  std::set<std::string> all_samples;
  for (const auto& m : models) {
    for (const auto& [s, _] : orig.at(m)) all_samples.insert(s);
    for (const auto& [s, _] : mit.at(m)) all_samples.insert(s);
  }
  std::vector<std::string> shared;
  for (const auto& s : all_samples) {
    bool everywhere = std::all_of(models.begin(), models.end(), [&](const auto& m) {
      return orig.at(m).count(s) && mit.at(m).count(s);
    });
    if (everywhere) shared.push_back(s);
  }
  if (shared.empty()) {
    throw Error(ErrorCode::kSampleSetMismatch,
                "no sample is graded for every model under both prompt variants");
  }
  out.shared_samples = shared.size();
  out.excluded_samples = all_samples.size() - shared.size();

  auto subset = [&](const ModelIndex& idx, const std::string& m) {
    std::vector<EvalRecord> recs;
    for (const auto& s : shared) recs.push_back(*idx.at(m).at(s));
    return recs;
  };
  out.average.model_id = "average";
  for (const auto& m : models) {
    const auto ro = subset(orig, m);
    const auto rm = subset(mit, m);
    MitigationRow row;
    row.model_id = m;
    row.pink_original = metrics::PinkScore(ro);
    row.pink_mitigated = metrics::PinkScore(rm);
    row.delta_pink = row.pink_mitigated - row.pink_original;
    row.oc_original = 100.0 * metrics::OcRate(ro);
    row.oc_mitigated = 100.0 * metrics::OcRate(rm);
    row.delta_oc_pp = row.oc_mitigated - row.oc_original;
    out.rows.push_back(row);
  }
  const double n = static_cast<double>(out.rows.size());
  for (const auto& row : out.rows) {
    out.average.pink_original += row.pink_original / n;
    out.average.pink_mitigated += row.pink_mitigated / n;
    out.average.delta_pink += row.delta_pink / n;
    out.average.oc_original += row.oc_original / n;
    out.average.oc_mitigated += row.oc_mitigated / n;
    out.average.delta_oc_pp += row.delta_oc_pp / n;
  }
  return out;
}

}  // namespace pink::analysis
