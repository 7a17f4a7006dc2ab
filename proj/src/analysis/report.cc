#include "pink/analysis/report.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pink/error.h"
#include "pink/io.h"

namespace pink::analysis {

using nlohmann::json;

namespace {

json OptionalJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json RankingJson(const stats::Ranking& ranking) { return ranking.order; }

std::string CsvEscape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string FormatDouble(double value) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::kIo, "cannot format number");
  return std::string(buf, end);
}

json ToJson(const LeaderboardEntry& e) {
  return json{{"model_id", e.model_id},   {"pink", e.pink},
              {"bleu", e.bleu},           {"norm_edit_distance", e.norm_edit_distance},
              {"oc_rate", e.oc_rate},     {"raw_score", e.raw_score},
              {"rank_pink", e.rank_pink}, {"rank_bleu", e.rank_bleu},
              {"rank_raw", e.rank_raw}};
}

json ToJson(const metrics::ModelAggregate& a) {
  json hist = json::object();
  hist["edges"] = a.oc_histogram.edges;
  hist["counts"] = a.oc_histogram.counts;
  hist["percent"] = a.oc_histogram.percent;
  hist["total"] = a.oc_histogram.total;
  return json{{"model_id", a.model_id},
              {"pink", a.pink},
              {"bleu", a.bleu},
              {"norm_edit_distance", a.norm_edit_distance},
              {"oc_rate", a.oc_rate},
              {"oc_histogram", hist},
              {"n_samples", a.n_samples},
              {"excluded_zero_oracle", a.excluded_zero_oracle},
              {"event_count", a.event_count},
              {"mean_oracle", a.mean_oracle},
              {"mean_model", a.mean_model},
              {"mean_penalized", a.mean_penalized}};
}

json ToJson(const RankingComparison& c) {
  json deltas = json::array();
  for (const auto& d : c.deltas) {
    deltas.push_back({{"model_id", d.model_id},
                      {"rank_a", d.rank_a},
                      {"rank_b", d.rank_b},
                      {"movement", d.movement}});
  }
  return json{{"deltas", deltas}, {"tau", c.tau}};
}

json ToJson(const RubricHeatmap& h) {
  json rows = json::array();
  for (std::size_t i = 0; i < h.models.size(); ++i)
    rows.push_back({{"model_id", h.models[i]}, {"counts", h.counts[i]}});
  return json{{"components", h.component_names}, {"rows", rows}};
}

json ToJson(const DeltaHistogram& h) {
  json models = json::object();
  for (const auto& [m, row] : h.models) {
    models[m] = {{"counts", row.counts}, {"zero", row.zero}, {"total", row.total}};
  }
  return json{{"edges", h.edges}, {"closed", "right"}, {"models", models}};
}

json ToJson(const penalty::SweepResult& s) {
  json points = json::array();
  for (const auto& p : s.points) {
    points.push_back({{"threshold", p.threshold},
                      {"pink", p.pink},
                      {"penalized_totals", p.penalized_totals},
                      {"ranking", RankingJson(p.ranking)},
                      {"tau_vs_baseline", p.tau_vs_baseline},
                      {"minor_events", p.minor_events},
                      {"major_events", p.major_events}});
  }
  return json{{"baseline_threshold", s.baseline_threshold},
              {"baseline_ranking", RankingJson(s.baseline_ranking)},
              {"points", points}};
}

json ToJson(const CrossGraderReport& r) {
  return json{{"judge_a", r.judge_a},
              {"judge_b", r.judge_b},
              {"aligned", r.aligned},
              {"dropped_a", r.dropped_a},
              {"dropped_b", r.dropped_b},
              {"sample_grading", {{"pearson", OptionalJson(r.grading_pearson)},
                                  {"qwk", OptionalJson(r.grading_qwk)}}},
              {"sample_penalized", {{"pearson", OptionalJson(r.penalized_pearson)},
                                    {"qwk", OptionalJson(r.penalized_qwk)}}},
              {"model_pink", {{"pearson", OptionalJson(r.pink_pearson)},
                              {"pink_a", r.pink_a},
                              {"pink_b", r.pink_b}}},
              {"rank", {{"kendall_tau_b", OptionalJson(r.rank_tau)}}},
              {"notes", r.notes}};
}

json ToJson(const RunStability& s) {
  json pairs = json::array();
  for (const auto& p : s.pairwise_qwk)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"qwk", p.kappa}, {"n", p.n}});
  return json{{"model_id", s.model_id},
              {"run_indices", s.run_indices},
              {"pink_per_run", s.pink_per_run},
              {"cv_percent", s.cv_percent},
              {"pairwise_qwk", pairs},
              {"mean_pairwise_qwk", s.mean_pairwise_qwk},
              {"shared_samples", s.shared_samples}};
}

json ToJson(const PromptSensitivity& p) {
  json models = json::object();
  for (const auto& [m, row] : p.models)
    models[m] = {{"pink", row.pink}, {"stddev", row.stddev}, {"rank", row.rank}};
  return json{{"variants", p.variants}, {"models", models}};
}

namespace {

json MitigationRowJson(const MitigationRow& r) {
  return json{{"model_id", r.model_id},
              {"pink_original", r.pink_original},
              {"pink_mitigated", r.pink_mitigated},
              {"delta_pink", r.delta_pink},
              {"oc_original_pct", r.oc_original},
              {"oc_mitigated_pct", r.oc_mitigated},
              {"delta_oc_pp", r.delta_oc_pp}};
}

json TallyJson(const PreferenceTally& t) {
  return json{{"PINK", t.pink},         {"BLEU", t.bleu},
              {"Neither", t.neither},   {"total", t.total},
              {"pct_PINK", t.pct_pink}, {"pct_BLEU", t.pct_bleu},
              {"pct_Neither", t.pct_neither}};
}

}  // namespace

json ToJson(const MitigationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(MitigationRowJson(row));
  return json{{"rows", rows},
              {"average", MitigationRowJson(r.average)},
              {"shared_samples", r.shared_samples},
              {"excluded_samples", r.excluded_samples},
              {"excluded_models", r.excluded_models}};
}

json ToJson(const HumanAgreement& a) {
  json pairs = json::array();
  for (const auto& p : a.pairwise)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"kappa", p.kappa}, {"n", p.n}});
  return json{{"weighting", stats::KappaWeightingName(a.weighting)},
              {"pairwise", pairs},
              {"mean_kappa", a.mean_kappa},
              {"pearson_mean_human_vs_auto", OptionalJson(a.pearson)},
              {"n_samples", a.n_samples},
              {"notes", a.notes}};
}

json ToJson(const PreferenceReport& r) {
  json brackets = json::array();
  for (const auto& b : r.brackets) {
    brackets.push_back(
        {{"lower", b.lower}, {"upper", b.upper}, {"tally", TallyJson(b.tally)}});
  }
  return json{{"overall", TallyJson(r.overall)}, {"brackets", brackets}};
}

json ToJson(const DiscrepancyBreakdown& d) {
  return json{{"total_pairs", d.total_pairs},
              {"discrepant", d.discrepant},
              {"counts", d.counts},
              {"percent", d.percent},
              {"formatting_involved_percent", d.formatting_involved_percent}};
}

ReportWriter::ReportWriter(std::filesystem::path directory, ReportContext context)
    : directory_(std::move(directory)), context_(std::move(context)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create report directory " + directory_.string() + ": " +
                    ec.message());
  }
}

void ReportWriter::WriteJson(const std::string& file, const std::string& section,
                             json payload, const std::string& judge_id) {
  json out = json::object();
  out["section"] = section;
  out["config_hash"] = context_.config_hash;
  out["judge_id"] = judge_id.empty() ? context_.judge_id : judge_id;
  for (auto& [k, v] : payload.items()) out[k] = std::move(v);
  io::WriteFileAtomic(directory_ / file, out.dump(2) + "\n");
}

void ReportWriter::WriteSkipped(const std::string& file, const std::string& section,
                                const std::string& reason,
                                const std::string& judge_id) {
  WriteJson(file, section, json{{"skipped", true}, {"reason", reason}}, judge_id);
}

void ReportWriter::WriteCsv(const std::string& file,
                            const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows,
                            const std::string& judge_id) {
  const std::string& judge = judge_id.empty() ? context_.judge_id : judge_id;
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& fields, const std::string& a,
                  const std::string& b) {
    for (const auto& f : fields) out << CsvEscape(f) << ',';
    out << CsvEscape(a) << ',' << CsvEscape(b) << '\n';
  };
  line(header, "config_hash", "judge_id");
  for (const auto& row : rows) line(row, context_.config_hash, judge);
  io::WriteFileAtomic(directory_ / file, out.str());
}

void ReportWriter::WriteLeaderboard(
    const std::vector<LeaderboardEntry>& entries,
    const std::vector<metrics::ModelAggregate>& aggregates) {
  json rows = json::array();
  for (const auto& e : entries) rows.push_back(ToJson(e));
  json aggs = json::array();
  for (const auto& a : aggregates) aggs.push_back(ToJson(a));
  WriteJson("leaderboard.json", "leaderboard",
            json{{"bleu_variant", context_.bleu_variant},
                 {"threshold", context_.threshold},
                 {"entries", rows},
                 {"aggregates", aggs}});

  std::vector<std::vector<std::string>> csv;
  for (const auto& e : entries) {
    csv.push_back({e.model_id, FormatDouble(e.pink), FormatDouble(e.bleu),
                   FormatDouble(e.norm_edit_distance), FormatDouble(e.oc_rate),
                   FormatDouble(e.raw_score), std::to_string(e.rank_pink),
                   std::to_string(e.rank_bleu), std::to_string(e.rank_raw)});
  }
  WriteCsv("leaderboard.csv",
           {"model_id", "pink", "bleu", "norm_edit_distance", "oc_rate", "raw_score",
            "rank_pink", "rank_bleu", "rank_raw"},
           csv);
}

void ReportWriter::WriteHeatmap(const RubricHeatmap& heatmap) {
  std::vector<std::string> header{"model_id"};
  header.insert(header.end(), heatmap.component_names.begin(),
                heatmap.component_names.end());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < heatmap.models.size(); ++i) {
    std::vector<std::string> row{heatmap.models[i]};
    for (long long c : heatmap.counts[i]) row.push_back(std::to_string(c));
    rows.push_back(std::move(row));
  }
  WriteCsv("heatmap.csv", header, rows);
}

void ReportWriter::WriteDeltaHistogram(const DeltaHistogram& histogram) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [model, row] : histogram.models) {
    for (std::size_t b = 0; b < row.counts.size(); ++b) {
      rows.push_back({model, std::to_string(histogram.edges[b]),
                      std::to_string(histogram.edges[b + 1]),
                      std::to_string(row.counts[b])});
    }
  }
  WriteCsv("delta_hist.csv", {"model_id", "bin_low", "bin_high", "count"}, rows);
}

void ReportWriter::WriteScatter(const std::vector<ScatterPoint>& points) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    rows.push_back({p.model_id, p.sample_id, std::to_string(p.run_index),
                    std::to_string(p.oracle_total), std::to_string(p.pre),
                    std::to_string(p.post), std::to_string(p.events)});
  }
  WriteCsv("scatter.csv",
           {"model_id", "sample_id", "run_index", "oracle_total", "pre_penalty",
            "post_penalty", "events"},
           rows);
}

void ReportWriter::WriteManifest() {
  std::set<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name != "manifest.json" && name[0] != '.')
      files.insert(name);
  }
  WriteJson("manifest.json", "manifest",
            json{{"corpus_hash", context_.corpus_hash},
                 {"judge_ids", context_.judge_ids},
                 {"bleu_variant", context_.bleu_variant},
                 {"threshold", context_.threshold},
                 {"files", files}});
}

namespace {

std::optional<json> LoadSection(const std::filesystem::path& dir,
                                const std::string& file) {
  const auto path = dir / file;
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return json::parse(io::ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
}

std::string Num(const json& v, int digits = 3) {
  if (v.is_null()) return "n/a";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v.get<double>();
  return out.str();
}

std::string SignedNum(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << (v > 0 ? "+" : "") << v;
  return out.str();
}

bool Skipped(const json& j, std::ostringstream& md) {
  if (!j.value("skipped", false)) return false;
  md << "_Skipped: " << j.value("reason", std::string()) << "_\n\n";
  return true;
}

}  // namespace

std::string RenderMarkdown(const std::filesystem::path& report_dir) {
  std::ostringstream md;
  md << "# Evaluation report\n\n";
  if (auto m = LoadSection(report_dir, "manifest.json")) {
    md << "config `" << (*m)["config_hash"].get<std::string>().substr(0, 12)
       << "`, corpus `" << (*m)["corpus_hash"].get<std::string>().substr(0, 12)
       << "`, threshold " << (*m)["threshold"] << ", "
       << (*m)["bleu_variant"].get<std::string>() << "\n\n";
  }
  if (auto lb = LoadSection(report_dir, "leaderboard.json")) {
    md << "## Leaderboard (judge " << (*lb)["judge_id"].get<std::string>() << ")\n\n"
       << "| # | Model | PINK | BLEU | NED | OC rate | Raw | BLEU rank | Raw rank |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& e : (*lb)["entries"]) {
      md << "| " << e["rank_pink"] << " | " << e["model_id"].get<std::string>()
         << " | " << Num(e["pink"]) << " | " << Num(e["bleu"]) << " | "
         << Num(e["norm_edit_distance"]) << " | " << Num(e["oc_rate"]) << " | "
         << Num(e["raw_score"], 1) << " | " << e["rank_bleu"] << " | "
         << e["rank_raw"] << " |\n";
    }
    md << "\n";
  }
  if (auto rd = LoadSection(report_dir, "rank_deltas.json")) {
    md << "## Rank movement, BLEU to PINK\n\n";
    if (!Skipped(*rd, md)) {
      const auto& c = (*rd)["bleu_vs_pink"];
      md << "Kendall tau-b: " << Num(c["tau"]) << "\n\n| Model | BLEU rank | PINK rank | Move |\n|---|---|---|---|\n";
      for (const auto& d : c["deltas"]) {
        md << "| " << d["model_id"].get<std::string>() << " | " << d["rank_a"]
           << " | " << d["rank_b"] << " | "
           << SignedNum(d["movement"].get<int>(), 0) << " |\n";
      }
      md << "\n";
    }
  }
  if (auto sw = LoadSection(report_dir, "sweep.json")) {
    md << "## Threshold sweep\n\n";
    if (!Skipped(*sw, md)) {
      md << "| T | tau vs T=" << (*sw)["baseline_threshold"]
         << " | minor | major | ranking |\n|---|---|---|---|---|\n";
      for (const auto& p : (*sw)["points"]) {
        std::string order;
        for (const auto& m : p["ranking"])
          order += (order.empty() ? "" : " > ") + m.get<std::string>();
        md << "| " << p["threshold"] << " | " << Num(p["tau_vs_baseline"]) << " | "
           << p["minor_events"] << " | " << p["major_events"] << " | " << order
           << " |\n";
      }
      md << "\n";
    }
  }
  if (auto cg = LoadSection(report_dir, "cross_grader.json")) {
    md << "## Cross-grader consistency\n\n";
    if (!Skipped(*cg, md)) {
      md << (*cg)["judge_a"].get<std::string>() << " vs "
         << (*cg)["judge_b"].get<std::string>() << ", " << (*cg)["aligned"]
         << " aligned records\n\n| Stage | Pearson r | QWK / tau |\n|---|---|---|\n"
         << "| Sample grading | " << Num((*cg)["sample_grading"]["pearson"]) << " | "
         << Num((*cg)["sample_grading"]["qwk"]) << " |\n"
         << "| Sample penalized | " << Num((*cg)["sample_penalized"]["pearson"])
         << " | " << Num((*cg)["sample_penalized"]["qwk"]) << " |\n"
         << "| Model PINK | " << Num((*cg)["model_pink"]["pearson"]) << " | |\n"
         << "| Ranking | | " << Num((*cg)["rank"]["kendall_tau_b"]) << " |\n\n";
    }
  }
  if (auto rs = LoadSection(report_dir, "run_stability.json")) {
    md << "## Run-to-run stability\n\n";
    if (!Skipped(*rs, md)) {
      md << "| Model | Runs | CV (%) | Mean QWK |\n|---|---|---|---|\n";
      for (const auto& s : (*rs)["models"]) {
        md << "| " << s["model_id"].get<std::string>() << " | "
           << s["pink_per_run"].size() << " | " << Num(s["cv_percent"], 4) << " | "
           << Num(s["mean_pairwise_qwk"]) << " |\n";
      }
      md << "\n";
    }
  }
  if (auto ps = LoadSection(report_dir, "prompt_sensitivity.json")) {
    md << "## Rubric prompt sensitivity\n\n";
    if (!Skipped(*ps, md)) {
      const auto& variants = (*ps)["variants"];
      md << "| Model |";
      for (const auto& v : variants) md << " " << v.get<std::string>() << " |";
      md << " SD |\n|---|";
      for (std::size_t i = 0; i <= variants.size(); ++i) md << "---|";
      md << "\n";
      for (const auto& [model, row] : (*ps)["models"].items()) {
        md << "| " << model << " |";
        for (const auto& v : variants)
          md << " " << Num(row["pink"][v.get<std::string>()]) << " |";
        md << " " << Num(row["stddev"], 4) << " |\n";
      }
      md << "\n";
    }
  }
  if (auto mi = LoadSection(report_dir, "mitigation.json")) {
    md << "## Prompt mitigation\n\n";
    if (!Skipped(*mi, md)) {
      md << "| Model | PINK org | PINK mit | dPINK | OC org (%) | OC mit (%) | dOC (pp) |\n"
         << "|---|---|---|---|---|---|---|\n";
      auto row = [&](const json& r) {
        md << "| " << r["model_id"].get<std::string>() << " | "
           << Num(r["pink_original"]) << " | " << Num(r["pink_mitigated"]) << " | "
           << SignedNum(r["delta_pink"].get<double>(), 3) << " | "
           << Num(r["oc_original_pct"], 1) << " | " << Num(r["oc_mitigated_pct"], 1)
           << " | " << SignedNum(r["delta_oc_pp"].get<double>(), 1) << " |\n";
      };
      for (const auto& r : (*mi)["rows"]) row(r);
      row((*mi)["average"]);
      md << "\n";
    }
  }
  if (auto ha = LoadSection(report_dir, "human_agreement.json")) {
    md << "## Human agreement\n\n";
    if (!Skipped(*ha, md)) {
      md << "Mean weighted kappa " << Num((*ha)["mean_kappa"])
         << ", Pearson (mean human vs auto/10) "
         << Num((*ha)["pearson_mean_human_vs_auto"]) << "\n\n";
    }
  }
  if (auto pr = LoadSection(report_dir, "preferences.json")) {
    md << "## Metric preference\n\n";
    if (!Skipped(*pr, md)) {
      const auto& o = (*pr)["overall"];
      md << "PINK " << Num(o["pct_PINK"], 1) << "%, BLEU " << Num(o["pct_BLEU"], 1)
         << "%, Neither " << Num(o["pct_Neither"], 1) << "% of " << o["total"]
         << " votes\n\n";
    }
  }
  if (auto dc = LoadSection(report_dir, "discrepancies.json")) {
    md << "## Discrepancy classes\n\n";
    if (!Skipped(*dc, md)) {
      const json& b = dc->contains("overall") ? (*dc)["overall"] : *dc;
      md << b["discrepant"] << " of " << b["total_pairs"]
         << " pairs differ from the ground truth\n\n| Class | Count | % |\n|---|---|---|\n";
      for (const auto& [name, count] : b["counts"].items()) {
        md << "| " << name << " | " << count << " | " << Num(b["percent"][name], 1)
           << " |\n";
      }
      md << "| formatting involved | | " << Num(b["formatting_involved_percent"], 1)
         << " |\n\n";
    }
  }
  return md.str();
}

}  // namespace pink::analysis
