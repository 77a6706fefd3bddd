#include "behsynth/reports.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/core.h>

namespace behsynth {

namespace {

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json cdf_json(const std::vector<CdfPoint>& points) {
  Json out = Json::array();
  for (const auto& p : points) out.push_back(Json::array({p.value, p.cumulative}));
  return out;
}

Json metrics_json(double pre, double rec, double n3, double n5) {
  return Json{{"precision", number(pre)}, {"recall", number(rec)}, {"ndcg3", number(n3)},
              {"ndcg5", number(n5)}};
}

double as_double(const Json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string cell(const Json& j, int decimals = 4) {
  const double v = as_double(j);
  if (std::isnan(v)) return "n/a";
  return fmt::format("{:.{}f}", v, decimals);
}

std::string percent(const Json& j) {
  const double v = as_double(j);
  if (std::isnan(v)) return "n/a";
  return fmt::format("{:+.1f}%", 100.0 * v);
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  [[nodiscard]] std::string str() const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      if (width.size() < r.size()) width.resize(r.size(), 0);
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (std::size_t ri = 0; ri < rows_.size(); ++ri) {
      const auto& r = rows_[ri];
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i > 0) line += "  ";
        line += i == 0 ? fmt::format("{:<{}}", r[i], width[i]) : fmt::format("{:>{}}", r[i], width[i]);
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
      if (ri == 0) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i > 0 ? 2 : 0);
        out += std::string(total, '-') + "\n";
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

// Value at cumulative share >= q for q = 0.1, ..., 1.0.
std::string decile_table(const Json& cdf, std::string_view value_name) {
  Table t({"CDF", std::string(value_name)});
  if (!cdf.is_array() || cdf.empty()) return t.str();
  for (int d = 1; d <= 10; ++d) {
    const double q = d / 10.0;
    const Json* hit = &cdf.back()[0];
    for (const auto& p : cdf) {
      if (p[1].get<double>() >= q - 1e-12) {
        hit = &p[0];
        break;
      }
    }
    t.add({fmt::format("{:.1f}", q), cell(*hit)});
  }
  return t.str();
}

std::string validation_table(const Json& b) {
  std::string out = fmt::format("dataset: {}\nusers: {}\nevents: {}\nvocabulary: {}\nstatus: {}\n",
                                b.at("dataset").get<std::string>(), b.at("users").get<std::size_t>(),
                                b.at("events").get<std::size_t>(),
                                b.at("vocab_inferred").get<bool>() ? "inferred" : "sidecar",
                                b.at("valid").get<bool>() ? "valid" : "INVALID");
  for (const auto& d : b.at("diagnostics")) out += "  note: " + d.get<std::string>() + "\n";
  for (const auto& p : b.at("problems")) out += "  problem: " + p.get<std::string>() + "\n";
  return out;
}

std::string generation_table(const Json& b) {
  Table t({"Run", "Users", "Pass@1", "Failed", "Attempts", "Events", "Output"});
  for (const auto& r : b.at("runs")) {
    t.add({std::to_string(r.at("run").get<int>()), std::to_string(r.at("users").get<std::size_t>()),
           cell(r.at("pass1")), std::to_string(r.at("failed_users").get<std::size_t>()),
           std::to_string(r.at("total_attempts").get<std::size_t>()),
           std::to_string(r.at("synthetic_events").get<std::size_t>()),
           r.at("output").get<std::string>()});
  }
  return fmt::format("backend: {}\n", b.at("backend").get<std::string>()) + t.str();
}

std::string fidelity_table(const Json& b) {
  Table t({"", "KS_P", "BLEU", "BD", "JSD", "Pass@1"});
  t.add({"synthetic", cell(b.at("ks_p")), cell(b.at("bleu")), cell(b.at("bd")), cell(b.at("jsd")),
         cell(b.at("pass1"))});
  return t.str() +
         fmt::format("timeslot KS D={} p={}; weekday KS D={} p={}\n", cell(b.at("ks_statistic")),
                     cell(b.at("ks_p")), cell(b.at("weekday_ks_statistic")), cell(b.at("weekday_ks_p"))) +
         fmt::format("BLEU pairs: {}; events real={} synthetic={}\n",
                     b.at("bleu_pairs").get<std::size_t>(), b.at("real_events").get<std::size_t>(),
                     b.at("synthetic_events").get<std::size_t>());
}

std::string privacy_table(const Json& b) {
  const auto& u = b.at("uniqueness");
  std::string out = "Uniqueness (overlap ratio against real sequences)\n";
  Table top({"k", "mean top-k overlap"});
  for (const auto& [k, v] : u.at("mean_top_k").items()) top.add({k, cell(v)});
  out += top.str();
  out += fmt::format("share of generated sequences with top-1 < {}: {}\n", cell(u.at("threshold"), 2),
                     cell(u.at("fraction_below")));
  out += decile_table(u.at("top1_cdf"), "top-1 overlap");

  out += fmt::format("\nMembership inference ({} members, {} nonmembers, {} runs)\n",
                     b.at("mia_members").get<std::size_t>(), b.at("mia_nonmembers").get<std::size_t>(),
                     b.at("runs").get<int>());
  Table mia({"Classifier", "Success", "Train", "Test"});
  for (const auto& m : b.at("mia")) {
    mia.add({m.at("classifier").get<std::string>(), cell(m.at("success_rate")),
             std::to_string(m.at("train_size").get<std::size_t>()),
             std::to_string(m.at("test_size").get<std::size_t>())});
  }
  out += mia.str();

  const auto& e = b.at("epsilon");
  out += fmt::format("\nPrivacy budget (delta={})\n", e.at("delta").get<double>());
  out += decile_table(e.at("cdf"), "epsilon");
  out += fmt::format("epsilon at CDF 0.9: {} ({})\n", cell(e.at("epsilon_at_cdf_90")),
                     e.at("below_4_at_cdf_90").get<bool>() ? "below 4" : "not below 4");
  return out;
}

std::string scenario_table(const Json& b) {
  Table t({"Arm", "Pre", "Rec", "N@3", "N@5"});
  for (const auto& a : b.at("arms")) {
    const auto& m = a.at("metrics");
    t.add({a.at("name").get<std::string>(), cell(m.at("precision")), cell(m.at("recall")),
           cell(m.at("ndcg3")), cell(m.at("ndcg5"))});
  }
  const auto& imp = b.at("improvement");
  t.add({"improvement", percent(imp.at("precision")), percent(imp.at("recall")),
         percent(imp.at("ndcg3")), percent(imp.at("ndcg5"))});
  if (b.contains("replacement")) {
    const auto& rep = b.at("replacement");
    t.add({"replacement", percent(rep.at("precision")), percent(rep.at("recall")),
           percent(rep.at("ndcg3")), percent(rep.at("ndcg5"))});
  }
  return fmt::format("scenario: {} ({} individual users)\n", b.at("scenario").get<std::string>(),
                     b.at("users").get<std::size_t>()) +
         t.str();
}

std::string title(std::string_view kind) {
  if (kind == "validation") return "Dataset validation";
  if (kind == "generation") return "Generation";
  if (kind == "fidelity") return "Fidelity";
  if (kind == "privacy") return "Privacy";
  if (kind == "scenario") return "Downstream scenario";
  return std::string(kind);
}

}  // namespace

Json to_json(const ValidationSummary& v) {
  return Json{{"dataset", v.dataset},   {"users", v.users},
              {"events", v.events},     {"vocab_inferred", v.vocab_inferred},
              {"valid", v.valid()},     {"diagnostics", v.diagnostics},
              {"problems", v.problems}};
}

Json to_json(const GenerationSummary& g) {
  Json runs = Json::array();
  for (const auto& r : g.runs) {
    runs.push_back(Json{{"run", r.run},
                        {"pass1", number(r.pass1)},
                        {"users", r.users},
                        {"failed_users", r.failed_users},
                        {"total_attempts", r.total_attempts},
                        {"synthetic_events", r.synthetic_events},
                        {"output", r.output}});
  }
  return Json{{"backend", g.backend}, {"runs", runs}};
}

Json to_json(const FidelityReport& f) {
  return Json{{"ks_statistic", number(f.ks_statistic)},
              {"ks_p", number(f.ks_p)},
              {"weekday_ks_statistic", number(f.weekday_ks_statistic)},
              {"weekday_ks_p", number(f.weekday_ks_p)},
              {"bleu", number(f.bleu)},
              {"bd", number(f.bd)},
              {"jsd", number(f.jsd)},
              {"pass1", number(f.pass1)},
              {"bleu_pairs", f.bleu_pairs},
              {"real_events", f.real_events},
              {"synthetic_events", f.synthetic_events}};
}

Json to_json(const PrivacyReport& p) {
  Json mean_top = Json::object();
  for (int k : p.uniqueness.k_list) mean_top[std::to_string(k)] = number(p.uniqueness.mean_top_k(k));
  Json profiles = Json::array();
  for (const auto& pr : p.uniqueness.profiles) {
    profiles.push_back(Json{{"user_id", pr.gen_user_id}, {"top_k", pr.top_k_ratios}});
  }
  Json mia = Json::array();
  for (const auto& m : p.mia) {
    mia.push_back(Json{{"classifier", std::string(to_string(m.classifier))},
                       {"success_rate", number(m.success_rate)},
                       {"split_seed", m.split_seed},
                       {"train_size", m.train_size},
                       {"test_size", m.test_size}});
  }
  Json per_user = Json::object();
  for (const auto& [user, eps] : p.epsilon.per_user_epsilon) per_user[user] = number(eps);
  return Json{
      {"uniqueness",
       Json{{"k_list", p.uniqueness.k_list},
            {"threshold", p.uniqueness.threshold},
            {"fraction_below", number(p.uniqueness.fraction_below)},
            {"mean_top_k", mean_top},
            {"top1_cdf", cdf_json(p.uniqueness.top1_cdf)},
            {"profiles", profiles}}},
      {"mia", mia},
      {"mia_members", p.mia_members},
      {"mia_nonmembers", p.mia_nonmembers},
      {"runs", p.runs},
      {"epsilon", Json{{"delta", p.epsilon.delta},
                       {"epsilon_at_cdf_90", number(p.epsilon.epsilon_at_cdf_90)},
                       {"below_4_at_cdf_90", p.epsilon.below_4_at_cdf_90},
                       {"cdf", cdf_json(p.epsilon.cdf_points)},
                       {"per_user", per_user}}}};
}

Json to_json(const ScenarioReport& s) {
  Json arms = Json::array();
  for (const auto& [name, r] : s.arms) {
    arms.push_back(Json{{"name", name},
                        {"metrics", metrics_json(r.precision, r.recall, r.ndcg3, r.ndcg5)},
                        {"samples", r.samples}});
  }
  Json out{{"scenario", std::string(to_string(s.id))},
           {"users", s.users},
           {"arms", arms},
           {"improvement", metrics_json(s.improvement.precision, s.improvement.recall,
                                        s.improvement.ndcg3, s.improvement.ndcg5)}};
  if (s.replacement) {
    out["replacement"] = metrics_json(s.replacement->precision, s.replacement->recall,
                                      s.replacement->ndcg3, s.replacement->ndcg5);
  }
  return out;
}

std::string render_table(std::string_view kind, const Json& body) {
  try {
    if (kind == "validation") return validation_table(body);
    if (kind == "generation") return generation_table(body);
    if (kind == "fidelity") return fidelity_table(body);
    if (kind == "privacy") return privacy_table(body);
    if (kind == "scenario") return scenario_table(body);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed {} report: {}", kind, e.what()));
  }
  throw DataError(fmt::format("unknown report kind '{}'", kind));
}

std::string render_document(std::string_view kind, const Json& body) {
  const Json block{{"kind", std::string(kind)}, {"body", body}};
  return fmt::format("== {} ==\n\n{}\n{}\n{}\n{}\n", title(kind), render_table(kind, body), kJsonBegin,
                     block.dump(2), kJsonEnd);
}

Json extract_json_block(std::string_view document) {
  const auto begin = document.find(kJsonBegin);
  const auto end = document.rfind(kJsonEnd);
  if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) {
    throw DataError("report has no JSON block");
  }
  const auto start = begin + kJsonBegin.size();
  try {
    return Json::parse(document.substr(start, end - start));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("report JSON block is malformed: {}", e.what()));
  }
}

std::string render_summary(const std::vector<std::pair<std::string, Json>>& sections) {
  std::string text = "== Summary ==\n";
  Json list = Json::array();
  for (const auto& [kind, body] : sections) {
    text += fmt::format("\n-- {} --\n{}", title(kind), render_table(kind, body));
    list.push_back(Json{{"kind", kind}, {"body", body}});
  }
  const Json block{{"kind", "summary"}, {"sections", list}};
  return fmt::format("{}\n{}\n{}\n{}\n", text, kJsonBegin, block.dump(2), kJsonEnd);
}

}  // namespace behsynth
