#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "bret/error.hpp"
#include "bret/csv.hpp"
#include "bret/retrieval/retrieval.hpp"

namespace bret {

std::vector<SeparationPoint> separation_curves(const ScoreTable& table, const DatasetStore& prior) {
  require_dim(table.normalized.size(), prior.size(), "score table");
  std::map<std::pair<std::uint64_t, std::string>, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& tr = prior[i];
    if (!tr.task_label) {
      throw DataError("separation curves need task labels; episode " +
                      std::to_string(tr.episode_id) + " is unlabeled");
    }
    auto& [sum, n] = acc[{tr.t, *tr.task_label}];
    sum += table.normalized[i];
    n += 1;
  }
  std::vector<SeparationPoint> out;
  out.reserve(acc.size());
  for (const auto& [key, v] : acc) {
    out.push_back({key.first, key.second, v.first / static_cast<double>(v.second), v.second});
  }
  return out;
}

RetrievalReport evaluate_retrieval(const RetrievalMask& mask, const ScoreTable& table,
                                   const DatasetStore& prior,
                                   const std::set<std::string>& relevant_labels) {
  require_dim(mask.selected.size(), prior.size(), "retrieval mask");
  RetrievalReport r;
  std::size_t relevant = 0, hit = 0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& label = prior[i].task_label;
    if (!label) {
      throw DataError("evaluate_retrieval: unlabeled transition in episode " +
                      std::to_string(prior[i].episode_id));
    }
    const bool is_relevant = relevant_labels.contains(*label);
    relevant += is_relevant;
    if (mask.selected[i]) {
      r.n_selected += 1;
      hit += is_relevant;
    }
  }
  r.fraction_selected = prior.empty() ? 0.0 : static_cast<double>(r.n_selected) / static_cast<double>(prior.size());
  r.precision = r.n_selected == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(r.n_selected);
  r.recall = relevant == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(relevant);
  if (table.normalized.size() == prior.size()) r.separation = separation_curves(table, prior);
  return r;
}

double selection_rate(const RetrievalMask& mask, const DatasetStore& prior,
                      const std::function<bool(const Transition&)>& filter) {
  require_dim(mask.selected.size(), prior.size(), "retrieval mask");
  std::size_t n = 0, sel = 0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (!filter(prior[i])) continue;
    n += 1;
    sel += mask.selected[i];
  }
  return n == 0 ? 0.0 : static_cast<double>(sel) / static_cast<double>(n);
}

double mean_score(const ScoreTable& table, const DatasetStore& prior,
                  const std::function<bool(const Transition&)>& filter) {
  require_dim(table.normalized.size(), prior.size(), "score table");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (!filter(prior[i])) continue;
    sum += table.normalized[i];
    n += 1;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

void write_score_csv(std::ostream& out, const ScoreTable& table, const RetrievalMask& mask,
                     const DatasetStore& prior) {
  require_dim(table.raw.size(), prior.size(), "score table");
  require_dim(table.normalized.size(), prior.size(), "normalized scores");
  require_dim(mask.selected.size(), prior.size(), "retrieval mask");
  out << "episode,t,raw_score,normalized_score,selected,task_label\n";
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& tr = prior[i];
    out << tr.episode_id << ',' << tr.t << ',' << format_real(table.raw[i]) << ','
        << format_real(table.normalized[i]) << ',' << int(mask.selected[i]) << ','
        << tr.task_label.value_or("") << '\n';
  }
}

std::vector<ScoreCsvRow> read_score_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "episode,t,raw_score,normalized_score,selected,task_label") {
    throw DataError("score CSV: unexpected header", 1);
  }
  std::vector<ScoreCsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (int i = 0; i < 6; ++i) {
      if (!std::getline(ss, f[i], ',') && i < 5) throw DataError("score CSV: too few columns", line_no);
    }
    try {
      rows.push_back({std::stoull(f[0]), std::stoull(f[1]), std::stod(f[2]), std::stod(f[3]),
                      f[4] == "1", f[5]});
    } catch (const std::exception&) {
      throw DataError("score CSV: bad number", line_no);
    }
  }
  return rows;
}

void write_separation_csv(std::ostream& out, const std::vector<SeparationPoint>& curves) {
  out << "timestep,label,mean_normalized_score,count\n";
  for (const auto& p : curves) {
    out << p.timestep << ',' << p.label << ',' << format_real(p.mean_normalized_score) << ','
        << p.count << '\n';
  }
}

}  // namespace bret
