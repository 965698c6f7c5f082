// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Ranking metrics over per-query candidate groups. Candidates are sorted by
// score descending with stable ties (original order wins), so every metric
// is deterministic; groups without positives are kept and contribute 0.

#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "ctrn/data.hpp"
#include "ctrn/error.hpp"

namespace ctrn {

struct Candidate {
  double score = 0.0;
  int label = 0;
  std::string doc_id;
};

struct RankingGroup {
  std::string query_id;
  std::vector<Candidate> candidates;  // original order retained
};

// Candidate indices sorted by score descending, stable.
inline std::vector<std::size_t> ranked_order(const RankingGroup& group) {
  std::vector<std::size_t> order(group.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return group.candidates[a].score > group.candidates[b].score;
  });
  return order;
}

inline void require_groups(const std::vector<RankingGroup>& groups) {
  if (groups.empty()) throw MetricError("no ranking groups");
  for (const RankingGroup& g : groups) {
    if (g.candidates.empty()) {
      throw MetricError("empty candidate list for query " + g.query_id);
    }
    for (const Candidate& c : g.candidates) {
      if (c.label != 0 && c.label != 1) {
        throw MetricError("non-binary label in query " + g.query_id);
      }
    }
  }
}

inline double p_at_1(const std::vector<RankingGroup>& groups) {
  require_groups(groups);
  double hits = 0.0;
  for (const RankingGroup& g : groups) {
    const auto order = ranked_order(g);
    if (g.candidates[order[0]].label == 1) hits += 1.0;
  }
  return hits / static_cast<double>(groups.size());
}

inline double mrr(const std::vector<RankingGroup>& groups) {
  require_groups(groups);
  double total = 0.0;
  for (const RankingGroup& g : groups) {
    const auto order = ranked_order(g);
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (g.candidates[order[r]].label == 1) {
        total += 1.0 / static_cast<double>(r + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(groups.size());
}

inline double mean_average_precision(const std::vector<RankingGroup>& groups) {
  require_groups(groups);
  double total = 0.0;
  for (const RankingGroup& g : groups) {
    const auto order = ranked_order(g);
    double ap = 0.0;
    std::size_t positives = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (g.candidates[order[r]].label == 1) {
        ++positives;
        ap += static_cast<double>(positives) / static_cast<double>(r + 1);
      }
    }
    if (positives > 0) total += ap / static_cast<double>(positives);
  }
  return total / static_cast<double>(groups.size());
}

// Groups instances by query_id in first-seen order; doc ids default to the
// candidate's 1-based position within its group.
inline std::vector<RankingGroup> group_candidates(
    const std::vector<QAInstance>& instances,
    const std::vector<double>& scores) {
  if (instances.size() != scores.size()) {
    throw MetricError("instance/score count mismatch");
  }
  std::vector<RankingGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto [it, inserted] = index.emplace(instances[i].query_id, groups.size());
    if (inserted) groups.push_back({instances[i].query_id, {}});
    RankingGroup& g = groups[it->second];
    Candidate c;
    c.score = scores[i];
    c.label = instances[i].label;
    c.doc_id = std::to_string(g.candidates.size() + 1);
    g.candidates.push_back(std::move(c));
  }
  return groups;
}

// TREC run format: `query_id Q0 doc_id rank score run_tag`, 6-decimal scores.
inline void write_trec_run(std::ostream& out,
                           const std::vector<RankingGroup>& groups,
                           const std::string& run_tag) {
  require_groups(groups);
  for (const RankingGroup& g : groups) {
    const auto order = ranked_order(g);
    for (std::size_t r = 0; r < order.size(); ++r) {
      const Candidate& c = g.candidates[order[r]];
      out << g.query_id << " Q0 " << c.doc_id << ' ' << (r + 1) << ' '
          << std::fixed << std::setprecision(6) << c.score << ' ' << run_tag
          << '\n';
    }
  }
}

}  // namespace ctrn
