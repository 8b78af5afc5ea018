#pragma once

#include <atomic>
#include <iosfwd>
#include <map>
#include <mutex>
#include <set>
#include <vector>

#include "stackfed/stacking.hpp"

namespace stackfed {

// In-process model database. Publishing is linearizable and may happen from
// several threads; after freeze() the registry is read-only.
class Registry {
 public:
  void publish(PublishedModel pm);
  void freeze();
  bool frozen() const { return frozen_.load(std::memory_order_acquire); }
  std::size_t size() const;

  // Every entry except the requester's own, ascending by owner.
  std::vector<PublishedModel> fetch_for(int requester) const;

 private:
  mutable std::mutex mu_;
  std::map<int, PublishedModel> entries_;
  std::atomic<bool> frozen_{false};
};

struct ContributionEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

// Weighted directed graph of reported contribution scores; self-loops carry
// self-importance.
class ContributionGraph {
 public:
  void record_report(int from, const ClientReport& report);

  // Edges sorted by (from, to), independent of recording order.
  std::vector<ContributionEdge> edges() const;
  const std::set<int>& reporters() const { return reporters_; }
  const std::set<int>& degenerate_reporters() const { return degenerate_; }

  // Normalized weighted in-degree, self-loops excluded. All zero when no
  // client received any weight.
  std::map<int, double> compute_importance() const;

  // `from,to,weight` with a header, self-loops included.
  void write_edge_list(std::ostream& out) const;

 private:
  std::map<std::pair<int, int>, double> weights_;
  std::set<int> nodes_;
  std::set<int> reporters_;
  std::set<int> degenerate_;
};

}  // namespace stackfed
