#include "stackfed/federation.hpp"

#include <cstdio>
#include <ostream>

#include "stackfed/error.hpp"

namespace stackfed {

void Registry::publish(PublishedModel pm) {
  std::lock_guard lock(mu_);
  if (frozen()) {
    throw Error(ErrorCode::kRegistryFrozen,
                "registry is frozen; client " + std::to_string(pm.owner) + " cannot publish");
  }
  const int owner = pm.owner;
  if (!entries_.emplace(owner, std::move(pm)).second) {
    throw Error(ErrorCode::kDuplicateEntry,
                "client " + std::to_string(owner) + " already published a model");
  }
}

void Registry::freeze() {
  std::lock_guard lock(mu_);
  frozen_.store(true, std::memory_order_release);
}

std::size_t Registry::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<PublishedModel> Registry::fetch_for(int requester) const {
  if (!frozen()) {
    throw Error(ErrorCode::kRegistryNotFrozen, "fetch before the registry was frozen");
  }
  std::vector<PublishedModel> out;
  for (const auto& [owner, pm] : entries_) {
    if (owner != requester) out.push_back(pm);
  }
  return out;
}

void ContributionGraph::record_report(int from, const ClientReport& report) {
  if (!reporters_.insert(from).second) {
    throw Error(ErrorCode::kDuplicateEntry,
                "client " + std::to_string(from) + " already reported this round");
  }
  nodes_.insert(from);
  weights_[{from, from}] = report.self_importance;
  for (const auto& [to, w] : report.contributions) {
    if (to == from) continue;
    nodes_.insert(to);
    weights_[{from, to}] = w;
  }
  if (report.degenerate) degenerate_.insert(from);
}

std::vector<ContributionEdge> ContributionGraph::edges() const {
  std::vector<ContributionEdge> out;
  out.reserve(weights_.size());
  for (const auto& [key, w] : weights_) out.push_back({key.first, key.second, w});
  return out;
}

std::map<int, double> ContributionGraph::compute_importance() const {
  std::map<int, double> raw;
  for (int n : nodes_) raw[n] = 0.0;
  for (const auto& [key, w] : weights_) {
    if (key.first != key.second) raw[key.second] += w;
  }
  double total = 0.0;
  for (const auto& [_, v] : raw) total += v;
  for (auto& [_, v] : raw) v = total > 0.0 ? v / total : 0.0;
  return raw;
}

void ContributionGraph::write_edge_list(std::ostream& out) const {
  out << "from,to,weight\n";
  char buf[64];
  for (const auto& e : edges()) {
    std::snprintf(buf, sizeof(buf), "%.9g", e.weight);
    out << e.from << ',' << e.to << ',' << buf << '\n';
  }
}

}  // namespace stackfed
