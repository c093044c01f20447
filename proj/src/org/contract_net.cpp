#include "orgscada/org/contract_net.hpp"

#include <algorithm>

namespace orgscada {

namespace {

constexpr const char* kCfpSent = "CfpSent";
constexpr const char* kAwarding = "Awarding";
constexpr const char* kDone = "Done";
constexpr const char* kFailed = "Failed";

}  // namespace

std::string_view to_string(ContractNet::Phase p) {
  switch (p) {
    case ContractNet::Phase::CfpSent:
      return kCfpSent;
    case ContractNet::Phase::Awarding:
      return kAwarding;
    case ContractNet::Phase::Done:
      return kDone;
    case ContractNet::Phase::Failed:
      return kFailed;
  }
  return "?";
}

ContractNet::ContractNet(std::string conversation_id, std::string service,
                         std::set<std::string> responders, Time deadline)
    : conversation_id_(std::move(conversation_id)),
      service_(std::move(service)),
      responders_(std::move(responders)),
      deadline_(deadline),
      fsm_(kCfpSent, {kDone, kFailed}) {
  fsm_.add(kCfpSent, "award", kAwarding)
      .add(kCfpSent, "no-proposals", kFailed)
      .add(kCfpSent, "abort", kFailed)
      .add(kAwarding, "reaward", kAwarding)
      .add(kAwarding, "complete", kDone)
      .add(kAwarding, "abort", kFailed);
}

ContractNet::Phase ContractNet::phase() const {
  const auto& s = fsm_.state();
  if (s == kCfpSent) return Phase::CfpSent;
  if (s == kAwarding) return Phase::Awarding;
  if (s == kDone) return Phase::Done;
  return Phase::Failed;
}

std::optional<std::string> ContractNet::current_winner() const {
  if (accepted_.empty() || phase() == Phase::Failed) return std::nullopt;
  return accepted_.back();
}

void ContractNet::on_propose(const std::string& org, double load) {
  if (phase() != Phase::CfpSent || !responders_.contains(org)) return;
  if (!replied_.insert(org).second) return;
  proposals_[org] = load;
}

void ContractNet::on_refuse(const std::string& org) {
  if (phase() != Phase::CfpSent || !responders_.contains(org)) return;
  replied_.insert(org);
}

bool ContractNet::all_replied() const { return replied_.size() == responders_.size(); }

std::vector<std::string> ContractNet::ranked() const {
  std::vector<std::string> orgs;
  for (const auto& [org, load] : proposals_) orgs.push_back(org);
  // proposals_ iterates in name order, so stable_sort breaks load ties lexicographically.
  std::stable_sort(orgs.begin(), orgs.end(), [&](const std::string& a, const std::string& b) {
    return proposals_.at(a) < proposals_.at(b);
  });
  return orgs;
}

std::optional<ContractNet::Award> ContractNet::award() {
  if (phase() != Phase::CfpSent) return std::nullopt;
  const auto order = ranked();
  if (order.empty()) {
    fsm_.fire("no-proposals");
    return std::nullopt;
  }
  fsm_.fire("award");
  accepted_.push_back(order.front());
  return Award{order.front(), conversation_id_};
}

std::optional<ContractNet::Award> ContractNet::winner_failed() {
  if (phase() != Phase::Awarding) return std::nullopt;
  if (accepted_.size() >= 2) {
    fsm_.fire("abort");
    return std::nullopt;
  }
  for (const auto& org : ranked()) {
    if (std::find(accepted_.begin(), accepted_.end(), org) != accepted_.end()) continue;
    fsm_.fire("reaward");
    accepted_.push_back(org);
    return Award{org, conversation_id_ + "/reaward"};
  }
  fsm_.fire("abort");
  return std::nullopt;
}

std::vector<std::string> ContractNet::unaccepted_proposers() const {
  std::vector<std::string> out;
  for (const auto& [org, load] : proposals_) {
    if (std::find(accepted_.begin(), accepted_.end(), org) == accepted_.end()) out.push_back(org);
  }
  return out;
}

std::vector<std::string> ContractNet::complete() {
  if (phase() != Phase::Awarding) return {};
  fsm_.fire("complete");
  rejects_issued_ = true;
  return unaccepted_proposers();
}

std::vector<std::string> ContractNet::abort() {
  if (!fsm_.halted()) fsm_.fire("abort");
  if (rejects_issued_) return {};
  rejects_issued_ = true;
  return unaccepted_proposers();
}

std::vector<std::vector<std::string>> balance_assignment(const std::vector<std::string>& plcs,
                                                         std::size_t agent_count) {
  if (agent_count == 0) fail(ErrorCode::InvalidArgument, "need at least one control agent");
  agent_count = std::min(agent_count, std::max<std::size_t>(plcs.size(), 1));
  std::vector<std::vector<std::string>> groups(agent_count);
  const std::size_t base = plcs.size() / agent_count;
  const std::size_t extra = plcs.size() % agent_count;
  std::size_t next = 0;
  for (std::size_t g = 0; g < agent_count; ++g) {
    const std::size_t take = base + (g < extra ? 1 : 0);
    for (std::size_t k = 0; k < take; ++k) groups[g].push_back(plcs[next++]);
  }
  return groups;
}

}  // namespace orgscada
