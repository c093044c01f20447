#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orgscada/common.hpp"
#include "orgscada/kernel/fsm.hpp"

namespace orgscada {

// Initiator-side state of one Contract Net negotiation. Pure bookkeeping: the
// caller sends the messages this object decides on.
//
// Award rule: lowest load wins, ties go to the lexicographically smallest org.
// A failed winner is replaced once by the next-best proposer, under the derived
// conversation id "<conversation_id>/reaward". Rejections are owed only once
// the negotiation is finished, so a re-award never contradicts an earlier one.
class ContractNet {
 public:
  enum class Phase { CfpSent, Awarding, Done, Failed };

  struct Award {
    std::string winner;
    std::string conversation_id;
  };

  ContractNet(std::string conversation_id, std::string service, std::set<std::string> responders,
              Time deadline);

  const std::string& conversation_id() const { return conversation_id_; }
  const std::string& service() const { return service_; }
  const std::set<std::string>& responders() const { return responders_; }
  const std::map<std::string, double>& proposals() const { return proposals_; }
  Time deadline() const { return deadline_; }
  Phase phase() const;
  std::optional<std::string> current_winner() const;
  int awards_made() const { return static_cast<int>(accepted_.size()); }

  // Replies from non-responders, duplicates and late replies are ignored.
  void on_propose(const std::string& org, double load);
  void on_refuse(const std::string& org);
  bool all_replied() const;

  // CfpSent -> Awarding (or Failed when nobody proposed).
  std::optional<Award> award();
  // Awarding -> Awarding with the next-best proposer once, then Failed.
  std::optional<Award> winner_failed();
  // Awarding -> Done. Returns the proposers that are owed REJECT_PROPOSAL.
  std::vector<std::string> complete();
  // Any live phase -> Failed. Returns the proposers owed REJECT_PROPOSAL,
  // also after winner_failed() gave up; rejects are handed out only once.
  std::vector<std::string> abort();

 private:
  std::vector<std::string> ranked() const;
  std::vector<std::string> unaccepted_proposers() const;

  std::string conversation_id_;
  std::string service_;
  std::set<std::string> responders_;
  std::set<std::string> replied_;
  std::map<std::string, double> proposals_;
  std::vector<std::string> accepted_;
  bool rejects_issued_ = false;
  Time deadline_;
  Fsm fsm_;
};

std::string_view to_string(ContractNet::Phase p);

// Splits PLCs over control agents so that no agent holds two or more PLCs
// above the least-loaded one. Order of PLCs is preserved within each group.
// Never returns more groups than PLCs (but at least one).
std::vector<std::vector<std::string>> balance_assignment(const std::vector<std::string>& plcs,
                                                         std::size_t agent_count);

}  // namespace orgscada
