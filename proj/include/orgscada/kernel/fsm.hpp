#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>

#include "orgscada/common.hpp"

namespace orgscada {

// Finite-state behaviour skeleton: named states, (state, event) -> state
// transitions, one initial state and a set of terminal states.
class Fsm {
 public:
  Fsm(std::string initial, std::set<std::string> terminal);

  Fsm& add(const std::string& from, const std::string& event, const std::string& to);

  const std::string& state() const { return state_; }
  bool halted() const { return terminal_.contains(state_); }
  bool can_fire(const std::string& event) const;
  // Throws InvalidArgument for an undefined transition or when already halted.
  void fire(const std::string& event);

  const std::set<std::string>& states() const { return states_; }

 private:
  std::set<std::string> states_;
  std::set<std::string> terminal_;
  std::map<std::pair<std::string, std::string>, std::string> transitions_;
  std::string state_;
};

}  // namespace orgscada
