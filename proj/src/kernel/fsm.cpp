#include "orgscada/kernel/fsm.hpp"

namespace orgscada {

Fsm::Fsm(std::string initial, std::set<std::string> terminal)
    : terminal_(std::move(terminal)), state_(std::move(initial)) {
  states_.insert(state_);
  states_.insert(terminal_.begin(), terminal_.end());
}

Fsm& Fsm::add(const std::string& from, const std::string& event, const std::string& to) {
  if (terminal_.contains(from)) {
    throw Error(ErrorCode::InvalidArgument, "terminal state '" + from + "' cannot have exits");
  }
  states_.insert(from);
  states_.insert(to);
  transitions_[{from, event}] = to;
  return *this;
}

bool Fsm::can_fire(const std::string& event) const {
  return transitions_.contains({state_, event});
}

void Fsm::fire(const std::string& event) {
  const auto it = transitions_.find({state_, event});
  if (it == transitions_.end()) {
    throw Error(ErrorCode::InvalidArgument, "no transition from '" + state_ + "' on '" + event + "'");
  }
  state_ = it->second;
}

}  // namespace orgscada
