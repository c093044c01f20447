#pragma once

#include <memory>
#include <string>
#include <vector>

#include "orgscada/kernel/scheduler.hpp"
#include "orgscada/org/organization.hpp"
#include "orgscada/wire/sim_network.hpp"

namespace orgscada {

// N organizations on one simulated clock and network.
class World {
 public:
  World(std::vector<OrganizationConfig> orgs, NetConfig net);
  ~World();

  void boot();

  SimScheduler& scheduler() { return scheduler_; }
  SimNetwork& net() { return net_; }
  Time now() const { return scheduler_.now(); }

  Organization& org(const std::string& name);
  const Organization& org(const std::string& name) const;
  std::vector<Organization*> orgs();
  std::vector<const Organization*> orgs() const;
  bool has_org(const std::string& name) const;

  void run_until(Time t) { scheduler_.run_until(t); }
  // No envelope queued in any node or on the network.
  bool quiescent() const;
  // Runs instant by instant up to t, calling `at_quiescence` after every
  // instant that leaves the world quiescent.
  void run_until(Time t, const std::function<void()>& at_quiescence);

 private:
  SimScheduler scheduler_;
  SimNetwork net_;
  std::vector<std::unique_ptr<Organization>> orgs_;
};

}  // namespace orgscada
