#include "orgscada/harness/world.hpp"

namespace orgscada {

World::World(std::vector<OrganizationConfig> orgs, NetConfig net) : net_(scheduler_, std::move(net)) {
  for (auto& cfg : orgs) {
    if (has_org(cfg.org_name)) fail(ErrorCode::ConfigInvalid, "duplicate organization " + cfg.org_name);
    auto org = std::make_unique<Organization>(std::move(cfg), scheduler_);
    net_.attach(org->node());
    orgs_.push_back(std::move(org));
  }
}

World::~World() {
  for (auto& o : orgs_) net_.detach(o->name());
}

void World::boot() {
  for (auto& o : orgs_) o->boot();
}

Organization& World::org(const std::string& name) {
  for (auto& o : orgs_) {
    if (o->name() == name) return *o;
  }
  fail(ErrorCode::NotFound, "organization " + name);
}

const Organization& World::org(const std::string& name) const {
  for (const auto& o : orgs_) {
    if (o->name() == name) return *o;
  }
  fail(ErrorCode::NotFound, "organization " + name);
}

bool World::has_org(const std::string& name) const {
  for (const auto& o : orgs_) {
    if (o->name() == name) return true;
  }
  return false;
}

std::vector<Organization*> World::orgs() {
  std::vector<Organization*> out;
  for (auto& o : orgs_) out.push_back(o.get());
  return out;
}

std::vector<const Organization*> World::orgs() const {
  std::vector<const Organization*> out;
  for (const auto& o : orgs_) out.push_back(o.get());
  return out;
}

bool World::quiescent() const {
  if (net_.in_flight() != 0) return false;
  for (const auto& o : orgs_) {
    if (o->node().in_flight() != 0) return false;
  }
  return true;
}

void World::run_until(Time t, const std::function<void()>& at_quiescence) {
  while (!scheduler_.empty() && scheduler_.next_time() <= t) {
    scheduler_.run_next_instant();
    if (quiescent()) at_quiescence();
  }
  scheduler_.run_until(t);
}

}  // namespace orgscada
