#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "orgscada/common.hpp"
#include "orgscada/kernel/agent_id.hpp"
#include "orgscada/wire/envelope.hpp"

namespace orgscada {

enum class ServiceType { ProcessAccess, Supervision };

std::string_view to_string(ServiceType t);

// Yellow-page entry. service_name follows "O<i>.PLC<j>".
struct ServiceDescriptor {
  std::string service_name;
  ServiceType service_type = ServiceType::ProcessAccess;
  AgentId provider;
  std::string home_org;
  Time registered_at{0};

  bool operator==(const ServiceDescriptor&) const = default;
};

Json to_json(const ServiceDescriptor& d);
ServiceDescriptor descriptor_from_json(const Json& j);

struct ServiceName {
  int org_index = 0;
  int plc_index = 0;

  std::string owner_org() const { return "O" + std::to_string(org_index); }
  std::string str() const { return owner_org() + ".PLC" + std::to_string(plc_index); }
};

// nullopt unless the name is "O<i>.PLC<j>" with i, j >= 1.
std::optional<ServiceName> parse_service_name(std::string_view name);

// Exact match, or prefix match when the pattern ends with '*'.
bool pattern_matches(std::string_view pattern, std::string_view service_name);

using SubscriptionId = std::uint64_t;

enum class DfEvent { Registered, Deregistered };

struct DfNotification {
  AgentId subscriber;
  SubscriptionId subscription = 0;
  ServiceDescriptor entry;
  DfEvent event = DfEvent::Registered;
};

// Registry state of one organization's DF. Operations return the
// notifications they owe to subscribers; the node turns those into messages.
class DirectoryFacilitator {
 public:
  std::vector<DfNotification> register_entry(ServiceDescriptor entry);
  std::vector<DfNotification> deregister(std::string_view service_name, const AgentId& provider);
  std::vector<DfNotification> deregister_provider(const AgentId& provider);

  // Ordered by registered_at ascending (ties in registration order).
  std::vector<ServiceDescriptor> search(std::string_view pattern) const;
  std::vector<ServiceDescriptor> entries() const { return search("*"); }
  bool contains(std::string_view service_name, const AgentId& provider) const;

  std::pair<SubscriptionId, std::vector<DfNotification>> subscribe(std::string pattern,
                                                                   const AgentId& subscriber);
  void unsubscribe(SubscriptionId id);
  void drop_subscriber(const AgentId& subscriber);
  std::size_t subscription_count() const { return subscriptions_.size(); }

 private:
  struct Entry {
    std::uint64_t serial;
    ServiceDescriptor descriptor;
  };
  struct Subscription {
    SubscriptionId id;
    std::string pattern;
    AgentId subscriber;
  };

  std::vector<DfNotification> notify(const Entry& entry, DfEvent event);

  std::vector<Entry> entries_;
  std::vector<Subscription> subscriptions_;
  // (subscriber, entry serial, event) already delivered; dedups overlapping subscriptions.
  std::set<std::tuple<AgentId, std::uint64_t, int>> delivered_;
  std::uint64_t next_serial_ = 1;
  SubscriptionId next_subscription_ = 1;
};

}  // namespace orgscada
