#include "orgscada/kernel/directory.hpp"

#include <algorithm>
#include <charconv>

namespace orgscada {

std::string_view to_string(ServiceType t) {
  return t == ServiceType::ProcessAccess ? "ProcessAccess" : "Supervision";
}

Json to_json(const ServiceDescriptor& d) {
  return Json{{"service_name", d.service_name},
              {"service_type", std::string(to_string(d.service_type))},
              {"provider", d.provider.str()},
              {"home_org", d.home_org},
              {"registered_at", d.registered_at.count()}};
}

ServiceDescriptor descriptor_from_json(const Json& j) {
  try {
    ServiceDescriptor d;
    d.service_name = j.at("service_name").get<std::string>();
    const auto type = j.at("service_type").get<std::string>();
    if (type == "ProcessAccess") {
      d.service_type = ServiceType::ProcessAccess;
    } else if (type == "Supervision") {
      d.service_type = ServiceType::Supervision;
    } else {
      fail(ErrorCode::InvalidArgument, "service_type " + type);
    }
    d.provider = AgentId::parse(j.at("provider").get<std::string>());
    d.home_org = j.at("home_org").get<std::string>();
    d.registered_at = Time{j.at("registered_at").get<std::int64_t>()};
    return d;
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("descriptor: ") + e.what());
  }
}

namespace {

std::optional<int> parse_positive(std::string_view digits) {
  if (digits.empty() || digits.front() == '0') return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value < 1) return std::nullopt;
  return value;
}

}  // namespace

std::optional<ServiceName> parse_service_name(std::string_view name) {
  if (name.size() < 7 || name.front() != 'O') return std::nullopt;
  const auto dot = name.find(".PLC");
  if (dot == std::string_view::npos) return std::nullopt;
  const auto org = parse_positive(name.substr(1, dot - 1));
  const auto plc = parse_positive(name.substr(dot + 4));
  if (!org || !plc) return std::nullopt;
  return ServiceName{*org, *plc};
}

bool pattern_matches(std::string_view pattern, std::string_view service_name) {
  if (!pattern.empty() && pattern.back() == '*') {
    return service_name.starts_with(pattern.substr(0, pattern.size() - 1));
  }
  return pattern == service_name;
}

std::vector<DfNotification> DirectoryFacilitator::register_entry(ServiceDescriptor entry) {
  if (!parse_service_name(entry.service_name)) {
    fail(ErrorCode::InvalidArgument, "service name '" + entry.service_name + "'");
  }
  if (contains(entry.service_name, entry.provider)) {
    fail(ErrorCode::DuplicateEntry, entry.service_name + " by " + entry.provider.str());
  }
  entries_.push_back(Entry{next_serial_++, std::move(entry)});
  return notify(entries_.back(), DfEvent::Registered);
}

std::vector<DfNotification> DirectoryFacilitator::deregister(std::string_view service_name,
                                                             const AgentId& provider) {
  std::vector<DfNotification> out;
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
    return e.descriptor.service_name == service_name && e.descriptor.provider == provider;
  });
  if (it == entries_.end()) return out;
  const Entry removed = *it;
  entries_.erase(it);
  return notify(removed, DfEvent::Deregistered);
}

std::vector<DfNotification> DirectoryFacilitator::deregister_provider(const AgentId& provider) {
  std::vector<DfNotification> out;
  std::vector<Entry> removed;
  std::erase_if(entries_, [&](const Entry& e) {
    if (e.descriptor.provider != provider) return false;
    removed.push_back(e);
    return true;
  });
  for (const auto& e : removed) {
    auto n = notify(e, DfEvent::Deregistered);
    out.insert(out.end(), n.begin(), n.end());
  }
  return out;
}

std::vector<ServiceDescriptor> DirectoryFacilitator::search(std::string_view pattern) const {
  std::vector<ServiceDescriptor> out;
  for (const auto& e : entries_) {
    if (pattern_matches(pattern, e.descriptor.service_name)) out.push_back(e.descriptor);
  }
  // entries_ is kept in registration order and the clock is monotone, so
  // registered_at is already ascending; stable_sort guards clock ties.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.registered_at < b.registered_at;
  });
  return out;
}

bool DirectoryFacilitator::contains(std::string_view service_name, const AgentId& provider) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) {
    return e.descriptor.service_name == service_name && e.descriptor.provider == provider;
  });
}

std::pair<SubscriptionId, std::vector<DfNotification>> DirectoryFacilitator::subscribe(
    std::string pattern, const AgentId& subscriber) {
  const SubscriptionId id = next_subscription_++;
  subscriptions_.push_back(Subscription{id, std::move(pattern), subscriber});
  std::vector<DfNotification> out;
  const auto& sub = subscriptions_.back();
  for (const auto& e : entries_) {
    if (!pattern_matches(sub.pattern, e.descriptor.service_name)) continue;
    if (!delivered_.insert({subscriber, e.serial, static_cast<int>(DfEvent::Registered)}).second) {
      continue;
    }
    out.push_back(DfNotification{subscriber, id, e.descriptor, DfEvent::Registered});
  }
  return {id, std::move(out)};
}

void DirectoryFacilitator::unsubscribe(SubscriptionId id) {
  std::erase_if(subscriptions_, [&](const Subscription& s) { return s.id == id; });
}

void DirectoryFacilitator::drop_subscriber(const AgentId& subscriber) {
  std::erase_if(subscriptions_, [&](const Subscription& s) { return s.subscriber == subscriber; });
  std::erase_if(delivered_, [&](const auto& key) { return std::get<0>(key) == subscriber; });
}

std::vector<DfNotification> DirectoryFacilitator::notify(const Entry& entry, DfEvent event) {
  std::vector<DfNotification> out;
  for (const auto& sub : subscriptions_) {
    if (!pattern_matches(sub.pattern, entry.descriptor.service_name)) continue;
    if (!delivered_.insert({sub.subscriber, entry.serial, static_cast<int>(event)}).second) continue;
    out.push_back(DfNotification{sub.subscriber, sub.id, entry.descriptor, event});
  }
  if (event == DfEvent::Deregistered) {
    // The serial is retired for good; its dedup keys are no longer needed.
    std::erase_if(delivered_, [&](const auto& key) { return std::get<1>(key) == entry.serial; });
  }
  return out;
}

}  // namespace orgscada
