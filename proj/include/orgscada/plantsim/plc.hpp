#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "orgscada/common.hpp"

namespace orgscada::plantsim {

struct VariableSpec {
  std::string name;
  std::string unit;
  double min = 0.0;
  double max = 1.0;
  double initial = 0.0;
  double deadband = 0.0;  // absolute
  bool writable = false;
  double step_fraction = 0.01;
};

struct PlcConfig {
  std::string plc_name;  // "O<i>.PLC<j>"
  std::string interface = "sim";
  std::vector<VariableSpec> variables;
};

enum class Quality { Good, Stale };

std::string_view to_string(Quality q);

struct Sample {
  std::string var;
  double value = 0.0;
  Time timestamp{0};
  Quality quality = Quality::Good;
};

using SubscriptionId = std::uint64_t;
using Sink = std::function<void(const Sample&)>;

// Throws ConfigInvalid when a variable breaks min < max, min <= initial <= max,
// deadband >= 0, or names repeat.
void validate(const PlcConfig& config);

// One simulated controller: a bounded random walk per variable on a seeded
// generator. Values stay inside [min, max] under any mix of ticks and writes.
class Plc {
 public:
  Plc(PlcConfig config, std::uint64_t seed, Duration poll_period, Time created_at = Time{0});

  const std::string& name() const { return config_.plc_name; }
  const PlcConfig& config() const { return config_; }
  std::vector<std::string> variable_names() const;

  // Advances every variable one step. Returns the variables whose value moved
  // more than their deadband since the last time they were reported here.
  std::vector<std::string> tick(Time now, Duration dt);

  // Stale when no tick happened within 3 poll periods.
  Sample read(std::string_view var, Time now) const;

  // Throws NotWritable / OutOfRange / UnknownVariable without changing anything.
  void validate_write(std::string_view var, double value) const;
  void write(std::string_view var, double value, Time now);

  SubscriptionId subscribe(std::string_view var, Sink sink);
  void unsubscribe(SubscriptionId id);
  std::size_t subscriber_count() const { return subscriptions_.size(); }

  Time last_tick() const { return last_tick_; }

 private:
  struct Variable {
    VariableSpec spec;
    double value;
    double reported;  // baseline for tick()'s changed set
    Time updated_at;
  };
  struct Subscription {
    std::string var;
    Sink sink;
    double baseline;
  };

  Variable& find(std::string_view var);
  const Variable& find(std::string_view var) const;
  double next_unit();

  PlcConfig config_;
  Duration poll_period_;
  std::mt19937_64 rng_;
  std::vector<Variable> variables_;
  std::map<SubscriptionId, Subscription> subscriptions_;
  SubscriptionId next_subscription_ = 1;
  Time last_tick_;
};

// Stable, platform-independent name hash used to derive per-PLC seeds.
std::uint64_t fnv1a(std::string_view text);

// Synthetic catalog: temperature / pressure / flow for one PLC.
PlcConfig synthetic_plc(const std::string& plc_name);

}  // namespace orgscada::plantsim
