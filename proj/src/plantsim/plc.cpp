#include "orgscada/plantsim/plc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace orgscada::plantsim {

std::string_view to_string(Quality q) { return q == Quality::Good ? "Good" : "Stale"; }

void validate(const PlcConfig& config) {
  std::set<std::string> names;
  for (const auto& v : config.variables) {
    const std::string where = config.plc_name + "." + v.name;
    if (v.name.empty()) fail(ErrorCode::ConfigInvalid, config.plc_name + ": empty variable name");
    if (!names.insert(v.name).second) fail(ErrorCode::ConfigInvalid, where + " repeated");
    if (!(v.min < v.max)) fail(ErrorCode::ConfigInvalid, where + ": min must be < max");
    if (v.initial < v.min || v.initial > v.max) {
      fail(ErrorCode::ConfigInvalid, where + ": initial value outside [min, max]");
    }
    if (!(v.deadband >= 0.0)) fail(ErrorCode::ConfigInvalid, where + ": negative deadband");
    if (!(v.step_fraction >= 0.0)) fail(ErrorCode::ConfigInvalid, where + ": negative step");
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Plc::Plc(PlcConfig config, std::uint64_t seed, Duration poll_period, Time created_at)
    : config_(std::move(config)),
      poll_period_(poll_period),
      rng_(seed ^ fnv1a(config_.plc_name)),
      last_tick_(created_at) {
  validate(config_);
  for (const auto& spec : config_.variables) {
    variables_.push_back(Variable{spec, spec.initial, spec.initial, created_at});
  }
}

std::vector<std::string> Plc::variable_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) out.push_back(v.spec.name);
  return out;
}

// 53 high bits of one generator draw -> [0, 1). Unlike
// std::uniform_real_distribution this is identical on every standard library.
double Plc::next_unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

std::vector<std::string> Plc::tick(Time now, Duration dt) {
  if (dt <= Duration::zero()) fail(ErrorCode::InvalidArgument, "tick dt must be positive");
  last_tick_ = now;
  std::vector<std::string> changed;
  for (auto& v : variables_) {
    const double span = v.spec.max - v.spec.min;
    const double step = (2.0 * next_unit() - 1.0) * v.spec.step_fraction * span;
    v.value = std::clamp(v.value + step, v.spec.min, v.spec.max);
    v.updated_at = now;
    if (std::abs(v.value - v.reported) > v.spec.deadband) {
      v.reported = v.value;
      changed.push_back(v.spec.name);
    }
  }
  for (auto& [id, sub] : subscriptions_) {
    const Variable& v = find(sub.var);
    if (std::abs(v.value - sub.baseline) > v.spec.deadband) {
      sub.baseline = v.value;
      sub.sink(Sample{v.spec.name, v.value, now, Quality::Good});
    }
  }
  return changed;
}

Sample Plc::read(std::string_view var, Time now) const {
  const Variable& v = find(var);
  const bool stale = now - last_tick_ > 3 * poll_period_;
  return Sample{v.spec.name, v.value, v.updated_at, stale ? Quality::Stale : Quality::Good};
}

void Plc::validate_write(std::string_view var, double value) const {
  const Variable& v = find(var);
  if (!v.spec.writable) fail(ErrorCode::NotWritable, config_.plc_name + "." + v.spec.name);
  if (!(value >= v.spec.min && value <= v.spec.max)) {
    fail(ErrorCode::OutOfRange, config_.plc_name + "." + v.spec.name + " accepts [" +
                                    std::to_string(v.spec.min) + ", " + std::to_string(v.spec.max) +
                                    "]");
  }
}

void Plc::write(std::string_view var, double value, Time now) {
  validate_write(var, value);
  Variable& v = find(var);
  v.value = value;
  v.updated_at = now;
}

SubscriptionId Plc::subscribe(std::string_view var, Sink sink) {
  const Variable& v = find(var);
  const SubscriptionId id = next_subscription_++;
  subscriptions_.emplace(id, Subscription{v.spec.name, std::move(sink), v.value});
  return id;
}

void Plc::unsubscribe(SubscriptionId id) { subscriptions_.erase(id); }

Plc::Variable& Plc::find(std::string_view var) {
  return const_cast<Variable&>(std::as_const(*this).find(var));
}

const Plc::Variable& Plc::find(std::string_view var) const {
  const auto it = std::find_if(variables_.begin(), variables_.end(),
                               [&](const Variable& v) { return v.spec.name == var; });
  if (it == variables_.end()) {
    fail(ErrorCode::UnknownVariable, config_.plc_name + "." + std::string(var));
  }
  return *it;
}

PlcConfig synthetic_plc(const std::string& plc_name) {
  PlcConfig c;
  c.plc_name = plc_name;
  c.variables = {
      VariableSpec{"temperature", "degC", 0.0, 150.0, 75.0, 0.5, true, 0.01},
      VariableSpec{"pressure", "bar", 0.0, 10.0, 5.0, 0.05, false, 0.01},
      VariableSpec{"flow", "m3/h", 0.0, 200.0, 100.0, 1.0, true, 0.01},
  };
  return c;
}

}  // namespace orgscada::plantsim
