#include "orgscada/org/config.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "orgscada/kernel/directory.hpp"

namespace orgscada {

namespace pt = boost::property_tree;

namespace {

// Shortest text that reads back to the same double.
std::string shortest(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}


pt::ptree read_xml_text(const std::string& text, const std::string& what) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    fail(ErrorCode::ConfigInvalid, what + ": " + e.what());
  }
  return tree;
}

template <typename T>
T attr(const pt::ptree& node, const std::string& name, const std::string& where) {
  const auto v = node.get_optional<T>("<xmlattr>." + name);
  if (!v) fail(ErrorCode::ConfigInvalid, where + ": missing or invalid attribute '" + name + "'");
  return *v;
}

template <typename T>
T attr_or(const pt::ptree& node, const std::string& name, T fallback) {
  return node.get<T>("<xmlattr>." + name, fallback);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void validate(const OrganizationConfig& config) {
  if (config.org_name.empty()) fail(ErrorCode::ConfigInvalid, "organization name is empty");
  std::set<std::string> peers;
  for (const auto& a : config.acquaintances) {
    if (a.org_name.empty() || a.org_name == config.org_name || !peers.insert(a.org_name).second) {
      fail(ErrorCode::ConfigInvalid, "acquaintance '" + a.org_name + "' is empty, self or repeated");
    }
  }
  std::set<std::string> plcs;
  for (const auto& plc : config.plcs) {
    const auto name = parse_service_name(plc.plc_name);
    if (!name) fail(ErrorCode::ConfigInvalid, "PLC name '" + plc.plc_name + "' is not O<i>.PLC<j>");
    if (name->owner_org() != config.org_name) {
      fail(ErrorCode::ConfigInvalid, "PLC " + plc.plc_name + " does not belong to " + config.org_name);
    }
    if (!plcs.insert(plc.plc_name).second) {
      fail(ErrorCode::ConfigInvalid, "duplicate PLC " + plc.plc_name);
    }
    plantsim::validate(plc);
  }
  const auto& d = config.agent_defaults;
  if (d.poll_period <= Duration::zero() || d.heartbeat_period <= Duration::zero() ||
      d.cfp_deadline <= Duration::zero() || d.adaptation_period <= Duration::zero() ||
      d.heartbeat_miss_limit < 1 || d.idle_grace < Duration::zero()) {
    fail(ErrorCode::ConfigInvalid, "agent defaults must be positive");
  }
}

OrganizationConfig parse_config_xml(const std::string& processes_xml,
                                    const std::string& acquaintances_xml) {
  OrganizationConfig config;

  const pt::ptree acq = read_xml_text(acquaintances_xml, "acquaintances.xml");
  const auto org = acq.get_child_optional("organization");
  if (!org) fail(ErrorCode::ConfigInvalid, "acquaintances.xml: missing <organization>");
  config.org_name = attr<std::string>(*org, "name", "organization");
  config.listen_address = attr_or<std::string>(*org, "listen", "");
  config.http_listen = attr_or<std::string>(*org, "http-listen", "");
  config.seed = attr_or<std::uint64_t>(*org, "seed", 1);
  for (const auto& [tag, child] : *org) {
    if (tag == "acquaintance") {
      config.acquaintances.push_back(Acquaintance{attr<std::string>(child, "name", "acquaintance"),
                                                  attr_or<std::string>(child, "address", "")});
    } else if (tag == "defaults") {
      auto& d = config.agent_defaults;
      d.poll_period = Duration{attr_or<long>(child, "poll-period-ms", d.poll_period.count())};
      d.heartbeat_period =
          Duration{attr_or<long>(child, "heartbeat-period-ms", d.heartbeat_period.count())};
      d.heartbeat_miss_limit = attr_or<int>(child, "heartbeat-miss-limit", d.heartbeat_miss_limit);
      d.cfp_deadline = Duration{attr_or<long>(child, "cfp-deadline-ms", d.cfp_deadline.count())};
      d.idle_grace = Duration{attr_or<long>(child, "idle-grace-ms", d.idle_grace.count())};
      d.adaptation_period =
          Duration{attr_or<long>(child, "adaptation-period-ms", d.adaptation_period.count())};
      d.ca_count = attr_or<std::size_t>(child, "ca-count", d.ca_count);
    }
  }

  const pt::ptree proc = read_xml_text(processes_xml, "processes.xml");
  const auto processes = proc.get_child_optional("processes");
  if (!processes) fail(ErrorCode::ConfigInvalid, "processes.xml: missing <processes>");
  for (const auto& [tag, plc_node] : *processes) {
    if (tag != "plc") continue;
    plantsim::PlcConfig plc;
    plc.plc_name = attr<std::string>(plc_node, "name", "plc");
    plc.interface = attr_or<std::string>(plc_node, "interface", "sim");
    for (const auto& [vtag, v] : plc_node) {
      if (vtag != "variable") continue;
      const std::string where = plc.plc_name + " variable";
      plantsim::VariableSpec spec;
      spec.name = attr<std::string>(v, "name", where);
      spec.unit = attr_or<std::string>(v, "unit", "");
      spec.min = attr<double>(v, "min", where);
      spec.max = attr<double>(v, "max", where);
      spec.initial = attr_or<double>(v, "initial", (spec.min + spec.max) / 2.0);
      spec.deadband = attr_or<double>(v, "deadband", 0.0);
      spec.writable = attr_or<bool>(v, "writable", false);
      spec.step_fraction = attr_or<double>(v, "step-fraction", 0.01);
      plc.variables.push_back(spec);
    }
    config.plcs.push_back(std::move(plc));
  }
  validate(config);
  return config;
}

OrganizationConfig load_config_dir(const std::filesystem::path& dir) {
  return parse_config_xml(read_file(dir / "processes.xml"), read_file(dir / "acquaintances.xml"));
}

std::string to_processes_xml(const OrganizationConfig& config) {
  pt::ptree root;
  auto& processes = root.add_child("processes", pt::ptree{});
  for (const auto& plc : config.plcs) {
    auto& node = processes.add_child("plc", pt::ptree{});
    node.put("<xmlattr>.name", plc.plc_name);
    node.put("<xmlattr>.interface", plc.interface);
    for (const auto& v : plc.variables) {
      auto& var = node.add_child("variable", pt::ptree{});
      var.put("<xmlattr>.name", v.name);
      var.put("<xmlattr>.unit", v.unit);
      var.put("<xmlattr>.min", shortest(v.min));
      var.put("<xmlattr>.max", shortest(v.max));
      var.put("<xmlattr>.initial", shortest(v.initial));
      var.put("<xmlattr>.deadband", shortest(v.deadband));
      var.put("<xmlattr>.writable", v.writable);
      var.put("<xmlattr>.step-fraction", shortest(v.step_fraction));
    }
  }
  std::ostringstream out;
  pt::write_xml(out, root, pt::xml_writer_make_settings<std::string>(' ', 2));
  return out.str();
}

std::string to_acquaintances_xml(const OrganizationConfig& config) {
  pt::ptree root;
  auto& org = root.add_child("organization", pt::ptree{});
  org.put("<xmlattr>.name", config.org_name);
  if (!config.listen_address.empty()) org.put("<xmlattr>.listen", config.listen_address);
  if (!config.http_listen.empty()) org.put("<xmlattr>.http-listen", config.http_listen);
  org.put("<xmlattr>.seed", config.seed);
  auto& d = org.add_child("defaults", pt::ptree{});
  const auto& ad = config.agent_defaults;
  d.put("<xmlattr>.poll-period-ms", ad.poll_period.count());
  d.put("<xmlattr>.heartbeat-period-ms", ad.heartbeat_period.count());
  d.put("<xmlattr>.heartbeat-miss-limit", ad.heartbeat_miss_limit);
  d.put("<xmlattr>.cfp-deadline-ms", ad.cfp_deadline.count());
  d.put("<xmlattr>.idle-grace-ms", ad.idle_grace.count());
  d.put("<xmlattr>.adaptation-period-ms", ad.adaptation_period.count());
  d.put("<xmlattr>.ca-count", ad.ca_count);
  for (const auto& a : config.acquaintances) {
    auto& node = org.add_child("acquaintance", pt::ptree{});
    node.put("<xmlattr>.name", a.org_name);
    if (!a.address.empty()) node.put("<xmlattr>.address", a.address);
  }
  std::ostringstream out;
  pt::write_xml(out, root, pt::xml_writer_make_settings<std::string>(' ', 2));
  return out.str();
}

std::pair<std::string, int> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    fail(ErrorCode::ConfigInvalid, "address must be host:port, got '" + address + "'");
  }
  try {
    const int port = std::stoi(address.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {address.substr(0, colon), port};
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigInvalid, "bad port in '" + address + "'");
  }
}

}  // namespace orgscada
