// Copyright 2026 The Cloudlet ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cits: operator command line for the cloudlet broker.

#include "CLI11.hpp"
#include "cits/broker.h"
#include "cits/error.h"
#include "cits/geo.h"
#include "cits/policy_check.h"
#include "cits/policy_eval.h"
#include "cits/policy_parser.h"
#include "cits/sim.h"
#include "cits/store_config.h"
#include "cits/tcp.h"
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::string ReadText(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw cits::Error(cits::ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- check-policy

json CheckPolicy(std::string const& policies_path, std::string const& schema_path) {
  json report = {{"file", policies_path}, {"policies", json::array()}, {"diagnostics", json::array()}};
  auto schema = cits::StoreFromJson(cits::ReadJsonFile(schema_path));
  std::vector<cits::policy::AuthFunction> functions;
  try {
    functions = cits::policy::ParsePolicies(ReadText(policies_path));
  } catch (cits::PositionedError const& e) {
    report["diagnostics"].push_back({{"severity", "error"},
                                     {"code", cits::ToString(e.code())},
                                     {"line", e.line()},
                                     {"column", e.column()},
                                     {"message", e.what()}});
    report["ok"] = false;
    return report;
  }
  auto diagnostics = cits::policy::CheckPolicies(functions, schema);
  bool ok = true;
  for (auto const& fn : functions) {
    json errors = 0, warnings = 0;
    for (auto const& d : diagnostics) {
      if (d.op != fn.op) continue;
      if (d.severity == cits::policy::Diagnostic::Severity::kError) {
        errors = errors.get<int>() + 1;
      } else {
        warnings = warnings.get<int>() + 1;
      }
    }
    report["policies"].push_back({{"op", fn.op},
                                  {"arity", fn.formals.size()},
                                  {"line", fn.line},
                                  {"status", errors.get<int>() ? "error" : "ok"},
                                  {"warnings", warnings}});
  }
  for (auto const& d : diagnostics) {
    bool error = d.severity == cits::policy::Diagnostic::Severity::kError;
    ok = ok && !error;
    report["diagnostics"].push_back({{"severity", error ? "error" : "warning"},
                                     {"code", cits::ToString(d.code)},
                                     {"op", d.op},
                                     {"line", d.line},
                                     {"column", d.column},
                                     {"message", d.message}});
  }
  if (functions.empty()) {
    report["diagnostics"].push_back(
        {{"severity", "warning"}, {"code", "Empty"}, {"line", 0}, {"column", 0},
         {"message", "no policies declared"}});
  }
  report["ok"] = ok;
  return report;
}

void PrintCheck(json const& r) {
  for (auto const& d : r["diagnostics"]) {
    std::cout << r["file"].get<std::string>() << ":" << d["line"] << ":" << d["column"] << ": "
              << d["severity"].get<std::string>() << ": " << d["code"].get<std::string>() << ": "
              << d["message"].get<std::string>() << "\n";
  }
  for (auto const& p : r["policies"]) {
    std::cout << p["op"].get<std::string>() << "/" << p["arity"] << " (line " << p["line"]
              << "): " << (p["status"] == "ok" ? "OK" : "ERROR");
    if (p["warnings"].get<int>()) std::cout << ", " << p["warnings"] << " warning(s)";
    std::cout << "\n";
  }
  std::cout << r["policies"].size() << " policies, " << (r["ok"].get<bool>() ? "OK" : "FAILED")
            << "\n";
}

// ---- run

json TotalsJson(cits::sim::Totals const& t) {
  return {{"published", t.published},   {"notified", t.notified},
          {"blocked", t.blocked},       {"dropped", t.dropped},
          {"deliveries", t.deliveries}, {"forward_denied", t.forward_denied},
          {"queue_overflow", t.queue_overflow}, {"coverage_gaps", t.coverage_gaps},
          {"join_refused", t.join_refused},     {"unpublished", t.unpublished}};
}

json Run(std::string const& scenario, std::string const& out, std::optional<std::uint64_t> seed) {
  auto cfg = cits::sim::ScenarioFromFile(scenario);
  if (seed) cfg.seed = *seed;
  auto result = cits::sim::RunScenario(cfg);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw cits::Error(cits::ErrorCode::kIoError, "cannot create " + out + ": " + ec.message());
  auto events = (fs::path(out) / "events.jsonl").string();
  auto metrics = (fs::path(out) / "metrics.csv").string();
  auto messages = (fs::path(out) / "messages.csv").string();
  cits::sim::WriteEventLog(result.events, events);
  cits::sim::EmitMetrics(result.metrics, metrics, messages);
  return {{"scenario", cfg.name},
          {"seed", cfg.seed},
          {"events", events},
          {"metrics", metrics},
          {"messages", messages},
          {"event_count", result.events.size()},
          {"totals", TotalsJson(result.totals)}};
}

void PrintRun(json const& r) {
  std::cout << "scenario " << r["scenario"].get<std::string>() << " seed " << r["seed"] << "\n";
  for (auto const& [k, v] : r["totals"].items()) std::cout << "  " << k << " " << v << "\n";
  std::cout << "wrote " << r["events"].get<std::string>() << " (" << r["event_count"]
            << " events)\nwrote " << r["metrics"].get<std::string>() << "\nwrote "
            << r["messages"].get<std::string>() << "\n";
}

// ---- metrics

std::vector<std::string> SplitCsv(std::string const& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(std::string const& s, std::string const& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (std::exception const&) {
  }
  throw cits::Error(cits::ErrorCode::kConfigError, where + ": not a number: " + s);
}

json Metrics(std::string const& path) {
  auto file = fs::is_directory(path) ? (fs::path(path) / "messages.csv").string() : path;
  std::istringstream in(ReadText(file));
  std::string line;
  std::getline(in, line);
  auto header = SplitCsv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (auto name : {"vehicles", "rate", "outcome", "deliveries", "policy_eval_us", "pipeline_us",
                    "trip_ms"}) {
    if (!col.count(name)) {
      throw cits::Error(cits::ErrorCode::kConfigError, file + ": missing column " + name);
    }
  }
  struct Cell {
    std::map<std::string, std::vector<double>> samples;
    std::map<std::string, std::uint64_t> outcomes;
    std::uint64_t deliveries = 0;
  };
  std::map<std::pair<double, double>, Cell> cells;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = SplitCsv(line);
    if (f.size() != header.size()) {
      throw cits::Error(cits::ErrorCode::kConfigError,
                        file + ":" + std::to_string(row) + ": wrong field count");
    }
    auto where = file + ":" + std::to_string(row);
    auto& cell = cells[{ParseDouble(f[col["vehicles"]], where), ParseDouble(f[col["rate"]], where)}];
    cell.outcomes[f[col["outcome"]]]++;
    cell.deliveries += std::uint64_t(ParseDouble(f[col["deliveries"]], where));
    for (auto m : {"policy_eval_us", "pipeline_us", "trip_ms"}) {
      auto const& v = f[col[m]];
      if (!v.empty()) cell.samples[m].push_back(ParseDouble(v, where));
    }
  }
  json out = {{"file", file}, {"cells", json::array()}};
  for (auto const& [key, cell] : cells) {
    json c = {{"vehicles", static_cast<int>(key.first)},
              {"rate", key.second},
              {"outcomes", cell.outcomes},
              {"deliveries", cell.deliveries},
              {"metrics", json::object()}};
    for (auto const& [m, xs] : cell.samples) {
      auto s = cits::sim::Summarize(xs);
      c["metrics"][m] = {{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}, {"max", s.max}};
    }
    out["cells"].push_back(c);
  }
  return out;
}

void PrintMetrics(json const& r) {
  for (auto const& c : r["cells"]) {
    std::cout << "vehicles " << c["vehicles"] << " rate " << c["rate"] << ": deliveries "
              << c["deliveries"];
    for (auto const& [k, v] : c["outcomes"].items()) std::cout << ", " << k << " " << v;
    std::cout << "\n";
    for (auto const& [m, s] : c["metrics"].items()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %-15s n=%-6llu mean=%.3f stddev=%.3f max=%.3f\n",
                    m.c_str(), static_cast<unsigned long long>(s["count"].get<std::uint64_t>()),
                    s["mean"].get<double>(), s["stddev"].get<double>(), s["max"].get<double>());
      std::cout << buf;
    }
  }
}

// ---- explain

json Explain(std::string const& policies_path, std::string const& store_path,
             std::string const& op, std::vector<std::string> const& actuals) {
  auto policies = cits::policy::PolicySet::FromFile(policies_path);
  auto store = cits::StoreFromJson(cits::ReadJsonFile(store_path));
  auto const& fn = policies.Get(op);
  std::vector<cits::EntityId> ids;
  cits::policy::Substitution subst;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    ids.push_back(store.Resolve(actuals[i]));
    if (i < fn.formals.size()) subst[fn.formals[i].name] = actuals[i];
  }
  cits::policy::Trace trace;
  bool result = policies.Authorize(op, ids, store, &trace);
  json steps = json::array();
  for (auto const& t : trace) steps.push_back({{"depth", t.depth}, {"text", t.text}, {"value", t.value}});
  return {{"op", op},
          {"actuals", actuals},
          {"formula", cits::policy::Print(fn.body, subst)},
          {"trace", steps},
          {"result", result}};
}

void PrintExplain(json const& r) {
  std::cout << r["op"].get<std::string>() << "(";
  for (std::size_t i = 0; i < r["actuals"].size(); ++i) {
    std::cout << (i ? ", " : "") << r["actuals"][i].get<std::string>();
  }
  std::cout << ") := " << r["formula"].get<std::string>() << "\n";
  for (auto const& t : r["trace"]) {
    std::cout << std::string(2 * t["depth"].get<std::size_t>(), ' ')
              << (t["value"].get<bool>() ? "true " : "false") << "  "
              << t["text"].get<std::string>() << "\n";
  }
  std::cout << "result: " << (r["result"].get<bool>() ? "true" : "false") << "\n";
}

// ---- rogue

json Rogue(std::string const& address, std::string const& as, std::string const& token,
           std::string const& action, std::vector<std::string> const& names,
           std::vector<std::string> const& cloudlets) {
  static const std::map<std::string, std::string> kOps = {
      {"add", "ADD"}, {"del", "DELETE"}, {"delete", "DELETE"}, {"list", "LIST"}};
  auto op = kOps.find(action);
  if (op == kOps.end()) {
    throw cits::Error(cits::ErrorCode::kMalformedCommand, "unknown rogue action " + action);
  }
  json command = {{"Alert", op->second}};
  if (op->second == "LIST") {
    if (!names.empty()) throw cits::Error(cits::ErrorCode::kMalformedCommand, "list takes no names");
    command["myVehicle"] = nullptr;
  } else {
    if (names.empty()) throw cits::Error(cits::ErrorCode::kMalformedCommand, action + " needs a name");
    command["myVehicle"] = names.size() == 1 ? json(names[0]) : json(names);
  }
  if (!cloudlets.empty()) command["cloudlets"] = cloudlets;
  auto [host, port] = cits::net::ParseAddress(address);
  cits::net::BrokerClient client(host, port, as, "", token);
  return client.Publish(cits::alerts::kRogueTopic, command)["response"];
}

void PrintRogue(json const& r) {
  for (auto const& [tc, v] : r["cloudlets"].items()) {
    std::cout << tc << " (revision " << v["revision"] << "):";
    for (auto const& name : v["Vehicles"]) std::cout << " " << name.get<std::string>();
    std::cout << "\n";
  }
}

// ---- serve

int Serve(std::string const& world, std::string const& policies_path, std::string const& rules_path,
          std::string const& regions_path, std::string const& host, std::uint16_t port,
          bool as_json) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  cits::SharedAttributeStore store(cits::StoreFromJson(cits::ReadJsonFile(world)));
  auto policies = cits::policy::PolicySet::FromFile(policies_path);
  auto rules = rules_path.empty() ? cits::alerts::AlertRuleSet::Default()
                                  : cits::alerts::AlertRuleSet::FromFile(rules_path);
  std::unique_ptr<cits::geo::GeoAssociator> geo;
  std::vector<std::string> cloudlets;
  std::vector<std::pair<std::string, std::string>> sources;
  store.Read([&](cits::AttributeStore const& s) {
    for (auto const& id : s.Entities()) {
      if (id.kind == cits::EntityKind::kCloudlet) cloudlets.push_back(id.name);
      if (!id.is_source()) continue;
      std::string type = id.kind == cits::EntityKind::kVehicle          ? "Vehicle"
                         : id.kind == cits::EntityKind::kInfrastructure ? "Infrastructure"
                                                                        : "User";
      if (s.HasAttribute("type")) {
        if (auto t = s.DirectAtomic(id, "type"); t && t->is_string()) type = t->string();
      }
      sources.emplace_back(id.name, type);
    }
  });
  if (!regions_path.empty()) {
    auto regions = cits::geo::RegionsFromJson(cits::ReadJsonFile(regions_path));
    cloudlets.clear();
    for (auto const& r : regions) cloudlets.push_back(r.cloudlet);
    geo = std::make_unique<cits::geo::GeoAssociator>(std::move(regions));
  }

  cits::broker::CentralController controller;
  cits::net::BrokerServer server;
  cits::broker::BrokerOptions options;
  options.on_delivery = [&](cits::broker::Delivery const& d) { server.OnDelivery(d); };
  options.on_event = [&](json const& e) { std::cerr << e.dump() << "\n"; };
  cits::broker::Broker broker(store, policies, rules, controller, options);
  for (auto const& c : cloudlets) broker.AddCloudlet(c);
  json registered = json::object();
  for (auto const& [name, type] : sources) {
    registered[name] = controller.Register(name, type).token;
  }
  server.Attach(broker, geo.get());
  server.Start(host, port);
  json ready = {{"listening", host + ":" + std::to_string(server.port())},
                {"cloudlets", cloudlets},
                {"registered", registered}};
  if (as_json) {
    std::cout << ready.dump() << std::endl;
  } else {
    std::cout << "listening on " << ready["listening"].get<std::string>() << " with "
              << cloudlets.size() << " cloudlets" << std::endl;
  }
  int sig = 0;
  sigwait(&signals, &sig);
  server.Stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloudlet broker operator tool"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output");

  std::string policies, schema, store, scenario, out, world, rules, regions, host = "127.0.0.1";
  std::string broker_addr, as = "Authority", token, action, op, metrics_in;
  std::vector<std::string> names, actuals, cloudlets;
  std::optional<std::uint64_t> seed;
  std::uint16_t port = 0;

  auto* check = app.add_subcommand("check-policy", "Parse and type-check a policy file");
  check->add_option("--policies", policies, "Policy file")->required()->check(CLI::ExistingFile);
  check->add_option("--schema", schema, "World config declaring the attributes")
      ->required()
      ->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Run a scenario and write metrics and the event log");
  run->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override the scenario seed");

  auto* serve = app.add_subcommand("serve", "Run the broker over TCP until interrupted");
  serve->add_option("--world", world, "World config")->required()->check(CLI::ExistingFile);
  serve->add_option("--policies", policies, "Policy file")->required()->check(CLI::ExistingFile);
  serve->add_option("--rules", rules, "Alert rules (default table if omitted)")
      ->check(CLI::ExistingFile);
  serve->add_option("--regions", regions, "Coverage regions; enables position reports")
      ->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (0 picks one)");

  auto* rogue = app.add_subcommand("rogue", "Query or edit rogue lists on a running broker");
  rogue->add_option("--broker", broker_addr, "host:port")->required();
  rogue->add_option("--as", as, "Registered publisher name");
  rogue->add_option("--token", token, "Registration token");
  rogue->add_option("--cloudlet", cloudlets, "Target cloudlet (default: all)");
  rogue->add_option("action", action, "add, del or list")->required();
  rogue->add_option("names", names, "Vehicle names");

  auto* metrics = app.add_subcommand("metrics", "Summarize a per-message metrics CSV");
  metrics->add_option("input", metrics_in, "Run directory or messages.csv")
      ->required()
      ->check(CLI::ExistingPath);

  auto* explain = app.add_subcommand("explain", "Trace an authorization decision");
  explain->add_option("--policies", policies, "Policy file")->required()->check(CLI::ExistingFile);
  explain->add_option("--store", store, "World config")->required()->check(CLI::ExistingFile);
  explain->add_option("op", op, "Operation")->required();
  explain->add_option("actuals", actuals, "Entity names");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    json result;
    int status = kOk;
    if (*check) {
      result = CheckPolicy(policies, schema);
      if (!result["ok"].get<bool>()) status = kDomainError;
      if (!as_json) PrintCheck(result);
    } else if (*run) {
      result = Run(scenario, out, seed);
      if (!as_json) PrintRun(result);
    } else if (*serve) {
      return Serve(world, policies, rules, regions, host, port, as_json);
    } else if (*rogue) {
      result = Rogue(broker_addr, as, token, action, names, cloudlets);
      if (!as_json) PrintRogue(result);
    } else if (*metrics) {
      result = Metrics(metrics_in);
      if (!as_json) PrintMetrics(result);
    } else if (*explain) {
      result = Explain(policies, store, op, actuals);
      if (!as_json) PrintExplain(result);
    }
    if (as_json) std::cout << result.dump(2) << "\n";
    return status;
  } catch (cits::PositionedError const& e) {
    std::cerr << "error: " << cits::ToString(e.code()) << " at " << e.line() << ":" << e.column()
              << ": " << e.what() << "\n";
  } catch (cits::Error const& e) {
    std::cerr << "error: " << cits::ToString(e.code()) << ": " << e.what() << "\n";
  }
  return kDomainError;
}
