#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/experiment.hpp"
#include "sphereflow/io.hpp"

using namespace sphereflow;

namespace {

int report(const RunOutcome& o) {
  if (o.exit_code == kExitOk) {
    std::cout << o.document.dump(2) << '\n';
  } else {
    std::cerr << o.document.dump(2) << '\n';
  }
  return o.exit_code;
}

int config_error(const std::string& message) {
  const nlohmann::json doc = {{"status", "error"},
                              {"exit_code", kExitConfig},
                              {"error", "InvalidConfig"},
                              {"message", message},
                              {"phase", "validation"}};
  std::cerr << doc.dump(2) << '\n';
  return kExitConfig;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sphere-valued heat flow experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  unsigned threads = 1;

  CLI::App* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config, "Experiment JSON")->required();
  run->add_option("--out", out, "Output directory (default out/<name>)");
  run->add_option("--threads", threads, "Threads for diagnostic batches")->check(CLI::PositiveNumber);

  std::string param;
  std::string values;
  CLI::App* sw = app.add_subcommand("sweep", "Sweep one parameter of a config");
  sw->add_option("--config", config, "Experiment JSON")->required();
  sw->add_option("--param", param, "lambda | h | dt")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->add_option("--out", out, "Output directory (default out/<name>-sweep-<param>)");
  sw->add_option("--threads", threads, "Threads for diagnostic batches")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (run->parsed()) {
    std::optional<fs::path> dir;
    if (!out.empty()) dir = out;
    return report(run_experiment(fs::path(config), dir, threads));
  }

  nlohmann::json doc;
  try {
    doc = read_json(config);
  } catch (const Error& e) {
    return config_error(e.what());
  }
  std::vector<double> parsed;
  try {
    parsed = parse_values(values);
  } catch (const std::exception&) {
    return config_error("cannot parse --values \"" + values + "\"");
  }
  const fs::path dir = out.empty() ? fs::path(default_out_dir(doc).string() + "-sweep-" + param) : fs::path(out);
  return report(sweep(doc, param, parsed, dir, threads));
}
