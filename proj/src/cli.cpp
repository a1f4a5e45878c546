#include "flsched/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flsched/config.hpp"
#include "flsched/error.hpp"
#include "flsched/metrics.hpp"
#include "flsched/simulator.hpp"

namespace flsched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Resolved {
  json document;
  ExperimentConfig config;
};

Resolved resolve(const CliInvocation& inv) {
  json doc = inv.config_path.empty() ? json::object() : load_json_file(inv.config_path);
  doc = resolve_with_defaults(doc);
  for (const auto& o : inv.overrides) apply_override(doc, o);
  Resolved r{doc, experiment_from_json(doc)};
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

int simulate(const CliInvocation& inv, std::ostream& out) {
  const Resolved r = resolve(inv);
  r.config.run.validate();
  if (inv.output.empty()) throw ConfigError("an output directory is required (-o/--out)");
  const fs::path dir = inv.output;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

  const ExecutionOptions exec{inv.threads};
  std::vector<RunResult> runs;
  if (inv.subcommand == "run") {
    runs.push_back(run(r.config.run, exec));
  } else {
    std::vector<Policy> policies = r.config.sweep.policies;
    std::vector<std::uint64_t> seeds = r.config.sweep.seeds;
    if (policies.empty()) policies.push_back(r.config.run.policy);
    if (seeds.empty()) seeds.push_back(r.config.run.master_seed);
    runs = sweep(r.config.run, policies, seeds, exec);
  }

  std::ostringstream csv;
  write_metrics_csv(csv, metrics_rows(runs));
  write_text(dir / "metrics.csv", csv.str());
  write_text(dir / "config.resolved.json", r.document.dump(2) + "\n");
  if (r.config.run.per_client_dump) {
    std::ostringstream dump;
    write_client_dump(dump, runs);
    write_text(dir / "clients.csv", dump.str());
  }
  for (const auto& run : runs) {
    const auto& last = run.records.back();
    out << to_string(run.policy.kind) << " seed=" << run.seed << " rounds=" << run.records.size()
        << " final_accuracy=" << format_double(last.accuracy) << '\n';
  }
  out << "wrote " << (dir / "metrics.csv").string() << '\n';
  return kExitOk;
}

int validate_config(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(inv);
  const auto problems = r.config.run.violations();
  if (problems.empty()) {
    out << "config ok\n";
    return kExitOk;
  }
  for (const auto& p : problems) err << "config error: " << p << '\n';
  return kExitConfig;
}

int plot(const CliInvocation& inv, std::ostream& out) {
  if (inv.config_path.empty()) throw ConfigError("plot needs a metrics CSV path");
  if (inv.output.empty()) throw ConfigError("plot needs an output SVG path (-o/--out)");
  std::ifstream in(inv.config_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + inv.config_path);
  const auto rows = read_metrics_csv(in);
  write_text(inv.output, render_convergence_svg(rows));
  out << "wrote " << inv.output << '\n';
  return kExitOk;
}

}  // namespace

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  try {
    if (inv.subcommand == "run" || inv.subcommand == "sweep") return simulate(inv, out);
    if (inv.subcommand == "validate-config") return validate_config(inv, out, err);
    if (inv.subcommand == "plot") return plot(inv, out);
    err << "error: unknown subcommand '" << inv.subcommand << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated learning scheduling simulator"};
  app.require_subcommand(1);

  CliInvocation inv;
  std::string synthetic;
  std::string mnist_images, mnist_labels, mnist_test_images, mnist_test_labels;

  auto add_sim_options = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("config", inv.config_path, "JSON run config (defaults when omitted)");
    if (needs_out) sub->add_option("-o,--out", inv.output, "Output directory")->required();
    sub->add_option("-s,--set", inv.overrides, "Override a config value: dotted.key=value");
    sub->add_option("--mnist-images", mnist_images, "IDX training images");
    sub->add_option("--mnist-labels", mnist_labels, "IDX training labels");
    sub->add_option("--mnist-test-images", mnist_test_images, "IDX test images");
    sub->add_option("--mnist-test-labels", mnist_test_labels, "IDX test labels");
    sub->add_option("--synthetic", synthetic,
                    "Synthetic Gaussian data, e.g. classes=10,dim=20,n=6000,separation=3")
        ->expected(0, 1);
  };

  auto* run_cmd = app.add_subcommand("run", "Run one simulation and write metrics.csv");
  add_sim_options(run_cmd, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the policy x seed cross product");
  add_sim_options(sweep_cmd, true);
  auto* validate_cmd = app.add_subcommand("validate-config", "Check a config and list violations");
  add_sim_options(validate_cmd, false);
  auto* plot_cmd = app.add_subcommand("plot", "Render accuracy curves from metrics.csv as SVG");
  plot_cmd->add_option("metrics", inv.config_path, "metrics.csv")->required();
  plot_cmd->add_option("-o,--out", inv.output, "Output SVG")->required();
  std::string group_by = "policy";
  plot_cmd->add_option("--group-by", group_by, "Grouping column")->check(CLI::IsMember({"policy"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitConfig;
  }
  inv.subcommand = app.get_subcommands().front()->get_name();

  CLI::App* sub = app.get_subcommands().front();
  if (sub != plot_cmd) {
    std::vector<std::string> extra;
    if (!mnist_images.empty() || !mnist_labels.empty()) {
      extra.push_back("dataset.kind=\"idx\"");
      extra.push_back("dataset.train_images=" + json(mnist_images).dump());
      extra.push_back("dataset.train_labels=" + json(mnist_labels).dump());
    }
    if (!mnist_test_images.empty()) extra.push_back("dataset.test_images=" + json(mnist_test_images).dump());
    if (!mnist_test_labels.empty()) extra.push_back("dataset.test_labels=" + json(mnist_test_labels).dump());
    if (sub->count("--synthetic") > 0) {
      extra.push_back("dataset.kind=\"synthetic\"");
      std::stringstream ss(synthetic);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) extra.push_back("dataset." + item);
      }
    }
    // Explicit --set values win over the dataset shortcuts.
    extra.insert(extra.end(), inv.overrides.begin(), inv.overrides.end());
    inv.overrides = std::move(extra);
  }

  if (const char* env = std::getenv("FLSCHED_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (*end != '\0') {
      err << "config error: FLSCHED_THREADS must be a non-negative integer\n";
      return kExitConfig;
    }
    inv.threads = static_cast<std::size_t>(value);
  }
  return execute(inv, out, err);
}

}  // namespace flsched
