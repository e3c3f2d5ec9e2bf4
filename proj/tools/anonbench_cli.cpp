#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "anonbench/anonbench.h"
#include "json.hpp"

namespace {

struct Args {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scenario;
  std::optional<double> beta;
  std::optional<double> sigma;
  std::optional<std::size_t> per_gender;
  std::string format = "table";
  std::string data;
  std::size_t threads = 0;
};

int emit_error(const std::string& command, const std::string& code, const std::string& message,
               int exit_code) {
  const nlohmann::json err = {
      {"error", {{"command", command}, {"code", code}, {"message", message}}}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
  return exit_code;
}

int emit_status(const std::string& command, anb_status status) {
  return emit_error(command, anb_status_name(status), anb_last_error(), static_cast<int>(status));
}

std::size_t effective_threads(std::size_t requested) {
  std::size_t n = requested;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("ANONBENCH_THREADS"); cap && *cap) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) n = std::min<std::size_t>(n, v);
  }
  return n;
}

void add_config_options(CLI::App* cmd, Args& a, bool with_scenario, bool with_sweep) {
  cmd->add_option("--config", a.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", a.out, "Output directory (default: io.output_dir)");
  if (with_scenario)
    cmd->add_option("--scenario", a.scenario, "Attack scenario")
        ->check(CLI::IsMember({"black", "grey", "white"}));
  if (with_scenario || with_sweep) {
    cmd->add_option("--beta", a.beta, "Speaker-information leakage of the conversion");
    cmd->add_option("--sigma", a.sigma, "Synthesis noise standard deviation");
    cmd->add_option("--data", a.data, "Import pool/embeddings/f0 CSVs from this directory")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--threads", a.threads, "Worker threads (0 = all cores)");
  }
  if (with_sweep) cmd->add_option("--per-gender", a.per_gender, "Target speakers per gender");
}

class Session {
 public:
  explicit Session(std::string command) : command_(std::move(command)) {}
  ~Session() { anb_config_free(config_); }

  // Returns 0 or an exit code after printing the error.
  int load(const Args& a) {
    anb_status st = a.config_path.empty() ? anb_config_default(&config_)
                                          : anb_config_load(a.config_path.c_str(), &config_);
    if (st != ANB_OK) return emit_status(command_, st);
    if (a.seed && (st = anb_config_set_seed(config_, *a.seed)) != ANB_OK)
      return emit_status(command_, st);
    if (!a.scenario.empty()) {
      const anb_scenario s = a.scenario == "black"  ? ANB_SCENARIO_BLACK
                             : a.scenario == "grey" ? ANB_SCENARIO_GREY
                                                    : ANB_SCENARIO_WHITE;
      if ((st = anb_config_set_scenario(config_, s)) != ANB_OK) return emit_status(command_, st);
    }
    if (a.beta && (st = anb_config_set_leakage_beta(config_, *a.beta)) != ANB_OK)
      return emit_status(command_, st);
    if (a.sigma && (st = anb_config_set_noise_sigma(config_, *a.sigma)) != ANB_OK)
      return emit_status(command_, st);
    if (a.per_gender && (st = anb_config_set_per_gender(config_, *a.per_gender)) != ANB_OK)
      return emit_status(command_, st);
    if ((st = anb_config_validate(config_)) != ANB_OK) return emit_status(command_, st);
    if (!a.out.empty()) {
      out_dir_ = a.out;
      return 0;
    }
    char* dir = nullptr;
    if ((st = anb_config_get_output_dir(config_, &dir)) != ANB_OK)
      return emit_status(command_, st);
    out_dir_ = dir;
    anb_string_free(dir);
    return 0;
  }

  const anb_config* config() const { return config_; }
  const std::string& out_dir() const { return out_dir_; }

 private:
  std::string command_;
  anb_config* config_ = nullptr;
  std::string out_dir_;
};

int finish(const std::string& command, anb_status st, const std::string& out_dir) {
  if (st != ANB_OK) return emit_status(command, st);
  std::printf("%s: wrote %s\n", command.c_str(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker anonymization privacy benchmark on a synthetic x-vector population"};
  app.set_version_flag("--version", std::string(anb_version()));
  app.require_subcommand(1);

  Args gen_args, run_args, sweep_args, report_args;
  std::string report_dir;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset (pool, embeddings, F0)");
  add_config_options(gen, gen_args, false, false);

  auto* run = app.add_subcommand("run", "Evaluate one attack scenario");
  add_config_options(run, run_args, true, false);

  auto* sweep = app.add_subcommand("sweep", "White-box evaluation over many constant targets");
  add_config_options(sweep, sweep_args, false, true);

  auto* report = app.add_subcommand("report", "Summarize a run or sweep directory");
  report->add_option("dir", report_dir, "Run or sweep output directory");
  report->add_option("--out", report_args.out, "Same as the positional directory");
  report->add_option("--format", report_args.format, "Summary format")
      ->check(CLI::IsMember({"table", "json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error("cli", "usage_error", e.what(), 2);
  }

  if (*gen) {
    Session s("generate");
    if (const int rc = s.load(gen_args)) return rc;
    return finish("generate", anb_cmd_generate(s.config(), s.out_dir().c_str()), s.out_dir());
  }
  if (*run) {
    Session s("run");
    if (const int rc = s.load(run_args)) return rc;
    const char* data = run_args.data.empty() ? nullptr : run_args.data.c_str();
    return finish("run",
                  anb_cmd_run(s.config(), s.out_dir().c_str(), data,
                              effective_threads(run_args.threads)),
                  s.out_dir());
  }
  if (*sweep) {
    Session s("sweep");
    if (const int rc = s.load(sweep_args)) return rc;
    const char* data = sweep_args.data.empty() ? nullptr : sweep_args.data.c_str();
    return finish("sweep",
                  anb_cmd_sweep(s.config(), s.out_dir().c_str(), data,
                                effective_threads(sweep_args.threads)),
                  s.out_dir());
  }

  std::string dir = !report_dir.empty() ? report_dir : report_args.out;
  if (dir.empty()) return emit_error("report", "usage_error", "no directory given", 2);
  const anb_report_format fmt = report_args.format == "json"  ? ANB_REPORT_JSON
                                : report_args.format == "csv" ? ANB_REPORT_CSV
                                                              : ANB_REPORT_TABLE;
  char* text = nullptr;
  const anb_status st = anb_cmd_report(dir.c_str(), fmt, &text);
  if (st != ANB_OK) return emit_status("report", st);
  std::fputs(text, stdout);
  anb_string_free(text);
  return 0;
}
