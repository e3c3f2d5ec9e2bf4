#include "anonbench/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <set>

#include "anonbench/dataset_io.hpp"
#include "anonbench/rng.hpp"

namespace anonbench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ManifestFile describe(const fs::path& dir, const std::string& name) {
  const std::string content = read_file(dir / name);
  return {name, content.size(), hex64(fnv1a64(content))};
}

json manifest_to_json(const Manifest& m) {
  json files = json::array();
  for (const auto& f : m.files)
    files.push_back({{"path", f.path}, {"size", f.size}, {"fnv1a64", f.fnv1a64}});
  return {{"tool", "anonbench"},
          {"tool_version", m.tool_version},
          {"command", m.command},
          {"config_hash", m.config_hash},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at},
          {"files", files}};
}

// Owns one command's writes into an output directory: holds the lock file,
// records emitted files, and deletes them unless commit() succeeds.
class OutputSession {
 public:
  explicit OutputSession(fs::path dir) : dir_(std::move(dir)), started_at_(utc_timestamp()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    require(!ec && fs::is_directory(dir_), ErrorCode::kIo,
            "cannot create output directory '" + dir_.string() + "'");
    const fs::path lock = dir_ / kLockFile;
    std::FILE* f = std::fopen(lock.c_str(), "wx");
    require(f != nullptr, ErrorCode::kState,
            "output directory '" + dir_.string() + "' is locked (" + lock.string() +
                " exists) or not writable");
    std::fclose(f);
    locked_ = true;
  }

  OutputSession(const OutputSession&) = delete;
  OutputSession& operator=(const OutputSession&) = delete;

  ~OutputSession() {
    std::error_code ec;
    if (!committed_) {
      for (const auto& name : written_) fs::remove(dir_ / name, ec);
      if (manifest_touched_) fs::remove(dir_ / kManifestFile, ec);
    }
    if (locked_) fs::remove(dir_ / kLockFile, ec);
  }

  const fs::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    written_.push_back(name);
    write_file_atomic(dir_ / name, content);
  }

  /// Writes the manifest over this session's files plus `carried` ones.
  void commit(const std::string& command, const std::string& config_hash,
              const std::vector<std::string>& carried = {}) {
    Manifest m;
    m.command = command;
    m.config_hash = config_hash;
    m.tool_version = kToolVersion;
    m.started_at = started_at_;
    m.finished_at = utc_timestamp();
    std::set<std::string> names(carried.begin(), carried.end());
    names.insert(written_.begin(), written_.end());
    for (const auto& n : names) m.files.push_back(describe(dir_, n));
    manifest_touched_ = true;
    write_file_atomic(dir_ / kManifestFile, manifest_to_json(m).dump(2) + "\n");
    std::string problem;
    require(validate_manifest(dir_, &problem), ErrorCode::kIo,
            "manifest validation failed: " + problem);
    committed_ = true;
  }

 private:
  fs::path dir_;
  std::string started_at_;
  std::vector<std::string> written_;
  bool locked_ = false;
  bool committed_ = false;
  bool manifest_touched_ = false;
};

json gender_json(const std::map<Gender, GenderMetrics>& by_gender) {
  json out = json::object();
  for (const auto& [g, m] : by_gender)
    out[gender_name(g)] = {{"eer_percent", m.eer_percent}, {"d_sys", m.d_sys}};
  return out;
}

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

json provenance(const RunConfig& config) {
  return {{"seed", config.master_seed},
          {"config_hash", config_hash(config)},
          {"tool_version", kToolVersion}};
}

std::string config_text(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

// ---- report rendering -------------------------------------------------------

struct Cell {
  double mean = 0.0;
  std::optional<double> std;
};

struct Row {
  std::string label;
  // female, male, all; each {d_sys, eer}
  std::map<std::string, std::pair<Cell, Cell>> groups;
};

const char* const kGroups[] = {"female", "male", "all"};

std::pair<Cell, Cell> cells_from_metrics(const json& m) {
  return {{m.at("d_sys").get<double>(), std::nullopt},
          {m.at("eer_percent").get<double>(), std::nullopt}};
}

Row row_from_report(const std::string& label, const json& report) {
  Row r{label, {}};
  r.groups["all"] = cells_from_metrics(report);
  for (const auto& [g, m] : report.at("by_gender").items()) r.groups[g] = cells_from_metrics(m);
  return r;
}

Row row_from_summary(const std::string& label, const json& summary) {
  Row r{label, {}};
  const auto cell = [](const json& ms) {
    return Cell{ms.at("mean").get<double>(), ms.at("std").get<double>()};
  };
  r.groups["all"] = {cell(summary.at("d_sys")), cell(summary.at("eer_percent"))};
  for (const auto& [g, m] : summary.at("by_gender").items())
    r.groups[g] = {cell(m.at("d_sys")), cell(m.at("eer_percent"))};
  return r;
}

std::string fmt_cell(const Cell& c, int precision) {
  char buf[64];
  if (c.std)
    std::snprintf(buf, sizeof buf, "%.*f +- %.*f", precision, c.mean, precision, *c.std);
  else
    std::snprintf(buf, sizeof buf, "%.*f", precision, c.mean);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string render_table(const std::string& title, const std::vector<Row>& rows) {
  constexpr std::size_t kLabel = 14, kCol = 16;
  std::string out = title + "\n\n";
  const auto trimmed = [](std::string line) {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };
  std::string header = pad("", kLabel);
  for (const char* g : kGroups) header += pad(std::string(g) + " speakers", 2 * kCol);
  out += trimmed(header);
  header = pad("", kLabel);
  for (std::size_t i = 0; i < 3; ++i) header += pad("D_sys", kCol) + pad("EER%", kCol);
  out += trimmed(header);
  for (const auto& r : rows) {
    std::string line = pad(r.label, kLabel);
    for (const char* g : kGroups) {
      const auto it = r.groups.find(g);
      if (it == r.groups.end()) {
        line += pad("-", kCol) + pad("-", kCol);
        continue;
      }
      line += pad(fmt_cell(it->second.first, 2), kCol) + pad(fmt_cell(it->second.second, 1), kCol);
    }
    out += trimmed(line);
  }
  return out;
}

std::string render_csv(const std::vector<Row>& rows) {
  std::string out = "condition,group,d_sys_mean,d_sys_std,eer_mean,eer_std\n";
  for (const auto& r : rows)
    for (const char* g : kGroups) {
      const auto it = r.groups.find(g);
      if (it == r.groups.end()) continue;
      const auto& [d, e] = it->second;
      out += r.label + ',' + g + ',' + format_double(d.mean) + ',' +
             (d.std ? format_double(*d.std) : "") + ',' + format_double(e.mean) + ',' +
             (e.std ? format_double(*e.std) : "") + '\n';
    }
  return out;
}

json render_json(const std::string& source, const std::vector<Row>& rows) {
  json out = {{"source", source}, {"rows", json::array()}};
  for (const auto& r : rows) {
    json groups = json::object();
    for (const auto& [g, cells] : r.groups) {
      const auto cj = [](const Cell& c) {
        json j = {{"mean", c.mean}};
        if (c.std) j["std"] = *c.std;
        return j;
      };
      groups[g] = {{"d_sys", cj(cells.first)}, {"eer_percent", cj(cells.second)}};
    }
    out["rows"].push_back({{"condition", r.label}, {"groups", groups}});
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "table" || name == "text") return ReportFormat::kTable;
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  fail(ErrorCode::kInvalidArgument, "unknown report format '" + name + "'");
}

json report_to_json(const PrivacyReport& report, const std::map<Gender, GenderMetrics>& by_gender) {
  json per = json::object();
  for (const auto& [spk, v] : report.per_speaker_d_sys) per[spk] = v;
  return {{"eer_percent", report.eer_percent},
          {"d_sys", report.d_sys},
          {"per_speaker", per},
          {"by_gender", gender_json(by_gender)},
          {"n_mated", report.n_mated},
          {"n_nonmated", report.n_nonmated},
          {"flags", report.flags}};
}

json sweep_to_json(const SweepResult& sweep) {
  json per_target = json::array();
  for (const auto& t : sweep.per_target) {
    json entry = {{"target_speaker", t.target.speaker_id},
                  {"target_gender", gender_code(t.target.gender)}};
    entry.update(report_to_json(t.report, t.by_gender));
    per_target.push_back(entry);
  }
  json by_gender = json::object();
  for (const auto& [g, m] : sweep.d_sys_by_gender) {
    by_gender[gender_name(g)] = {{"d_sys", mean_std_json(m)},
                                 {"eer_percent", mean_std_json(sweep.eer_by_gender.at(g))}};
  }
  return {{"per_target", per_target},
          {"summary",
           {{"n_targets", sweep.per_target.size()},
            {"d_sys", mean_std_json(sweep.d_sys)},
            {"eer_percent", mean_std_json(sweep.eer)},
            {"by_gender", by_gender}}},
          {"original", report_to_json(sweep.original, sweep.original_by_gender)}};
}

std::string radar_csv(const SweepResult& sweep) {
  std::string out = "trial_speaker,target_speaker,d_sys,original_d_sys\n";
  for (const auto& [spk, original] : sweep.original.per_speaker_d_sys) {
    for (const auto& t : sweep.per_target) {
      const auto it = t.report.per_speaker_d_sys.find(spk);
      require(it != t.report.per_speaker_d_sys.end(), ErrorCode::kState,
              "target '" + t.target.speaker_id + "' has no linkability value for '" + spk + "'");
      out += spk + ',' + t.target.speaker_id + ',' + format_double(it->second) + ',' +
             format_double(original) + '\n';
    }
  }
  return out;
}

EvalDataset load_or_generate(const RunConfig& config, const CommandOptions& options) {
  if (options.data_dir) return import_embeddings(*options.data_dir, config.population.dim);
  return generate_population(config.population_config());
}

void cmd_generate(const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  OutputSession session(out_dir);
  const EvalDataset ds = generate_population(config.population_config());
  session.write(kPoolFile, pool_to_csv(ds.pool));
  session.write(kEmbeddingsFile, embeddings_to_csv(ds));
  session.write(kF0File, f0_to_csv(ds));
  session.write("config.json", config_text(config));
  session.commit("generate", config_hash(config));
}

void cmd_run(const RunConfig& config, const fs::path& out_dir, const CommandOptions& options) {
  config.validate();
  OutputSession session(out_dir);
  const EvalDataset ds = load_or_generate(config, options);
  const ScenarioSpec spec = make_scenario_spec(config, ds.pool);
  const ScenarioOutcome outcome =
      run_scenario(ds, spec, config.metrics, scenario_seed(config));
  const ScenarioOutcome original = evaluate_original(ds, spec.backend, config.metrics);

  if (config.io.wants("csv")) {
    session.write("scores.csv", scores_to_csv(outcome.scores));
    session.write("anonymized_f0.csv", f0_to_csv(outcome.converted_trials));
  }
  if (config.io.wants("json")) {
    json report = report_to_json(outcome.report, outcome.by_gender);
    json scenario = {{"kind", scenario_name(spec.kind)},
                     {"strategy", strategy_name(spec.strategy.kind())},
                     {"asv_training", training_name(spec.asv_training)},
                     {"backend", backend_name(spec.backend)},
                     {"leakage_beta", spec.conversion.leakage_beta},
                     {"synthesis_noise_sigma", spec.conversion.synthesis_noise_sigma}};
    if (spec.strategy.constant_target())
      scenario["constant_target"] = spec.strategy.constant_target()->speaker_id;
    report["scenario"] = scenario;
    report["original"] = report_to_json(original.report, original.by_gender);
    report["provenance"] = provenance(config);
    session.write("report.json", report.dump(2) + "\n");
  }
  session.write("config.json", config_text(config));
  session.commit("run", config_hash(config));
}

void cmd_sweep(const RunConfig& config, const fs::path& out_dir, const CommandOptions& options) {
  config.validate();
  OutputSession session(out_dir);
  const EvalDataset ds = load_or_generate(config, options);
  SweepOptions sweep_opts;
  sweep_opts.per_gender = config.sweep.per_gender;
  sweep_opts.conversion = config.sweep.conversion;
  sweep_opts.backend = config.scenario.backend;
  sweep_opts.threads = options.threads;
  const SweepResult sweep = run_target_sweep(ds, sweep_opts, config.metrics, sweep_seed(config));

  if (config.io.wants("json")) {
    json doc = sweep_to_json(sweep);
    doc["conversion"] = {{"leakage_beta", config.sweep.conversion.leakage_beta},
                         {"synthesis_noise_sigma", config.sweep.conversion.synthesis_noise_sigma}};
    doc["provenance"] = provenance(config);
    session.write("sweep.json", doc.dump(2) + "\n");
  }
  if (config.io.wants("csv")) session.write("radar.csv", radar_csv(sweep));
  session.write("config.json", config_text(config));
  session.commit("sweep", config_hash(config));
}

std::string cmd_report(const fs::path& dir, ReportFormat format) {
  std::vector<Row> rows;
  std::string title;
  std::string source;
  if (fs::exists(dir / "sweep.json")) {
    source = "sweep.json";
    const json doc = json::parse(read_file(dir / source));
    rows.push_back(row_from_report("Original", doc.at("original")));
    rows.push_back(row_from_summary("Anonymized", doc.at("summary")));
    const auto& conv = doc.at("conversion");
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "White-box constant-target sweep over %zu targets (beta=%g, sigma=%g); "
                  "anonymized values are mean +- std over targets",
                  doc.at("summary").at("n_targets").get<std::size_t>(),
                  conv.at("leakage_beta").get<double>(),
                  conv.at("synthesis_noise_sigma").get<double>());
    title = buf;
  } else if (fs::exists(dir / "report.json")) {
    source = "report.json";
    const json doc = json::parse(read_file(dir / source));
    rows.push_back(row_from_report("Original", doc.at("original")));
    rows.push_back(row_from_report("Anonymized", doc));
    const auto& sc = doc.at("scenario");
    title = "Scenario " + sc.at("kind").get<std::string>() + "-box, " +
            sc.at("strategy").get<std::string>() + " strategy";
    if (sc.contains("constant_target"))
      title += " (target " + sc.at("constant_target").get<std::string>() + ")";
    char buf[96];
    std::snprintf(buf, sizeof buf, ", beta=%g, sigma=%g", sc.at("leakage_beta").get<double>(),
                  sc.at("synthesis_noise_sigma").get<double>());
    title += buf;
  } else {
    fail(ErrorCode::kIo, "'" + dir.string() + "' contains neither sweep.json nor report.json");
  }

  std::string text;
  std::string name;
  switch (format) {
    case ReportFormat::kTable:
      text = render_table(title, rows);
      name = "summary.txt";
      break;
    case ReportFormat::kJson:
      text = render_json(source, rows).dump(2) + "\n";
      name = "summary.json";
      break;
    case ReportFormat::kCsv:
      text = render_csv(rows);
      name = "summary.csv";
      break;
  }

  std::vector<std::string> carried;
  std::string hash;
  if (fs::exists(dir / kManifestFile)) {
    const Manifest prior = read_manifest(dir);
    hash = prior.config_hash;
    for (const auto& f : prior.files)
      if (f.path != name) carried.push_back(f.path);
  }
  OutputSession session(dir);
  session.write(name, text);
  session.commit("report", hash, carried);
  return text;
}

Manifest read_manifest(const fs::path& dir) {
  json doc;
  try {
    doc = json::parse(read_file(dir / kManifestFile));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "manifest.json: " + std::string(e.what()));
  }
  Manifest m;
  try {
    m.command = doc.at("command").get<std::string>();
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.started_at = doc.at("started_at").get<std::string>();
    m.finished_at = doc.at("finished_at").get<std::string>();
    for (const auto& f : doc.at("files"))
      m.files.push_back({f.at("path").get<std::string>(), f.at("size").get<std::uintmax_t>(),
                         f.at("fnv1a64").get<std::string>()});
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "manifest.json: " + std::string(e.what()));
  }
  return m;
}

bool validate_manifest(const fs::path& dir, std::string* problem) {
  const auto report = [&](const std::string& p) {
    if (problem) *problem = p;
    return false;
  };
  Manifest m;
  try {
    m = read_manifest(dir);
  } catch (const Error& e) {
    return report(e.what());
  }
  for (const auto& f : m.files) {
    std::error_code ec;
    const auto size = fs::file_size(dir / f.path, ec);
    if (ec) return report("missing file '" + f.path + "'");
    if (size != f.size)
      return report("size mismatch for '" + f.path + "': " + std::to_string(size) + " vs " +
                    std::to_string(f.size));
  }
  return true;
}

}  // namespace anonbench
