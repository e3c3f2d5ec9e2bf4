#include "anonbench/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "anonbench/embedding_space.hpp"
#include "anonbench/rng.hpp"

namespace anonbench {

using nlohmann::json;

namespace {

// Walks one JSON object, rejecting keys that were never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    require(obj_.is_object(), ErrorCode::kConfig, where() + ": expected an object");
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      require(seen_.contains(key), ErrorCode::kConfig, "unknown config key '" + field(key) + "'");
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      require(v->is_number_unsigned(), ErrorCode::kConfig,
              field(key) + ": expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void read(const std::string& key, std::uint64_t& out, bool) {
    if (const json* v = find(key)) {
      require(v->is_number_unsigned(), ErrorCode::kConfig,
              field(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      require(v->is_number(), ErrorCode::kConfig, field(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      require(v->is_string(), ErrorCode::kConfig, field(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void read(const std::string& key, HzRange& out) {
    if (const json* v = find(key)) {
      require(v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number(),
              ErrorCode::kConfig, field(key) + ": expected [lo, hi]");
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const std::string& key, Enum& out, Parse parse) {
    std::string s;
    if (find(key)) {
      read(key, s);
      out = wrap(key, [&] { return parse(s); });
    }
  }

  template <typename Enum, typename Parse>
  void read_optional_enum(const std::string& key, std::optional<Enum>& out, Parse parse) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    std::string s;
    read(key, s);
    out = wrap(key, [&] { return parse(s); });
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  template <typename F>
  auto wrap(const std::string& key, F f) -> decltype(f()) {
    try {
      return f();
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, field(key) + ": " + e.what());
    }
  }

  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json shape_json(const PartitionShape& s) {
  return {{"female_speakers", s.female_speakers},
          {"male_speakers", s.male_speakers},
          {"female_utterances", s.female_utterances},
          {"male_utterances", s.male_utterances}};
}

void read_shape(ObjectReader& parent, const std::string& key, PartitionShape& s) {
  const json* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.field(key));
  r.read("female_speakers", s.female_speakers);
  r.read("male_speakers", s.male_speakers);
  r.read("female_utterances", s.female_utterances);
  r.read("male_utterances", s.male_utterances);
  r.finish();
}

json range_json(const HzRange& r) { return json::array({r.lo, r.hi}); }

json conversion_json(const ConversionParams& c) {
  return {{"leakage_beta", c.leakage_beta}, {"synthesis_noise_sigma", c.synthesis_noise_sigma}};
}

void read_conversion(ObjectReader& r, ConversionParams& c) {
  r.read("leakage_beta", c.leakage_beta);
  r.read("synthesis_noise_sigma", c.synthesis_noise_sigma);
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

StrategyKind ScenarioConfig::resolved_strategy() const {
  if (strategy) return *strategy;
  return kind == ScenarioKind::kWhiteBox ? StrategyKind::kConstant : StrategyKind::kPermanent;
}

AsvTraining ScenarioConfig::resolved_training() const {
  if (asv_training) return *asv_training;
  return kind == ScenarioKind::kBlackBox ? AsvTraining::kOriginal : AsvTraining::kAnonymized;
}

bool IoConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

void RunConfig::validate() const {
  try {
    population.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  const auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::kConfig, msg); };
  check(scenario.conversion.leakage_beta >= 0.0 && scenario.conversion.leakage_beta <= 1.0,
        "scenario.leakage_beta must be in [0, 1]");
  check(scenario.conversion.synthesis_noise_sigma >= 0.0,
        "scenario.synthesis_noise_sigma must be >= 0");
  check(scenario.leakage_jitter >= 0.0, "scenario.leakage_jitter must be >= 0");
  check(sweep.conversion.leakage_beta >= 0.0 && sweep.conversion.leakage_beta <= 1.0,
        "sweep.leakage_beta must be in [0, 1]");
  check(sweep.conversion.synthesis_noise_sigma >= 0.0,
        "sweep.synthesis_noise_sigma must be >= 0");
  check(sweep.per_gender >= 1, "sweep.per_gender must be >= 1");
  check(metrics.n_bins >= 2, "metrics.n_bins must be >= 2");
  check(metrics.omega > 0.0, "metrics.omega must be > 0");
  check((scenario.far_count == 0) == (scenario.pick_count == 0),
        "scenario.far_count and scenario.pick_count must be set together");
  check(scenario.pick_count <= scenario.far_count,
        "scenario.pick_count must not exceed scenario.far_count");

  const StrategyKind strategy = scenario.resolved_strategy();
  const AsvTraining training = scenario.resolved_training();
  if (scenario.kind == ScenarioKind::kBlackBox)
    check(training == AsvTraining::kOriginal,
          "scenario.asv_training must be 'original' for the black-box scenario");
  if (scenario.kind == ScenarioKind::kWhiteBox) {
    check(strategy == StrategyKind::kConstant,
          "scenario.strategy must be 'constant' for the white-box scenario");
    check(training == AsvTraining::kAnonymized,
          "scenario.asv_training must be 'anonymized' for the white-box scenario");
  }
  check(!io.output_dir.empty(), "io.output_dir must not be empty");
  for (const auto& f : io.formats)
    check(f == "json" || f == "csv", "io.formats: unknown format '" + f + "'");
}

PopulationConfig RunConfig::population_config() const {
  PopulationConfig p = population;
  p.seed = master_seed;
  return p;
}

json to_json(const RunConfig& c) {
  const auto& p = c.population;
  const auto& s = c.scenario;
  json scenario = {
      {"kind", scenario_name(s.kind)},
      {"strategy", s.strategy ? json(strategy_name(*s.strategy)) : json(nullptr)},
      {"asv_training", s.asv_training ? json(training_name(*s.asv_training)) : json(nullptr)},
      {"constant_target", s.constant_target},
      {"backend", backend_name(s.backend)},
      {"metric", metric_name(s.metric)},
      {"far_count", s.far_count},
      {"pick_count", s.pick_count},
      {"leakage_jitter", s.leakage_jitter},
  };
  scenario.update(conversion_json(s.conversion));
  json sweep = {{"per_gender", c.sweep.per_gender}};
  sweep.update(conversion_json(c.sweep.conversion));
  return {
      {"master_seed", c.master_seed},
      {"population",
       {{"dim", p.dim},
        {"n_pool_speakers", p.n_pool_speakers},
        {"enrollment", shape_json(p.enrollment)},
        {"trials", shape_json(p.trials)},
        {"n_train_speakers", p.n_train_speakers},
        {"utts_per_train_speaker", p.utts_per_train_speaker},
        {"between_var", p.between_var},
        {"within_var", p.within_var},
        {"f0_mean_female_hz", range_json(p.f0_mean_female)},
        {"f0_mean_male_hz", range_json(p.f0_mean_male)},
        {"f0_std_hz", range_json(p.f0_std)},
        {"f0_frames", p.f0_frames},
        {"unvoiced_fraction", p.unvoiced_fraction}}},
      {"scenario", scenario},
      {"sweep", sweep},
      {"metrics", {{"n_bins", c.metrics.n_bins}, {"omega", c.metrics.omega}}},
      {"io", {{"output_dir", c.io.output_dir}, {"formats", c.io.formats}}},
  };
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  ObjectReader root(doc, "");
  root.read("master_seed", c.master_seed, true);

  if (const json* v = root.find("population")) {
    ObjectReader r(*v, "population");
    auto& p = c.population;
    r.read("dim", p.dim);
    r.read("n_pool_speakers", p.n_pool_speakers);
    read_shape(r, "enrollment", p.enrollment);
    read_shape(r, "trials", p.trials);
    r.read("n_train_speakers", p.n_train_speakers);
    r.read("utts_per_train_speaker", p.utts_per_train_speaker);
    r.read("between_var", p.between_var);
    r.read("within_var", p.within_var);
    r.read("f0_mean_female_hz", p.f0_mean_female);
    r.read("f0_mean_male_hz", p.f0_mean_male);
    r.read("f0_std_hz", p.f0_std);
    r.read("f0_frames", p.f0_frames);
    r.read("unvoiced_fraction", p.unvoiced_fraction);
    r.finish();
  }
  if (const json* v = root.find("scenario")) {
    ObjectReader r(*v, "scenario");
    auto& s = c.scenario;
    r.read_enum("kind", s.kind, parse_scenario);
    r.read_optional_enum("strategy", s.strategy, parse_strategy);
    r.read_optional_enum("asv_training", s.asv_training, parse_training);
    r.read("constant_target", s.constant_target);
    r.read_enum("backend", s.backend, parse_backend);
    r.read_enum("metric", s.metric, parse_metric);
    r.read("far_count", s.far_count);
    r.read("pick_count", s.pick_count);
    r.read("leakage_jitter", s.leakage_jitter);
    read_conversion(r, s.conversion);
    r.finish();
  }
  if (const json* v = root.find("sweep")) {
    ObjectReader r(*v, "sweep");
    r.read("per_gender", c.sweep.per_gender);
    read_conversion(r, c.sweep.conversion);
    r.finish();
  }
  if (const json* v = root.find("metrics")) {
    ObjectReader r(*v, "metrics");
    r.read("n_bins", c.metrics.n_bins);
    r.read("omega", c.metrics.omega);
    r.finish();
  }
  if (const json* v = root.find("io")) {
    ObjectReader r(*v, "io");
    r.read("output_dir", c.io.output_dir);
    if (const json* f = r.find("formats")) {
      require(f->is_array(), ErrorCode::kConfig, "io.formats: expected an array of strings");
      c.io.formats.clear();
      for (const auto& item : *f) {
        require(item.is_string(), ErrorCode::kConfig, "io.formats: expected an array of strings");
        c.io.formats.push_back(item.get<std::string>());
      }
    }
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, source + ": JSON parse error at " + line_col(text, e.byte) + ": " +
                                e.what());
  }
  try {
    return config_from_json(doc);
  } catch (const Error& e) {
    fail(e.code(), source + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  const std::string text = to_json(config).dump(2) + "\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write config file '" + path.string() + "'");
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
  return buf;
}

ScenarioSpec make_scenario_spec(const RunConfig& config, const Pool& pool) {
  const auto& s = config.scenario;
  ScenarioSpec spec;
  spec.kind = s.kind;
  spec.conversion = s.conversion;
  spec.asv_training = s.resolved_training();
  spec.backend = s.backend;
  spec.metric = s.metric;
  spec.leakage_jitter = s.leakage_jitter;
  if (s.far_count > 0) spec.selector = SelectorParams{s.far_count, s.pick_count, s.metric};

  if (s.resolved_strategy() == StrategyKind::kConstant) {
    if (s.constant_target.empty()) {
      const auto targets = select_targets(pool, 1, derive_seed(config.master_seed, "select_targets"));
      spec.strategy = TargetStrategy::constant(targets.front());
    } else {
      const auto it = std::find_if(pool.begin(), pool.end(), [&](const PoolEntry& e) {
        return e.speaker_id == s.constant_target;
      });
      require(it != pool.end(), ErrorCode::kConfig,
              "scenario.constant_target '" + s.constant_target + "' is not a pool speaker");
      spec.strategy = TargetStrategy::constant(*it);
    }
  } else {
    spec.strategy = TargetStrategy::permanent();
  }
  spec.validate();
  return spec;
}

std::uint64_t scenario_seed(const RunConfig& config) {
  return derive_seed(config.master_seed, "scenario");
}

std::uint64_t sweep_seed(const RunConfig& config) {
  return derive_seed(config.master_seed, "sweep");
}

}  // namespace anonbench
