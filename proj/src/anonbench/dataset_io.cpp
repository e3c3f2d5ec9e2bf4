#include "anonbench/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace anonbench {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void check_id(const std::string& id, const std::string& what) {
  require(!id.empty() && id.find_first_of(",\n\r") == std::string::npos,
          ErrorCode::kInvalidArgument, what + " '" + id + "' is empty or contains ',' or newline");
}

void append_values(std::string& out, std::span<const double> values) {
  for (double v : values) {
    out += ',';
    out += format_double(v);
  }
}

// Checks e0..e{dim-1} columns starting at `first` and returns dim.
std::size_t check_embedding_header(const std::vector<std::string>& header, std::size_t first,
                                   const std::string& file) {
  require(header.size() > first, ErrorCode::kParse, file + ": header has no embedding columns");
  for (std::size_t i = first; i < header.size(); ++i)
    require(header[i] == "e" + std::to_string(i - first), ErrorCode::kParse,
            file + ": expected header column 'e" + std::to_string(i - first) + "', found '" +
                header[i] + "'");
  return header.size() - first;
}

Embedding parse_embedding(const std::vector<std::string>& cols, std::size_t first,
                          const std::string& context) {
  std::vector<double> v;
  v.reserve(cols.size() - first);
  for (std::size_t i = first; i < cols.size(); ++i) v.push_back(parse_double(cols[i], context));
  return Embedding(std::move(v));
}

void check_dim(std::size_t dim, std::optional<std::size_t> expected, const std::string& file) {
  if (expected)
    require(dim == *expected, ErrorCode::kDimensionMismatch,
            file + ": embedding dimension " + std::to_string(dim) +
                " does not match configured dimension " + std::to_string(*expected));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  require(res.ec == std::errc() && res.ptr == end, ErrorCode::kParse,
          context + ": invalid number '" + text + "'");
  require(std::isfinite(v), ErrorCode::kParse, context + ": non-finite number '" + text + "'");
  return v;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::kIo, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot rename into '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string pool_to_csv(const Pool& pool) {
  validate_pool(pool);
  std::string out = "speaker_id,gender,f0_mean,f0_std";
  for (std::size_t i = 0; i < pool.front().xvector.dim(); ++i) out += ",e" + std::to_string(i);
  out += '\n';
  for (const auto& e : pool) {
    check_id(e.speaker_id, "pool speaker_id");
    out += e.speaker_id;
    out += ',';
    out += gender_code(e.gender);
    out += ',' + format_double(e.f0_stats.mean_hz) + ',' + format_double(e.f0_stats.std_hz);
    append_values(out, e.xvector.values());
    out += '\n';
  }
  return out;
}

Pool pool_from_csv(const std::string& text, std::optional<std::size_t> expected_dim) {
  const auto lines = lines_of(text);
  require(!lines.empty(), ErrorCode::kParse, "pool.csv: empty file");
  const auto header = split(lines.front());
  require(header.size() >= 4 && header[0] == "speaker_id" && header[1] == "gender" &&
              header[2] == "f0_mean" && header[3] == "f0_std",
          ErrorCode::kParse, "pool.csv: header must start with speaker_id,gender,f0_mean,f0_std");
  const std::size_t dim = check_embedding_header(header, 4, "pool.csv");
  check_dim(dim, expected_dim, "pool.csv");

  Pool pool;
  std::set<std::string> ids;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string ctx = "pool.csv line " + std::to_string(ln + 1);
    const auto cols = split(lines[ln]);
    require(cols.size() == header.size(), ErrorCode::kDimensionMismatch,
            ctx + ": expected " + std::to_string(header.size()) + " columns, found " +
                std::to_string(cols.size()));
    PoolEntry e;
    e.speaker_id = cols[0];
    check_id(e.speaker_id, ctx + ": speaker_id");
    require(ids.insert(e.speaker_id).second, ErrorCode::kInvalidArgument,
            ctx + ": duplicate speaker_id '" + e.speaker_id + "'");
    e.gender = parse_gender(cols[1]);
    e.f0_stats = {parse_double(cols[2], ctx), parse_double(cols[3], ctx)};
    e.xvector = parse_embedding(cols, 4, ctx);
    pool.push_back(std::move(e));
  }
  validate_pool(pool);
  return pool;
}

std::string embeddings_to_csv(const EvalDataset& dataset) {
  const std::size_t dim = dataset.dim();
  std::string out = "partition,speaker_id,gender,utt_id";
  for (std::size_t i = 0; i < dim; ++i) out += ",e" + std::to_string(i);
  out += '\n';
  const std::pair<const char*, const Partition*> parts[] = {
      {"enrollment", &dataset.enrollment}, {"trials", &dataset.trials}, {"train", &dataset.train}};
  for (const auto& [name, part] : parts) {
    for (const auto& [spk, data] : *part) {
      check_id(spk, "speaker_id");
      for (const auto& u : data.utterances) {
        check_id(u.utt_id, "utt_id");
        out += name;
        out += ',' + spk + ',' + gender_code(data.gender) + ',' + u.utt_id;
        append_values(out, u.embedding.values());
        out += '\n';
      }
    }
  }
  return out;
}

std::string f0_to_csv(const Partition& partition) {
  std::string out;
  for (const auto& [spk, data] : partition)
    for (const auto& u : data.utterances) {
      out += u.utt_id;
      append_values(out, u.f0.frames_hz);
      out += '\n';
    }
  return out;
}

std::string f0_to_csv(const EvalDataset& dataset) {
  return f0_to_csv(dataset.enrollment) + f0_to_csv(dataset.trials) + f0_to_csv(dataset.train);
}

void write_dataset(const EvalDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  write_file_atomic(dir / kPoolFile, pool_to_csv(dataset.pool));
  write_file_atomic(dir / kEmbeddingsFile, embeddings_to_csv(dataset));
  write_file_atomic(dir / kF0File, f0_to_csv(dataset));
}

EvalDataset import_embeddings(const std::filesystem::path& dir,
                              std::optional<std::size_t> expected_dim) {
  EvalDataset ds;
  ds.pool = pool_from_csv(read_file(dir / kPoolFile), expected_dim);
  const std::size_t dim = ds.pool.front().xvector.dim();

  const auto lines = lines_of(read_file(dir / kEmbeddingsFile));
  require(!lines.empty(), ErrorCode::kParse, "embeddings.csv: empty file");
  const auto header = split(lines.front());
  require(header.size() >= 4 && header[0] == "partition" && header[1] == "speaker_id" &&
              header[2] == "gender" && header[3] == "utt_id",
          ErrorCode::kParse,
          "embeddings.csv: header must start with partition,speaker_id,gender,utt_id");
  const std::size_t edim = check_embedding_header(header, 4, "embeddings.csv");
  check_dim(edim, expected_dim, "embeddings.csv");
  require(edim == dim, ErrorCode::kDimensionMismatch,
          "embeddings.csv: dimension " + std::to_string(edim) + " differs from pool dimension " +
              std::to_string(dim));

  std::unordered_map<std::string, Utterance*> by_utt;
  std::set<std::string> utt_ids;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string ctx = "embeddings.csv line " + std::to_string(ln + 1);
    const auto cols = split(lines[ln]);
    require(cols.size() == header.size(), ErrorCode::kDimensionMismatch,
            ctx + ": expected " + std::to_string(header.size()) + " columns, found " +
                std::to_string(cols.size()));
    Partition* part = nullptr;
    if (cols[0] == "enrollment") part = &ds.enrollment;
    else if (cols[0] == "trials") part = &ds.trials;
    else if (cols[0] == "train") part = &ds.train;
    require(part != nullptr, ErrorCode::kParse, ctx + ": unknown partition '" + cols[0] + "'");
    const std::string& spk = cols[1];
    check_id(spk, ctx + ": speaker_id");
    check_id(cols[3], ctx + ": utt_id");
    require(utt_ids.insert(cols[3]).second, ErrorCode::kInvalidArgument,
            ctx + ": duplicate utt_id '" + cols[3] + "'");
    const Gender g = parse_gender(cols[2]);
    auto [it, inserted] = part->try_emplace(spk);
    if (inserted) it->second.gender = g;
    require(it->second.gender == g, ErrorCode::kInvalidArgument,
            ctx + ": speaker '" + spk + "' listed with two genders");
    it->second.utterances.push_back({cols[3], parse_embedding(cols, 4, ctx), {}});
  }
  for (Partition* p : {&ds.enrollment, &ds.trials, &ds.train})
    for (auto& [spk, data] : *p)
      for (auto& u : data.utterances) by_utt[u.utt_id] = &u;

  const auto f0_path = dir / kF0File;
  if (std::filesystem::exists(f0_path)) {
    std::set<std::string> seen;
    const auto f0_lines = lines_of(read_file(f0_path));
    for (std::size_t ln = 0; ln < f0_lines.size(); ++ln) {
      const std::string ctx = "f0.csv line " + std::to_string(ln + 1);
      const auto cols = split(f0_lines[ln]);
      const auto it = by_utt.find(cols[0]);
      require(it != by_utt.end(), ErrorCode::kInvalidArgument,
              ctx + ": unknown utt_id '" + cols[0] + "'");
      require(seen.insert(cols[0]).second, ErrorCode::kInvalidArgument,
              ctx + ": duplicate utt_id '" + cols[0] + "'");
      auto& frames = it->second->f0.frames_hz;
      for (std::size_t i = 1; i < cols.size(); ++i) {
        const double f = parse_double(cols[i], ctx);
        require(f >= 0.0, ErrorCode::kParse, ctx + ": negative F0 value");
        frames.push_back(f);
      }
    }
  }
  ds.validate();
  return ds;
}

std::string scores_to_csv(const ScoreSet& scores) {
  std::string out = "enroll_speaker,trial_utt,trial_speaker,is_mated,score\n";
  for (const auto& s : scores.scores()) {
    out += s.entry.enroll_speaker_id + ',' + s.entry.trial_utt_id + ',' +
           s.entry.trial_speaker_id + ',' + (s.entry.is_mated ? "1" : "0") + ',' +
           format_double(s.score) + '\n';
  }
  return out;
}

ScoreSet scores_from_csv(const std::string& text) {
  const auto lines = lines_of(text);
  require(!lines.empty() && lines.front() == "enroll_speaker,trial_utt,trial_speaker,is_mated,score",
          ErrorCode::kParse, "scores csv: unexpected header");
  std::vector<ScoredTrial> out;
  std::vector<TrialEntry> entries;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string ctx = "scores csv line " + std::to_string(ln + 1);
    const auto cols = split(lines[ln]);
    require(cols.size() == 5, ErrorCode::kParse, ctx + ": expected 5 columns");
    require(cols[3] == "0" || cols[3] == "1", ErrorCode::kParse, ctx + ": is_mated must be 0 or 1");
    TrialEntry e{cols[0], cols[1], cols[2], cols[3] == "1"};
    entries.push_back(e);
    out.push_back({std::move(e), parse_double(cols[4], ctx)});
  }
  TrialList check(std::move(entries));
  return ScoreSet(std::move(out));
}

}  // namespace anonbench
