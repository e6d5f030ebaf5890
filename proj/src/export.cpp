#include "dtp/export.hpp"

#include <json.hpp>

#include <charconv>

namespace dtp {

namespace fs = std::filesystem;

void ensure_directory(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

namespace detail {

void write_pgm_bytes(const fs::path &path, const std::vector<unsigned char> &px,
                     int h, int w) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "P5\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char *>(px.data()),
            static_cast<std::streamsize>(px.size()));
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace detail

CsvWriter::CsvWriter(const fs::path &path, const std::vector<std::string> &header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_)
    throw IoError("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string> &cells) {
  if (cells.size() != columns_)
    throw UsageError("csv row width differs from header");
  for (const auto &c : cells)
    if (c.find_first_of(",\"\r\n") != std::string::npos)
      throw UsageError("csv cell needs quoting: " + c);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i)
      out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_)
    throw IoError("write failed for " + path_.string());
}

void CsvWriter::close() {
  out_.close();
  if (!out_)
    throw IoError("write failed for " + path_.string());
}

void write_episode_summary_csv(const fs::path &path, std::span<const EpisodeLog> logs) {
  CsvWriter csv(path, {"seed", "strategy", "tau", "grasp", "success", "steps",
                       "total_pruned"});
  for (const EpisodeLog &l : logs) {
    char tau[32];
    auto r = std::to_chars(tau, tau + sizeof tau, l.tolerance);
    csv.row({std::to_string(l.seed), std::string(strategy_name(l.strategy)),
             std::string(tau, r.ptr), l.grasp ? "1" : "0", l.success ? "1" : "0",
             std::to_string(l.steps_taken), std::to_string(l.total_pruned())});
  }
  csv.close();
}

void write_episode_jsonl(const fs::path &path, const EpisodeLog &log) {
  using nlohmann::ordered_json;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());

  for (const StepRecord &s : log.steps) {
    ordered_json j;
    j["type"] = "step";
    j["step"] = s.step;
    j["action"] = action_name(s.action);
    j["baseline_action"] = action_name(s.baseline_action);
    j["a_m"] = s.decision.a_m;
    j["threshold"] = s.decision.threshold;
    j["detected"] = s.decision.distracting;
    j["capped"] = s.decision.capped;
    j["skipped"] = s.decision.skipped;
    j["pruned"] = s.pruned;
    j["unimportant_attention"] = s.unimportant_attention;
    j["oracle_size"] = s.oracle_size;
    j["e_alpha"] = s.entropy.e_alpha;
    j["h_star"] = s.entropy.h_star;
    if (s.entropy.degenerate)
      j["p_alpha"] = nullptr;
    else
      j["p_alpha"] = s.entropy.p_alpha;
    j["clamped"] = s.entropy.clamped;
    j["forward_passes"] = s.forward_passes;
    j["logits"] = std::vector<double>(s.logits.data(), s.logits.data() + s.logits.size());
    out << j.dump() << '\n';
  }

  ordered_json summary;
  summary["type"] = "summary";
  summary["seed"] = log.seed;
  summary["strategy"] = strategy_name(log.strategy);
  summary["tolerance"] = log.tolerance;
  summary["success"] = log.success;
  summary["grasp"] = log.grasp;
  summary["steps"] = log.steps_taken;
  summary["total_pruned"] = log.total_pruned();
  out << summary.dump() << '\n';
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace dtp
