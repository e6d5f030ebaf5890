#pragma once

#include "dtp/episode.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace dtp {

struct GrayScale {
  double min = 0.0;
  double max = 0.0;
};

/// Binary 8-bit graymap of a row-major h x w grid, min-max normalized.
/// A constant image is written as all zeros. Returns the scale used.
template <typename Derived>
GrayScale write_pgm(const std::filesystem::path &path,
                    const Eigen::DenseBase<Derived> &values, int h, int w);

/// Comma-separated rows with LF endings. Throws IoError if the file cannot
/// be opened or a write fails.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header);
  void row(const std::vector<std::string> &cells);
  void close();

private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

/// One JSON object per step, then a summary line.
void write_episode_jsonl(const std::filesystem::path &path, const EpisodeLog &log);

/// seed,strategy,tau,grasp,success,steps,total_pruned per episode.
void write_episode_summary_csv(const std::filesystem::path &path,
                               std::span<const EpisodeLog> logs);

void ensure_directory(const std::filesystem::path &dir);

// implementation

namespace detail {
void write_pgm_bytes(const std::filesystem::path &path, const std::vector<unsigned char> &px,
                     int h, int w);
}

template <typename Derived>
GrayScale write_pgm(const std::filesystem::path &path,
                    const Eigen::DenseBase<Derived> &values, int h, int w) {
  if (values.size() != static_cast<Eigen::Index>(h) * w)
    throw UsageError("graymap size does not match grid");
  GrayScale s{static_cast<double>(values.minCoeff()),
              static_cast<double>(values.maxCoeff())};
  const double span = s.max - s.min;
  std::vector<unsigned char> px(values.size(), 0);
  if (span > 0.0) {
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c, ++i)
        px[i] = static_cast<unsigned char>(
            std::lround(255.0 * (static_cast<double>(values(r, c)) - s.min) / span));
  }
  detail::write_pgm_bytes(path, px, h, w);
  return s;
}

} // namespace dtp
