#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdloss/metrics.hpp"
#include "cdloss/optimize.hpp"

namespace cdl {

/// "dice,hausdorff,assd2d,contour_dice"; absent values print as NA.
std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& r);

/// One line per row, in row order, with a header:
///   phantom,loss,t,dice,hausdorff,assd2d,contour_dice,status
/// status is "ok" or "failed"; failed rows carry NA metrics.
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct TableRow {
  std::string phantom;
  std::string loss;
  double t = 0.0;
  std::optional<double> dice;
  std::optional<double> hausdorff;
  std::optional<double> assd2d;
  std::optional<double> contour_dice;
  bool ok = true;
};

/// Parses what ablation_csv writes. Errors: malformed_header on a wrong
/// header, invalid_argument on a bad line (with its line number).
std::vector<TableRow> parse_ablation_csv(std::string_view text);

struct Stat {
  std::size_t n = 0;
  double mean = 0.0;
  /// Sample standard deviation; 0 for a single value.
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Stat summarize_values(const std::vector<double>& values);

struct GroupSummary {
  std::string loss;
  double t = 0.0;
  std::size_t rows = 0;
  std::size_t failed = 0;
  Stat dice, hausdorff, assd2d, contour_dice;
};

/// Groups by (loss, t) in order of first appearance. Only ok rows with a
/// value contribute to each statistic.
std::vector<GroupSummary> summarize(const std::vector<TableRow>& rows);

std::string render_markdown(const std::vector<GroupSummary>& groups);
/// Grouped bars per loss (one bar per t) for Dice and ASSD: the bar is the
/// mean, black whiskers span one std, gray ticks mark min and max.
std::string render_svg(const std::vector<GroupSummary>& groups);

}  // namespace cdl
