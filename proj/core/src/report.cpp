#include <algorithm>
#include <cstdio>
#include <set>

#include "labelforge/error.hpp"
#include "labelforge/metrics.hpp"

namespace labelforge {

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  // Avoid "-0.000" in tables.
  if (std::string_view(buf) == "-0.000") return "0.000";
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

template <typename Row>
void require_single_dataset(std::span<const Row> rows) {
  std::set<std::string> datasets;
  for (const auto& r : rows) datasets.insert(r.dataset);
  if (datasets.size() > 1) {
    throw ValidationError("CSV reports hold one dataset each; split rows by dataset first");
  }
}

/// Renders aligned columns: first column left-aligned, the rest right-aligned.
/// Rows with a single cell are section headings.
std::string align(const std::vector<std::vector<std::string>>& table, std::string_view footer) {
  std::vector<std::size_t> width;
  for (const auto& row : table) {
    if (row.size() == 1 && &row != &table.front()) continue;
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::size_t total = 0;
  for (auto w : width) total += w;
  total += 2 * (width.empty() ? 0 : width.size() - 1);

  std::string out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& row = table[r];
    std::string line;
    if (row.size() == 1 && r > 0) {
      line = row[0];
    } else {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const auto pad = std::string(width[c] - row[c].size(), ' ');
        if (c == 0) {
          line += row[c] + pad;
        } else {
          line += "  " + pad + row[c];
        }
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
    if (r == 0) out += std::string(total, '-') + '\n';
  }
  if (!footer.empty()) out += std::string(footer) + '\n';
  return out;
}

template <typename Row, typename Cells>
std::vector<std::vector<std::string>> grouped(std::span<const Row> rows,
                                              std::vector<std::string> header, Cells cells) {
  std::vector<std::vector<std::string>> table{std::move(header)};
  const bool headings = std::any_of(rows.begin(), rows.end(),
                                    [](const Row& r) { return !r.dataset.empty(); });
  std::string current;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (headings && (i == 0 || rows[i].dataset != current)) {
      current = rows[i].dataset;
      table.push_back({current});
    }
    table.push_back(cells(rows[i]));
  }
  return table;
}

std::string z_header(ZFormula formula) { return std::string("Z score (") + to_string(formula) + ")"; }

ZFormula common_formula(std::span<const ZReportRow> rows) {
  if (rows.empty()) throw ValidationError("report needs at least one row");
  const auto f = rows.front().result.formula;
  for (const auto& r : rows) {
    if (r.result.formula != f) throw ValidationError("report rows mix Z formulas");
  }
  return f;
}

}  // namespace

std::string render_z_csv(std::span<const ZReportRow> rows, std::string_view group_header) {
  const auto formula = common_formula(rows);
  require_single_dataset(rows);
  std::string out = csv_field(group_header) + ",Mean,std," + csv_field(z_header(formula)) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.group) + "," + exact(r.result.cross_mean) + "," + exact(r.result.cross_std) +
           "," + exact(r.result.z) + "\n";
  }
  return out;
}

std::string render_z_text(std::span<const ZReportRow> rows, std::string_view group_header) {
  const auto formula = common_formula(rows);
  auto table = grouped(rows, {std::string(group_header), "Mean", "std", "Z score"},
                       [](const ZReportRow& r) {
                         return std::vector<std::string>{r.group, fixed3(r.result.cross_mean),
                                                         fixed3(r.result.cross_std),
                                                         fixed3(r.result.z)};
                       });
  const std::string footer =
      std::string("Z score: ") + to_string(formula) + " formula; critical value " +
      fixed3(kZCritical) + ".";
  return align(table, footer);
}

std::string render_first_pass_csv(std::span<const FirstPassRow> rows, std::string_view group_header) {
  if (rows.empty()) throw ValidationError("report needs at least one row");
  require_single_dataset(rows);
  std::string out = csv_field(group_header) + ",Duplicate,Vague\n";
  for (const auto& r : rows) {
    out += csv_field(r.group) + "," + exact(r.counts.duplicates) + "," + exact(r.counts.vague) + "\n";
  }
  return out;
}

std::string render_first_pass_text(std::span<const FirstPassRow> rows, std::string_view group_header) {
  if (rows.empty()) throw ValidationError("report needs at least one row");
  auto table = grouped(rows, {std::string(group_header), "Duplicate", "Vague"},
                       [](const FirstPassRow& r) {
                         return std::vector<std::string>{r.group, fixed3(r.counts.duplicates),
                                                         fixed3(r.counts.vague)};
                       });
  return align(table, "Mean number of duplicate and vague labels per run.");
}

std::string report_file_stem(std::string_view dataset, std::string_view comparison) {
  std::string out;
  const auto append = [&](std::string_view part) {
    for (char c : part) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '.';
      out += ok ? c : '-';
    }
  };
  append(dataset);
  out += '_';
  append(comparison);
  return out;
}

}  // namespace labelforge
