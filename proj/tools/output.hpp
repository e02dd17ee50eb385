#pragma once

#include <json.hpp>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace pvi::cli {

enum class Format { Csv, JsonLines };

using Cell = std::variant<double, long long, std::string>;

/// Writes a metadata record, then rows. CSV gets a `# {json}` metadata line
/// and a header; json-lines gets {"meta": ...} then one object per row.
/// Reals are printed with 9 significant digits.
class TableWriter {
 public:
  TableWriter(std::ostream& out, Format format, std::vector<std::string> columns,
              const nlohmann::json& meta);

  void row(const std::vector<Cell>& cells);

 private:
  std::ostream& out_;
  Format format_;
  std::vector<std::string> columns_;
};

std::string format_real(double v);

}  // namespace pvi::cli
