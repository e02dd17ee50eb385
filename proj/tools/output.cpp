#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pvi::cli {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

std::string json_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    return std::isfinite(*d) ? format_real(*d) : "null";
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return nlohmann::json(std::get<std::string>(c)).dump();
}

}  // namespace

TableWriter::TableWriter(std::ostream& out, Format format, std::vector<std::string> columns,
                         const nlohmann::json& meta)
    : out_(out), format_(format), columns_(std::move(columns)) {
  if (format_ == Format::Csv) {
    out_ << "# " << meta.dump() << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      out_ << (i ? "," : "") << columns_[i];
    }
    out_ << '\n';
  } else {
    out_ << nlohmann::json{{"meta", meta}}.dump() << '\n';
  }
}

void TableWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_.size()) {
    throw std::logic_error("TableWriter: row width does not match header");
  }
  if (format_ == Format::Csv) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_cell(cells[i]);
  } else {
    out_ << '{';
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out_ << (i ? "," : "") << nlohmann::json(columns_[i]).dump() << ':' << json_cell(cells[i]);
    }
    out_ << '}';
  }
  out_ << '\n';
}

}  // namespace pvi::cli
