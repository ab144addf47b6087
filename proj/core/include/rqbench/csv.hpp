#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rqbench {

/// RFC 4180 table: first record is the header, every record has the
/// header's field count.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Throws DataError naming the missing column.
  std::size_t require_column(std::string_view name) const;
};

/// Quoted fields may hold commas, doubled quotes and line breaks; CRLF and LF
/// line endings are both accepted. A trailing empty line is ignored.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
/// LF line endings.
std::string format_csv(const CsvTable& table);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace rqbench
