#include <gtest/gtest.h>

#include <filesystem>

#include "rqbench/csv.hpp"
#include "rqbench/error.hpp"

using namespace rqbench;

TEST(Csv, QuotedFieldsCommasQuotesAndNewlines) {
  const CsvTable t = parse_csv("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n1,,3\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"x, y", "say \"hi\"", "two\nlines"}));
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"1", "", "3"}));
}

TEST(Csv, FormatParseRoundTrip) {
  CsvTable t{{"name", "note"}, {{"plain", "has,comma"}, {"q\"uote", "line\nbreak"}, {"", ""}}};
  const std::string text = format_csv(t);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const CsvTable back = parse_csv(text);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a\"b"), "\"a\"\"b\"");
  EXPECT_EQ(csv_row({"a", "b,c"}), "a,\"b,c\"\n");
}

TEST(Csv, Errors) {
  EXPECT_THROW(parse_csv(""), DataError);
  EXPECT_THROW(parse_csv("a,b\n1\n"), DataError);
  EXPECT_THROW(parse_csv("a\n\"open\n"), DataError);
  EXPECT_THROW(parse_csv("a\n\"x\"y\n"), DataError);
  EXPECT_THROW(parse_csv("a\nx\"y\n"), DataError);
  const CsvTable t = parse_csv("a,b\n");
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_FALSE(t.column("c"));
  try {
    t.require_column("missing_col");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("missing_col"), std::string::npos);
  }
}

TEST(Csv, FileIo) {
  const auto p = std::filesystem::temp_directory_path() / "rqbench_csv_test.csv";
  write_text_file(p, "x,y\n1,2\n");
  EXPECT_EQ(read_csv_file(p).rows.at(0).at(1), "2");
  std::filesystem::remove(p);
  EXPECT_THROW(read_csv_file(p), IoError);
  // A regular file cannot serve as a parent directory.
  write_text_file(p, "x");
  EXPECT_THROW(write_text_file(p / "f.csv", "x"), IoError);
  std::filesystem::remove(p);
}
