#include <gtest/gtest.h>

#include "rqbench/cli/toml.hpp"
#include "rqbench/error.hpp"

using namespace rqbench;
using namespace rqbench::cli;

TEST(Toml, ScalarsArraysAndTables) {
  const TomlDocument d = parse_toml(R"(# comment
name = "a \"quoted\" \\ value"   # trailing comment
literal = 'C:\path'
count = 42
neg = -7
ratio = 0.03
big = 1e3
on = true
list = ["x", "y"]
nums = [1, 2.5,
        3]

[[codec]]
id = "toy"

[[codec]]
id = "ext"
)");
  EXPECT_EQ(std::get<std::string>(d.root.at("name").data), "a \"quoted\" \\ value");
  EXPECT_EQ(std::get<std::string>(d.root.at("literal").data), "C:\\path");
  EXPECT_EQ(std::get<std::int64_t>(d.root.at("count").data), 42);
  EXPECT_EQ(std::get<std::int64_t>(d.root.at("neg").data), -7);
  EXPECT_DOUBLE_EQ(std::get<double>(d.root.at("ratio").data), 0.03);
  EXPECT_DOUBLE_EQ(std::get<double>(d.root.at("big").data), 1000.0);
  EXPECT_TRUE(std::get<bool>(d.root.at("on").data));
  const auto& nums = std::get<TomlArray>(d.root.at("nums").data);
  ASSERT_EQ(nums.size(), 3u);
  EXPECT_TRUE(nums[0].is_integer());
  EXPECT_FALSE(nums[1].is_integer());
  EXPECT_EQ(d.root.at("count").line, 4);
  ASSERT_EQ(d.arrays.at("codec").size(), 2u);
  EXPECT_EQ(std::get<std::string>(d.arrays.at("codec")[1].at("id").data), "ext");
}

TEST(Toml, QuoteRoundTrip) {
  for (const std::string s : {"plain", "tab\there", "quote\"back\\slash", "new\nline"}) {
    const TomlDocument d = parse_toml("k = " + toml_quote(s) + "\n");
    EXPECT_EQ(std::get<std::string>(d.root.at("k").data), s);
  }
}

TEST(Toml, ErrorsNameTheLine) {
  const std::vector<std::pair<std::string, int>> bad{
      {"a = 1\nb = \n", 2},          {"a = 1\na = 2\n", 2},       {"x.y = 1\n", 1},
      {"[table]\n", 1},              {"a = {b = 1}\n", 1},         {"a = [[1]]\n", 1},
      {"a = \"open\n", 1},           {"a = 1 2\n", 1},             {"\n\na = 1979-05-27\n", 3},
      {"a = \"\\q\"\n", 1},          {"a = [1, 2\n", 2},
  };
  for (const auto& [text, line] : bad) {
    try {
      parse_toml(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ManifestError& e) {
      EXPECT_EQ(e.field(), "line " + std::to_string(line)) << text << " -> " << e.what();
    }
  }
}
