#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "qdtcal/report.hpp"

namespace qdtcal::report {

TEST(ConfigHash, FnvOverSortedLines) {
  EXPECT_EQ(config_hash({}), "cbf29ce484222325");
  EXPECT_EQ(config_hash({{"b", "x"}, {"a", "1"}}), "e094ef9136802fdf");
  EXPECT_NE(config_hash({{"a", "1"}}), config_hash({{"a", "2"}}));
}

TEST(Header, CarriesTheStamp) {
  const auto h = header({42, "abc"}, "fit");
  EXPECT_EQ(h.dump(), R"({"schema_version":1,"kind":"fit","seed":42,"config_hash":"abc"})");
}

TEST(Number, NonFiniteBecomesNull) {
  EXPECT_TRUE(number(std::nan("")).is_null());
  EXPECT_EQ(number(0.25).get<double>(), 0.25);
  EXPECT_EQ(num(std::nan("")), "nan");
}

TEST(CsvTable, HeaderLinesAndRows) {
  CsvTable t({"x", "y"}, {7, "h"}, "demo");
  t.row({"1", "2"}).row({"3", "4"});
  std::ostringstream s;
  t.write(s);
  EXPECT_EQ(s.str(), "# demo\n# schema_version=1 seed=7 config_hash=h\nx,y\n1,2\n3,4\n");
  EXPECT_THROW(t.row({"1"}), DomainError);
}

TEST(Json, ParamsPerModel) {
  const QdtParams q{{0.7, 1.1, 0.9, 0.6, 0.3}, 1.5, 0.05, 100.0};
  const auto cpt = to_json(ModelId::LogitCpt, q);
  EXPECT_FALSE(cpt.contains("a"));
  EXPECT_EQ(cpt["alpha"].get<double>(), 0.7);
  const auto qdt = to_json(ModelId::Qdt, q);
  EXPECT_EQ(qdt["a"].get<double>(), 1.5);
  EXPECT_EQ(qdt["eta"].get<double>(), 0.05);
}

TEST(Files, WrittenIdentically) {
  const auto dir = std::filesystem::temp_directory_path() / "qdtcal_report_test";
  std::filesystem::remove_all(dir);
  ordered_json j = header({1, "z"}, "demo");
  j["value"] = 0.1;
  write_json(dir / "nested" / "a.json", j);
  write_json(dir / "nested" / "b.json", j);
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(read(dir / "nested" / "a.json"), read(dir / "nested" / "b.json"));
  EXPECT_EQ(ordered_json::parse(read(dir / "nested" / "a.json"))["schema_version"], kSchemaVersion);
  std::filesystem::remove_all(dir);
}

}  // namespace qdtcal::report
