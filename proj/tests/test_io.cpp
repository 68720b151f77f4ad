#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "ncscale/generators.hpp"
#include "ncscale/io.hpp"

using namespace ncscale;

namespace {

std::vector<Instance> all_families() {
  std::vector<Instance> out;
  GeneratorParams p;
  p.n = 3;
  p.m = 2;
  p.k = 2;
  p.l = 1;
  p.seed = 42;
  for (const auto& f : generator_families()) out.push_back(generate(f, p));
  return out;
}

}  // namespace

TEST(Generators, Metadata) {
  const Instance id = make_identity(2);
  EXPECT_EQ(id.tuple.m(), 1);
  EXPECT_EQ(*id.known_ncrank, 2);
  EXPECT_EQ(*make_zero_block(3, 2, 1, 2, 0).known_ncrank, 2);
  EXPECT_EQ(*make_skew3().known_ncrank, 3);
  EXPECT_EQ(*make_zero_block(4, 3, 1, 2, 3).known_ncrank, 2);
  EXPECT_EQ(*make_diagonal_pair(3, 1).known_ncrank, 3);
  EXPECT_EQ(*make_random_full(3, 2, 1).known_ncrank, 3);
}

TEST(Generators, ZeroBlockPattern) {
  const Instance z = make_zero_block(5, 3, 1, 3, 9);
  for (const auto& a : z.tuple.matrices()) {
    EXPECT_EQ(a.topLeftCorner(4, 3).norm(), 0.0);
    EXPECT_GT(a.bottomRows(1).cwiseAbs().minCoeff(), 0.0);
    EXPECT_GT(a.rightCols(2).cwiseAbs().minCoeff(), 0.0);
  }
}

TEST(Generators, InvalidParams) {
  EXPECT_THROW(make_zero_block(3, 2, 2, 2, 0), InvalidInput);
  EXPECT_THROW(make_zero_block(3, 4, 1, 2, 0), InvalidInput);
  EXPECT_THROW(make_identity(0), InvalidInput);
  EXPECT_THROW(generate("nope", GeneratorParams{}), InvalidInput);
}

TEST(Generators, DeterministicPerSeed) {
  const auto a = make_random_full(3, 2, 5);
  const auto b = make_random_full(3, 2, 5);
  const auto c = make_random_full(3, 2, 6);
  EXPECT_EQ(a.tuple[0], b.tuple[0]);
  EXPECT_NE(a.tuple[0], c.tuple[0]);
}

TEST(InstanceJson, RoundTripIsBitExact) {
  for (const auto& inst : all_families()) {
    const Instance back = parse_instance(emit_instance(inst));
    ASSERT_EQ(back.tuple.n(), inst.tuple.n());
    ASSERT_EQ(back.tuple.m(), inst.tuple.m());
    for (int k = 0; k < inst.tuple.m(); ++k) {
      EXPECT_EQ(back.tuple[k], inst.tuple[k]) << inst.name;
    }
    EXPECT_EQ(back.name, inst.name);
    EXPECT_EQ(back.known_ncrank, inst.known_ncrank);
    EXPECT_EQ(back.construction, inst.construction);
  }
}

TEST(InstanceJson, SyntaxErrorCarriesPosition) {
  const std::string text = "{\n  \"n\": 2,\n  oops\n}\n";
  try {
    parse_instance(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 3);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(InstanceJson, SchemaErrors) {
  EXPECT_THROW(parse_instance(R"({"n": 1, "m": 1})"), ParseError);
  EXPECT_THROW(parse_instance(R"({"n": 1, "m": 1, "matrices": [[[1]]]})"),
               ParseError);
  EXPECT_THROW(
      parse_instance(R"({"n": 1, "m": 2, "matrices": [[[[1, 0]]]]})"),
      ParseError);
  EXPECT_THROW(parse_instance(
                   R"({"n": 1, "m": 1, "matrices": [[[[1, 0]]]], "known_ncrank": 2})"),
               ParseError);
  EXPECT_THROW(parse_instance(R"([1, 2])"), ParseError);
  const Instance ok =
      parse_instance(R"({"n": 1, "m": 1, "matrices": [[[[1.5, -2]]]]})");
  EXPECT_EQ(ok.tuple[0](0, 0), Complex(1.5, -2));
  EXPECT_FALSE(ok.known_ncrank.has_value());
}

TEST(TraceJson, ExactFieldNames) {
  const MatrixTuple a = make_e4().tuple;
  FlowConfig cfg;
  cfg.max_iters = 5;
  const FlowTrace t = run_gradient_descent(a, PDPoint::identity(3), cfg);
  std::ostringstream os;
  write_trace(os, t);
  std::istringstream is(os.str());
  std::string line;
  int count = 0;
  while (std::getline(is, line)) {
    const Json j = Json::parse(line);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    EXPECT_EQ(keys, (std::vector<std::string>{"direction_eigs", "dist", "f",
                                              "res_l1", "slope", "step"}));
    if (count == 0) EXPECT_TRUE(j["direction_eigs"].is_null());
    if (count > 0) {
      ASSERT_TRUE(j["direction_eigs"].is_array());
      EXPECT_GE(j["direction_eigs"][0].get<double>(),
                j["direction_eigs"][2].get<double>());
    }
    ++count;
  }
  EXPECT_EQ(count, static_cast<int>(t.records.size()));
}

TEST(CertificateJson, Fields) {
  const RankCertificate c = ncrank(make_e4().tuple, FlowConfig{});
  const Json j = certificate_to_json(c);
  EXPECT_EQ(j["ncrank"], 2);
  EXPECT_EQ(j["certified"], true);
  EXPECT_EQ(j["corank"], 1);
  EXPECT_EQ(j["upper_witness_basis"].size(), 3u);
  EXPECT_EQ(j["upper_witness_basis"][0].size(), 2u);
  for (const char* k : {"d", "seed", "rank", "trials"}) {
    EXPECT_TRUE(j["blowup"].contains(k)) << k;
  }
}
