// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "egogen/error.hpp"
#include "egogen/params.hpp"
#include "egogen/tensor.hpp"
#include "egogen/tensor_io.hpp"
#include "support.hpp"

using namespace egogen;

TEST_CASE("tensor indexing is row-major") {
  Tensor t({2, 3, 4});
  t.at({1, 2, 3}) = 7.0;
  CHECK(t[1 * 12 + 2 * 4 + 3] == 7.0);
  CHECK(t.offset({0, 1, 0}) == 4);
  CHECK_THROWS_AS(t.at({2, 0, 0}), Error);
  CHECK_THROWS_AS(t.at({0, 0}), Error);
}

TEST_CASE("reshape keeps data and checks counts") {
  Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor r = t.reshaped({3, 2});
  CHECK(r.storage() == t.storage());
  CHECK_THROWS_AS(t.reshaped({4, 2}), Error);
}

TEST_CASE("arithmetic and finiteness") {
  Tensor a({3}, std::vector<double>{1, 2, 3});
  Tensor b({3}, std::vector<double>{4, 5, 6});
  CHECK((a + b).storage() == std::vector<double>{5, 7, 9});
  CHECK((b - a).storage() == std::vector<double>{3, 3, 3});
  CHECK((2.0 * a).storage() == std::vector<double>{2, 4, 6});
  CHECK(max_abs_diff(a, b) == 3.0);
  CHECK(a.all_finite());
  a[1] = std::nan("");
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(a += Tensor({2}), Error);
}

TEST_CASE("checksum detects a single flipped value") {
  std::mt19937_64 rng(1);
  Tensor a = randn({4, 5}, rng);
  Tensor b = a;
  CHECK(checksum(a) == checksum(b));
  b[7] = std::nextafter(b[7], 10.0);
  CHECK(checksum(a) != checksum(b));
}

TEST_CASE("EGT1 round trip") {
  std::mt19937_64 rng(2);
  Tensor t = randn({2, 3, 5}, rng);
  SUBCASE("f64 is lossless") {
    std::stringstream ss;
    write_tensor(ss, t, DType::kF64);
    CHECK(read_tensor(ss) == t);
  }
  SUBCASE("f32 rounds each value once") {
    std::stringstream ss;
    write_tensor(ss, t, DType::kF32);
    Tensor r = read_tensor(ss);
    REQUIRE(r.shape() == t.shape());
    for (std::size_t i = 0; i < t.numel(); ++i)
      CHECK(r[i] == static_cast<double>(static_cast<float>(t[i])));
  }
  SUBCASE("byte layout") {
    Tensor one({1}, std::vector<double>{1.0});
    std::stringstream ss;
    write_tensor(ss, one, DType::kF32);
    const std::string s = ss.str();
    const std::string expect("EGT1\x00\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00"
                             "\x00\x00\x80\x3f",
                             4 + 1 + 4 + 8 + 4);
    CHECK(s == expect);
  }
  SUBCASE("scalar rank 0") {
    Tensor s({}, std::vector<double>{2.5});
    std::stringstream ss;
    write_tensor(ss, s, DType::kF64);
    CHECK(read_tensor(ss) == s);
  }
}

TEST_CASE("EGT1 errors") {
  std::mt19937_64 rng(3);
  std::stringstream ss;
  write_tensor(ss, randn({4, 4}, rng));
  const std::string good = ss.str();
  auto code_of = [](const std::string& bytes) {
    std::stringstream in(bytes);
    try {
      read_tensor(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvariant;
  };
  CHECK(code_of(good.substr(0, good.size() - 3)) == ErrorCode::kParse);
  CHECK(code_of("EGT2" + good.substr(4)) == ErrorCode::kParse);
  std::string bad_dtype = good;
  bad_dtype[4] = 9;
  CHECK(code_of(bad_dtype) == ErrorCode::kParse);
  CHECK(code_of("") == ErrorCode::kParse);
  CHECK_THROWS_AS(read_tensor(std::filesystem::path("/nonexistent/x.egt")), Error);
}

TEST_CASE("EGT1 file round trip") {
  const auto dir = testing::scratch_dir("tensor");
  std::mt19937_64 rng(4);
  Tensor t = randn({3, 2}, rng);
  write_tensor(dir / "t.egt", t, DType::kF64);
  CHECK(read_tensor(dir / "t.egt") == t);
  std::filesystem::remove_all(dir);
}

TEST_CASE("param sets") {
  ParamSet ps;
  ps.add("a", Tensor({2}, 1.0));
  ps.add("b", Tensor({3}, 2.0));
  CHECK(ps.numel() == 5);
  CHECK(squared_norm(ps) == doctest::Approx(2.0 + 12.0));
  CHECK_THROWS_AS(ps.add("a", Tensor({1})), Error);
  CHECK_THROWS_AS(ps.get("c"), Error);
  ParamSet z = ps.zeros_like();
  CHECK(squared_norm(z) == 0.0);
  CHECK(z.get("b").shape() == Shape{3});
  CHECK(z.checksum() != ps.checksum());
}
