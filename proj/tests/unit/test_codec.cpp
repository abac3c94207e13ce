#include <bit>
#include <set>

#include "doctest.h"
#include "sls/codec.hpp"
#include "support.hpp"

using namespace sls;

namespace {

// Independent oracle: the closed form rather than the bitwise loop under test.
std::uint32_t gray_oracle(std::uint32_t b) { return b ^ (b >> 1); }

}  // namespace

TEST_CASE("pattern counts") {
  CHECK(pattern_counts(1024, 768) == PatternCounts{10, 10});
  CHECK(pattern_counts(8, 8) == PatternCounts{3, 3});
  CHECK(pattern_counts(1, 1) == PatternCounts{0, 0});
  CHECK(pattern_counts(1025, 2) == PatternCounts{11, 1});
  CHECK_THROWS_AS(pattern_counts(0, 8), Error);
  CHECK_THROWS_AS(pattern_counts(8, -1), Error);
}

TEST_CASE("gray conversion examples") {
  CHECK(binary_to_gray(CodeWord::from_bits("1011101")).to_string() == "1110011");
  CHECK(CodeWord::from_bits("1011101").value() == 93);
  CHECK(binary_to_gray(CodeWord(5, 3)).to_string() == "111");
  CHECK(binary_to_gray(CodeWord(0, 3)).to_string() == "000");
  CHECK(gray_to_binary(CodeWord::from_bits("111")).value() == 5);
  CHECK(gray_to_binary(CodeWord::from_bits("1110011")).value() == 93);
  CHECK(gray_to_binary(CodeWord(0, 3)).to_string() == "000");
}

TEST_CASE("gray and binary table for three bits") {
  // Gray column of the three-bit comparison table.
  const char* gray[] = {"000", "001", "011", "010", "110", "111", "101", "100"};
  for (std::uint32_t n = 0; n < 8; ++n) CHECK(binary_to_gray(CodeWord(n, 3)).to_string() == gray[n]);
}

TEST_CASE("codeword validation") {
  CHECK_THROWS_AS(CodeWord(8, 3), Error);
  CHECK_THROWS_AS(CodeWord(0, 0), Error);
  CHECK_THROWS_AS(CodeWord::from_bits("10a"), Error);
  CodeWord w = CodeWord::from_bits("100");
  CHECK(w.bit(0));
  CHECK_FALSE(w.bit(2));
}

TEST_CASE("round trip and single-bit steps below 2^20") {
  for (std::uint32_t n = 0; n < (1u << 20); ++n) {
    const CodeWord g = binary_to_gray(CodeWord(n, 20));
    REQUIRE(g.value() == gray_oracle(n));
    REQUIRE(gray_to_binary(g).value() == n);
    if (n + 1 < (1u << 20)) REQUIRE(std::popcount(g.value() ^ gray_oracle(n + 1)) == 1);
  }
}

TEST_CASE("sequence layout for 1024x768") {
  const auto seq = generate_sequence(1024, 768);
  CHECK(seq.frames().size() == 42);
  CHECK(seq.meta().columns == 10);
  CHECK(seq.meta().rows == 10);
  const auto roles = seq.meta().roles();
  CHECK(roles[0].kind == FrameKind::solid_white);
  CHECK(roles[1].kind == FrameKind::solid_black);
  CHECK(roles[2] == FrameRole{FrameKind::column_bit, 0});
  CHECK(roles[3] == FrameRole{FrameKind::column_bit_inverse, 0});
  CHECK(roles[22] == FrameRole{FrameKind::row_bit, 0});
  CHECK(roles[41] == FrameRole{FrameKind::row_bit_inverse, 9});
  for (std::size_t i = 0; i < roles.size(); ++i) CHECK(seq.meta().index_of(roles[i]) == i);
}

TEST_CASE("8x8 stripe structure") {
  const auto seq = generate_sequence(8, 8);
  const auto& msb = seq.frame({FrameKind::column_bit, 0});
  for (int c = 0; c < 8; ++c) CHECK(msb.is_hi(c, 0) == (c >= 4));
  // LSB gray frame: runs of two after the first column.
  const auto& lsb = seq.frame({FrameKind::column_bit, 2});
  std::vector<int> runs;
  int run = 1;
  for (int c = 1; c < 8; ++c) {
    if (lsb.is_hi(c, 0) == lsb.is_hi(c - 1, 0)) {
      ++run;
    } else {
      runs.push_back(run);
      run = 1;
    }
  }
  runs.push_back(run);
  CHECK(runs == std::vector<int>{1, 2, 2, 2, 1});
}

TEST_CASE("frames are stripes and inverses are complements") {
  for (Scheme scheme : {Scheme::gray, Scheme::binary}) {
    const auto seq = generate_sequence(37, 21, scheme);
    const auto frames = seq.frames();
    for (std::size_t i = 2; i < frames.size(); i += 2) {
      const GrayImage direct = frames[i].render();
      const GrayImage inverse = frames[i + 1].render();
      for (int y = 0; y < 21; ++y)
        for (int x = 0; x < 37; ++x) {
          REQUIRE(direct.at(x, y) + inverse.at(x, y) == 255);
          if (frames[i].role().columns())
            REQUIRE(direct.at(x, y) == direct.at(x, 0));
          else
            REQUIRE(direct.at(x, y) == direct.at(0, y));
        }
    }
    CHECK(frames[0].render().data() == std::vector<std::uint8_t>(37 * 21, 255));
    CHECK(frames[1].render().data() == std::vector<std::uint8_t>(37 * 21, 0));
  }
}

TEST_CASE("reading bits across frames decodes every column and row") {
  for (Scheme scheme : {Scheme::gray, Scheme::binary}) {
    const auto seq = generate_sequence(100, 60, scheme);
    const auto& meta = seq.meta();
    for (int c = 0; c < 100; ++c) {
      std::uint32_t code = 0;
      for (int k = 0; k < meta.columns; ++k)
        code = (code << 1) | seq.frame({FrameKind::column_bit, k}).is_hi(c, 0);
      CHECK(decode_index(code, meta.columns, scheme) == static_cast<std::uint32_t>(c));
    }
    for (int r = 0; r < 60; ++r) {
      std::uint32_t code = 0;
      for (int k = 0; k < meta.rows; ++k) code = (code << 1) | seq.frame({FrameKind::row_bit, k}).is_hi(0, r);
      CHECK(decode_index(code, meta.rows, scheme) == static_cast<std::uint32_t>(r));
    }
  }
}

TEST_CASE("generate_sequence rejects tiny resolutions") {
  CHECK_THROWS_AS(generate_sequence(1, 8), Error);
  CHECK_THROWS_AS(generate_sequence(8, 0), Error);
}

TEST_CASE("frame names") {
  CHECK(FrameRole{FrameKind::column_bit, 3}.name() == "col03");
  CHECK(FrameRole{FrameKind::row_bit_inverse, 7}.name() == "row07inv");
  CHECK(FrameRole::parse("col03inv") == FrameRole{FrameKind::column_bit_inverse, 3});
  CHECK(FrameRole::parse("white").kind == FrameKind::solid_white);
  CHECK_THROWS_AS(FrameRole::parse("col"), Error);
  CHECK(parse_scheme("binary") == Scheme::binary);
  CHECK_THROWS_AS(parse_scheme("phase"), Error);
}

TEST_CASE("sequence files round trip") {
  const auto dir = test::scratch_dir("codec_files");
  const auto seq = generate_sequence(24, 10, Scheme::binary);
  write_sequence(seq, dir);
  CHECK(std::filesystem::exists(dir / "pat_00_white.pgm"));
  CHECK(std::filesystem::exists(dir / "pat_02_col00.pgm"));
  const auto loaded = load_sequence(dir);
  CHECK(loaded.meta() == seq.meta());
  for (std::size_t i = 0; i < seq.frames().size(); ++i)
    CHECK(loaded.frames()[i].render() == seq.frames()[i].render());

  SUBCASE("tampered frame is a format error") {
    GrayImage img = read_pgm(dir / "pat_02_col00.pgm");
    img.at(3, 4) = 128;
    write_pgm(dir / "pat_02_col00.pgm", img);
    try {
      load_sequence(dir);
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::format);
    }
  }
}
