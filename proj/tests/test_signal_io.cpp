#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>

#include "nilcorr/signal_io.hpp"

using namespace nilcorr;

namespace {

Signal sample() {
  return Signal(Window(-2, 2), {cplx(0.1, -0.2), cplx(1.0 / 3.0, 0.0), cplx(-1e-300, 5e300), cplx(0.0, -0.0)});
}

void expect_identical(const Signal& a, const Signal& b) {
  ASSERT_EQ(a.window(), b.window());
  for (std::int64_t n = a.window().start; n < a.window().end; ++n) {
    EXPECT_EQ(a.at(n).real(), b.at(n).real());
    EXPECT_EQ(a.at(n).imag(), b.at(n).imag());
  }
}

}  // namespace

TEST(Csv, RoundTripIsBitExact) {
  std::istringstream is(io::to_csv_string(sample()));
  expect_identical(io::read_csv(is), sample());
}

TEST(Csv, Layout) {
  auto text = io::to_csv_string(Signal(Window(5, 7), {cplx(0.5, 0.0), cplx(-1.0, 0.25)}));
  EXPECT_EQ(text, "n,re,im\n5,0.5,0\n6,-1,0.25\n");
}

TEST(Csv, Errors) {
  auto read = [](const std::string& s) {
    std::istringstream is(s);
    return io::read_csv(is);
  };
  EXPECT_THROW(read(""), Error);
  EXPECT_THROW(read("a,b,c\n0,1,2\n"), Error);
  EXPECT_THROW(read("n,re,im\n"), Error);
  try {
    read("n,re,im\n0,1,0\n1,x,0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(read("n,re,im\n0,1,0\n2,1,0\n"), Error);
  EXPECT_NO_THROW(read("n,re,im\r\n0,1,0\r\n1,1,0\r\n"));
}

TEST(Binary, LayoutAndRoundTrip) {
  auto bytes = io::to_binary_string(sample());
  ASSERT_EQ(bytes.size(), 5u + 16u + 4u * 16u);
  EXPECT_EQ(bytes.substr(0, 5), "NSEQ1");
  // start = -2 little-endian.
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0xFE);
  for (int i = 6; i < 13; ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]), 0xFF);
  EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 2);
  std::istringstream is(bytes);
  expect_identical(io::read_binary(is), sample());
}

TEST(Binary, Errors) {
  std::istringstream bad_magic(std::string("NSEQ2") + std::string(16, '\0'));
  EXPECT_THROW(io::read_binary(bad_magic), Error);
  auto bytes = io::to_binary_string(sample());
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(io::read_binary(truncated), Error);
}

TEST(LoadSignal, SniffsFormat) {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / ("nilcorr_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream(dir / "s.csv") << io::to_csv_string(sample());
    std::ofstream(dir / "s.bin", std::ios::binary) << io::to_binary_string(sample());
  }
  expect_identical(io::load_signal((dir / "s.csv").string()), sample());
  expect_identical(io::load_signal((dir / "s.bin").string()), sample());
  EXPECT_THROW(io::load_signal((dir / "missing").string()), Error);
  fs::remove_all(dir);
}
