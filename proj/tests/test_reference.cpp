#include <optional>
#include <string>

#include "doctest.h"
#include "ffsim/fs.hpp"
#include "reference_model.hpp"
#include "test_util.hpp"

using namespace ffsim;
using refmodel::RefFs;
using test::code_of;

TEST_CASE("the reference model itself honors the contract") {
  RefFs ref;
  CHECK(ref.stat("/").first == NodeKind::Dir);
  ref.mkdir("/d");
  ref.create_file("/d/f");
  std::vector<uint8_t> body{1, 2, 3, 4};
  ref.write_file("/d/f", 0, body);
  ref.write_file("/d/f", 4, body);  // append at exactly EOF
  CHECK(ref.read_file("/d/f", 2, 4) == std::vector<uint8_t>{3, 4, 1, 2});
  CHECK(ref.stat("/d/f").second == 8);

  CHECK(code_of([&] { ref.mkdir("/"); }) == ErrorCode::AlreadyExists);
  CHECK(code_of([&] { ref.remove("/"); }) == ErrorCode::InvalidPath);
  CHECK(code_of([&] { ref.mkdir("/d"); }) == ErrorCode::AlreadyExists);
  CHECK(code_of([&] { ref.remove("/d"); }) == ErrorCode::DirNotEmpty);
  CHECK(code_of([&] { ref.write_file("/d/f", 9, body); }) == ErrorCode::RangeBeyondEof);
  CHECK(code_of([&] { ref.read_file("/d/f", 6, 3); }) == ErrorCode::RangeBeyondEof);
  CHECK(code_of([&] { ref.readdir("/d/f"); }) == ErrorCode::NotADirectory);
  CHECK(code_of([&] { ref.write_file("/d", 0, body); }) == ErrorCode::IsADirectory);
  CHECK(code_of([&] { ref.create_file("/d/f/x"); }) == ErrorCode::NotADirectory);
  CHECK(code_of([&] { ref.stat("/a//b"); }) == ErrorCode::InvalidPath);
  CHECK(code_of([&] { ref.stat("/nope"); }) == ErrorCode::NotFound);

  ref.remove("/d/f");
  ref.remove("/d");
  CHECK(ref.readdir("/").empty());
}

// Every variant, driven in lockstep with the model under a weighted random
// workload, must agree on every return value, every error code, and the full
// tree after clean and unclean remounts.
TEST_CASE("differential fuzz: variants agree with the reference model") {
  FormatOptions stress;
  stress.cache_capacity = 4;
  stress.journal_cap_records = 16;
  stress.gc_watermark = 6;
  stress.wl_threshold = 8;

  FormatOptions raw;
  raw.codec = Codec::None;

  FormatOptions delta;
  delta.codec = Codec::XorDelta;

  for (Variant v : {Variant::LogTable, Variant::Checkpoint, Variant::Tree}) {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      const FormatOptions* opts;
      if (seed <= 12)
        opts = nullptr;  // defaults
      else if (seed <= 16)
        opts = &stress;
      else if (seed <= 18)
        opts = &raw;
      else
        opts = &delta;
      auto m = refmodel::differential_run(v, opts ? *opts : FormatOptions{}, seed, 300);
      if (m) {
        CAPTURE(*m);
        REQUIRE_FALSE(m.has_value());
      }
    }
  }
}
